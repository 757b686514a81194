"""Periodic graphs z = h(phi) over the circle.

Curves are stored as heights on a uniform phase grid and evaluated anywhere
through a periodic cubic spline.  For a smooth curve the interpolation error
is O(N**-4), so the default N = 1024 resolves heights to roughly 1e-9 and
N = 4096 to near round-off.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, NonInvertibleError
from .profiles import TWO_PI


class CircleCurve:
    """Graph over [0, 2*pi) sampled on a power-of-two uniform grid."""

    def __init__(self, heights: np.ndarray):
        heights = np.asarray(heights, dtype=float)
        n = heights.size
        if n < 8 or (n & (n - 1)) != 0:
            raise DomainError(f"grid size must be a power of two >= 8, got {n}")
        if not np.all(np.isfinite(heights)):
            raise DomainError("curve heights must be finite")
        self.n = n
        self.phis = np.linspace(0.0, TWO_PI, n, endpoint=False)
        self.heights = heights
        x = np.append(self.phis, TWO_PI)
        y = np.append(heights, heights[0])
        self._spline = CubicSpline(x, y, bc_type="periodic")

    def __call__(self, phi):
        out = self._spline(np.mod(phi, TWO_PI))
        return float(out) if np.ndim(out) == 0 else out

    def sup_distance(self, other: "CircleCurve") -> float:
        if other.n == self.n:
            return float(np.max(np.abs(self.heights - other.heights)))
        return float(np.max(np.abs(self(other.phis) - other.heights)))

    @classmethod
    def from_scatter(cls, phi_points: np.ndarray, values: np.ndarray,
                     n_grid: int) -> "CircleCurve":
        """Resample scattered periodic data onto the uniform grid.

        The scattered phases must fill the circle injectively (the image of a
        grid under an orientation-preserving circle map); near-coincident
        phases indicate a non-invertible angular component and are rejected.
        """
        phi_points = np.mod(np.asarray(phi_points, dtype=float), TWO_PI)
        values = np.asarray(values, dtype=float)
        order = np.argsort(phi_points)
        xs = phi_points[order]
        ys = values[order]
        gaps = np.diff(xs)
        min_gap = TWO_PI / (50.0 * xs.size)
        if gaps.size and np.min(gaps) < min_gap:
            k = int(np.argmin(gaps))
            raise NonInvertibleError(
                "angular images collapse near "
                f"[{xs[k]:.9g}, {xs[k + 1]:.9g}]; the circle component is "
                "not invertible there", interval=(float(xs[k]), float(xs[k + 1])))
        # Wrap one period so the spline covers [xs[0], xs[0] + 2*pi].
        x_ext = np.concatenate([xs, [xs[0] + TWO_PI]])
        y_ext = np.concatenate([ys, [ys[0]]])
        spline = CubicSpline(x_ext, y_ext, bc_type="periodic")
        grid = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
        shifted = np.where(grid < xs[0], grid + TWO_PI, grid)
        return cls(spline(shifted))
