"""Angular modulation profiles for the global return map.

A profile bundles a strictly positive 2*pi-periodic amplitude ``alpha(phi)``
and a periodic phase correction ``beta(phi)`` together with their analytic
derivatives.  All evaluations reduce the argument mod 2*pi, so periodicity
holds by construction; the derivative callables are cross-checked against
central finite differences when the profile is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi

# Validation knobs.  The positivity scan is dense enough for the smooth
# profiles this package targets; the derivative check tolerance leaves room
# for the O(h^2) truncation of the central difference at h = 1e-6.
_POSITIVITY_GRID = 4096
_DERIV_CHECK_PHASES = 64
_DERIV_CHECK_STEP = 1e-6
_DERIV_CHECK_RTOL = 1e-6


def _reduce(phi):
    return np.mod(phi, TWO_PI)


@dataclass(frozen=True)
class ModulationProfile:
    """Periodic modulation (alpha, beta) entering the global return map.

    Parameters
    ----------
    alpha_fn, alpha_prime_fn : callable
        Amplitude profile and its derivative.  Must accept numpy arrays.
    beta_fn, beta_prime_fn : callable, optional
        Phase correction and derivative; default identically zero.
    name : str
        Short label used in provenance output.
    """

    alpha_fn: Callable
    alpha_prime_fn: Callable
    beta_fn: Callable = field(default=None)  # type: ignore[assignment]
    beta_prime_fn: Callable = field(default=None)  # type: ignore[assignment]
    name: str = "custom"

    def __post_init__(self):
        if self.beta_fn is None:
            object.__setattr__(self, "beta_fn", lambda phi: np.zeros_like(np.asarray(phi, float)))
        if self.beta_prime_fn is None:
            object.__setattr__(self, "beta_prime_fn", lambda phi: np.zeros_like(np.asarray(phi, float)))
        self._validate()

    # -- evaluation ---------------------------------------------------------

    def alpha(self, phi):
        return self.alpha_fn(_reduce(phi))

    def alpha_prime(self, phi):
        return self.alpha_prime_fn(_reduce(phi))

    def beta(self, phi):
        return self.beta_fn(_reduce(phi))

    def beta_prime(self, phi):
        return self.beta_prime_fn(_reduce(phi))

    def min_alpha(self, n_grid: int = _POSITIVITY_GRID) -> float:
        phis = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
        return float(np.min(self.alpha(phis)))

    def max_alpha(self, n_grid: int = _POSITIVITY_GRID) -> float:
        phis = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
        return float(np.max(self.alpha(phis)))

    # -- construction-time checks -------------------------------------------

    def _validate(self):
        phis = np.linspace(0.0, TWO_PI, _POSITIVITY_GRID, endpoint=False)
        a = np.asarray(self.alpha(phis), dtype=float)
        if a.shape != phis.shape:
            raise DomainError("alpha must evaluate elementwise on arrays")
        if not np.all(np.isfinite(a)):
            raise DomainError("alpha produced non-finite values")
        if np.min(a) <= 0.0:
            k = int(np.argmin(a))
            raise DomainError(
                f"alpha must be strictly positive; min {a[k]:.6g} at phi={phis[k]:.6g}")

        check = np.linspace(0.0, TWO_PI, _DERIV_CHECK_PHASES, endpoint=False)
        h = _DERIV_CHECK_STEP
        for fn, dfn, label in ((self.alpha, self.alpha_prime, "alpha"),
                               (self.beta, self.beta_prime, "beta")):
            fd = (np.asarray(fn(check + h)) - np.asarray(fn(check - h))) / (2.0 * h)
            an = np.asarray(dfn(check), dtype=float)
            scale = np.maximum(1.0, np.abs(an))
            err = np.max(np.abs(fd - an) / scale)
            if err > _DERIV_CHECK_RTOL:
                raise DomainError(
                    f"{label}_prime disagrees with finite differences "
                    f"(max relative error {err:.3g})")

    # -- canonical families ---------------------------------------------------

    @classmethod
    def sinusoidal(cls, a: float, name: str | None = None) -> "ModulationProfile":
        """alpha = 1 + a sin(phi), beta = 0.  Requires |a| < 1 for positivity."""
        if not abs(a) < 1.0:
            raise DomainError(f"sinusoidal profile needs |a| < 1, got a={a}")
        a = float(a)
        return cls(
            alpha_fn=lambda phi: 1.0 + a * np.sin(phi),
            alpha_prime_fn=lambda phi: a * np.cos(phi),
            name=name or f"sin(a={a:g})",
        )

    @classmethod
    def flat(cls) -> "ModulationProfile":
        """alpha identically 1, beta identically 0."""
        return cls(
            alpha_fn=lambda phi: np.ones_like(np.asarray(phi, float)),
            alpha_prime_fn=lambda phi: np.zeros_like(np.asarray(phi, float)),
            name="flat",
        )
