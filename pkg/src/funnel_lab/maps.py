"""Return maps around a contracting saddle-focus funnel.

The local flow near the equilibrium is linear in cylindrical coordinates,

    r' = rho * r,   phi' = omega,   z' = -lam * z,

with saddle index nu = lam / rho > 1 (net contraction).  Orbits entering the
unit-height disk leave through the unit cylinder; the passage map and an
affine-in-z model of the global reinjection compose into the return maps
studied here, on the cylinder coordinates (z, phi).

Angles are handled as lifts: map evaluations accept any real phi and return
the unreduced image angle, so winding information is never lost.  Reduce with
``reduce_angle`` when a representative in [0, 2*pi) is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConvergenceError, DomainError, EscapeError, RangeError
from .profiles import TWO_PI, ModulationProfile


def reduce_angle(phi):
    """Representative of phi in [0, 2*pi)."""
    return np.mod(phi, TWO_PI)


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SaddleFocusParams:
    """Linearization rates (rho, lam, omega) of the saddle-focus.

    Construction enforces the contracting regime nu = lam/rho > 1.  Pass
    ``allow_expanding=True`` to lift that check; the relaxed form exists only
    so the flow oracle can be exercised at nu <= 1 and is rejected by every
    map constructor.
    """

    rho: float
    lam: float
    omega: float
    allow_expanding: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not (self.rho > 0.0 and self.lam > 0.0):
            raise DomainError("rho and lam must be positive")
        if self.omega < 0.0:
            raise DomainError("omega must be non-negative")
        if not self.allow_expanding and not self.lam / self.rho > 1.0:
            raise DomainError(
                f"saddle index nu = lam/rho = {self.lam / self.rho:.6g} must exceed 1")

    @property
    def nu(self) -> float:
        return self.lam / self.rho

    @property
    def omega_over_rho(self) -> float:
        return self.omega / self.rho

    @classmethod
    def from_ratios(cls, nu: float, omega_over_rho: float,
                    rho: float = 1.0) -> "SaddleFocusParams":
        """Build params from the two ratios that the return maps depend on."""
        return cls(rho=rho, lam=nu * rho, omega=omega_over_rho * rho)


@dataclass(frozen=True)
class GlobalMapConfig:
    """Reinjection model: r0 = mu*alpha(phi) + eps_r*z and the phase rule
    phi0 = n*phi + phi_star + mu*beta(phi) + eps_phi*z with n in {0, 1}.

    The z-dependence of the true global map is only known to vanish with z;
    the linear couplings (eps_r, eps_phi) are one admissible model of it and
    are the knobs exposed here.
    """

    mu: float
    phi_star: float = 0.0
    n: int = 1
    eps_r: float = 0.1
    eps_phi: float = 0.0

    def __post_init__(self):
        if self.mu < 0.0:
            raise DomainError("mu must be >= 0")
        if self.n not in (0, 1):
            raise DomainError(f"winding degree n must be 0 or 1, got {self.n}")
        if self.eps_r < 0.0:
            raise DomainError("eps_r must be >= 0")
        if not np.isfinite(self.phi_star) or not np.isfinite(self.eps_phi):
            raise DomainError("phi_star and eps_phi must be finite")


@dataclass(frozen=True)
class AnnulusPoint:
    """A point (z, phi) on the cylinder cross-section; phi is kept as a lift."""

    z: float
    phi: float

    def __post_init__(self):
        if self.z < 0.0:
            raise DomainError(f"z must be >= 0, got {self.z}")

    @property
    def phi_mod(self) -> float:
        return float(reduce_angle(self.phi))


# ---------------------------------------------------------------------------
# elementary maps
# ---------------------------------------------------------------------------

def transition_time(r0, p: SaddleFocusParams):
    """Time of flight from the disk at radius r0 to the unit cylinder.

    tau = ln(1/r0) / rho, finite for 0 < r0 <= 1.
    """
    r0 = np.asarray(r0, dtype=float)
    if np.any(r0 <= 0.0) or np.any(r0 > 1.0):
        raise DomainError("transition_time needs 0 < r0 <= 1")
    out = -np.log(r0) / p.rho
    return float(out) if out.ndim == 0 else out


def local_map(r0, phi0, p: SaddleFocusParams):
    """Disk-to-cylinder passage map of the linear flow.

    Returns (z1, phi1) with z1 = r0**nu and phi1 = phi0 + (omega/rho)*ln(1/r0).
    phi1 is returned unreduced.
    """
    r0 = np.asarray(r0, dtype=float)
    phi0 = np.asarray(phi0, dtype=float)
    if np.any(r0 <= 0.0) or np.any(r0 > 1.0):
        raise DomainError("local_map needs 0 < r0 <= 1")
    z1 = r0 ** p.nu
    phi1 = phi0 - p.omega_over_rho * np.log(r0)
    if z1.ndim == 0:
        return float(z1), float(phi1)
    return z1, phi1


def global_map(z, phi1, profile: ModulationProfile, cfg: GlobalMapConfig):
    """Cylinder-to-disk reinjection.

    r0 = mu*alpha(phi1) + eps_r*z must land strictly inside the punctured
    unit disk: r0 <= 0 means the orbit grazes the stable manifold (excluded
    by assumption) and r0 >= 1 leaves the validity region.
    """
    z = np.asarray(z, dtype=float)
    phi1 = np.asarray(phi1, dtype=float)
    if np.any(z < 0.0):
        raise DomainError("global_map needs z >= 0")
    r0 = cfg.mu * profile.alpha(phi1) + cfg.eps_r * z
    if np.any(r0 <= 0.0):
        raise DomainError(
            "reinjection radius r0 <= 0: orbit hits the stable manifold "
            "(mu*alpha + eps_r*z must stay positive)")
    if np.any(r0 >= 1.0):
        raise RangeError("reinjection radius r0 >= 1 leaves the disk")
    phi0 = cfg.n * phi1 + cfg.phi_star + cfg.mu * profile.beta(phi1) + cfg.eps_phi * z
    if r0.ndim == 0:
        return float(r0), float(phi0)
    return r0, phi0


def omega_tilde_of(p: SaddleFocusParams, cfg: GlobalMapConfig) -> float:
    """Slow phase offset (omega/rho)*ln(1/mu) + phi_star of the rescaled map."""
    if cfg.mu <= 0.0:
        raise DomainError("omega_tilde needs mu > 0")
    return float(p.omega_over_rho * np.log(1.0 / cfg.mu) + cfg.phi_star)


# ---------------------------------------------------------------------------
# composed maps on the cylinder
# ---------------------------------------------------------------------------

class FunnelMap:
    """Return map of the cylinder section: reinjection followed by passage.

    The composition is evaluated literally (global_map then local_map); no
    hand-expanded formula is used anywhere.
    """

    def __init__(self, p: SaddleFocusParams, profile: ModulationProfile,
                 cfg: GlobalMapConfig):
        if not p.nu > 1.0:
            raise DomainError("composed maps require saddle index nu > 1")
        # Worst-case reinjection radius over the section z in [0, 1].
        worst = cfg.mu * profile.max_alpha() + cfg.eps_r * 1.0
        if worst >= 1.0:
            raise DomainError(
                f"mu*max(alpha) + eps_r = {worst:.6g} >= 1: the reinjection "
                "can leave the disk; shrink mu or eps_r")
        self.p = p
        self.profile = profile
        self.cfg = cfg
        self.n = cfg.n
        self.z_max = 1.0

    def step(self, z, phi):
        """One return (z, phi) -> (z1, phi1); phi is a lift, phi1 unreduced."""
        r0, phi0 = global_map(z, phi, self.profile, self.cfg)
        return local_map(r0, phi0, self.p)

    def step_point(self, pt: AnnulusPoint) -> AnnulusPoint:
        z1, phi1 = self.step(pt.z, pt.phi)
        return AnnulusPoint(z=z1, phi=phi1)

    def jacobian(self, z, phi) -> np.ndarray:
        """Analytic 2x2 derivative d(z1, phi1)/d(z, phi) at a point."""
        p, cfg, prof = self.p, self.cfg, self.profile
        alpha = float(prof.alpha(phi))
        dalpha = float(prof.alpha_prime(phi))
        dbeta = float(prof.beta_prime(phi))
        r0 = cfg.mu * alpha + cfg.eps_r * z
        if r0 <= 0.0 or r0 >= 1.0:
            raise DomainError(f"jacobian undefined at r0 = {r0:.6g}")
        dr_dz = cfg.eps_r
        dr_dphi = cfg.mu * dalpha
        wor = p.omega_over_rho
        dz_common = p.nu * r0 ** (p.nu - 1.0)
        return np.array([
            [dz_common * dr_dz, dz_common * dr_dphi],
            [cfg.eps_phi - wor * dr_dz / r0,
             cfg.n + cfg.mu * dbeta - wor * dr_dphi / r0],
        ])


class RescaledMap:
    """FunnelMap conjugated by the exact height rescaling z = mu**nu * Z.

    The rescaled height stays O(1) as mu -> 0, which is the right chart for
    comparing against the singular-limit map.  The angular offset collapses
    into omega_tilde = (omega/rho)*ln(1/mu) + phi_star, exposed as a property.
    """

    def __init__(self, p: SaddleFocusParams, profile: ModulationProfile,
                 cfg: GlobalMapConfig, z_max: float | None = None):
        if cfg.mu <= 0.0:
            raise DomainError("RescaledMap requires mu > 0; use SingularLimitMap at mu = 0")
        self.full = FunnelMap(p, profile, cfg)
        self.p = p
        self.profile = profile
        self.cfg = cfg
        self.n = cfg.n
        self.scale = cfg.mu ** p.nu
        self.z_max = (2.0 * profile.max_alpha() ** p.nu) if z_max is None else float(z_max)

    @property
    def omega_tilde(self) -> float:
        return omega_tilde_of(self.p, self.cfg)

    def step(self, z, phi):
        """Exact conjugation: unscale, apply the full map, rescale back."""
        z1, phi1 = self.full.step(np.asarray(z, float) * self.scale, phi)
        z1 = np.asarray(z1, float) / self.scale
        if z1.ndim == 0:
            return float(z1), phi1
        return z1, phi1

    def jacobian(self, z, phi) -> np.ndarray:
        jac = self.full.jacobian(float(z) * self.scale, phi)
        # Similarity transform by diag(scale, 1).
        out = jac.copy()
        out[0, 1] /= self.scale
        out[1, 0] *= self.scale
        return out


class CircleMap:
    """Angular factor phi -> n*phi + (omega/rho)*ln(1/alpha(phi)) + omega_tilde.

    Degree n = 1 gives the invariant-curve regime; n = 0 gives the
    phase-resetting regime.  ``lift`` evaluates the unreduced image and
    ``deriv`` its analytic derivative n - (omega/rho)*alpha'/alpha.
    """

    def __init__(self, profile: ModulationProfile, omega_over_rho: float,
                 omega_tilde: float, n: int = 1):
        if n not in (0, 1):
            raise DomainError("circle map degree n must be 0 or 1")
        if omega_over_rho < 0.0:
            raise DomainError("omega_over_rho must be >= 0")
        self.profile = profile
        self.omega_over_rho = float(omega_over_rho)
        self.omega_tilde = float(omega_tilde)
        self.n = int(n)

    def lift(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = (self.n * phi - self.omega_over_rho * np.log(self.profile.alpha(phi))
               + self.omega_tilde)
        return float(out) if out.ndim == 0 else out

    __call__ = lift

    def deriv(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = self.n - self.omega_over_rho * self.profile.alpha_prime(phi) / self.profile.alpha(phi)
        return float(out) if out.ndim == 0 else out


class SineCircleMap:
    """Two-branch model circle map phi -> A*sin(phi) + omega_tilde (degree 0)."""

    def __init__(self, amplitude: float, omega_tilde: float = 0.0):
        if amplitude <= 0.0:
            raise DomainError("amplitude must be positive")
        self.amplitude = float(amplitude)
        self.omega_tilde = float(omega_tilde)
        self.n = 0

    def lift(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = self.amplitude * np.sin(phi) + self.omega_tilde
        return float(out) if out.ndim == 0 else out

    __call__ = lift

    def deriv(self, phi):
        phi = np.asarray(phi, dtype=float)
        out = self.amplitude * np.cos(phi)
        return float(out) if out.ndim == 0 else out


class SingularLimitMap:
    """mu -> 0 limit of the rescaled map at fixed omega_tilde.

    The height decouples:  Z1 = alpha(phi)**nu,  phi1 = circle.lift(phi).
    The map is a skew product over its circle component, exposed as ``circle``.
    """

    def __init__(self, p: SaddleFocusParams, profile: ModulationProfile,
                 omega_tilde: float, n: int = 1):
        if not p.nu > 1.0:
            raise DomainError("composed maps require saddle index nu > 1")
        self.p = p
        self.profile = profile
        self.circle = CircleMap(profile, p.omega_over_rho, omega_tilde, n=n)
        self.omega_tilde = float(omega_tilde)
        self.n = int(n)
        self.z_max = 2.0 * profile.max_alpha() ** p.nu

    def z_graph(self, phi):
        """Height component alpha(phi)**nu (independent of z)."""
        out = np.asarray(self.profile.alpha(phi), float) ** self.p.nu
        return float(out) if out.ndim == 0 else out

    def step(self, z, phi):
        z = np.asarray(z, dtype=float)
        if np.any(z < 0.0):
            raise DomainError("step needs z >= 0")
        z1 = self.z_graph(phi)
        phi1 = self.circle.lift(phi)
        if np.asarray(z1).ndim == 0 and np.asarray(phi1).ndim == 0:
            return float(z1), float(phi1)
        z1, phi1 = np.broadcast_arrays(z1, phi1)
        return z1, phi1

    def jacobian(self, z, phi) -> np.ndarray:
        alpha = float(self.profile.alpha(phi))
        dalpha = float(self.profile.alpha_prime(phi))
        return np.array([
            [0.0, self.p.nu * alpha ** (self.p.nu - 1.0) * dalpha],
            [0.0, float(self.circle.deriv(phi))],
        ])


def iterate_map(mp, z0: float, phi0: float, n_steps: int):
    """Iterate a composed map, returning the orbit arrays (z, phi_lift).

    Domain violations are re-raised as EscapeError carrying the iterate at
    which the orbit left the validity region.
    """
    if n_steps < 0:
        raise DomainError("n_steps must be >= 0")
    zs = np.empty(n_steps + 1)
    phis = np.empty(n_steps + 1)
    zs[0], phis[0] = z0, phi0
    z, phi = float(z0), float(phi0)
    z_max = getattr(mp, "z_max", np.inf)
    for k in range(n_steps):
        try:
            z, phi = mp.step(z, phi)
        except (DomainError, RangeError) as exc:
            raise EscapeError(f"orbit left the domain at iterate {k + 1}: {exc}",
                              iterate=k + 1) from exc
        if not (np.isfinite(z) and np.isfinite(phi)) or z > 2.0 * z_max:
            raise EscapeError(f"orbit escaped at iterate {k + 1} (z = {z:.6g})",
                              iterate=k + 1)
        zs[k + 1], phis[k + 1] = z, phi
    return zs, phis


# ---------------------------------------------------------------------------
# one-dimensional model map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPoint1D:
    z: float
    derivative: float
    stable: bool


def model_map_1d(z, a: float, nu: float, mu: float, alpha: float):
    """One-dimensional height model z -> a*z**nu + alpha*mu."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0.0):
        raise DomainError("model_map_1d needs z >= 0")
    out = a * z ** nu + alpha * mu
    return float(out) if out.ndim == 0 else out


def model_map_fixed_points(a: float, nu: float, mu: float, alpha: float,
                           tol: float = 1e-14) -> list[FixedPoint1D]:
    """Fixed points of z -> a*z**nu + alpha*mu on z >= 0 by bracketing.

    For nu > 1 and a > 0 the residual g(z) = a*z**nu + alpha*mu - z is convex
    with g(0) >= 0, so there are 0, 1, or 2 roots, bracketed on either side of
    the stationary point z_c = (1/(a*nu))**(1/(nu-1)) and found by bisection.
    """
    if a <= 0.0:
        raise DomainError("model_map_fixed_points needs a > 0")
    if nu <= 1.0:
        raise DomainError("model_map_fixed_points needs nu > 1")
    if mu < 0.0 or alpha < 0.0:
        raise DomainError("mu and alpha must be >= 0")

    def g(z):
        return a * z ** nu + alpha * mu - z

    z_c = (1.0 / (a * nu)) ** (1.0 / (nu - 1.0))
    out: list[FixedPoint1D] = []
    if g(z_c) > 0.0:
        return out

    def bisect(lo, hi):
        glo = g(lo)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gmid = g(mid)
            if gmid == 0.0 or hi - lo < tol * max(1.0, hi):
                return mid
            if (glo <= 0.0) == (gmid <= 0.0):
                lo, glo = mid, gmid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    z_hi = max(2.0 * z_c, (2.0 / a) ** (1.0 / (nu - 1.0)), 1.0)
    while g(z_hi) <= 0.0:
        z_hi *= 2.0
        if z_hi > 1e12:
            raise ConvergenceError("no upper bracket for the unstable fixed point")
    for lo, hi in ((0.0, z_c), (z_c, z_hi)):
        root = bisect(lo, hi)
        deriv = a * nu * root ** (nu - 1.0)
        out.append(FixedPoint1D(z=float(root), derivative=float(deriv),
                                stable=abs(deriv) < 1.0))
    # Tangency: both brackets give the same root.
    if len(out) == 2 and abs(out[0].z - out[1].z) < 10.0 * tol * max(1.0, out[0].z):
        out = [out[0]]
    return out
