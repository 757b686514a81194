"""Quantitative analysis of the circle and annulus return maps.

Everything here operates on the map objects from ``maps``: rotation numbers
from lifted orbits, the sufficient condition for the degree-one circle factor
to be a diffeomorphism, invariant curves by graph-transform iteration,
fixed points of the degree-zero maps with their spectra, and Lyapunov
exponents from QR accumulation of analytic Jacobians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curves import CircleCurve
from .errors import ConvergenceError, DomainError, EscapeError, RangeError
from .maps import reduce_angle
from .profiles import TWO_PI, ModulationProfile

_LOG_FLOOR = -50.0  # per-iteration floor for log-contraction rates


# ---------------------------------------------------------------------------
# rotation numbers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RotationNumberResult:
    value: float
    iterations: int
    convergence_estimate: float


def _mod1_distance(a: float, b: float) -> float:
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def rotation_number(circle, phi0: float = 0.0, n_iter: int = 4096,
                    transient: int = 0) -> RotationNumberResult:
    """Average lift advance (F^N(phi0) - phi0) / (2*pi*N), reduced mod 1.

    The convergence estimate compares the N-iterate value against the
    half-orbit value; for a rigid rotation both are exact and the estimate
    collapses to round-off.  An optional transient lets sweeps measure on
    the attractor (mode-locked plateaus then resolve to full precision).
    """
    if n_iter < 2:
        raise DomainError("rotation_number needs n_iter >= 2")
    phi = float(phi0)
    for _ in range(transient):
        phi = circle.lift(phi)
    start = phi
    n_half = n_iter // 2
    phi_half = start
    for k in range(1, n_iter + 1):
        phi = circle.lift(phi)
        if k == n_half:
            phi_half = phi
    value = ((phi - start) / (TWO_PI * n_iter)) % 1.0
    value_half = ((phi_half - start) / (TWO_PI * n_half)) % 1.0
    return RotationNumberResult(value=float(value), iterations=n_iter,
                                convergence_estimate=_mod1_distance(value, value_half))


def locked_mask(values: np.ndarray, tol: float = 1e-6, min_run: int = 3) -> np.ndarray:
    """Flag sweep points that sit on a mode-locking plateau.

    A plateau is a run of at least ``min_run`` consecutive sweep values whose
    successive differences stay within ``tol``.  Rotation numbers live on the
    circle, so differences are taken mod 1 (a plateau at 0 may be sampled as
    1 - eps on one side and +eps on the other).
    """
    values = np.asarray(values, dtype=float)
    m = values.size
    mask = np.zeros(m, dtype=bool)
    if m < min_run:
        return mask
    d = np.abs(np.diff(values)) % 1.0
    close = np.minimum(d, 1.0 - d) <= tol
    run_start = 0
    for i in range(m):
        if i < m - 1 and close[i]:
            continue
        # run of equal values is [run_start, i]
        if i - run_start + 1 >= min_run:
            mask[run_start:i + 1] = True
        run_start = i + 1
    return mask


# ---------------------------------------------------------------------------
# diffeomorphism condition for the degree-one circle factor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffeoReport:
    sup_value: float
    satisfied: bool
    phi_argmax: float


def check_diffeo_condition(profile: ModulationProfile, omega_over_rho: float,
                           n_grid: int = 4096) -> DiffeoReport:
    """Signed criterion sup_phi (omega/rho) * alpha'(phi)/alpha(phi) < 1.

    The signed supremum (not the absolute value) is what keeps the derivative
    1 - (omega/rho)*alpha'/alpha of the degree-one circle factor positive.
    The grid maximum is polished by one parabolic step through the
    neighbouring nodes.
    """
    phis = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    q = omega_over_rho * profile.alpha_prime(phis) / profile.alpha(phis)
    i = int(np.argmax(q))
    qm, q0, qp = q[(i - 1) % n_grid], q[i], q[(i + 1) % n_grid]
    h = TWO_PI / n_grid
    denom = qm - 2.0 * q0 + qp
    phi_star = phis[i]
    sup = float(q0)
    if denom < 0.0:
        delta = 0.5 * h * (qm - qp) / denom
        delta = float(np.clip(delta, -h, h))
        phi_star = phis[i] + delta
        q_ref = float(omega_over_rho * profile.alpha_prime(phi_star)
                      / profile.alpha(phi_star))
        sup = max(sup, q_ref)
    return DiffeoReport(sup_value=sup, satisfied=sup < 1.0,
                        phi_argmax=float(reduce_angle(phi_star)))


# ---------------------------------------------------------------------------
# invariant curve by graph transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InvariantCurveResult:
    curve: CircleCurve
    iterations: int
    sup_delta: float
    residual: float


def find_invariant_curve(mp, n_grid: int = 1024, tol: float = 1e-10,
                         max_iter: int = 10_000) -> InvariantCurveResult:
    """Attracting invariant graph z = h(phi) of a degree-one annulus map.

    Starting from the zeroth-order graph h0 = alpha(phi)**nu, each sweep
    pushes the sampled graph forward through the map and resamples the image
    points onto the uniform grid with periodic cubic interpolation.  The
    iteration stops when successive grids agree to ``tol`` in sup norm.

    The returned residual is the invariance defect sup |h(Phi(phi)) - Z(phi)|
    evaluated at the image points of the final sweep.
    """
    if getattr(mp, "n", None) != 1:
        raise DomainError("find_invariant_curve needs a degree-one map (n = 1)")
    report = check_diffeo_condition(mp.profile, mp.p.omega_over_rho)
    if not report.satisfied:
        warnings.warn(
            f"circle factor may fold (sup = {report.sup_value:.6g} >= 1); "
            "proceeding anyway", stacklevel=2)

    phis = np.linspace(0.0, TWO_PI, n_grid, endpoint=False)
    heights = np.asarray(mp.profile.alpha(phis), float) ** mp.p.nu
    curve = CircleCurve(heights)
    sup_delta = np.inf
    for it in range(1, max_iter + 1):
        z_img, phi_img = mp.step(curve.heights, phis)
        new_curve = CircleCurve.from_scatter(phi_img, z_img, n_grid)
        sup_delta = float(np.max(np.abs(new_curve.heights - curve.heights)))
        curve = new_curve
        if sup_delta < tol:
            break
    else:
        raise ConvergenceError(
            f"graph transform did not reach tol={tol:g} after {max_iter} sweeps "
            f"(last sup-delta {sup_delta:.3g})",
            residual=sup_delta, iterations=max_iter)

    z_img, phi_img = mp.step(curve.heights, phis)
    residual = float(np.max(np.abs(curve(phi_img) - z_img)))
    return InvariantCurveResult(curve=curve, iterations=it,
                                sup_delta=sup_delta, residual=residual)


def distances_to_curve(mp, curve: CircleCurve, z0: float, phi0: float,
                       n_steps: int) -> np.ndarray:
    """Vertical distances |z_k - h(phi_k)| along an orbit of ``mp``."""
    out = np.empty(n_steps + 1)
    z, phi = float(z0), float(phi0)
    out[0] = abs(z - curve(phi))
    for k in range(n_steps):
        z, phi = mp.step(z, phi)
        out[k + 1] = abs(z - curve(phi))
    return out


# ---------------------------------------------------------------------------
# fixed points of the degree-zero maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FixedPointReport:
    phi: float
    z: float
    eigenvalues: tuple
    stable: bool
    predicted_eigenvalue: float


@dataclass(frozen=True)
class StabilityReport:
    value: float
    satisfied: bool
    predicted_eigenvalue: float


def check_stability_condition(profile: ModulationProfile, omega_over_rho: float,
                              phi: float) -> StabilityReport:
    """Pointwise criterion (omega/rho) * |alpha'(phi)/alpha(phi)| < 1."""
    q = omega_over_rho * float(profile.alpha_prime(phi)) / float(profile.alpha(phi))
    return StabilityReport(value=abs(q), satisfied=abs(q) < 1.0,
                           predicted_eigenvalue=-q)


def _singular_circle_roots(circle, n_grid: int = 4096, tol: float = 1e-12):
    """Solutions of lift(phi) = phi (mod 2*pi) on [0, 2*pi) by bracketing."""
    phis = np.linspace(0.0, TWO_PI, n_grid + 1)
    g = np.asarray(circle.lift(phis), float) - phis
    k_lo = int(np.ceil(np.min(g) / TWO_PI))
    k_hi = int(np.floor(np.max(g) / TWO_PI))
    roots = []
    for k in range(k_lo, k_hi + 1):
        gk = g - TWO_PI * k
        sign_change = np.where(gk[:-1] * gk[1:] <= 0.0)[0]
        for i in sign_change:
            lo, hi = phis[i], phis[i + 1]
            glo = gk[i]
            if glo == 0.0:
                roots.append(lo)
                continue
            for _ in range(100):
                mid = 0.5 * (lo + hi)
                gm = circle.lift(mid) - mid - TWO_PI * k
                if hi - lo < tol:
                    break
                if (glo <= 0.0) == (gm <= 0.0):
                    lo, glo = mid, gm
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    # Deduplicate (a root can be found from both neighbouring brackets).
    roots = sorted(reduce_angle(r) for r in roots)
    out = []
    for r in roots:
        if not out or min(abs(r - out[-1]), TWO_PI - abs(r - out[-1])) > 1e-9:
            out.append(r)
    if len(out) > 1 and TWO_PI - abs(out[-1] - out[0]) < 1e-9:
        out.pop()
    return out


def find_fixed_points_n0(mp, n_grid: int = 4096,
                         newton_tol: float = 1e-12) -> list[FixedPointReport]:
    """Fixed points of a degree-zero singular-limit or rescaled map.

    The angular equation of the singular limit is one-dimensional and is
    solved by bracketing plus bisection; for a rescaled map those roots seed
    a two-dimensional Newton polish with the analytic Jacobian.  An empty
    list is a legitimate outcome.
    """
    if getattr(mp, "n", None) != 0:
        raise DomainError("find_fixed_points_n0 needs a degree-zero map")

    from .maps import RescaledMap, SingularLimitMap  # local to avoid cycle

    reports: list[FixedPointReport] = []
    if isinstance(mp, SingularLimitMap):
        for phi in _singular_circle_roots(mp.circle, n_grid=n_grid):
            z = mp.z_graph(phi)
            jac = mp.jacobian(z, phi)
            eig = np.linalg.eigvals(jac)
            q = mp.p.omega_over_rho * float(mp.profile.alpha_prime(phi)) \
                / float(mp.profile.alpha(phi))
            reports.append(FixedPointReport(
                phi=float(phi), z=float(z),
                eigenvalues=tuple(complex(e) for e in eig),
                stable=bool(np.max(np.abs(eig)) < 1.0),
                predicted_eigenvalue=-q))
        return reports

    if not isinstance(mp, RescaledMap):
        raise DomainError("find_fixed_points_n0 accepts SingularLimitMap or RescaledMap")

    seed_map = SingularLimitMap(mp.p, mp.profile, mp.omega_tilde, n=0)
    for phi_seed in _singular_circle_roots(seed_map.circle, n_grid=n_grid):
        z, phi = float(seed_map.z_graph(phi_seed)), float(phi_seed)
        converged = False
        for _ in range(60):
            z1, phi1 = mp.step(z, phi)
            res_z = z1 - z
            res_phi = (phi1 - phi + np.pi) % TWO_PI - np.pi
            if max(abs(res_z), abs(res_phi)) < newton_tol:
                converged = True
                break
            jac = mp.jacobian(z, phi) - np.eye(2)
            try:
                dz, dphi = np.linalg.solve(jac, [-res_z, -res_phi])
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError("singular Newton matrix at a fixed-point "
                                       f"candidate phi={phi:.6g}") from exc
            z = max(z + dz, 0.0)
            phi = phi + dphi
        if not converged:
            raise ConvergenceError(
                f"Newton polish failed near phi={phi_seed:.6g}",
                residual=float(max(abs(res_z), abs(res_phi))))
        phi = float(reduce_angle(phi))
        dup = any(_mod1_distance(phi / TWO_PI, r.phi / TWO_PI) * TWO_PI < 1e-9
                  for r in reports)
        if dup:
            continue
        jac = mp.jacobian(z, phi)
        eig = np.linalg.eigvals(jac)
        q = mp.p.omega_over_rho * float(mp.profile.alpha_prime(phi)) \
            / float(mp.profile.alpha(phi))
        reports.append(FixedPointReport(
            phi=phi, z=float(z),
            eigenvalues=tuple(complex(e) for e in eig),
            stable=bool(np.max(np.abs(eig)) < 1.0),
            predicted_eigenvalue=-q))
    return reports


# ---------------------------------------------------------------------------
# Lyapunov exponents of map orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapLyapunovResult:
    exponents: tuple
    iterations: int


def lyapunov_exponents_map(mp, z0: float, phi0: float, n_iter: int = 10_000,
                           transient: int = 1000) -> MapLyapunovResult:
    """Both Lyapunov exponents of a 2D map orbit by QR accumulation.

    The singular-limit maps have a rank-one Jacobian, so the contracting
    exponent is minus infinity; per-iteration log factors are floored at
    -50, and the floor value is then reported verbatim.
    """
    z, phi = float(z0), float(phi0)
    floor = np.exp(_LOG_FLOOR)
    k = -transient
    try:
        for _ in range(transient):
            z, phi = mp.step(z, phi)
            k += 1
        q = np.eye(2)
        sums = np.zeros(2)
        for k in range(n_iter):
            jac = mp.jacobian(z, phi)
            q, r = np.linalg.qr(jac @ q)
            sums += np.log(np.maximum(np.abs(np.diag(r)), floor))
            z, phi = mp.step(z, phi)
    except (DomainError, RangeError) as exc:
        raise EscapeError(f"orbit left the domain during Lyapunov run: {exc}",
                          iterate=k) from exc
    lam = np.sort(sums / n_iter)[::-1]
    return MapLyapunovResult(exponents=(float(lam[0]), float(lam[1])),
                             iterations=n_iter)


def lyapunov_exponent_circle(circle, phi0: float = 0.1, n_iter: int = 10_000,
                             transient: int = 1000) -> float:
    """Lyapunov exponent of a 1D circle map: the orbit mean of log|F'|."""
    phi = float(phi0)
    for _ in range(transient):
        phi = circle.lift(phi)
    floor = np.exp(_LOG_FLOOR)
    total = 0.0
    for _ in range(n_iter):
        total += float(np.log(max(abs(circle.deriv(phi)), floor)))
        phi = circle.lift(phi)
    return total / n_iter
