"""Limit-cycle continuation for the frozen-y fast subsystem.

Cycles are anchored on the half-line w = w_eq(y), v > v_eq(y), which every
loop encircling the lower-branch equilibrium crosses once per turn.  The
branch is followed by pseudo-arclength continuation on a multiple-shooting
discretization: the period is split into ~2.5-unit segments with the
intermediate states as unknowns.  Canard segments amplify one-pass errors
by e^14 and more, which makes plain single shooting arithmetic-limited
right where the fold sits; per-segment amplification stays around e^5, so
the bordered Newton systems remain well conditioned along the entire
branch, vertical-tangent turns included.

The nontrivial Floquet multiplier is recovered from the sum of per-segment
log-determinants (the full-product determinant is cancellation noise), and
the integrated divergence rides along as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _rk
from .burster import STATE_GUARD, BursterParams, fast_equilibria
from .errors import ContinuationError, DomainError

_SHOOT_RTOL = 1e-12
_SHOOT_ATOL = 1e-14
# monodromy entries spike through the fast jumps; only (v, w) is physical
_VAR_GUARD = 1e14

# target multiple-shooting segment length in time units
_SEG_LEN = 2.5

# adjacent-sample multiplier drift the walk must respect; the multiplier
# peaks above 140 on the repelling sheet, so most samples exist to keep
# this band honest
_M_BAND = 0.085


@njit(cache=True)
def _fast_var_rhs(t, u, out, args):
    # u = [v, w, M11, M21, M12, M22, s1, s2, q]: monodromy columns,
    # drive sensitivity, integrated divergence
    delta, drive = args[0], args[1]
    v, w = u[0], u[1]
    a = 1.0 - v * v
    out[0] = v - v * v * v / 3.0 - w + drive
    out[1] = delta * (0.7 + v - 0.8 * w)
    for col in range(2):
        m0 = u[2 + 2 * col]
        m1 = u[3 + 2 * col]
        out[2 + 2 * col] = a * m0 - m1
        out[3 + 2 * col] = delta * m0 - 0.8 * delta * m1
    out[6] = a * u[6] - u[7] + 1.0
    out[7] = delta * u[6] - 0.8 * delta * u[7]
    out[8] = a - 0.8 * delta


@njit(cache=True)
def _fast_rhs_fwd(t, u, out, args):
    delta, drive = args[0], args[1]
    v, w = u[0], u[1]
    out[0] = v - v * v * v / 3.0 - w + drive
    out[1] = delta * (0.7 + v - 0.8 * w)


@dataclass(frozen=True)
class CycleSample:
    """One converged cycle: anchor point, period, and Floquet data.

    ``multipliers`` holds both eigenvalues of the 2x2 monodromy matrix,
    the near-unity one first.  The nontrivial multiplier used for
    stability and fold detection is their product det M, which equals it
    exactly when the trivial multiplier is 1.  ``closure`` is the largest
    segment-matching defect of the converged multiple-shooting solution.
    """

    y: float
    v0: float
    w0: float
    period: float
    amplitude: float
    multipliers: tuple[float, float]
    nontrivial_multiplier: float
    stable: bool
    closure: float
    divergence_mismatch: float
    states: np.ndarray

    def record(self) -> dict:
        return {
            "y": self.y, "v0": self.v0, "w0": self.w0,
            "period": self.period, "amplitude": self.amplitude,
            "multiplier_trivial": self.multipliers[0],
            "multiplier_nontrivial": self.multipliers[1],
            "stable": self.stable, "closure": self.closure,
            "divergence_mismatch": self.divergence_mismatch,
            "states_v": self.states[:, 0].tolist(),
            "states_w": self.states[:, 1].tolist(),
        }


@dataclass(frozen=True)
class EquilibriumSample:
    y: float
    v: float
    w: float
    eigenvalues: np.ndarray
    stable: bool
    branch: str

    def record(self) -> dict:
        return {
            "y": self.y, "v": self.v, "w": self.w,
            "eig_real": self.eigenvalues.real.tolist(),
            "eig_imag": self.eigenvalues.imag.tolist(),
            "stable": self.stable, "branch": self.branch,
        }


@dataclass(frozen=True)
class FastBranch:
    """A continuation branch of the frozen-y fast subsystem.

    Samples are stored in branch order.  For the limit-cycle branch the y
    values run down the attracting arm, stay exponentially pinned along
    the canard wall while the period sweeps out and back, and run up the
    repelling arm once the wall releases.
    """

    kind: str  # limit-cycle-branch | equilibrium-branch
    samples: tuple
    special_points: dict = field(default_factory=dict)

    def records(self) -> list[dict]:
        return [s.record() for s in self.samples]

    def fold_index(self) -> int | None:
        """Index of the sample at the detected fold, if any."""
        if "fold" not in self.special_points:
            return None
        period_fold = self.special_points["fold"]["period"]
        periods = np.array([s.period for s in self.samples])
        return int(np.argmin(np.abs(periods - period_fold)))


def _anchor_data(y: float, p: BursterParams) -> tuple[float, float, float]:
    """Equilibrium v, anchor w, and d(anchor w)/dy at frozen y."""
    eq = fast_equilibria(y, p)[0]
    # from v^3 + 0.75 v + 2.625 - 3(y + I) = 0
    dv_dy = 1.0 / (eq.v * eq.v + 0.25)
    return eq.v, eq.w, dv_dy / 0.8


def _shoot(v0: float, T: float, y: float, p: BursterParams):
    """Single-shooting residual over one trial period.

    Used for seeding on the attracting arm, where one-pass conditioning
    is harmless.  The monodromy is accumulated as a product over ~1-unit
    segments with the in-state factor reset to the identity after each:
    a relaxation cycle contracts by hundreds of orders of magnitude, so
    the determinant of the full matrix is cancellation noise, while each
    segment factor stays O(e^4) and its log-determinant is exact to
    ~1e-10.  Returns (F, M, f_end, dFdy, q, log_det) with F the return
    residual, M the full monodromy (entry-accurate, det-inaccurate),
    q the integrated divergence and log_det the robust log(det M).
    """
    v_eq, w0, dw_dy = _anchor_data(y, p)
    u = np.zeros(9)
    u[0], u[1] = v0, w0
    u[2], u[5] = 1.0, 1.0
    u[7] = dw_dy
    args = np.array([p.delta, y + p.I])
    n_seg = max(1, int(math.ceil(T / 1.0)))
    dt = T / n_seg
    M = np.eye(2)
    log_det = 0.0
    t = 0.0
    h = 0.0
    for k in range(n_seg):
        t_next = T if k == n_seg - 1 else (k + 1) * dt
        status, t, u, h, _ = _rk.advance(_fast_var_rhs, t, u, t_next,
                                         _SHOOT_RTOL, _SHOOT_ATOL, args,
                                         h, _VAR_GUARD)
        if status != _rk.OK:
            raise ContinuationError("variational integration failed mid-shot")
        seg = np.array([[u[2], u[4]], [u[3], u[5]]])
        det_seg = float(np.linalg.det(seg))
        if det_seg <= 0.0:
            raise ContinuationError("monodromy segment lost positivity")
        log_det += math.log(det_seg)
        M = seg @ M
        u[2], u[3], u[4], u[5] = 1.0, 0.0, 0.0, 1.0
    F = np.array([u[0] - v0, u[1] - w0])
    drive = y + p.I
    f_end = np.array([u[0] - u[0] ** 3 / 3.0 - u[1] + drive,
                      p.delta * (0.7 + u[0] - 0.8 * u[1])])
    dFdy = np.array([u[6], u[7] - dw_dy])
    return F, M, f_end, dFdy, u[8], log_det


def _newton_fixed_y(v0: float, T: float, y: float, p: BursterParams,
                    max_iter: int = 14) -> tuple[float, float]:
    """Converge (v0, T) at frozen y by single shooting; seeding only."""
    for _ in range(max_iter):
        F, M, f_end, _, _, _ = _shoot(v0, T, y, p)
        if np.linalg.norm(F) < 1e-11:
            return v0, T
        J = np.array([[M[0, 0] - 1.0, f_end[0]], [M[1, 0], f_end[1]]])
        try:
            dv, dT = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise ContinuationError("singular shooting Jacobian")
        dv = float(np.clip(dv, -0.5, 0.5))
        dT = float(np.clip(dT, -5.0, 5.0))
        v0, T = v0 + dv, T + dT
        if T <= 0.0:
            raise ContinuationError("trial period collapsed")
    F, _, _, _, _, _ = _shoot(v0, T, y, p)
    if np.linalg.norm(F) < 1e-9:
        return v0, T
    raise ContinuationError("shooting Newton stalled",
                            residual=float(np.linalg.norm(F)))


def _segment_count(T: float) -> int:
    return max(2, int(round(T / _SEG_LEN)))


def _ms_shoot(z: np.ndarray, k: int, p: BursterParams):
    """Multiple-shooting residual and Jacobian over k segments.

    z = [v0, v1, w1, ..., v_{k-1}, w_{k-1}, T, y]; the anchor pins w0.
    Returns (r, J, log_det, q, M) with r of size 2k, J of shape
    (2k, 2k+1), and M the full monodromy product for eigenvalue reports.
    """
    T, y = z[2 * k - 1], z[2 * k]
    if T <= 0.0:
        raise ContinuationError("trial period collapsed")
    v_eq, w0, dw_dy = _anchor_data(y, p)
    args = np.array([p.delta, y + p.I])
    dt = T / k
    nodes = np.empty((k, 2))
    nodes[0] = z[0], w0
    for i in range(1, k):
        nodes[i] = z[2 * i - 1], z[2 * i]
    r = np.empty(2 * k)
    J = np.zeros((2 * k, 2 * k + 1))
    M = np.eye(2)
    log_det = 0.0
    q = 0.0
    for i in range(k):
        u = np.zeros(9)
        u[0], u[1] = nodes[i]
        u[2], u[5] = 1.0, 1.0
        if i == 0:
            u[7] = dw_dy
        # sub-split so each determinant factor stays mild
        n_sub = max(1, int(math.ceil(dt)))
        M_seg = np.eye(2)
        t = 0.0
        h = 0.0
        for s in range(n_sub):
            t_next = dt if s == n_sub - 1 else (s + 1) * dt / n_sub
            status, t, u, h, _ = _rk.advance(
                _fast_var_rhs, t, u, t_next, _SHOOT_RTOL, _SHOOT_ATOL,
                args, h, _VAR_GUARD)
            if status != _rk.OK:
                raise ContinuationError("segment integration failed")
            sub = np.array([[u[2], u[4]], [u[3], u[5]]])
            det_sub = float(np.linalg.det(sub))
            if det_sub <= 0.0:
                raise ContinuationError("monodromy segment lost positivity")
            log_det += math.log(det_sub)
            M_seg = sub @ M_seg
            u[2], u[3], u[4], u[5] = 1.0, 0.0, 0.0, 1.0
        q += u[8]
        M = M_seg @ M
        end_v, end_w = u[0], u[1]
        drive = y + p.I
        f_end = np.array([end_v - end_v ** 3 / 3.0 - end_w + drive,
                          p.delta * (0.7 + end_v - 0.8 * end_w)])
        rows = slice(2 * i, 2 * i + 2)
        if i < k - 1:
            r[2 * i] = end_v - nodes[i + 1, 0]
            r[2 * i + 1] = end_w - nodes[i + 1, 1]
            J[rows, 1 + 2 * i] = -1.0, 0.0
            J[rows, 2 + 2 * i] = 0.0, -1.0
        else:
            r[2 * i] = end_v - nodes[0, 0]
            r[2 * i + 1] = end_w - nodes[0, 1]
            J[2 * k - 2, 0] -= 1.0
            J[2 * k - 1, 2 * k] -= dw_dy
        if i == 0:
            J[rows, 0] = M_seg[:, 0]
        else:
            J[rows, 2 * i - 1] = M_seg[:, 0]
            J[rows, 2 * i] = M_seg[:, 1]
        J[rows, 2 * k - 1] = f_end / k
        J[2 * i, 2 * k] += u[6]
        J[2 * i + 1, 2 * k] += u[7]
    return r, J, log_det, q, M


def _ms_seed(v0: float, T: float, y: float, k: int,
             p: BursterParams) -> np.ndarray:
    """Node states for a fresh segmentation, sampled along one pass."""
    v_eq, w0, _ = _anchor_data(y, p)
    args = np.array([p.delta, y + p.I])
    u = np.array([v0, w0])
    out = _rk.run_sampled(_fast_rhs_fwd, 0.0, u, T, _SHOOT_RTOL,
                          _SHOOT_ATOL, args, T / k, np.empty(0), 0.0, 0,
                          STATE_GUARD)
    if out[0] != _rk.OK or out[5] < k:
        raise ContinuationError("node seeding integration failed")
    s_y = out[4]
    z = np.empty(2 * k + 1)
    z[0] = v0
    for i in range(1, k):
        z[2 * i - 1] = s_y[i, 0]
        z[2 * i] = s_y[i, 1]
    z[2 * k - 1] = T
    z[2 * k] = y
    return z


def _ms_clip(dz: np.ndarray, cols: list[int], k: int) -> None:
    """Damp a Newton update in place; limits keep iterates on-sheet."""
    for j, c in enumerate(cols):
        if c == 0:
            lim = 0.05
        elif c == 2 * k - 1:
            lim = 1.0
        elif c == 2 * k:
            lim = 2e-4
        else:
            lim = 0.3
        if dz[j] > lim:
            dz[j] = lim
        elif dz[j] < -lim:
            dz[j] = -lim


def _ms_newton(z: np.ndarray, k: int, p: BursterParams, lock: int,
               max_iter: int = 14, tol: float = 1e-11):
    """Converge the multiple-shooting system with one column frozen.

    lock is the z-index held fixed (2k-1 for the period, 2k for y).
    Returns (z, log_det, q, J, M); J is from the last evaluation, which
    is accurate enough for tangent work at the converged point.
    """
    z = z.copy()
    cols = [c for c in range(2 * k + 1) if c != lock]
    best = math.inf
    for _ in range(max_iter):
        r, J, ld, q, M = _ms_shoot(z, k, p)
        nr = float(np.max(np.abs(r)))
        best = min(best, nr)
        if nr < tol:
            return z, ld, q, J, M
        try:
            dz = np.linalg.solve(J[:, cols], -r)
        except np.linalg.LinAlgError:
            raise ContinuationError("singular locked shooting system")
        _ms_clip(dz, cols, k)
        for j, c in enumerate(cols):
            z[c] += dz[j]
    r, J, ld, q, M = _ms_shoot(z, k, p)
    if float(np.max(np.abs(r))) < 1e-9:
        return z, ld, q, J, M
    raise ContinuationError("locked multiple-shooting Newton stalled",
                            residual=best)


def _ms_corrector(z_pred: np.ndarray, tangent: np.ndarray, k: int,
                  p: BursterParams, max_iter: int = 14, tol: float = 1e-11):
    """Bordered corrector: residual zero on the plane normal to tangent."""
    z = z_pred.copy()
    for _ in range(max_iter):
        r, J, ld, q, M = _ms_shoot(z, k, p)
        if float(np.max(np.abs(r))) < tol:
            return z, ld, q, J, M
        A = np.vstack([J, tangent[None, :]])
        rhs = -np.concatenate([r, [float(np.dot(z - z_pred, tangent))]])
        try:
            dz = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            raise ContinuationError("singular bordered system")
        nd = float(np.max(np.abs(dz)))
        if nd > 0.5:
            dz *= 0.5 / nd
        z = z + dz
        if z[2 * k - 1] <= 0.0:
            raise ContinuationError("trial period collapsed")
    r, J, ld, q, M = _ms_shoot(z, k, p)
    if float(np.max(np.abs(r))) < 1e-9:
        return z, ld, q, J, M
    raise ContinuationError("bordered corrector stalled",
                            residual=float(np.max(np.abs(r))))


def _ms_tangent(J: np.ndarray, t_prev: np.ndarray | None) -> np.ndarray:
    """Unit branch tangent: the right null vector of the shooting Jacobian."""
    _, _, Vt = np.linalg.svd(J)
    t = Vt[-1]
    if t_prev is not None and t_prev.size == t.size:
        if float(np.dot(t, t_prev)) < 0.0:
            t = -t
    return t


def _orient_step(t: np.ndarray, k: int, dT_sign: float,
                 dy_sign: float) -> np.ndarray:
    """Orient a tangent after re-segmentation using (T, y) motion only."""
    score = dT_sign * t[2 * k - 1] + dy_sign * t[2 * k]
    return -t if score < 0.0 else t


def _node_amplitude(z: np.ndarray, k: int) -> float:
    vs = [z[0]] + [z[2 * i - 1] for i in range(1, k)]
    return 0.5 * (max(vs) - min(vs))


def _ms_sample(z: np.ndarray, k: int, p: BursterParams,
               n_states: int) -> CycleSample:
    """Package a converged multiple-shooting cycle with Floquet data."""
    r, J, log_det, q, M = _ms_shoot(z, k, p)
    closure = float(np.max(np.abs(r)))
    T, y = float(z[2 * k - 1]), float(z[2 * k])
    v0 = float(z[0])
    det_m = math.exp(log_det)
    # the trivial multiplier is exactly 1, so det M is the nontrivial one;
    # both eigenvalues are reported for the serialized record
    tr_m = float(np.trace(M))
    disc = tr_m * tr_m - 4.0 * det_m
    if disc >= 0.0:
        big = 0.5 * (tr_m + math.copysign(math.sqrt(disc), tr_m))
        lam = (big, det_m / big) if big != 0.0 else (0.0, 0.0)
    else:
        # only near the fold, where both multipliers sit at 1
        lam = (0.5 * tr_m, 0.5 * tr_m)
    mults = (lam[0], lam[1]) if abs(lam[0] - 1.0) <= abs(lam[1] - 1.0) \
        else (lam[1], lam[0])
    mismatch = abs(math.expm1(log_det - q))
    v_eq, w0, _ = _anchor_data(y, p)
    args = np.array([p.delta, y + p.I])
    out = _rk.run_sampled(_fast_rhs_fwd, 0.0, np.array([v0, w0]), T,
                          1e-10, 1e-12, args, T / n_states,
                          np.empty(0), 0.0, 0, STATE_GUARD)
    states = out[4].copy()
    amplitude = 0.5 * float(states[:, 0].max() - states[:, 0].min())
    return CycleSample(y=y, v0=v0, w0=float(w0),
                       period=T, amplitude=amplitude,
                       multipliers=mults, nontrivial_multiplier=det_m,
                       stable=det_m < 1.0, closure=closure,
                       divergence_mismatch=float(mismatch), states=states)


def _first_cycle(y: float, p: BursterParams) -> tuple[float, float]:
    """Locate the attracting relaxation cycle at frozen y by settling."""
    eq = fast_equilibria(y, p)[0]
    if eq.stable:
        raise ContinuationError(
            "no self-starting cycle: fast equilibrium is stable at the "
            "upper end of y_range; start above the AH point")
    args = np.array([p.delta, y + p.I])
    u = np.array([eq.v + 2.5, eq.w])
    status, t, u, _, _ = _rk.advance(_fast_rhs_fwd, 0.0, u, 400.0, 1e-10,
                                     1e-12, args, 0.0, STATE_GUARD)
    if status != _rk.OK:
        raise ContinuationError("settling run diverged at the branch seed")
    g_c = np.array([0.0, 1.0])
    out = _rk.run_sampled(_fast_rhs_fwd, t, u, t + 400.0, 1e-10, 1e-12,
                          args, 400.0, g_c, -eq.w, 1, STATE_GUARD)
    if out[0] != _rk.OK or out[8] < 3:
        raise ContinuationError("no anchor crossings at the branch seed")
    e_t, e_y, n_e = out[6], out[7], out[8]
    T0 = float(np.mean(np.diff(e_t[n_e - 3:n_e])))
    v0 = float(e_y[n_e - 1, 0])
    return v0, T0


def _locate_trace_zero(y_guess: float, p: BursterParams) -> dict:
    """Find the equilibrium trace-zero point near y_guess by bisection."""
    def trace(y: float) -> float:
        eq = fast_equilibria(y, p)[0]
        return 1.0 - eq.v * eq.v - 0.8 * p.delta

    lo, hi = y_guess - 5e-3, y_guess + 5e-3
    f_lo, f_hi = trace(lo), trace(hi)
    for _ in range(60):
        if (f_lo <= 0.0) != (f_hi <= 0.0):
            break
        lo, hi = lo - 5e-3, hi + 5e-3
        f_lo, f_hi = trace(lo), trace(hi)
    else:
        raise ContinuationError("no trace sign change near branch terminus")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if (trace(mid) <= 0.0) == (f_lo <= 0.0):
            lo = mid
        else:
            hi = mid
    y_star = 0.5 * (lo + hi)
    eq = fast_equilibria(y_star, p)[0]
    det = p.delta * (1.0 - 0.8 * (1.0 - eq.v * eq.v))
    return {"y": float(y_star), "v": float(eq.v), "w": float(eq.w),
            "frequency": float(math.sqrt(max(det, 0.0)))}


def _refine_fold(z_a: np.ndarray, ld_a: float, z_b: np.ndarray,
                 ld_b: float, k: int, p: BursterParams) -> np.ndarray:
    """Pin the multiplier-1 crossing between two bracketing cycles.

    The walk crosses the fold on the sheet where the period is a clean
    local parameter (the vertical turn in the period sits strictly before
    it), so the crossing is solved as log m(T) = 0 by bracketed secant
    steps, each converged at locked period from the nearer endpoint.
    """
    Ta, Tb = float(z_a[2 * k - 1]), float(z_b[2 * k - 1])
    za, zb = z_a.copy(), z_b.copy()
    la, lb = ld_a, ld_b
    z_out = None
    for _ in range(60):
        if lb == la:
            Tm = 0.5 * (Ta + Tb)
        else:
            Tm = Ta - la * (Tb - Ta) / (lb - la)
        lo, hi = (Ta, Tb) if Ta < Tb else (Tb, Ta)
        if not (lo < Tm < hi):
            Tm = 0.5 * (Ta + Tb)
        z_seed = (za if abs(Tm - Ta) < abs(Tm - Tb) else zb).copy()
        z_seed[2 * k - 1] = Tm
        zm, lm, _, _, _ = _ms_newton(z_seed, k, p, lock=2 * k - 1)
        if abs(lm) < 1e-9:
            z_out = zm
            break
        if (lm > 0.0) == (la > 0.0):
            za, Ta, la = zm, Tm, lm
        else:
            zb, Tb, lb = zm, Tm, lm
        z_out = zm
    _, _, ld, _, _ = _ms_shoot(z_out, k, p)
    if abs(math.expm1(ld)) > 1e-6:
        raise ContinuationError("fold refinement left |m - 1| > 1e-6",
                                residual=abs(math.expm1(ld)))
    return z_out


def _band_violation(m_prev: float, m_new: float) -> bool:
    """Multiplier drift too large for one continuation step."""
    return abs(m_new - m_prev) > _M_BAND


def fast_limit_cycle_continuation(y_range: tuple[float, float],
                                  p: BursterParams,
                                  steps: int = 6000,
                                  amplitude_stop: float = 2e-3,
                                  n_states: int = 64,
                                  h0: float = 0.05) -> FastBranch:
    """Trace the frozen-y limit-cycle branch through its fold.

    Starts from the attracting relaxation cycle at the upper end of
    y_range (the fast equilibrium must be unstable there), follows the
    stable arm down in y, climbs the canard wall where the period sweeps
    up at exponentially pinned y, rounds the vertical-tangent turn, and
    descends the repelling sheet until the cycle amplitude falls below
    amplitude_stop near the subcritical Hopf point.  Special points: the
    fold (nontrivial Floquet multiplier 1 to 1e-6) and the branch
    terminus, refined to the equilibrium trace-zero point.

    Step control holds the multiplier drift between adjacent samples
    under 0.085 everywhere, so most of the walk is spent resolving the
    repelling sheet where the multiplier climbs above 140.  Any Newton
    failure halves the step; ten consecutive halvings abort.
    """
    y_lo, y_hi = float(min(y_range)), float(max(y_range))
    if steps < 2:
        raise DomainError("steps must be >= 2")
    v0, T0 = _first_cycle(y_hi, p)
    v0, T0 = _newton_fixed_y(v0, T0, y_hi, p)

    k = _segment_count(T0)
    z = _ms_seed(v0, T0, y_hi, k, p)
    z, ld, q, J, M = _ms_newton(z, k, p, lock=2 * k)
    samples = [_ms_sample(z, k, p, n_states)]

    # second point slightly down in y seeds the secant tangent
    z1 = z.copy()
    z1[2 * k] = y_hi - 5e-4
    z1, ld1, _, J, M = _ms_newton(z1, k, p, lock=2 * k)
    samples.append(_ms_sample(z1, k, p, n_states))
    tangent = (z1 - z) / float(np.linalg.norm(z1 - z))
    z, ld = z1, ld1

    special: dict[str, dict] = {}
    h = h0
    fold_found = False
    for _ in range(steps):
        T_cur = float(z[2 * k - 1])
        k_want = _segment_count(T_cur)
        if k_want != k:
            dT_sign = math.copysign(1.0, tangent[2 * k - 1])
            dy_sign = math.copysign(1.0, tangent[2 * k])
            try:
                z_new = _ms_seed(z[0], T_cur, z[2 * k], k_want, p)
                z_new, ld, q, J, M = _ms_newton(z_new, k_want, p,
                                                lock=2 * k_want - 1)
                k, z = k_want, z_new
                tangent = _orient_step(_ms_tangent(J, None), k, dT_sign,
                                       dy_sign)
            except ContinuationError:
                pass  # retry at the next step with the old segmentation
        m_prev = samples[-1].nontrivial_multiplier
        halvings = 0
        while True:
            z_pred = z + h * tangent
            try:
                z_new, ld_new, q_new, J_new, M_new = _ms_corrector(
                    z_pred, tangent, k, p)
                v_eq_new = _anchor_data(z_new[2 * k], p)[0]
                if (_node_amplitude(z_new, k) < 0.5 * amplitude_stop
                        and samples[-1].amplitude > 2.0 * amplitude_stop):
                    raise ContinuationError("captured by the equilibrium")
                if abs(ld_new - ld) > 0.7:
                    raise ContinuationError("multiplier hop across sheets")
                if _band_violation(m_prev, math.exp(ld_new)):
                    raise ContinuationError("multiplier band exceeded")
                break
            except ContinuationError:
                halvings += 1
                if halvings >= 10:
                    raise ContinuationError(
                        "continuation step failed after 10 halvings")
                h *= 0.5
        m_new = math.exp(ld_new)
        if not fold_found and (m_prev - 1.0) * (m_new - 1.0) < 0.0:
            z_fold = _refine_fold(z, ld, z_new, ld_new, k, p)
            fold_sample = _ms_sample(z_fold, k, p, n_states)
            samples.append(fold_sample)
            special["fold"] = {
                "y": fold_sample.y, "v0": fold_sample.v0,
                "period": fold_sample.period,
                "multiplier": fold_sample.nontrivial_multiplier,
            }
            fold_found = True
        sample = _ms_sample(z_new, k, p, n_states)
        if sample.y < y_lo - 1e-9 or sample.y > y_hi + 1e-9:
            break
        samples.append(sample)
        tangent = _ms_tangent(J_new, tangent)
        z, ld = z_new, ld_new
        # aim the next step at ~3/4 of the drift band; the 1.3 growth cap
        # keeps one-step lag from overshooting the reject line
        dm = abs(m_new - m_prev)
        grow = 1.3 if dm < 1e-12 else min(1.3, 0.065 / dm)
        h = min(max(h * grow, 1e-6), 1.0)
        if sample.amplitude < 0.05:
            # keep steps shorter than the shrinking cycle near the terminus
            h = min(h, max(sample.amplitude / 4.0, 1e-4))
        if sample.amplitude < amplitude_stop and not sample.stable:
            special["ah"] = _locate_trace_zero(sample.y, p)
            special["ah"]["terminal_y"] = sample.y
            special["ah"]["terminal_amplitude"] = sample.amplitude
            break
    return FastBranch(kind="limit-cycle-branch", samples=tuple(samples),
                      special_points=special)


def fast_equilibrium_branch(y_range: tuple[float, float], p: BursterParams,
                            steps: int = 200) -> FastBranch:
    """Sample the fast equilibrium sheet over a y grid."""
    if steps < 2:
        raise DomainError("steps must be >= 2")
    out = []
    for y in np.linspace(min(y_range), max(y_range), steps):
        for eq in fast_equilibria(float(y), p):
            out.append(EquilibriumSample(y=float(y), v=eq.v, w=eq.w,
                                         eigenvalues=eq.eigenvalues,
                                         stable=eq.stable, branch=eq.branch))
    return FastBranch(kind="equilibrium-branch", samples=tuple(out))
