"""Expansion certificates and symbolic dynamics for the circle factors.

A degree-zero or degree-one circle factor with an expanding branch whose
lifted image overshoots the circle can carry an m-shift.  This module checks
the closed-form sufficient conditions on an interval, constructs explicit
strips with verified pairwise covering, and shadows prescribed symbol
sequences by nested preimages.  In the singular limit the height direction is
slaved to the angle (the Jacobian is rank one), so the angular expansion is
the whole story.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .profiles import TWO_PI, ModulationProfile


def _circle_component(mp):
    """Extract (lift, deriv) callables from a map-like object."""
    if hasattr(mp, "circle"):
        mp = mp.circle
    if not (hasattr(mp, "lift") and hasattr(mp, "deriv")):
        raise DomainError("object has no circle component with lift/deriv")
    return mp


# ---------------------------------------------------------------------------
# closed-form interval conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpansionCheck:
    """Outcome of the two-alternative interval condition for an m-shift."""
    alternative: int | None
    margin: float
    lhs: float
    rhs: float


def check_expansion_conditions(profile: ModulationProfile, omega_over_rho: float,
                               interval: tuple[float, float], m: int,
                               n_grid: int = 4096) -> ExpansionCheck:
    """Sufficient conditions for an m-symbol shift over [phi1, phi2].

    Alternative 1: alpha strictly decreasing on the open interval and
        (omega/rho) * ln(alpha(phi1)/alpha(phi2)) > 2*pi*(m+1).
    Alternative 2: (omega/rho) * alpha'/alpha > 2 on the interval and
        (omega/rho) * ln(alpha(phi2)/alpha(phi1)) > 2*(phi2-phi1) + 2*pi*(m+1).

    Endpoints are excluded from the slope scans (margin 1e-9); the returned
    margin is the slack of the logarithmic inequality of the alternative that
    fired, or the best available slack (-inf if neither slope condition holds).
    """
    phi1, phi2 = float(interval[0]), float(interval[1])
    if not phi2 > phi1:
        raise DomainError("interval must satisfy phi2 > phi1")
    if phi2 - phi1 > TWO_PI:
        raise DomainError("interval must not exceed one period")
    if m < 1:
        raise DomainError("m must be >= 1")
    interior = np.linspace(phi1, phi2, n_grid + 2)[1:-1]
    a_int = np.asarray(profile.alpha(interior), float)
    ap_int = np.asarray(profile.alpha_prime(interior), float)
    a1 = float(profile.alpha(phi1))
    a2 = float(profile.alpha(phi2))
    target = TWO_PI * (m + 1)

    slope1 = bool(np.all(ap_int < -1e-9))
    margin1 = omega_over_rho * np.log(a1 / a2) - target

    slope2 = bool(np.all(omega_over_rho * ap_int / a_int > 2.0))
    margin2 = omega_over_rho * np.log(a2 / a1) - (2.0 * (phi2 - phi1) + target)

    if slope1 and margin1 > 0.0:
        return ExpansionCheck(1, float(margin1), float(margin1 + target), float(target))
    if slope2 and margin2 > 0.0:
        return ExpansionCheck(2, float(margin2),
                              float(margin2 + 2.0 * (phi2 - phi1) + target),
                              float(2.0 * (phi2 - phi1) + target))
    best, lhs, rhs = -np.inf, np.nan, float(target)
    if slope1:
        best, lhs = margin1, omega_over_rho * np.log(a1 / a2)
    if slope2 and margin2 > best:
        best, lhs = margin2, omega_over_rho * np.log(a2 / a1)
        rhs = 2.0 * (phi2 - phi1) + target
    return ExpansionCheck(None, float(best), float(lhs), rhs)


@dataclass(frozen=True)
class SineBranchReport:
    branches: int
    covers_per_branch: int


def sine_branch_count(amplitude: float) -> SineBranchReport:
    """Monotone branches of phi -> A*sin(phi) and full circle covers of each.

    The derivative A*cos(phi) changes sign twice per period, so there are
    always two monotone branches; each has lifted image of length 2*A and
    therefore floor(2*A / 2*pi) complete covers of the circle.
    """
    if amplitude <= 0.0:
        raise DomainError("amplitude must be positive")
    return SineBranchReport(branches=2,
                            covers_per_branch=int(np.floor(2.0 * amplitude / TWO_PI)))


# ---------------------------------------------------------------------------
# explicit strip certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Strip:
    """Expanding strip [lo, hi] (lift coordinates, hi - lo < 2*pi)."""
    lo: float
    hi: float
    image_lo: float
    image_hi: float
    increasing: bool

    def contains(self, phi: float, slack: float = 1e-9) -> bool:
        return ((phi - self.lo + slack) % TWO_PI) <= (self.hi - self.lo) + 2.0 * slack


@dataclass(frozen=True)
class HorseshoeCertificate:
    certified: bool
    m: int
    strips: tuple
    expansion_lower_bound: float
    covering: tuple
    shifts: tuple
    entropy_lower_bound: float
    message: str


def _expanding_branches(circle, n_grid: int, min_margin: float):
    """Maximal intervals where |F'| is certified >= 1 + min_margin.

    The certificate on each grid cell combines the node values with a
    Lipschitz slack from a second-derivative bound estimated on the grid.
    """
    phis = np.linspace(0.0, TWO_PI, n_grid + 1)
    d = np.asarray(circle.deriv(phis), float)
    h = TWO_PI / n_grid
    m2 = 1.5 * np.max(np.abs(np.diff(d))) / h + 1e-12
    slack = 0.5 * m2 * h
    lo_bound = np.minimum(np.abs(d[:-1]), np.abs(d[1:])) - slack
    same_sign = np.sign(d[:-1]) == np.sign(d[1:])
    ok = (lo_bound >= 1.0 + min_margin) & same_sign

    runs = []
    i = 0
    while i < n_grid:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j < n_grid and ok[j]:
            j += 1
        runs.append((i, j))
        i = j
    if len(runs) >= 2 and runs[0][0] == 0 and runs[-1][1] == n_grid:
        first = runs.pop(0)
        start, _ = runs.pop()
        runs.insert(0, (start - n_grid, first[1]))
    return [(phis[0] + a * h, phis[0] + b * h) for a, b in runs], slack


def horseshoe_certify(mp, m: int, n_grid: int = 4096,
                      min_margin: float = 1e-6,
                      covering_gap: float = 1e-6) -> HorseshoeCertificate:
    """Construct m expanding strips whose images all cover all strips.

    Strips are carved out of monotone expanding branches by splitting each
    hosting branch's lifted image into equal parts; a branch of image length
    L and width W can host k strips provided L/k >= 2*pi + W + 2*gap, since
    an interval of length 2*pi + len(S) always contains a 2*pi-translate of
    the strip S.  The returned certificate records the verified per-pair
    covering matrix, the integer translations realizing it, and a lower bound
    on |F'| over the strips; topological entropy of the certified shift is at
    least ln(m).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    circle = _circle_component(mp)
    branches, slack = _expanding_branches(circle, n_grid, min_margin)
    if not branches:
        return HorseshoeCertificate(
            certified=False, m=m, strips=(), expansion_lower_bound=0.0,
            covering=(), shifts=(), entropy_lower_bound=0.0,
            message="no expanding branch with |F'| > 1 was found")

    # Conservative per-branch capacity.
    infos = []
    for lo, hi in branches:
        f_lo, f_hi = float(circle.lift(lo)), float(circle.lift(hi))
        img_len = abs(f_hi - f_lo)
        width = hi - lo
        cap = int(np.floor((img_len - 2.0 * covering_gap) / (TWO_PI + width + 2.0 * covering_gap)))
        infos.append({"lo": lo, "hi": hi, "img_len": img_len, "cap": max(cap, 0),
                      "increasing": f_hi > f_lo})
    infos.sort(key=lambda r: r["img_len"], reverse=True)
    total = sum(r["cap"] for r in infos)
    if total < m:
        return HorseshoeCertificate(
            certified=False, m=m, strips=(), expansion_lower_bound=0.0,
            covering=(), shifts=(), entropy_lower_bound=0.0,
            message=f"branch capacity supports at most {total} strips, "
                    f"{m} were requested")

    strips: list[Strip] = []
    remaining = m
    for info in infos:
        if remaining == 0:
            break
        k = min(info["cap"], remaining)
        if k == 0:
            continue
        lo, hi = info["lo"], info["hi"]
        f = circle.lift
        f_lo, f_hi = float(f(lo)), float(f(hi))
        levels = np.linspace(f_lo, f_hi, k + 1)
        cuts = [lo]
        for level in levels[1:-1]:
            cuts.append(brentq(lambda x, L=level: f(x) - L, lo, hi,
                               xtol=1e-13, rtol=8.9e-16))
        cuts.append(hi)
        for a, b in zip(cuts[:-1], cuts[1:]):
            ia, ib = float(f(a)), float(f(b))
            strips.append(Strip(lo=float(a), hi=float(b),
                                image_lo=min(ia, ib), image_hi=max(ia, ib),
                                increasing=info["increasing"]))
        remaining -= k

    # Verified expansion bound over the strips.
    bound = np.inf
    for s in strips:
        grid = np.linspace(s.lo, s.hi, 256)
        bound = min(bound, float(np.min(np.abs(circle.deriv(grid)))) - slack)

    # Pairwise covering with explicit integer translations.
    covering = np.zeros((m, m), dtype=bool)
    shifts = np.zeros((m, m), dtype=int)
    for i, si in enumerate(strips):
        for j, sj in enumerate(strips):
            k = int(np.ceil((si.image_lo + covering_gap - sj.lo) / TWO_PI))
            if sj.hi + TWO_PI * k <= si.image_hi - covering_gap:
                covering[i, j] = True
                shifts[i, j] = k

    certified = bool(covering.all()) and bound > 1.0
    msg = "certified" if certified else "covering verification failed"
    return HorseshoeCertificate(
        certified=certified, m=m, strips=tuple(strips),
        expansion_lower_bound=float(bound),
        covering=tuple(tuple(bool(x) for x in row) for row in covering),
        shifts=tuple(tuple(int(x) for x in row) for row in shifts),
        entropy_lower_bound=float(np.log(m)) if certified else 0.0,
        message=msg)


def shadow_symbol_sequence(mp, cert: HorseshoeCertificate,
                           symbols) -> tuple[float, list[float]]:
    """Point whose orbit visits the certificate strips in prescribed order.

    Works backwards: the final strip is pulled back through the monotone
    branch restrictions, one symbol at a time, using the covering
    translations recorded in the certificate.  Returns the midpoint of the
    resulting nested interval and its forward orbit (lift values).
    """
    if not cert.certified:
        raise DomainError("certificate is not certified")
    symbols = [int(s) for s in symbols]
    if any(s < 0 or s >= cert.m for s in symbols):
        raise DomainError("symbol out of range")
    circle = _circle_component(mp)
    f = circle.lift

    # Nested preimages, last symbol first.
    s_last = cert.strips[symbols[-1]]
    target_lo, target_hi = s_last.lo, s_last.hi
    for t in range(len(symbols) - 2, -1, -1):
        s_cur = cert.strips[symbols[t]]
        k = cert.shifts[symbols[t]][symbols[t + 1]]
        lo_img = target_lo + TWO_PI * k
        hi_img = target_hi + TWO_PI * k
        x_lo = brentq(lambda x: f(x) - lo_img, s_cur.lo, s_cur.hi,
                      xtol=1e-14, rtol=8.9e-16)
        x_hi = brentq(lambda x: f(x) - hi_img, s_cur.lo, s_cur.hi,
                      xtol=1e-14, rtol=8.9e-16)
        target_lo, target_hi = min(x_lo, x_hi), max(x_lo, x_hi)

    phi0 = 0.5 * (target_lo + target_hi)
    orbit = [phi0]
    phi = phi0
    for _ in range(len(symbols) - 1):
        phi = f(phi)
        orbit.append(phi)
    for phi_t, sym in zip(orbit, symbols):
        if not cert.strips[sym].contains(phi_t, slack=1e-7):
            raise DomainError(
                f"shadowing verification failed: {phi_t:.12g} not in strip {sym}")
    return phi0, orbit
