"""Rotation numbers, the diffeomorphism criterion, invariant curves,
fixed points of the degree-zero family, and map Lyapunov exponents.

Frozen anchors:
  - signed criterion for alpha = 1 + a*sin(phi) has sup a/sqrt(1-a^2)
    attained at phi = 2*pi - arcsin(a): 0.75 at a=0.6, 4/3 at a=0.8,
    0.3/sqrt(0.91) ~ 0.3145 at a=0.3.
  - degree-zero fixed points obey phi = (omega/rho)*ln(1/alpha(phi)) +
    omega_tilde (mod 2*pi) with multiplier -(omega/rho)*alpha'/alpha.
  - mode locking at rotation 0 for the a=0.3, omega/rho=1 factor holds
    exactly for omega_tilde below ln(1.3) ~ 0.2624.
"""

import math

import numpy as np
import pytest

from funnel_lab import (
    CircleMap,
    DomainError,
    EscapeError,
    FunnelMap,
    GlobalMapConfig,
    ModulationProfile,
    RescaledMap,
    SaddleFocusParams,
    SineCircleMap,
    SingularLimitMap,
)
from funnel_lab.analysis import (
    check_diffeo_condition,
    check_stability_condition,
    distances_to_curve,
    find_fixed_points_n0,
    find_invariant_curve,
    locked_mask,
    lyapunov_exponent_circle,
    lyapunov_exponents_map,
    rotation_number,
)

TWO_PI = 2.0 * math.pi


class RigidRotation:
    def __init__(self, advance):
        self.advance = advance

    def lift(self, phi):
        return phi + self.advance

    def deriv(self, phi):
        return 1.0


# ---------------------------------------------------------------------------
# rotation numbers and mode locking
# ---------------------------------------------------------------------------

def test_rotation_number_of_rigid_rotations():
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    res = rotation_number(RigidRotation(TWO_PI * golden), 0.3, n_iter=2048)
    assert res.value == pytest.approx(golden, abs=1e-9)
    assert res.convergence_estimate < 1e-9
    res3 = rotation_number(RigidRotation(TWO_PI / 3.0), 0.0, n_iter=999)
    assert res3.value == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_rotation_number_requires_iterations():
    with pytest.raises(DomainError):
        rotation_number(RigidRotation(0.1), 0.0, n_iter=1)


def test_rotation_number_locks_to_zero_inside_the_tongue():
    # fixed point of the circle factor exists iff ln alpha(phi) can reach
    # omega_tilde, i.e. omega_tilde <= ln(1.3) for a = 0.3
    prof = ModulationProfile.sinusoidal(0.3)
    inside = rotation_number(CircleMap(prof, 1.0, 0.20, n=1), 0.0,
                             n_iter=4096, transient=512)
    outside = rotation_number(CircleMap(prof, 1.0, 0.30, n=1), 0.0,
                              n_iter=4096, transient=512)
    d_in = min(inside.value, 1.0 - inside.value)  # distance to 0 mod 1
    assert d_in < 1e-9
    assert 0.01 < outside.value < 0.1


def test_sweep_plateau_detection():
    prof = ModulationProfile.sinusoidal(0.3)
    wts = np.linspace(0.1, 0.5, 21)
    vals = np.array([
        rotation_number(CircleMap(prof, 1.0, wt, n=1), 0.0,
                        n_iter=4096, transient=512).value
        for wt in wts])
    mask = locked_mask(vals)
    # plateau ends at the tongue edge ln(1.3) ~ 0.2624
    assert mask[wts < 0.26].all()
    assert not mask[wts > 0.27].any()
    # rotation number grows monotonically past the edge
    free = vals[wts > 0.27]
    assert np.all(np.diff(free) > 0.0)


def test_locked_mask_wraps_mod_one():
    # a plateau at rotation 0 sampled on both sides of the wrap
    vals = np.array([1.0 - 1e-9, 1e-9, 1.0 - 2e-9, 0.3, 0.4, 0.5])
    mask = locked_mask(vals, tol=1e-6, min_run=3)
    assert mask.tolist() == [True, True, True, False, False, False]


def test_locked_mask_needs_min_run():
    vals = np.array([0.25, 0.25, 0.1, 0.2, 0.3])
    assert not locked_mask(vals, min_run=3).any()
    assert locked_mask(vals, min_run=2)[:2].all()


# ---------------------------------------------------------------------------
# diffeomorphism criterion
# ---------------------------------------------------------------------------

def test_diffeo_condition_closed_forms():
    for a, holds in ((0.3, True), (0.6, True), (0.8, False)):
        rep = check_diffeo_condition(ModulationProfile.sinusoidal(a), 1.0)
        assert rep.sup_value == pytest.approx(a / math.sqrt(1 - a * a), abs=1e-9)
        assert rep.satisfied is holds
        assert rep.phi_argmax == pytest.approx(TWO_PI - math.asin(a), abs=1e-5)


def test_diffeo_condition_scales_with_twist():
    # the criterion is linear in omega/rho
    prof = ModulationProfile.sinusoidal(0.3)
    r1 = check_diffeo_condition(prof, 1.0)
    r4 = check_diffeo_condition(prof, 4.0)
    assert r4.sup_value == pytest.approx(4.0 * r1.sup_value, rel=1e-9)
    assert not r4.satisfied  # 4 * 0.3145 > 1


def test_diffeo_condition_flat_profile():
    rep = check_diffeo_condition(ModulationProfile.flat(), 10.0)
    assert rep.sup_value == 0.0
    assert rep.satisfied


# ---------------------------------------------------------------------------
# invariant curves by graph transform
# ---------------------------------------------------------------------------

def test_invariant_curve_singular_limit_residuals():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    sl = SingularLimitMap(p, prof, omega_tilde=0.25, n=1)
    res_lo = find_invariant_curve(sl, n_grid=256, tol=1e-10)
    res_hi = find_invariant_curve(sl, n_grid=1024, tol=1e-10)
    assert res_hi.residual < 1e-9
    # resampling error drops fourth order: 256 -> 1024 gains ~256x
    assert res_lo.residual / res_hi.residual > 50.0


def test_invariant_curve_rescaled_map():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.0, n=1, eps_r=0.1)
    rm = RescaledMap(p, prof, cfg)
    res = find_invariant_curve(rm, n_grid=1024, tol=1e-10)
    assert res.residual < 1e-8
    # invariance probed off-grid: image of a graph point stays on the graph
    rng = np.random.default_rng(9)
    for _ in range(25):
        phi = rng.uniform(0.0, TWO_PI)
        z1, phi1 = rm.step(float(res.curve(phi)), phi)
        assert abs(float(res.curve(phi1)) - z1) < 1e-8


def test_invariant_curve_attracts_random_seeds():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.0, n=1, eps_r=0.1)
    rm = RescaledMap(p, prof, cfg)
    res = find_invariant_curve(rm, n_grid=1024, tol=1e-10)
    rng = np.random.default_rng(42)
    for _ in range(10):
        d = distances_to_curve(rm, res.curve, rng.uniform(0.0, 2.0),
                               rng.uniform(0.0, TWO_PI), 40)
        assert d[-1] < 1e-8
        # contraction holds until the noise floor of the curve itself
        for k in range(1, len(d) - 1):
            assert d[k + 1] <= max(0.5 * d[k], 1e-9)


def test_invariant_curve_rejects_degree_zero():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    sl = SingularLimitMap(p, prof, omega_tilde=0.25, n=0)
    with pytest.raises(DomainError):
        find_invariant_curve(sl)


def test_invariant_curve_warns_when_criterion_fails():
    # a = 0.8 violates the sufficient condition; the finder warns but is
    # still allowed to converge (the criterion is not necessary)
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.8)
    sl = SingularLimitMap(p, prof, omega_tilde=0.25, n=1)
    with pytest.warns(UserWarning):
        try:
            find_invariant_curve(sl, max_iter=200)
        except Exception:
            pass  # convergence is not asserted either way


# ---------------------------------------------------------------------------
# degree-zero fixed points
# ---------------------------------------------------------------------------

def test_targeted_fixed_point_singular_limit():
    # choose omega_tilde so that phi = 1 solves the fixed-point equation
    prof = ModulationProfile.sinusoidal(0.3)
    wt = (1.0 + math.log(prof.alpha(1.0))) % TWO_PI
    p = SaddleFocusParams.from_ratios(2.0, 1.0)
    sl = SingularLimitMap(p, prof, omega_tilde=wt, n=0)
    fps = find_fixed_points_n0(sl)
    assert len(fps) == 1
    f = fps[0]
    assert f.phi == pytest.approx(1.0, abs=1e-10)
    assert f.z == pytest.approx(prof.alpha(1.0) ** 2.0, rel=1e-10)
    assert f.predicted_eigenvalue == pytest.approx(
        -prof.alpha_prime(1.0) / prof.alpha(1.0), abs=1e-10)
    assert f.stable


def test_targeted_fixed_point_full_map_converges_with_mu():
    prof = ModulationProfile.sinusoidal(0.3)
    wt = (1.0 + math.log(prof.alpha(1.0))) % TWO_PI
    pred = -prof.alpha_prime(1.0) / prof.alpha(1.0)
    p = SaddleFocusParams.from_ratios(2.0, 1.0)
    errs = []
    for mu in (1e-2, 1e-3, 1e-4):
        phi_star = (wt - math.log(1.0 / mu)) % TWO_PI
        cfg = GlobalMapConfig(mu=mu, phi_star=phi_star, n=0, eps_r=0.1)
        rm = RescaledMap(p, prof, cfg)
        fps = find_fixed_points_n0(rm)
        assert len(fps) == 1
        f = fps[0]
        # genuine fixed point of the two-dimensional map
        z1, phi1 = rm.step(f.z, f.phi)
        assert abs(z1 - f.z) < 1e-10
        assert abs((phi1 - f.phi + math.pi) % TWO_PI - math.pi) < 1e-10
        lead = f.eigenvalues[np.argmax(np.abs(f.eigenvalues))]
        errs.append(abs(lead.real - pred))
        assert f.stable
    # multiplier error decays like mu (nu = 2 here) and is settled by 1e-4
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3
    assert errs[2] == pytest.approx(2.425e-5, rel=0.05)  # frozen regression


def test_fixed_points_coexist_with_opposite_stability():
    # steeper profile and twist admit a stable/unstable/stable triple
    prof = ModulationProfile.sinusoidal(0.6)
    p = SaddleFocusParams.from_ratios(1.5, 2.0)
    sl = SingularLimitMap(p, prof, omega_tilde=3.0, n=0)
    fps = find_fixed_points_n0(sl)
    assert len(fps) == 3
    assert [f.stable for f in fps] == [True, False, True]
    for f in fps:
        z1, phi1 = sl.step(f.z, f.phi)
        assert abs(z1 - f.z) < 1e-10
        assert abs((phi1 - f.phi + math.pi) % TWO_PI - math.pi) < 1e-10
        assert (abs(f.predicted_eigenvalue) < 1.0) is f.stable


def test_stable_fixed_point_absorbs_iterates():
    prof = ModulationProfile.sinusoidal(0.3)
    wt = (1.0 + math.log(prof.alpha(1.0))) % TWO_PI
    p = SaddleFocusParams.from_ratios(2.0, 1.0)
    phi_star = (wt - math.log(1.0 / 1e-3)) % TWO_PI
    cfg = GlobalMapConfig(mu=1e-3, phi_star=phi_star, n=0, eps_r=0.1)
    rm = RescaledMap(p, prof, cfg)
    f = find_fixed_points_n0(rm)[0]
    z, phi = 0.5, 4.0
    for _ in range(80):
        z, phi = rm.step(z, phi)
    assert abs(z - f.z) < 1e-9
    assert abs((phi - f.phi + math.pi) % TWO_PI - math.pi) < 1e-9


def test_stability_condition_report():
    prof = ModulationProfile.sinusoidal(0.3)
    rep = check_stability_condition(prof, 1.0, 1.0)
    expected = prof.alpha_prime(1.0) / prof.alpha(1.0)
    assert rep.value == pytest.approx(abs(expected), abs=1e-14)
    assert rep.predicted_eigenvalue == pytest.approx(-expected, abs=1e-14)
    assert rep.satisfied
    rep_bad = check_stability_condition(ModulationProfile.sinusoidal(0.9),
                                        8.0, 0.1)
    assert not rep_bad.satisfied


def test_fixed_points_require_degree_zero():
    prof = ModulationProfile.sinusoidal(0.3)
    p = SaddleFocusParams.from_ratios(2.0, 1.0)
    sl = SingularLimitMap(p, prof, omega_tilde=0.3, n=1)
    with pytest.raises(DomainError):
        find_fixed_points_n0(sl)


# ---------------------------------------------------------------------------
# Lyapunov exponents of the composed maps
# ---------------------------------------------------------------------------

def test_lyapunov_quasiperiodic_orbit_has_zero_leading_exponent():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    sl = SingularLimitMap(p, prof, omega_tilde=2.5, n=1)
    res = lyapunov_exponents_map(sl, 1.0, 0.3, n_iter=8000, transient=500)
    assert abs(res.exponents[0]) < 1e-3
    # the height direction collapses in one step: per-step floor shows up
    assert res.exponents[1] == pytest.approx(-50.0, abs=1e-12)
    assert abs(lyapunov_exponent_circle(sl.circle, 0.3, n_iter=8000)) < 1e-3


def test_lyapunov_locked_orbit_matches_multiplier():
    # on a mode-locked orbit the exponent is log of the cycle multiplier;
    # for the fixed point of the factor this is log|F'(phi*)|
    prof = ModulationProfile.sinusoidal(0.3)
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    sl = SingularLimitMap(p, prof, omega_tilde=0.20, n=1)
    res = lyapunov_exponents_map(sl, 1.0, 0.3, n_iter=4000, transient=2000)
    lc = lyapunov_exponent_circle(sl.circle, 0.3, n_iter=4000, transient=2000)
    assert res.exponents[0] == pytest.approx(lc, abs=1e-9)
    assert res.exponents[0] < -1e-3  # strictly attracting cycle


def test_lyapunov_sum_matches_jacobian_determinant():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.25, n=1, eps_r=0.1)
    rm = RescaledMap(p, prof, cfg)
    res = lyapunov_exponents_map(rm, 1.0, 0.3, n_iter=4000, transient=500)
    z, phi = 1.0, 0.3
    for _ in range(500):
        z, phi = rm.step(z, phi)
    acc = 0.0
    for _ in range(4000):
        acc += math.log(abs(np.linalg.det(rm.jacobian(z, phi))))
        z, phi = rm.step(z, phi)
    assert sum(res.exponents) == pytest.approx(acc / 4000.0, abs=1e-8)


def test_lyapunov_positive_for_expanding_factor():
    # strong modulation with large twist: certified chaotic parameters
    p = SaddleFocusParams.from_ratios(1.5, 5.0)
    prof = ModulationProfile.sinusoidal(0.96)
    sl = SingularLimitMap(p, prof, omega_tilde=0.7, n=1)
    res = lyapunov_exponents_map(sl, 1.0, 0.3, n_iter=20000, transient=1000)
    assert res.exponents[0] > math.log(2.0)  # at least the two-branch entropy


def test_lyapunov_escape_reports_iterate():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    fm = FunnelMap(p, prof, GlobalMapConfig(mu=1e-3, eps_r=0.1))
    with pytest.raises(EscapeError) as err:
        lyapunov_exponents_map(fm, 30.0, 0.0, n_iter=100, transient=0)
    assert err.value.iterate is not None
