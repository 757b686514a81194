"""Core map layer: passage map, reinjection, composed annulus maps.

Closed-form anchors used below:
  - passage map: z1 = r0**nu, phi1 = phi0 + (omega/rho)*ln(1/r0),
    tau = ln(1/r0)/rho; at (r0=0.5, phi0=1, rho=1, lam=1.5, omega=2)
    this gives z1 = 0.5**1.5, phi1 = 1 + 2*ln 2, tau = ln 2.
  - trivial composed map (flat profile, mu=0.01, couplings off, n=1,
    rho=1, lam=2, omega=1): (0, 0) -> (1e-4, ln 100).
  - one-dimensional height model with a=1, nu=2, alpha=1: fixed points
    solve z**2 - z + mu = 0, so z* = (1 - sqrt(1 - 4*mu))/2 and the
    derivative there is 2*z*.
"""

import math

import numpy as np
import pytest

from funnel_lab import (
    AnnulusPoint,
    CircleMap,
    DomainError,
    EscapeError,
    FunnelMap,
    GlobalMapConfig,
    ModulationProfile,
    RangeError,
    RescaledMap,
    SaddleFocusParams,
    SineCircleMap,
    SingularLimitMap,
    flow_oracle,
    global_map,
    iterate_map,
    local_map,
    model_map_1d,
    model_map_fixed_points,
    omega_tilde_of,
    transition_time,
)

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------

def test_saddle_focus_params_reject_weak_contraction():
    with pytest.raises(DomainError):
        SaddleFocusParams(rho=1.0, lam=0.9, omega=1.0)
    with pytest.raises(DomainError):
        SaddleFocusParams(rho=1.0, lam=1.0, omega=1.0)  # nu must exceed 1
    # opt-in escape hatch for oracle cross-checks only
    p = SaddleFocusParams(rho=1.0, lam=0.5, omega=1.0, allow_expanding=True)
    assert p.nu == 0.5


def test_saddle_focus_params_from_ratios_roundtrip():
    p = SaddleFocusParams.from_ratios(2.5, 3.0)
    assert p.nu == pytest.approx(2.5, abs=0)
    assert p.omega_over_rho == pytest.approx(3.0, abs=0)
    assert p.rho == 1.0


def test_global_config_validation():
    with pytest.raises(DomainError):
        GlobalMapConfig(mu=-0.1)
    with pytest.raises(DomainError):
        GlobalMapConfig(mu=0.1, n=2)
    with pytest.raises(DomainError):
        GlobalMapConfig(mu=0.1, eps_r=-0.2)


def test_annulus_point_reduction():
    pt = AnnulusPoint(z=0.3, phi=7.0)
    assert pt.phi == 7.0  # the lift is preserved
    assert pt.phi_mod == pytest.approx(7.0 - TWO_PI, abs=1e-15)
    with pytest.raises(DomainError):
        AnnulusPoint(z=-1e-9, phi=0.0)


# ---------------------------------------------------------------------------
# passage map through the linear funnel
# ---------------------------------------------------------------------------

def test_local_map_worked_example():
    p = SaddleFocusParams(rho=1.0, lam=1.5, omega=2.0)
    z1, phi1 = local_map(0.5, 1.0, p)
    assert z1 == pytest.approx(0.5 ** 1.5, abs=1e-15)
    assert phi1 == pytest.approx(1.0 + 2.0 * math.log(2.0), abs=1e-14)
    assert transition_time(0.5, p) == pytest.approx(math.log(2.0), abs=1e-15)


def test_local_map_power_law_height():
    # z1 = r0**nu exactly, independent of phi0
    p = SaddleFocusParams.from_ratios(1.8, 0.7)
    rng = np.random.default_rng(11)
    for _ in range(50):
        r0 = rng.uniform(1e-6, 1.0)
        phi0 = rng.uniform(-10.0, 10.0)
        z1, phi1 = local_map(r0, phi0, p)
        assert z1 == pytest.approx(r0 ** 1.8, rel=1e-14)
        assert phi1 - phi0 == pytest.approx(0.7 * math.log(1.0 / r0), rel=1e-12)


def test_local_map_rejects_bad_radius():
    p = SaddleFocusParams.from_ratios(1.5, 1.0)
    with pytest.raises(DomainError):
        local_map(0.0, 0.0, p)
    with pytest.raises(DomainError):
        local_map(1.5, 0.0, p)
    with pytest.raises(DomainError):
        transition_time(0.0, p)


def test_local_map_agrees_with_flow_oracle():
    # the oracle integrates the linear field, never touching the formulas
    rng = np.random.default_rng(5)
    for _ in range(10):
        nu = rng.uniform(1.1, 3.0)
        wr = rng.uniform(0.2, 5.0)
        p = SaddleFocusParams.from_ratios(nu, wr)
        r0 = rng.uniform(0.05, 0.95)
        phi0 = rng.uniform(0.0, TWO_PI)
        z1, phi1 = local_map(r0, phi0, p)
        hit = flow_oracle(r0, phi0, p)
        assert hit.z == pytest.approx(z1, abs=1e-8)
        assert hit.phi == pytest.approx(phi1, abs=1e-8)
        assert hit.tau == pytest.approx(transition_time(r0, p), abs=1e-10)


def test_flow_oracle_expanding_height_direction():
    # nu < 1 makes the height grow on the way out; the oracle and the
    # closed form must still agree (construction-only regime)
    p = SaddleFocusParams(rho=1.0, lam=0.5, omega=1.0, allow_expanding=True)
    z1, phi1 = local_map(0.3, 0.2, p)
    hit = flow_oracle(0.3, 0.2, p)
    assert z1 > 0.3  # 0.3**0.5 > 0.3: weaker contraction than the radius
    assert hit.z == pytest.approx(z1, abs=1e-8)


# ---------------------------------------------------------------------------
# reinjection
# ---------------------------------------------------------------------------

def test_global_map_flat_profile_arithmetic():
    prof = ModulationProfile.flat()
    cfg = GlobalMapConfig(mu=0.2, phi_star=0.3, n=1, eps_r=0.1, eps_phi=0.05)
    r0, phi0 = global_map(0.5, 1.0, prof, cfg)
    assert r0 == pytest.approx(0.2 + 0.1 * 0.5, abs=1e-15)
    assert phi0 == pytest.approx(1.0 + 0.3 + 0.05 * 0.5, abs=1e-15)


def test_global_map_grazing_and_overshoot():
    prof = ModulationProfile.flat()
    # mu = 0 with couplings off lands exactly on the stable manifold
    cfg0 = GlobalMapConfig(mu=0.0, phi_star=0.0, n=1, eps_r=0.0)
    with pytest.raises(DomainError):
        global_map(0.5, 1.0, prof, cfg0)
    # reinjection outside the unit cylinder is a hard range failure
    cfg1 = GlobalMapConfig(mu=0.6, phi_star=0.0, n=1, eps_r=0.5)
    with pytest.raises(RangeError):
        global_map(1.0, 1.0, prof, cfg1)


def test_omega_tilde_formula():
    p = SaddleFocusParams.from_ratios(1.5, 2.0)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.4)
    assert omega_tilde_of(p, cfg) == pytest.approx(
        2.0 * math.log(1e3) + 0.4, rel=1e-14)


# ---------------------------------------------------------------------------
# composed annulus map
# ---------------------------------------------------------------------------

def test_composed_map_trivial_example():
    p = SaddleFocusParams(rho=1.0, lam=2.0, omega=1.0)
    prof = ModulationProfile.flat()
    cfg = GlobalMapConfig(mu=0.01, phi_star=0.0, n=1, eps_r=0.0, eps_phi=0.0)
    fm = FunnelMap(p, prof, cfg)
    z1, phi1 = fm.step(0.0, 0.0)
    assert z1 == pytest.approx(1e-4, rel=1e-13)
    assert phi1 == pytest.approx(math.log(100.0), rel=1e-13)


def test_composed_map_is_literal_composition():
    p = SaddleFocusParams.from_ratios(1.7, 1.3)
    prof = ModulationProfile.sinusoidal(0.4)
    cfg = GlobalMapConfig(mu=5e-3, phi_star=0.9, n=1, eps_r=0.1, eps_phi=0.02)
    fm = FunnelMap(p, prof, cfg)
    rng = np.random.default_rng(2)
    for _ in range(25):
        z, phi = rng.uniform(0.0, 1.0), rng.uniform(-5.0, 5.0)
        r0, phi0 = global_map(z, phi, prof, cfg)
        expected = local_map(r0, phi0, p)
        got = fm.step(z, phi)
        assert got[0] == pytest.approx(expected[0], abs=0)
        assert got[1] == pytest.approx(expected[1], abs=0)


def test_composed_map_rejects_unsafe_reinjection():
    # mu*max(alpha) + eps_r*z_max must stay below the cylinder radius
    p = SaddleFocusParams.from_ratios(1.5, 1.0)
    prof = ModulationProfile.flat()
    with pytest.raises(DomainError):
        FunnelMap(p, prof, GlobalMapConfig(mu=0.95, eps_r=0.1))


def test_jacobians_match_finite_differences():
    p = SaddleFocusParams.from_ratios(1.5, 2.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.4, n=1, eps_r=0.1, eps_phi=0.05)
    maps = [
        FunnelMap(p, prof, cfg),
        RescaledMap(p, prof, cfg),
        SingularLimitMap(p, prof, omega_tilde=0.9, n=1),
        SingularLimitMap(p, prof, omega_tilde=0.9, n=0),
    ]
    rng = np.random.default_rng(3)
    h = 1e-6
    for mp in maps:
        for _ in range(20):
            z = rng.uniform(0.05, 0.8)
            phi = rng.uniform(0.0, TWO_PI)
            Ja = mp.jacobian(z, phi)
            Jn = np.zeros((2, 2))
            for j, (dz, dp) in enumerate(((h, 0.0), (0.0, h))):
                f1 = mp.step(z + dz, phi + dp)
                f0 = mp.step(z - dz, phi - dp)
                Jn[:, j] = [(f1[0] - f0[0]) / (2 * h), (f1[1] - f0[1]) / (2 * h)]
            scale = np.maximum(1.0, np.abs(Jn))
            assert np.max(np.abs(Ja - Jn) / scale) < 1e-5


def test_rescaled_map_is_exact_conjugation():
    # iterating the rescaled map and unscaling must equal iterating the
    # original map from the unscaled seed
    p = SaddleFocusParams.from_ratios(1.5, 2.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.4, n=1, eps_r=0.1, eps_phi=0.0)
    rm = RescaledMap(p, prof, cfg)
    fm = FunnelMap(p, prof, cfg)
    Z, phi = 0.7, 2.1
    z, phi_full = Z * rm.scale, phi
    for _ in range(10):
        Z, phi = rm.step(Z, phi)
        z, phi_full = fm.step(z, phi_full)
        assert Z * rm.scale == pytest.approx(z, rel=1e-12)
        assert phi == pytest.approx(phi_full, rel=0, abs=1e-12)
    assert rm.scale == pytest.approx(cfg.mu ** p.nu, rel=1e-15)


def test_singular_limit_worked_example():
    p = SaddleFocusParams.from_ratios(1.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    sl = SingularLimitMap(p, prof, omega_tilde=2.0, n=0)
    z1, phi1 = sl.step(0.33, math.pi / 2.0)
    assert z1 == pytest.approx(1.3 ** 1.5, abs=1e-14)
    assert phi1 == pytest.approx(2.0 - math.log(1.3), abs=1e-14)
    # the height image is independent of the input height
    z1b, _ = sl.step(0.77, math.pi / 2.0)
    assert z1b == z1


def test_singular_limit_approximates_rescaled_map():
    # sup distance over the annulus decays like mu**min(1, nu-1);
    # measured constant for this configuration is about 0.55
    p = SaddleFocusParams.from_ratios(1.5, 2.0)
    prof = ModulationProfile.sinusoidal(0.3)
    rng = np.random.default_rng(3)
    prev = np.inf
    for mu in (1e-3, 1e-4, 1e-5, 1e-6):
        cfg = GlobalMapConfig(mu=mu, phi_star=0.4, n=1, eps_r=0.1, eps_phi=0.0)
        rm = RescaledMap(p, prof, cfg)
        sl = SingularLimitMap(p, prof, omega_tilde=rm.omega_tilde, n=1)
        worst = 0.0
        for _ in range(100):
            Z, phi = rng.uniform(0.0, 2.0), rng.uniform(0.0, TWO_PI)
            a = rm.step(Z, phi)
            b = sl.step(Z, phi)
            dphi = abs((a[1] - b[1] + math.pi) % TWO_PI - math.pi)
            worst = max(worst, abs(a[0] - b[0]), dphi)
        assert worst < 0.7 * mu ** 0.5
        assert worst < prev
        prev = worst


def test_circle_map_degree():
    prof = ModulationProfile.sinusoidal(0.5)
    cm = CircleMap(prof, omega_over_rho=1.2, omega_tilde=0.7, n=1)
    sm = SineCircleMap(3.0, omega_tilde=0.2)
    for phi in np.linspace(-3.0, 9.0, 17):
        assert cm.lift(phi + TWO_PI) - cm.lift(phi) == pytest.approx(
            TWO_PI, abs=1e-12)
        assert sm.lift(phi + TWO_PI) - sm.lift(phi) == pytest.approx(
            0.0, abs=1e-12)


def test_circle_map_derivative_matches_fd():
    prof = ModulationProfile.sinusoidal(0.5)
    cm = CircleMap(prof, omega_over_rho=1.2, omega_tilde=0.7, n=1)
    h = 1e-6
    for phi in np.linspace(0.0, TWO_PI, 13):
        fd = (cm.lift(phi + h) - cm.lift(phi - h)) / (2 * h)
        assert cm.deriv(phi) == pytest.approx(fd, abs=1e-8)


def test_iterate_map_orbit_shape_and_escape():
    p = SaddleFocusParams.from_ratios(2.5, 1.0)
    prof = ModulationProfile.sinusoidal(0.3)
    cfg = GlobalMapConfig(mu=1e-3, phi_star=0.25, n=1, eps_r=0.1)
    rm = RescaledMap(p, prof, cfg)
    zs, phis = iterate_map(rm, 1.0, 0.3, 100)
    assert zs.shape == (101,) and phis.shape == (101,)
    assert zs[0] == 1.0 and phis[0] == 0.3
    assert np.all(np.isfinite(zs)) and np.all(np.isfinite(phis))

    # a full-map orbit started far outside the trapping region escapes
    fm = FunnelMap(p, prof, GlobalMapConfig(mu=1e-3, eps_r=0.1))
    with pytest.raises(EscapeError) as err:
        iterate_map(fm, 20.0, 0.0, 10)
    assert err.value.iterate == 1


# ---------------------------------------------------------------------------
# one-dimensional height model
# ---------------------------------------------------------------------------

def test_model_map_fixed_points_quadratic_case():
    # a=1, nu=2, mu=0.01: z**2 - z + 0.01 = 0
    fps = model_map_fixed_points(1.0, 2.0, 0.01, 1.0)
    assert len(fps) == 2
    z_lo = (1.0 - math.sqrt(0.96)) / 2.0
    z_hi = (1.0 + math.sqrt(0.96)) / 2.0
    assert fps[0].z == pytest.approx(z_lo, abs=1e-12)
    assert fps[1].z == pytest.approx(z_hi, abs=1e-12)
    assert fps[0].derivative == pytest.approx(2.0 * z_lo, abs=1e-11)
    assert fps[0].stable and not fps[1].stable
    # frozen decimal anchors
    assert fps[0].z == pytest.approx(0.010102051443364957, abs=1e-12)
    assert fps[0].derivative == pytest.approx(0.020204102886729913, abs=1e-11)


def test_model_map_iteration_reaches_stable_fixed_point():
    fps = model_map_fixed_points(1.0, 2.0, 0.01, 1.0)
    z = 0.2
    for _ in range(60):
        z = model_map_1d(z, 1.0, 2.0, 0.01, 1.0)
    assert z == pytest.approx(fps[0].z, abs=1e-10)


def test_model_map_no_fixed_points_when_offset_too_large():
    # minimum of g sits above zero once alpha*mu exceeds the critical gap
    assert model_map_fixed_points(1.0, 2.0, 0.3, 1.0) == []


def test_model_map_input_validation():
    with pytest.raises(DomainError):
        model_map_1d(-0.1, 1.0, 2.0, 0.01, 1.0)
    with pytest.raises(DomainError):
        model_map_fixed_points(1.0, 1.0, 0.01, 1.0)
