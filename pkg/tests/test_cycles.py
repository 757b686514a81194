"""Frozen-y limit-cycle branch: fold, canard wall, and Hopf terminus.

Anchors pinned from converged runs at the default parameters, cross-checked
between single and multiple shooting on the attracting arm:

  fold (nontrivial multiplier 1): y = -0.47582147749629,
      period = 68.5265032, v0 = -0.79702696287
  trace-zero point: y = -0.46871862764525, v = -sqrt(1 - 0.8*0.08)
  terminal small-cycle frequency: close to sqrt(det J) = 0.27550731

The branch fixture lives in conftest.py and is shared with the acceptance
suite; one walk covers the stable relaxation arm, the period sweep along
the wall (y pinned to ~1e-7 while the period runs 52 -> 69.12 -> 68.5),
and the repelling sheet down to the subcritical Hopf terminus.
"""

import math

import numpy as np
import pytest

from funnel_lab import (
    BursterParams,
    ContinuationError,
    DomainError,
    fast_ah_point,
    fast_equilibrium_branch,
    fast_limit_cycle_continuation,
)

FOLD_Y = -0.47582147749629
FOLD_PERIOD = 68.5265032
FOLD_V0 = -0.79702696287


def _multipliers(branch):
    return np.array([s.nontrivial_multiplier for s in branch.samples])


def test_branch_kind_and_special_points(cycle_branch):
    assert cycle_branch.kind == "limit-cycle-branch"
    assert "fold" in cycle_branch.special_points
    assert "ah" in cycle_branch.special_points
    assert len(cycle_branch.samples) > 100


def test_fold_multiplier_is_one(cycle_branch):
    fold = cycle_branch.special_points["fold"]
    assert abs(fold["multiplier"] - 1.0) < 1e-6


def test_fold_location(cycle_branch):
    fold = cycle_branch.special_points["fold"]
    assert fold["y"] == pytest.approx(FOLD_Y, abs=1e-8)
    assert fold["period"] == pytest.approx(FOLD_PERIOD, abs=1e-5)
    assert fold["v0"] == pytest.approx(FOLD_V0, abs=1e-7)


def test_fold_index_points_at_unit_multiplier(cycle_branch):
    i = cycle_branch.fold_index()
    assert i is not None
    m = cycle_branch.samples[i].nontrivial_multiplier
    assert abs(m - 1.0) < 1e-6


def test_multiplier_sides_split_at_fold(cycle_branch):
    i = cycle_branch.fold_index()
    m = _multipliers(cycle_branch)
    assert np.all(m[:i] < 1.0)
    assert np.all(m[i + 1:] > 1.0)


def test_cycle_closure(cycle_branch):
    worst = max(s.closure for s in cycle_branch.samples)
    assert worst <= 1e-8


def test_multiplier_divergence_consistency(cycle_branch):
    worst = max(s.divergence_mismatch for s in cycle_branch.samples)
    assert worst <= 1e-4


def test_multiplier_continuity(cycle_branch):
    m = _multipliers(cycle_branch)
    assert np.max(np.abs(np.diff(m))) < 0.1


def test_samples_ordered_in_y(cycle_branch):
    # y runs down the attracting arm and back up the repelling one, so
    # the branch ordering is a V in y; the wall keeps y pinned to ~1e-7
    # with jitter far below the slack used here
    y = np.array([s.y for s in cycle_branch.samples])
    turn = int(np.argmin(y))
    assert np.all(np.diff(y[:turn + 1]) <= 1e-9)
    assert np.all(np.diff(y[turn:]) >= -1e-9)


def test_stability_flag_matches_multiplier(cycle_branch):
    for s in cycle_branch.samples:
        assert s.stable == (s.nontrivial_multiplier < 1.0)


def test_monodromy_eigenvalues_are_diagnostic(cycle_branch):
    # the eigen split of the accumulated monodromy degrades with wall
    # conditioning (worst ~5e-2 at the fold); the log-det product is the
    # authority, but the split must stay recognizably (1, m)
    for s in cycle_branch.samples:
        assert abs(s.multipliers[0] - 1.0) < 0.1
        gap = abs(s.multipliers[1] - s.nontrivial_multiplier)
        assert gap < 0.1 * max(1.0, abs(s.nontrivial_multiplier))


def test_branch_reaches_both_regimes(cycle_branch):
    m = _multipliers(cycle_branch)
    assert m.min() < 1e-10      # strongly attracting relaxation arm
    assert m.max() > 10.0       # strongly repelling sheet


def test_terminus_matches_trace_zero_point(cycle_branch, default_params):
    ah = cycle_branch.special_points["ah"]
    ref = fast_ah_point(default_params)
    assert ah["terminal_y"] == pytest.approx(ref.y_ah, abs=1e-4)
    assert ah["y"] == pytest.approx(ref.y_ah, abs=1e-6)
    assert ah["v"] == pytest.approx(ref.v_ah, abs=1e-6)
    assert ah["v"] == pytest.approx(-math.sqrt(1.0 - 0.8 * 0.08), abs=1e-6)
    assert ah["frequency"] == pytest.approx(ref.frequency, abs=1e-5)


def test_terminal_cycle_is_small_and_unstable(cycle_branch):
    last = cycle_branch.samples[-1]
    assert last.amplitude < 2e-3
    assert not last.stable
    ah = cycle_branch.special_points["ah"]
    assert ah["terminal_amplitude"] == last.amplitude
    # the vanishing cycle approaches the linear frequency at the point
    assert last.period == pytest.approx(2.0 * math.pi / ah["frequency"],
                                        rel=1e-2)


def test_sample_records(cycle_branch):
    rec = cycle_branch.samples[0].record()
    for key in ("y", "v0", "w0", "period", "amplitude",
                "multiplier_trivial", "multiplier_nontrivial", "stable",
                "closure", "divergence_mismatch", "states_v", "states_w"):
        assert key in rec
    assert len(rec["states_v"]) == len(rec["states_w"])
    assert len(rec["states_v"]) == 65


def test_continuation_rejects_stable_seed(default_params):
    with pytest.raises(ContinuationError, match="above the AH point"):
        fast_limit_cycle_continuation((-0.52, -0.48), default_params)


def test_continuation_rejects_bad_steps(default_params):
    with pytest.raises(DomainError):
        fast_limit_cycle_continuation((-0.50, -0.45), default_params,
                                      steps=1)


def test_equilibrium_branch_structure(default_params):
    br = fast_equilibrium_branch((-0.52, -0.44), default_params, steps=81)
    assert br.kind == "equilibrium-branch"
    # single intersection of the nullclines for every y at these defaults
    assert len(br.samples) == 81
    y = np.array([s.y for s in br.samples])
    assert np.all(np.diff(y) > 0.0)
    ref = fast_ah_point(default_params)
    for s in br.samples:
        if s.y < ref.y_ah - 1e-3:
            assert s.stable
        elif s.y > ref.y_ah + 1e-3:
            assert not s.stable


def test_equilibrium_branch_records(default_params):
    br = fast_equilibrium_branch((-0.50, -0.45), default_params, steps=5)
    rec = br.records()[0]
    for key in ("y", "v", "w", "eig_real", "eig_imag", "stable", "branch"):
        assert key in rec
    with pytest.raises(DomainError):
        fast_equilibrium_branch((-0.5, -0.45), default_params, steps=1)
