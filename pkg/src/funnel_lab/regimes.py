"""Section-based attractor and voltage-trace regime classification.

The burster's attractors are told apart on a transverse section: a stable
periodic orbit leaves finitely many tight point clusters, a two-torus
fills one or two closed invariant curves, chaos scatters.  Flow Lyapunov
exponents must independently agree with the section topology before a
periodic or torus label is issued; any disagreement falls back to
``unclassified`` rather than forcing a label.

Voltage traces are classified by spike timing first (quiescent, bursting)
and the section machinery is consulted only for tonic-like traces, where
it separates locked spiking from drifting torus oscillation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from scipy.spatial import cKDTree

from .burster import (BursterParams, BursterState, FlowLyapunovResult,
                      Trajectory, flow_lyapunov, integrate,
                      slow_nullcline_position, standard_seed)
from .errors import DomainError, InsufficientDataError

LABELS = ("quiescent", "tonic_spiking", "bursting", "quasiperiodic_torus",
          "chaotic", "periodic", "unclassified")

_CLUSTER_TOL = 1e-5     # max point-to-centroid radius of a periodic cluster
_MAX_CLUSTERS = 64
_GAP_FRAC = 0.05        # max nearest-neighbor gap as a fraction of perimeter
_EXP_TOL = 0.01         # |exponent| below this reads as zero
_MIN_CROSSINGS = 500    # curve/cluster analysis needs this many points

_SPIKE_LEVEL = 0.0
_SPIKE_PROMINENCE = 0.5
_GAP_OVER_ISI = 5.0     # a gap this many median ISIs long separates bursts
_TONIC_CV = 0.05


@dataclass(frozen=True)
class RegimeLabel:
    """Classification outcome with the diagnostics that justify it."""

    label: str
    spike_count: int = 0
    isi_cv: float | None = None
    burst_count: int | None = None
    mean_interburst: float | None = None
    spikes_per_burst: float | None = None
    lyapunov: tuple[float, float, float] | None = None
    section_topology: str | None = None
    notes: str = ""

    def __post_init__(self):
        if self.label not in LABELS:
            raise DomainError(f"unknown regime label {self.label!r}")

    def record(self) -> dict:
        lam = self.lyapunov
        return {
            "label": self.label, "spike_count": self.spike_count,
            "isi_cv": self.isi_cv, "burst_count": self.burst_count,
            "mean_interburst": self.mean_interburst,
            "spikes_per_burst": self.spikes_per_burst,
            "lyap1": None if lam is None else lam[0],
            "lyap2": None if lam is None else lam[1],
            "lyap3": None if lam is None else lam[2],
            "section_topology": self.section_topology,
            "notes": self.notes,
        }


def default_section(p: BursterParams) -> tuple[np.ndarray, float]:
    """Section plane w = w_ref anchored at the full-system equilibrium.

    The equilibrium (slow nullcline meets the fast equilibrium surface)
    always sits inside the attractor's w-range at these parameters, so
    the plane through its w-value is guaranteed transverse to every
    oscillatory regime.  Returned as (coefficients, offset) of the affine
    functional g(v, w, y) = coefficients . (v, w, y) + offset; crossings
    are taken where g passes zero with the requested sign of dg/dt.
    """
    w_ref = slow_nullcline_position(p).equilibrium.w
    return np.array([0.0, 1.0, 0.0]), -w_ref


def poincare_section(source, p: BursterParams | None = None,
                     section: tuple[np.ndarray, float] | None = None,
                     direction: int = 1, discard: int = 200,
                     t_span: float = 3000.0, rtol: float = 1e-9,
                     atol: float = 1e-11) -> np.ndarray:
    """Ordered, event-refined section crossings of a trajectory.

    ``source`` is either a Trajectory whose crossings were already
    collected during integration, or a BursterState to integrate from
    (p required; the section defaults to the plane of default_section).
    The first ``discard`` crossings are dropped as transient.
    """
    if isinstance(source, Trajectory):
        crossings = source.event_states
    elif isinstance(source, BursterState):
        if p is None:
            raise DomainError("p is required when integrating from a state")
        if section is None:
            section = default_section(p)
        traj = integrate(source, p, t_span, rtol=rtol, atol=atol,
                         dt_sample=min(1.0, t_span), section=section,
                         direction=direction)
        crossings = traj.event_states
    else:
        raise DomainError("source must be a Trajectory or a BursterState")
    crossings = np.asarray(crossings, dtype=float)[discard:]
    if len(crossings) < 10:
        raise InsufficientDataError(
            f"only {len(crossings)} section crossings after the transient "
            f"discard; need at least 10")
    return crossings


# ---------------------------------------------------------------------------
# section topology
# ---------------------------------------------------------------------------

def _find_clusters(pts: np.ndarray):
    """Greedy grouping into tight clusters, or None if the set is not one.

    Assignment radius is looser than the acceptance radius so a genuine
    cluster is never split; each final group must fit inside
    _CLUSTER_TOL of its centroid.
    """
    centers: list[np.ndarray] = []
    groups: list[list[np.ndarray]] = []
    for x in pts:
        for i, ctr in enumerate(centers):
            if np.linalg.norm(x - ctr) < 5.0 * _CLUSTER_TOL:
                groups[i].append(x)
                centers[i] = np.mean(groups[i], axis=0)
                break
        else:
            centers.append(x.copy())
            groups.append([x])
            if len(centers) > _MAX_CLUSTERS:
                return None
    for ctr, grp in zip(centers, groups):
        arr = np.asarray(grp)
        if np.max(np.linalg.norm(arr - ctr, axis=1)) >= _CLUSTER_TOL:
            return None
    return centers


def _plane_coordinates(pts: np.ndarray) -> np.ndarray:
    """Project crossings onto the two principal in-plane directions."""
    centered = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return centered @ vt[:2].T


def _closed_curve(q: np.ndarray) -> bool:
    """Angle-order q around its centroid and test for a gap-free loop."""
    r = q - q.mean(axis=0)
    rad = np.hypot(r[:, 0], r[:, 1])
    if rad.max() <= 0.0 or rad.min() < 0.05 * rad.max():
        return False  # not an annular point set
    order = np.argsort(np.arctan2(r[:, 1], r[:, 0]))
    s = q[order]
    d = np.linalg.norm(np.diff(np.vstack([s, s[:1]]), axis=0), axis=1)
    perimeter = float(d.sum())
    return perimeter > 0.0 and float(d.max()) < _GAP_FRAC * perimeter


def _curve_topology(pts: np.ndarray) -> int:
    """Number of closed invariant curves the crossings fill (0 if none).

    Crossings are split into connected components at a linkage radius of
    a few median nearest-neighbor spacings, which separates disjoint
    loops without assuming how many there are; every component must then
    pass the closed-loop test individually.
    """
    q = _plane_coordinates(pts)
    tree = cKDTree(q)
    nn = tree.query(q, k=2)[0][:, 1]
    scale = float(np.median(nn))
    if scale <= 0.0:
        return 0
    comp = _link_components(q, tree, 8.0 * scale)
    n_comp = int(comp.max()) + 1
    if n_comp > 6:
        return 0
    for i in range(n_comp):
        part = q[comp == i]
        if len(part) < 50 or not _closed_curve(part):
            return 0
    return n_comp


def _link_components(q: np.ndarray, tree: cKDTree, radius: float) -> np.ndarray:
    """Single-linkage connected components at the given radius."""
    comp = np.full(len(q), -1, dtype=int)
    current = 0
    for start in range(len(q)):
        if comp[start] >= 0:
            continue
        stack = [start]
        comp[start] = current
        while stack:
            i = stack.pop()
            for j in tree.query_ball_point(q[i], radius):
                if comp[j] < 0:
                    comp[j] = current
                    stack.append(j)
        current += 1
    return comp


def _periodic_exponents(lam) -> bool:
    """Pattern (0, -, -): along-flow zero, the rest negative.

    The second exponent of a stable periodic orbit here is the slow
    contraction rate, of order mu_slow, so negativity is a sign test
    rather than a magnitude test against _EXP_TOL.
    """
    return abs(lam[0]) < _EXP_TOL and lam[1] < 0.0 and lam[2] < -_EXP_TOL


def _torus_exponents(lam) -> bool:
    """Pattern (0, 0, -): two zeros within _EXP_TOL, strong contraction."""
    return (abs(lam[0]) < _EXP_TOL and abs(lam[1]) < _EXP_TOL
            and lam[2] < -_EXP_TOL)


def classify_attractor(crossings, lyap: FlowLyapunovResult) -> RegimeLabel:
    """Label the attractor behind a set of section crossings.

    Periodic and torus labels require the section topology and the
    exponent pattern to agree; when they disagree the result is
    unclassified with the evidence in the diagnostics.
    """
    pts = np.asarray(crossings, dtype=float).reshape(-1, 3)
    lam = tuple(float(x) for x in lyap.exponents)
    if len(pts) == 0:
        return RegimeLabel(label="quiescent", lyapunov=lam,
                           section_topology="empty")
    if len(pts) < _MIN_CROSSINGS:
        return RegimeLabel(label="unclassified", lyapunov=lam,
                           section_topology="sparse",
                           notes=f"{len(pts)} crossings < {_MIN_CROSSINGS}")
    centers = _find_clusters(pts)
    if centers is not None:
        topo = f"clusters:{len(centers)}"
        if _periodic_exponents(lam):
            return RegimeLabel(label="periodic", lyapunov=lam,
                               section_topology=topo)
        if lam[0] > _EXP_TOL:
            return RegimeLabel(label="chaotic", lyapunov=lam,
                               section_topology=topo,
                               notes="positive exponent over clusters")
        return RegimeLabel(label="unclassified", lyapunov=lam,
                           section_topology=topo,
                           notes="clusters without (0,-,-) exponents")
    n_curves = _curve_topology(pts)
    if n_curves > 0:
        topo = f"curves:{n_curves}"
        if _torus_exponents(lam):
            return RegimeLabel(label="quasiperiodic_torus", lyapunov=lam,
                               section_topology=topo)
        if lam[0] > _EXP_TOL:
            return RegimeLabel(label="chaotic", lyapunov=lam,
                               section_topology=topo,
                               notes="positive exponent over curves")
        return RegimeLabel(label="unclassified", lyapunov=lam,
                           section_topology=topo,
                           notes="curves without (0,0,-) exponents")
    if lam[0] > _EXP_TOL:
        return RegimeLabel(label="chaotic", lyapunov=lam,
                           section_topology="scattered")
    return RegimeLabel(label="unclassified", lyapunov=lam,
                       section_topology="scattered",
                       notes="no recognizable section topology")


# ---------------------------------------------------------------------------
# voltage-trace classification
# ---------------------------------------------------------------------------

def _spike_times(t: np.ndarray, v: np.ndarray,
                 level: float = _SPIKE_LEVEL,
                 prominence: float = _SPIKE_PROMINENCE) -> np.ndarray:
    """Upward crossing times of the spike level, prominence-checked.

    A spike is counted once per prominent peak above the level; its time
    is the interpolated upward level crossing preceding the peak.
    """
    peaks, _ = find_peaks(v, prominence=prominence)
    peaks = peaks[v[peaks] > level]
    if len(peaks) == 0:
        return np.empty(0)
    dv = v - level
    up = np.flatnonzero((dv[:-1] <= 0.0) & (dv[1:] > 0.0))
    if len(up) == 0:
        return np.empty(0)
    pos = np.searchsorted(up, peaks, side="right") - 1
    idx = np.unique(up[pos[pos >= 0]])
    frac = -dv[idx] / (dv[idx + 1] - dv[idx])
    return t[idx] + frac * (t[idx + 1] - t[idx])


def classify_regime(p: BursterParams, t_max: float = 10000.0,
                    transient: float = 1000.0, rtol: float = 1e-9,
                    atol: float = 1e-11, spike_level: float = _SPIKE_LEVEL,
                    prominence: float = _SPIKE_PROMINENCE,
                    gap_factor: float = _GAP_OVER_ISI,
                    tonic_cv: float = _TONIC_CV) -> RegimeLabel:
    """Classify the burster's behavior at parameters p from a standard run.

    Spike timing decides quiescent, bursting, and the tonic-like cases;
    tonic-like traces are refined by a dedicated section run plus flow
    exponents, which separates locked spiking, torus drift, and chaos.
    All detection thresholds are configurable; the defaults are the
    module constants.
    """
    if t_max <= transient:
        raise DomainError("t_max must exceed the transient")
    seed = standard_seed(p)
    traj = integrate(seed, p, t_max, rtol=rtol, atol=atol, dt_sample=0.05)
    keep = traj.t >= transient
    spikes = _spike_times(traj.t[keep], traj.states[keep, 0],
                          level=spike_level, prominence=prominence)
    n_spikes = len(spikes)
    if n_spikes == 0:
        return RegimeLabel(label="quiescent", spike_count=0,
                           notes="no prominent spikes after transient")
    if n_spikes < 20:
        raise InsufficientDataError(
            f"only {n_spikes} spikes in t_max = {t_max:g}; raise t_max "
            f"for a reliable interspike analysis")
    isi = np.diff(spikes)
    median_isi = float(np.median(isi))
    cv = float(np.std(isi) / np.mean(isi))
    gaps = isi > gap_factor * median_isi
    if gaps.any():
        n_bursts = int(gaps.sum()) + 1
        return RegimeLabel(label="bursting", spike_count=n_spikes,
                           isi_cv=cv, burst_count=n_bursts,
                           mean_interburst=float(np.mean(isi[gaps])),
                           spikes_per_burst=n_spikes / n_bursts)
    # tonic-like: let the section and the exponents decide; both piercing
    # directions are kept so a torus fills both its invariant curves and
    # a locked orbit leaves clusters on both sides of the funnel
    settled = BursterState(*traj.y_end)
    # two crossings per spike: size the run so the topology test has
    # comfortably more than its minimum number of points
    t_section = min(max(25000.0, 700.0 * median_isi), 2e5)
    section_run = integrate(settled, p, t_section, rtol=rtol, atol=atol,
                            dt_sample=1000.0, section=default_section(p),
                            direction=0)
    crossings = np.asarray(section_run.event_states, dtype=float)[200:]
    lyap = flow_lyapunov(settled, p, T=1e4, transient=500.0,
                         rtol=rtol, atol=atol)
    att = classify_attractor(crossings, lyap)
    if att.label == "quasiperiodic_torus" or att.label == "chaotic":
        label, notes = att.label, att.notes
    elif att.label == "periodic":
        label, notes = "tonic_spiking", att.notes
    elif cv < tonic_cv:
        label = "tonic_spiking"
        notes = f"regular interspike intervals; section {att.label}"
    else:
        label = "unclassified"
        notes = f"irregular tonic-like trace; section {att.label}"
    return RegimeLabel(label=label, spike_count=n_spikes, isi_cv=cv,
                       lyapunov=att.lyapunov,
                       section_topology=att.section_topology, notes=notes)
