"""Parameter sweeps over the return-map family and the burster.

A scan evaluates one named analysis on a 1D or 2D parameter grid,
optionally in parallel across grid points.  Every grid point produces
exactly one record even when the analysis fails there; failures carry an
``error:<Kind>`` status so a single bad point never aborts a sweep.
Results are deterministic for a fixed spec and seed: each point derives
its own RNG seed as ``seed + grid index``, so worker scheduling cannot
change any value.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analysis
from .burster import BursterParams
from .errors import ConfigError
from .maps import (CircleMap, GlobalMapConfig, RescaledMap, SaddleFocusParams,
                   SineCircleMap)
from .profiles import ModulationProfile
from .regimes import classify_regime

TWO_PI = 2.0 * np.pi

# Axis names each scan target accepts, and the analyses it can run.
AXIS_PARAMS = {
    "map-family": frozenset({"mu", "a", "omega_over_rho", "nu", "phi_star",
                             "eps_r", "eps_phi"}),
    "circle-map": frozenset({"omega_tilde", "a", "omega_over_rho",
                             "amplitude"}),
    "burster": frozenset({"c"}),
}
ANALYSES = {
    "map-family": frozenset({"lyapunov", "invariant-curve"}),
    "circle-map": frozenset({"rotation", "lyapunov"}),
    "burster": frozenset({"classify"}),
}

# Defaults for point parameters not fixed by an axis or an option.
_DEFAULTS = {
    "map-family": {"mu": 1e-3, "a": 0.3, "omega_over_rho": 1.0, "nu": 2.5,
                   "phi_star": 0.0, "eps_r": 0.1, "eps_phi": 0.0, "n": 1},
    "circle-map": {"omega_tilde": 0.0, "a": 0.3, "omega_over_rho": 1.0,
                   "n": 1, "amplitude": 0.0},
    "burster": {"c": 0.0, "delta": 0.08, "mu_slow": 0.002, "I": 0.8},
}

_LOCK_TOL = 1e-6
_LOCK_RUN = 3


@dataclass(frozen=True)
class ScanAxis:
    """One swept parameter: name, closed range, sample count, spacing."""

    name: str
    lo: float
    hi: float
    count: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"axis {self.name}: count must be >= 2")
        if self.spacing not in ("linear", "log"):
            raise ConfigError(
                f"axis {self.name}: spacing must be linear or log")
        if self.spacing == "log" and not (self.lo > 0.0 and self.hi > 0.0):
            raise ConfigError(
                f"axis {self.name}: log spacing needs a positive range")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class ScanSpec:
    """Declarative sweep: target family, axes, per-point analysis, seed."""

    target: str
    axes: tuple
    analysis: str
    options: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.target not in AXIS_PARAMS:
            raise ConfigError(
                f"unknown scan target {self.target!r}; expected one of "
                + ", ".join(sorted(AXIS_PARAMS)))
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= 2:
            raise ConfigError("a scan takes 1 or 2 axes")
        names = [ax.name for ax in axes]
        if len(set(names)) != len(names):
            raise ConfigError("axis names must be distinct")
        for name in names:
            if name not in AXIS_PARAMS[self.target]:
                raise ConfigError(
                    f"axis {name!r} is not a parameter of {self.target}; "
                    "allowed: " + ", ".join(sorted(AXIS_PARAMS[self.target])))
        if self.analysis not in ANALYSES[self.target]:
            raise ConfigError(
                f"analysis {self.analysis!r} not available for {self.target}; "
                "allowed: " + ", ".join(sorted(ANALYSES[self.target])))

    @property
    def shape(self) -> tuple:
        return tuple(ax.count for ax in self.axes)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    def grid(self) -> list[dict]:
        """Row-major list of {axis name: value} dicts, first axis outermost."""
        value_lists = [ax.values() for ax in self.axes]
        names = [ax.name for ax in self.axes]
        return [dict(zip(names, (float(v) for v in combo)))
                for combo in itertools.product(*value_lists)]

    def to_record(self) -> dict:
        return {
            "target": self.target,
            "axes": [{"name": ax.name, "lo": ax.lo, "hi": ax.hi,
                      "count": ax.count, "spacing": ax.spacing}
                     for ax in self.axes],
            "analysis": self.analysis,
            "options": dict(self.options),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ScanResult:
    """Spec echo plus one record per grid point, in row-major grid order."""

    spec: ScanSpec
    records: tuple

    def labels(self) -> list:
        return [rec.get("label") for rec in self.records]


def _point_params(spec: ScanSpec, point: dict) -> dict:
    params = dict(_DEFAULTS[spec.target])
    for key, value in spec.options.items():
        if key in params:
            params[key] = type(params[key])(value)
    params.update(point)
    return params


def _opt(spec: ScanSpec, key: str, default):
    value = spec.options.get(key, default)
    return type(default)(value)


def _analyze_circle(spec: ScanSpec, params: dict, rng) -> dict:
    if params["amplitude"] > 0.0:
        circle = SineCircleMap(params["amplitude"], params["omega_tilde"])
    else:
        profile = ModulationProfile.sinusoidal(params["a"])
        circle = CircleMap(profile, params["omega_over_rho"],
                           params["omega_tilde"], n=int(params["n"]))
    phi0 = float(rng.uniform(0.0, TWO_PI))
    if spec.analysis == "rotation":
        res = analysis.rotation_number(circle, phi0=phi0,
                                       n_iter=_opt(spec, "n_iter", 4096))
        return {"rotation": res.value,
                "convergence": res.convergence_estimate,
                "iterations": res.iterations}
    lam = analysis.lyapunov_exponent_circle(
        circle, phi0=phi0, n_iter=_opt(spec, "n_iter", 10_000))
    return {"lyapunov": lam}


def _analyze_map_family(spec: ScanSpec, params: dict, rng) -> dict:
    p = SaddleFocusParams.from_ratios(params["nu"], params["omega_over_rho"])
    profile = ModulationProfile.sinusoidal(params["a"])
    cfg = GlobalMapConfig(mu=params["mu"], phi_star=params["phi_star"],
                          n=int(params["n"]), eps_r=params["eps_r"],
                          eps_phi=params["eps_phi"])
    mp = RescaledMap(p, profile, cfg)
    if spec.analysis == "invariant-curve":
        res = analysis.find_invariant_curve(
            mp, n_grid=_opt(spec, "n_grid", 1024),
            tol=_opt(spec, "tol", 1e-10))
        heights = res.curve.heights
        return {"residual": res.residual, "iterations": res.iterations,
                "height_min": float(np.min(heights)),
                "height_max": float(np.max(heights))}
    z0 = float(rng.uniform(0.0, mp.z_max))
    phi0 = float(rng.uniform(0.0, TWO_PI))
    res = analysis.lyapunov_exponents_map(
        mp, z0, phi0, n_iter=_opt(spec, "n_iter", 10_000))
    return {"lyapunov_1": res.exponents[0], "lyapunov_2": res.exponents[1]}


def _analyze_burster(spec: ScanSpec, params: dict, rng) -> dict:
    p = BursterParams(delta=params["delta"], mu_slow=params["mu_slow"],
                      c=params["c"], I=params["I"])
    label = classify_regime(
        p, t_max=_opt(spec, "t_max", 10_000.0),
        transient=_opt(spec, "transient", 1000.0),
        gap_factor=_opt(spec, "gap_factor", 5.0))
    return label.record()


def evaluate_point(spec: ScanSpec, index: int) -> dict:
    """One grid point: parameters, per-point seed, analysis scalars, status."""
    point = spec.grid()[index]
    record = {"index": index, **point, "seed": spec.seed + index}
    rng = np.random.default_rng(spec.seed + index)
    try:
        params = _point_params(spec, point)
        if spec.target == "circle-map":
            record.update(_analyze_circle(spec, params, rng))
        elif spec.target == "map-family":
            record.update(_analyze_map_family(spec, params, rng))
        else:
            record.update(_analyze_burster(spec, params, rng))
        record["status"] = "ok"
    except Exception as exc:  # per-point failures must not abort the scan
        record["status"] = f"error:{type(exc).__name__}"
        record["error"] = str(exc)
    return record


def _mark_locked(spec: ScanSpec, records: list[dict]) -> None:
    """Flag mode-locked runs of rotation numbers along the omega_tilde axis."""
    axis_names = [ax.name for ax in spec.axes]
    along = axis_names.index("omega_tilde") if "omega_tilde" in axis_names \
        else len(axis_names) - 1
    shape = spec.shape
    grid = np.arange(len(records)).reshape(shape)
    lines = grid.T if (len(shape) == 2 and along == 0) else grid
    lines = lines.reshape(-1, shape[along])
    for line in lines:
        values = []
        for idx in line:
            rec = records[idx]
            values.append(rec.get("rotation", np.nan)
                          if rec["status"] == "ok" else np.nan)
        mask = analysis.locked_mask(np.asarray(values), tol=_LOCK_TOL,
                                    min_run=_LOCK_RUN)
        for idx, flag in zip(line, mask):
            records[idx]["locked"] = bool(flag)


def run_scan(spec: ScanSpec, workers: int | None = None) -> ScanResult:
    """Evaluate the analysis over the whole grid; always n_points records.

    ``workers=1`` runs serially in-process; anything else uses a process
    pool.  Records come back in grid order either way and are identical
    between the two modes.
    """
    indices = range(spec.n_points)
    if workers == 1:
        records = [evaluate_point(spec, i) for i in indices]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(evaluate_point, itertools.repeat(spec),
                                    indices, chunksize=8))
    if spec.analysis == "rotation":
        _mark_locked(spec, records)
    return ScanResult(spec=spec, records=tuple(records))
