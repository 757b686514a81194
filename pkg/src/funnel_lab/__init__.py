"""Numerical laboratory for saddle-focus funnel return maps and bursting."""

from .errors import (ConfigError, ContinuationError, ConvergenceError,
                     DivergenceError, DomainError, EscapeError, FunnelLabError,
                     InsufficientDataError, NonInvertibleError, RangeError)
from .maps import (AnnulusPoint, CircleMap, FunnelMap, GlobalMapConfig,
                   RescaledMap, SaddleFocusParams, SineCircleMap,
                   SingularLimitMap, global_map, iterate_map, local_map,
                   model_map_1d, model_map_fixed_points, omega_tilde_of,
                   reduce_angle, transition_time)
from .profiles import ModulationProfile
from .oracle import OracleHit, flow_oracle
from .curves import CircleCurve
from .burster import (AhPoint, BursterParams, BursterState, FastEquilibrium,
                      Trajectory, fast_ah_point, fast_equilibria,
                      fast_equilibrium_w, flow_lyapunov, integrate,
                      slow_nullcline_position, standard_seed)
from .cycles import (CycleSample, EquilibriumSample, FastBranch,
                     fast_equilibrium_branch, fast_limit_cycle_continuation)
from .regimes import (RegimeLabel, classify_attractor, classify_regime,
                      default_section, poincare_section)

__version__ = "0.1.0"
