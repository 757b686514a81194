"""Direct numerical integration of the linear saddle-focus flow.

This is an independent cross-check for the closed-form passage map: the flow

    r' = rho * r,   phi' = omega,   z' = -lam * z

is integrated with classical fixed-step RK4 from the disk section until the
orbit reaches the unit cylinder r = 1, with the hit time localized by
bisection inside the final step.  No closed-form solution of the flow is used
anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .errors import ConvergenceError, DomainError
from .maps import SaddleFocusParams


@dataclass(frozen=True)
class OracleHit:
    """State on the cylinder: height z, unreduced angle phi, flight time tau."""
    z: float
    phi: float
    tau: float


def _rk4_step(r, phi, z, h, rho, omega, lam):
    # k1..k4 for the linear field; phi is exactly linear in t but is stepped
    # like the rest so the integrator stays generic.
    k1r, k1z = rho * r, -lam * z
    r2, z2 = r + 0.5 * h * k1r, z + 0.5 * h * k1z
    k2r, k2z = rho * r2, -lam * z2
    r3, z3 = r + 0.5 * h * k2r, z + 0.5 * h * k2z
    k3r, k3z = rho * r3, -lam * z3
    r4, z4 = r + h * k3r, z + h * k3z
    k4r, k4z = rho * r4, -lam * z4
    return (r + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r),
            phi + h * omega,
            z + h / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z))


def flow_oracle(r0: float, phi0: float, p: SaddleFocusParams,
                z0: float = 1.0, steps_per_unit_rate: int = 200,
                time_tol: float = 1e-12) -> OracleHit:
    """Integrate the linear flow from (r0, phi0, z0) until r = 1.

    steps_per_unit_rate sets the fixed step h = 1/(steps_per_unit_rate * s)
    with s = max(1, rho, lam); the default keeps the global RK4 error below
    1e-9 for the parameter ranges exercised here.  The crossing time is
    refined to ``time_tol`` by bisection on a partial step.
    """
    if not (0.0 < r0 <= 1.0):
        raise DomainError("flow_oracle needs 0 < r0 <= 1")
    if z0 < 0.0:
        raise DomainError("flow_oracle needs z0 >= 0")
    if r0 == 1.0:
        return OracleHit(z=z0, phi=phi0, tau=0.0)

    rho, omega, lam = p.rho, p.omega, p.lam
    scale = max(1.0, rho, lam)
    h = 1.0 / (steps_per_unit_rate * scale)
    # Generous cap: the true flight time is ln(1/r0)/rho.
    max_steps = int(20.0 * scale * (1.0 + abs(math.log(r0)) / rho) / h) + 64

    t = 0.0
    r, phi, z = r0, phi0, z0
    for _ in range(max_steps):
        rn, phin, zn = _rk4_step(r, phi, z, h, rho, omega, lam)
        if rn >= 1.0:
            break
        r, phi, z, t = rn, phin, zn, t + h
    else:
        raise ConvergenceError("flow_oracle: orbit failed to reach r = 1")

    # Bisect the step fraction; each probe is a single RK4 partial step from
    # the last interior state, so its local error is O(h^5).
    lo, hi = 0.0, h
    while hi - lo > time_tol:
        mid = 0.5 * (lo + hi)
        rm, _, _ = _rk4_step(r, phi, z, mid, rho, omega, lam)
        if rm >= 1.0:
            hi = mid
        else:
            lo = mid
    dt = 0.5 * (lo + hi)
    _, phi1, z1 = _rk4_step(r, phi, z, dt, rho, omega, lam)
    return OracleHit(z=z1, phi=phi1, tau=t + dt)
