"""Stochastic pendulum swing-up plant with explicit Euler integration.

The angle theta is measured from the upright pose (theta = 0 is up, the
unstable equilibrium), so gravity enters as +(g/l) sin(theta):

    theta_dd = (g/l) sin(theta) - mu/(m l^2) theta_d + u/(m l^2) + w

with w an acceleration disturbance of standard deviation sigma_w held over
one step.  After each step the rate is clamped to [-2 pi, 2 pi] and the angle
wrapped to [-pi, pi), so states never leave the spline domain.  The angle
integration uses the pre-update rate (explicit Euler on the state vector).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import pi, sin
from typing import NamedTuple

from .errors import InvalidParam

THETADOT_LIMIT = 2.0 * pi


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0          # point mass at the rod tip [kg]
    l: float = 1.0          # rod length [m]
    g: float = 9.8          # gravity [m/s^2]
    mu: float = 0.01        # viscous friction coefficient
    u_max: float = 5.0      # torque bound [N m]
    sigma_w: float = 0.0    # disturbance std, same units as u/(m l^2)
    dt: float = 0.02        # integration step [s]

    def __post_init__(self):
        if self.m <= 0 or self.l <= 0 or self.dt <= 0:
            raise InvalidParam("mass, length and dt must be > 0")
        if self.mu < 0 or self.sigma_w < 0:
            raise InvalidParam("friction and noise scale must be >= 0")
        if self.u_max <= 0:
            raise InvalidParam("u_max must be > 0")

    @property
    def input_gain(self) -> tuple[float, float]:
        """df/du of the plant: torque only accelerates the rate."""
        return (0.0, 1.0 / (self.m * self.l**2))


class PendulumState(NamedTuple):
    theta: float      # rad, in [-pi, pi)
    thetadot: float   # rad/s, in [-2 pi, 2 pi]


class StepResult(NamedTuple):
    state: PendulumState
    clamped: bool     # rate hit the domain limit this step


def wrap_angle(theta: float) -> float:
    return (theta + pi) % (2.0 * pi) - pi


def set_mass(params: PendulumParams, m_new: float) -> PendulumParams:
    """New parameter set with only the mass changed (plant perturbation)."""
    if m_new <= 0:
        raise InvalidParam(f"mass must be > 0, got {m_new}")
    return replace(params, m=m_new)


def step(state: PendulumState, u: float, w_sample: float,
         params: PendulumParams) -> StepResult:
    """Advance one Euler step under torque ``u``.

    ``w_sample`` is a standard normal draw supplied by the caller; it is
    scaled by sigma_w internally so deterministic and stochastic runs can
    share random streams.
    """
    ml2 = params.m * params.l**2
    accel = ((params.g / params.l) * sin(state.theta)
             - (params.mu / ml2) * state.thetadot
             + u / ml2
             + params.sigma_w * w_sample)
    theta_new = wrap_angle(state.theta + params.dt * state.thetadot)
    rate_raw = state.thetadot + params.dt * accel
    rate_new = min(max(rate_raw, -THETADOT_LIMIT), THETADOT_LIMIT)
    return StepResult(PendulumState(theta_new, rate_new), rate_new != rate_raw)


def total_energy(state: PendulumState, params: PendulumParams) -> float:
    """Kinetic plus potential energy, zero level at the bottom pose.

    With theta measured from the top, the bob height above the bottom is
    l (1 + cos(theta))."""
    from math import cos

    kinetic = 0.5 * params.m * (params.l * state.thetadot) ** 2
    potential = params.m * params.g * params.l * (1.0 + cos(state.theta))
    return kinetic + potential
