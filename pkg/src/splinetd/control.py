"""Value-gradient feedback policy and the swing-up reward.

The greedy action saturates smoothly at the torque limit:

    u = u_max * tanh( (pi/2) * (tau / c) * <grad V(x), df/du> + n ),

with n the exploration noise sample, injected inside the tanh argument.  The
reward penalizes distance from the upright pose and, through the integral of
tan((pi/2) s), torque usage; the integral has the closed form
-(2/pi) * ln cos((pi/2) * |u|/u_max).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, log, pi, tanh
from typing import Sequence

import numpy as np

from .errors import InvalidParam
from .spline import SplineFunction


@dataclass(frozen=True)
class PolicyParams:
    """Saturation limit, control-cost constant, step-size and exploration
    scale of the value-gradient policy."""

    u_max: float = 5.0
    c_cost: float = 0.1
    tau: float = 0.2
    sigma_n: float = 0.01

    def __post_init__(self):
        if self.u_max <= 0:
            raise InvalidParam(f"u_max must be > 0, got {self.u_max}")
        if self.c_cost <= 0:
            raise InvalidParam(f"c_cost must be > 0, got {self.c_cost}")
        if self.sigma_n < 0:
            raise InvalidParam(f"sigma_n must be >= 0, got {self.sigma_n}")


@dataclass(frozen=True)
class RewardParams:
    """Weights of the state cost and the control cost.

    ``sign_as_printed`` flips the control term to a bonus; it exists only for
    fidelity experiments (that variant rewards torque and degrades learning).
    """

    c_x: float = 1.0
    c_u: float = 0.1
    sign_as_printed: bool = False

    def __post_init__(self):
        if self.c_x < 0 or self.c_u < 0:
            raise InvalidParam("reward weights must be >= 0")


def saturated_gradient_action(gradient: Sequence[float], input_gain: Sequence[float],
                              params: PolicyParams, noise_sample: float = 0.0) -> float:
    """Policy evaluated from a precomputed value gradient."""
    slope = float(np.dot(np.asarray(gradient, float), np.asarray(input_gain, float)))
    arg = (pi / 2.0) * (params.tau / params.c_cost) * slope + noise_sample
    return params.u_max * tanh(arg)


def greedy_action(value: SplineFunction, x: Sequence[float], params: PolicyParams,
                  input_gain: Sequence[float], noise_sample: float = 0.0) -> float:
    """Greedy (noisy) action for state ``x`` under value function ``value``.

    ``input_gain`` is df/du of the plant; for the pendulum (0, 1/(m l^2)).
    ``noise_sample`` should be drawn as N(0, sigma_n^2) by the caller, which
    owns the random stream.  |u| < u_max holds strictly.
    """
    return saturated_gradient_action(value.gradient(x), input_gain, params, noise_sample)


def control_cost(u: float, u_max: float) -> float:
    """Closed form of the torque-cost integral of tan((pi/2) s) from 0 to
    |u|/u_max; non-negative, diverging at the saturation limit (clamped)."""
    ratio = min(abs(u) / u_max, 1.0 - 1e-9)
    return -(2.0 / pi) * log(cos((pi / 2.0) * ratio))


def reward(x_next: Sequence[float], u: float, params: RewardParams, u_max: float) -> float:
    """Reward for landing in ``x_next`` having applied torque ``u``.

    Non-positive with its unique maximum 0 at theta = 0 (mod 2 pi), u = 0
    (in the default cost-subtracting convention).
    """
    theta = float(x_next[0])
    state_term = params.c_x * (cos(theta) - 1.0)
    cost = params.c_u * control_cost(u, u_max)
    return state_term + cost if params.sign_as_printed else state_term - cost
