"""Line-oriented ``key = value`` configuration with sections.

Every key has a default matching the reference experiment, so an empty (or
absent) file is a complete configuration.  Example::

    [space]
    degree = 4
    continuity = 1
    theta_breaks = -3.14159265, -1.5707963, 0, 1.5707963, 3.14159265

    [estimator]
    gamma = 0.98
    beta1 = 10
    beta2 = 0.4

    [experiment]
    variant = rlstd_forget
    trials = 100
"""

from __future__ import annotations

import configparser
import hashlib
import json

from .control import PolicyParams, RewardParams
from .errors import ConfigError
from .harness import (REFERENCE_THETA_BREAKS, REFERENCE_THETADOT_BREAKS,
                      ExperimentConfig, VARIANTS)
from .pendulum import PendulumParams

DEFAULTS = {
    "space": {
        "degree": "4",
        "continuity": "1",
        "theta_breaks": ", ".join(repr(v) for v in REFERENCE_THETA_BREAKS),
        "thetadot_breaks": ", ".join(repr(v) for v in REFERENCE_THETADOT_BREAKS),
        "triangulation_file": "",
    },
    "pendulum": {
        "m": "1.0",
        "l": "1.0",
        "g": "9.8",
        "mu": "0.01",
        "u_max": "5.0",
        "sigma_w": "0.0",
        "dt": "0.02",
    },
    "policy": {
        "tau": "0.2",
        "c_cost": "0.1",
        "sigma_n": "0.01",
    },
    "reward": {
        "c_x": "1.0",
        "c_u": "0.1",
        "sign_as_printed": "false",
    },
    "estimator": {
        "gamma": "0.98",
        "beta1": "10.0",
        "beta2": "0.4",
    },
    "experiment": {
        "variant": "rlstd",
        "trials": "100",
        "trial_length": "20.0",
        "pretrain_trials": "1000",
        "mass_after": "1.5",
        "master_seed": "0",
    },
}


def _parse_breaks(text: str, name: str) -> tuple:
    try:
        values = tuple(float(part) for part in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {text!r} as floats") from exc
    if len(values) < 2:
        raise ConfigError(f"{name}: need at least 2 breakpoints")
    return values


def _getter(parser: configparser.ConfigParser, section: str):
    def get(key: str, convert):
        raw = parser.get(section, key)
        try:
            if convert is bool:
                return raw.strip().lower() in ("1", "true", "yes", "on")
            return convert(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: invalid value {raw!r}") from exc
    return get


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a file plus CLI overrides.

    ``overrides`` maps dotted keys (``"experiment.master_seed"``) to string
    values and wins over the file; the file wins over the defaults.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.read_dict(DEFAULTS)
    if path is not None:
        try:
            with open(path) as handle:
                parser.read_file(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file {path}: {exc}") from exc
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser.options(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")
    for dotted, value in (overrides or {}).items():
        try:
            section, key = dotted.split(".", 1)
        except ValueError as exc:
            raise ConfigError(f"override {dotted!r} is not of the form section.key") from exc
        if section not in DEFAULTS or key not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key [{section}] {key}")
        parser.set(section, key, str(value))

    space = _getter(parser, "space")
    pend = _getter(parser, "pendulum")
    pol = _getter(parser, "policy")
    rew = _getter(parser, "reward")
    est = _getter(parser, "estimator")
    exp = _getter(parser, "experiment")

    variant = exp("variant", str).strip()
    if variant not in VARIANTS:
        raise ConfigError(f"[experiment] variant must be one of {VARIANTS}, got {variant!r}")

    from .errors import InvalidParam

    try:
        pendulum = PendulumParams(
            m=pend("m", float), l=pend("l", float), g=pend("g", float),
            mu=pend("mu", float), u_max=pend("u_max", float),
            sigma_w=pend("sigma_w", float), dt=pend("dt", float))
        policy = PolicyParams(
            u_max=pendulum.u_max, c_cost=pol("c_cost", float),
            tau=pol("tau", float), sigma_n=pol("sigma_n", float))
        reward_params = RewardParams(
            c_x=rew("c_x", float), c_u=rew("c_u", float),
            sign_as_printed=rew("sign_as_printed", bool))
        beta2 = est("beta2", float) if variant == "rlstd_forget" else 0.0
        cfg = ExperimentConfig(
            variant=variant,
            beta1=est("beta1", float),
            beta2=beta2,
            gamma=est("gamma", float),
            degree=space("degree", int),
            continuity=space("continuity", int),
            theta_breaks=_parse_breaks(parser.get("space", "theta_breaks"), "theta_breaks"),
            thetadot_breaks=_parse_breaks(parser.get("space", "thetadot_breaks"),
                                          "thetadot_breaks"),
            triangulation_file=space("triangulation_file", str).strip() or None,
            pendulum=pendulum,
            policy=policy,
            reward=reward_params,
            trials=exp("trials", int),
            trial_length=exp("trial_length", float),
            pretrain_trials=exp("pretrain_trials", int),
            mass_after=exp("mass_after", float),
            master_seed=exp("master_seed", int),
        )
    except InvalidParam as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def resolved_dict(cfg: ExperimentConfig) -> dict:
    """Plain-data view of a config, used for hashing and the run manifest."""
    return {
        "variant": cfg.variant,
        "beta1": cfg.beta1, "beta2": cfg.beta2, "gamma": cfg.gamma,
        "degree": cfg.degree, "continuity": cfg.continuity,
        "theta_breaks": list(cfg.theta_breaks),
        "thetadot_breaks": list(cfg.thetadot_breaks),
        "triangulation_file": cfg.triangulation_file,
        "pendulum": {
            "m": cfg.pendulum.m, "l": cfg.pendulum.l, "g": cfg.pendulum.g,
            "mu": cfg.pendulum.mu, "u_max": cfg.pendulum.u_max,
            "sigma_w": cfg.pendulum.sigma_w, "dt": cfg.pendulum.dt,
        },
        "policy": {
            "tau": cfg.policy.tau, "c_cost": cfg.policy.c_cost,
            "sigma_n": cfg.policy.sigma_n,
        },
        "reward": {
            "c_x": cfg.reward.c_x, "c_u": cfg.reward.c_u,
            "sign_as_printed": cfg.reward.sign_as_printed,
        },
        "trials": cfg.trials, "trial_length": cfg.trial_length,
        "pretrain_trials": cfg.pretrain_trials, "mass_after": cfg.mass_after,
        "master_seed": cfg.master_seed,
    }


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(resolved_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()
