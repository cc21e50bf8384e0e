"""Distributed zero-sum graphical games on leader-follower networks."""

import json

from ._core import QGameError, Topology, preset_names, zero_sum_riccati
from . import _core

__all__ = [
    "QGameError",
    "Topology",
    "learn",
    "metrics_from_trajectory",
    "policy_iteration",
    "preset",
    "preset_names",
    "reproduce",
    "simulate",
    "validate",
    "verify",
    "zero_sum_riccati",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def preset(name):
    return json.loads(_core.preset_json(name))


def validate(config):
    """Parses a config dict and returns its normalized echo."""
    return json.loads(_core.validate_json(_text(config)))


def simulate(config, out, seed=None):
    return json.loads(_core.simulate_json(_text(config), str(out), seed))


def policy_iteration(config, mode, out, seed=None):
    return json.loads(_core.policy_iteration_json(_text(config), mode, str(out), seed))


def learn(config, mode, out, seed=None):
    return json.loads(_core.learn_json(_text(config), mode, str(out), seed))


def verify(config, out, seed=None):
    return json.loads(_core.verify_json(_text(config), str(out), seed))


def reproduce(case, out):
    return json.loads(_core.reproduce_json(case, str(out)))


def metrics_from_trajectory(path):
    return json.loads(_core.trajectory_metrics_json(str(path)))
