"""Regulation of bilinear systems with saturated inputs (heat exchanger case study)."""

import json

from ._bilinreg import (
    BilinregError,
    Infeasible,
    InvalidArgument,
    NotHurwitz,
    ParseError,
    ReferenceUnreachable,
    System,
    output_map,
    pi_map,
    reachable_set,
    saturate,
    invert_reference,
)
from . import _bilinreg as _core

CELSIUS = 273.15


def build_hex(params=None):
    """Compartment model of the exchanger; params uses the same keys as the CLI's parameter file."""
    return _core.build_hex_json(json.dumps(params or {}))


def check_assumption1(system, grid=64):
    return json.loads(_core.check_assumption1_json(system, grid))


def design(system, scenario):
    return json.loads(_core.design_json(system, json.dumps(scenario)))


def simulate(system, scenario):
    """Returns (trajectories, metrics). Trajectory arrays are numpy-compatible lists/matrices."""
    traj, metrics = _core.simulate_json(system, json.dumps(scenario))
    return traj, json.loads(metrics)


def load_scenario(path):
    with open(path) as f:
        return json.load(f)
