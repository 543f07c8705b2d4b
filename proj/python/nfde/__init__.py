"""Python bindings for the nfde solver.

Configs are plain dicts with the same layout as the JSON files under configs/.
"""

import json as _json

import numpy as _np

from . import _nfde
from ._nfde import ConfigError, DomainError, Nonlinearity, Operator, StepError, Trajectory

__all__ = [
    "ConfigError",
    "DomainError",
    "Nonlinearity",
    "Operator",
    "StepError",
    "Trajectory",
    "build_operator",
    "certify_kernels",
    "cli",
    "evolve",
    "make_initial",
    "nonlinearity",
    "run_experiment",
    "run_sweep",
]


def _dump(obj):
    return obj if isinstance(obj, str) else _json.dumps(obj)


def nonlinearity(spec):
    return Nonlinearity.from_json(_dump(spec))


def build_operator(domain, operator):
    return _nfde.build_operator(_dump(domain), _dump(operator))


def make_initial(domain, descriptor):
    return _nfde.make_initial(_dump(domain), _dump(descriptor))


def evolve(op, nl, u0, times, stepper=None):
    if isinstance(nl, (dict, str)):
        nl = nonlinearity(nl)
    u0 = _np.ascontiguousarray(u0, dtype=float)
    return _nfde.evolve(op, nl, u0, list(map(float, times)), _dump(stepper or {}))


def run_experiment(config):
    return _json.loads(_nfde.run_experiment(_dump(config)))


def certify_kernels(config):
    return _json.loads(_nfde.certify_kernels(_dump(config)))


def run_sweep(spec):
    return _json.loads(_nfde.run_sweep(_dump(spec)))


def cli(*args):
    """Runs the command-line front end in-process; returns (exit_code, stdout, stderr)."""
    return _nfde.cli([str(a) for a in args])
