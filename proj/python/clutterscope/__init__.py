"""Python front end for the clutterscope classification core."""

import json

import numpy as np

from ._clutterscope import (
    DegenerateGeometry,
    InvalidInput,
    estimate_rank,
    loglik,
    param_count,
    penalty_factor,
    synthesize,
)
from . import _clutterscope as _core

__all__ = [
    "DegenerateGeometry",
    "InvalidInput",
    "classify",
    "estimate_rank",
    "loglik",
    "param_count",
    "penalty_factor",
    "run_experiment",
    "synthesize",
]


def classify(zp, zs, model, rule="aic", rho=None, rank=None, n_max=6):
    """Classify one window. Returns the decision and every hypothesis score as a dict."""
    zp = np.asarray(zp, dtype=np.complex128)
    zs = np.asarray(zs, dtype=np.complex128)
    return json.loads(_core.classify_json(zp, zs, model, rule, rho, rank, n_max))


def run_experiment(model, hypothesis, **kwargs):
    """Monte Carlo sweep at the default scenario parameters; returns the report as a dict."""
    return json.loads(_core.run_experiment_json(model, hypothesis, **kwargs))
