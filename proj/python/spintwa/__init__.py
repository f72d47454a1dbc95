"""Stochastic phase-space simulation of dissipative collective spin systems.

The heavy lifting lives in the C++ extension module ``_spintwa``; this
package adds small conveniences so configs and models can be passed as
dictionaries.
"""

import json as _json

from ._spintwa import (  # noqa: F401
    ModelError,
    OracleError,
    __version__,
    rotate,
    sample_down_state,
)
from . import _spintwa as _core


def _as_json(obj):
    if isinstance(obj, str):
        return obj
    return _json.dumps(obj)


def validate_model(model):
    """Validate and normalize a model (dict or JSON string); returns a dict."""
    return _json.loads(_core.validate_model(_as_json(model)))


def simulate(config):
    """Run the stochastic simulation described by a config dict or JSON string."""
    return _core.simulate(_as_json(config))


def oracle_series(model, times, theta=0.0, phi=0.0, rtol=1e-8, atol=1e-10,
                  squeezing=False):
    """Exact master-equation observables for the model on a time grid."""
    return _core.oracle_series(_as_json(model), list(times), theta, phi, rtol, atol,
                               squeezing)


def oracle_steady_state(model):
    """Exact steady-state spin moments per site."""
    return _core.oracle_steady_state(_as_json(model))
