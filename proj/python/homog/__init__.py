"""Periodic homogenization on singular periodic measures.

Thin layer over the compiled ``_homog`` module: JSON documents cross the
boundary as strings and come back as plain dicts.
"""

import json as _json
import os as _os

from ._homog import (  # noqa: F401
    Config,
    ConfigError,
    Error,
    FiberOperator,
    HypothesisError,
    IoError,
    Measure,
    Model,
    NumericalError,
    Space,
    SyntaxError,
    __version__,
    evaluate,
    lebesgue_measure,
    load_config,
    mean_zero_eigenvalue,
    poincare_constant,
    square_grid_measure,
)
from . import _homog


def parse_measure(doc):
    """Measure from a JSON string or an already decoded dict."""
    return _homog.parse_measure(doc if isinstance(doc, str) else _json.dumps(doc))


def measure_json(measure):
    return _json.loads(measure.to_json())


def parse_config(doc, base_dir=""):
    """Config from a JSON string or dict; base_dir resolves measure_file."""
    return _homog.parse_config(doc if isinstance(doc, str) else _json.dumps(doc), _os.fspath(base_dir))


def _as_config(config):
    if isinstance(config, Config):
        return config
    if isinstance(config, (str, _os.PathLike)) and _os.path.exists(config):
        return load_config(config)
    return parse_config(config)


def run_sweep(config, workers=None):
    """Run the convergence sweep and return the report as a dict.

    ``config`` is a Config, a path to a config file, or a config dict.
    """
    cfg = _as_config(config)
    if workers is not None:
        cfg.workers = workers
    return _json.loads(_homog.run_sweep_json(cfg))


def emit_sweep(config, directory, workers=None):
    """Run the sweep and write report.json and report.csv into directory."""
    cfg = _as_config(config)
    if workers is not None:
        cfg.workers = workers
    _homog.emit_sweep(cfg, _os.fspath(directory))
