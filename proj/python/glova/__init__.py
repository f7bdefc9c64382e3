"""Python front end for the glova sizing engine."""

import json as _json
import os as _os
from pathlib import Path as _Path

_packaged = _Path(__file__).with_name("benches")
if "GLOVA_BENCH_DIR" not in _os.environ and _packaged.is_dir():
    _os.environ["GLOVA_BENCH_DIR"] = str(_packaged)

from ._glova import (  # noqa: E402
    SUCCESS_REWARD,
    Bench,
    ConfigError,
    EvaluationError,
    GlovaError,
    StateError,
    StructuralError,
    bench_directory,
    h_score,
    load_bench,
    normalize_metric,
    pearson_profile,
    reward,
    risk_bound,
    sample_mismatch,
)
from . import _glova


def _config_text(config):
    if isinstance(config, (str, _os.PathLike)) and _Path(config).is_file():
        return _Path(config).read_text()
    if isinstance(config, dict):
        return _json.dumps(config)
    raise TypeError("config must be a dict or a path to a JSON file")


def run(config, **overrides):
    """Run one optimization; returns the result.json contents as a dict."""
    cfg = _json.loads(_config_text(config))
    cfg.update(overrides)
    return _json.loads(_glova._run(_json.dumps(cfg)))


def campaign(config, seeds="0..9", **overrides):
    cfg = _json.loads(_config_text(config))
    cfg.update(overrides)
    return _json.loads(_glova._campaign(_json.dumps(cfg), seeds))


def verify(config, x, **overrides):
    cfg = _json.loads(_config_text(config))
    cfg.update(overrides)
    return _json.loads(_glova._verify(_json.dumps(cfg), list(x)))


__all__ = [
    "SUCCESS_REWARD",
    "Bench",
    "ConfigError",
    "EvaluationError",
    "GlovaError",
    "StateError",
    "StructuralError",
    "bench_directory",
    "campaign",
    "h_score",
    "load_bench",
    "normalize_metric",
    "pearson_profile",
    "reward",
    "risk_bound",
    "run",
    "sample_mismatch",
    "verify",
]
