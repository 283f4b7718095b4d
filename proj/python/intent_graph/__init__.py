"""Crossing-intent prediction with pedestrian-centric scene graphs.

Configs and results are plain dicts; scenario data is sequence-file text
(one JSON scenario per line).
"""

import json

from . import _core
from ._core import ConfigError, DataError, NumericError, __version__

__all__ = [
    "ConfigError",
    "DataError",
    "NumericError",
    "__version__",
    "default_config",
    "evaluate",
    "generate_synthetic",
    "gradcheck",
    "parameter_count",
    "predict",
    "run_cli",
    "spatial_relation",
    "train",
]


def default_config(section):
    """Default settings of "model", "train" or "synth"."""
    getters = {
        "model": _core.default_model_config,
        "train": _core.default_train_config,
        "synth": _core.default_synth_config,
    }
    return json.loads(getters[section]())


def parameter_count(model=None):
    return _core.parameter_count(json.dumps(model or {}))


def spatial_relation(ped_box, obj_box):
    return list(_core.spatial_relation(ped_box, obj_box))


def generate_synthetic(config=None):
    return _core.generate_synthetic(json.dumps(config or {}))


def train(data, model=None, train=None):
    """Returns {"checkpoint": ..., "history": [...]}."""
    return json.loads(_core.train(data, json.dumps(model or {}), json.dumps(train or {})))


def evaluate(checkpoint, data):
    return json.loads(_core.evaluate(json.dumps(checkpoint), data))


def predict(checkpoint, data):
    return _core.predict(json.dumps(checkpoint), data)


def gradcheck(model=None, objects=3, seed=0):
    return json.loads(_core.gradcheck(json.dumps(model) if model else "", objects, seed))


def run_cli(*args):
    """Runs the command-line tool in process. Returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
