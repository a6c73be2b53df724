"""Shipped run presets; one per acceptance scenario."""

from __future__ import annotations

import copy

from .config import RunConfig
from .errors import ConfigError

_PRESETS = {
    # entropy of cat x rotation: G = 0, analytic answer log((3+sqrt 5)/2)
    "catrot-entropy": {
        "system": {"kind": "cat-rotation"},
        "potential": {"kind": "constant", "rate": 0.0},
        "delta": 0.1,
        "epsilons": [0.04, 0.02, 0.01],
        "n_min": 1,
        "n_max": 8,
        "label": "catrot-entropy",
    },
    # sub-additive pressure line (1+t) log lambda; sweep over the exponent t
    "cocycle-line": {
        "system": {"kind": "cat-rotation"},
        "potential": {"kind": "cocycle", "exponent": 1.0},
        "delta": 0.1,
        "epsilons": [0.02],
        "n_min": 1,
        "n_max": 8,
        "sweep_axis": "exponent",
        "sweep_values": [-1.0, -0.5, 0.0, 0.5, 1.0],
        "label": "cocycle-line",
    },
    # full verification battery on the rigid model
    "verify": {
        "system": {"kind": "cat-rotation"},
        "potential": {"kind": "cocycle", "exponent": 1.0},
        "delta": 0.1,
        "epsilons": [0.02],
        "n_min": 1,
        "n_max": 8,
        "checks": ["variational", "properties", "power", "stage"],
        "label": "verify",
    },
    # perturbed model: graph-transform leaves, continuity of the estimate
    "perturbed": {
        "system": {"kind": "perturbed-cat-rotation", "magnitude": 0.01},
        "potential": {"kind": "constant", "rate": 0.0},
        "delta": 0.1,
        "epsilons": [0.04, 0.02],
        "n_min": 1,
        "n_max": 6,
        "label": "perturbed",
    },
    # delta-independence sweep for the entropy configuration
    "delta-sweep": {
        "system": {"kind": "cat-rotation"},
        "potential": {"kind": "constant", "rate": 0.0},
        "delta": 0.1,
        "epsilons": [0.02],
        "n_min": 1,
        "n_max": 8,
        "sweep_axis": "delta",
        "sweep_values": [0.1, 0.05],
        "label": "delta-sweep",
    },
}


def preset_names():
    return sorted(_PRESETS)


def load_preset(name):
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return RunConfig.from_dict(copy.deepcopy(_PRESETS[name]))
