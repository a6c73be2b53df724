"""Run configuration: parsing (TOML or JSON), validation, and factories that
turn a config into system / chart / potential objects."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .dynamics import (
    GOLDEN_ROTATION,
    cat_map,
    cat_rotation,
    perturbed_cat_rotation,
)
from .errors import ConfigError
from .leaf import build_leaf_chart
from .potentials import (
    AdditiveBirkhoff,
    CocycleNorm,
    Constant,
    Scale,
    Shift,
    Sum,
    cos_first_coordinate,
)

SCHEMA_VERSION = 1

SYSTEM_KINDS = ("cat", "cat-rotation", "perturbed-cat-rotation")
POTENTIAL_KINDS = ("constant", "cocycle", "birkhoff-cos", "shift", "sum", "scale")


@dataclass
class RunConfig:
    """Everything one pressure run needs; round-trips through dicts and JSON."""

    system: dict = field(default_factory=lambda: {"kind": "cat-rotation"})
    potential: dict = field(default_factory=lambda: {"kind": "constant", "rate": 0.0})
    base_point: list = field(default_factory=list)  # empty = origin
    delta: float = 0.1
    epsilons: list = field(default_factory=lambda: [0.04, 0.02, 0.01])
    n_min: int = 1
    n_max: int = 8
    seed: int = 0
    tol: float = 0.03
    registry: str = "default"
    checks: list = field(default_factory=lambda: ["variational", "properties", "power", "stage"])
    properties_h: dict = field(default_factory=lambda: {"kind": "birkhoff-cos"})
    sweep_axis: str = ""
    sweep_values: list = field(default_factory=list)
    label: str = "run"

    @property
    def n_values(self):
        return list(range(self.n_min, self.n_max + 1))

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config root must be a table/object")
        known = {f for f in cls.__dataclass_fields__}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config field '{key}'")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        sk = self.system.get("kind")
        if sk not in SYSTEM_KINDS:
            raise ConfigError(f"system.kind must be one of {SYSTEM_KINDS}, got {sk!r}")
        pk = self.potential.get("kind")
        if pk not in POTENTIAL_KINDS:
            raise ConfigError(f"potential.kind must be one of {POTENTIAL_KINDS}, got {pk!r}")
        if not (0 < self.delta):
            raise ConfigError("delta must be positive")
        if not self.epsilons or any(e <= 0 for e in self.epsilons):
            raise ConfigError("epsilons must be a nonempty list of positive scales")
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ConfigError("need 1 <= n_min <= n_max")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        mag = self.system.get("magnitude", 0.0)
        if mag < 0:
            raise ConfigError("system.magnitude must be >= 0")
        return self


def load_config(path):
    """Parse a TOML or JSON config file into a validated RunConfig."""
    text = Path(path).read_text(encoding="utf-8")
    if str(path).endswith(".json") or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    else:
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML config: {exc}") from exc
    return RunConfig.from_dict(data)


def build_system(cfg):
    spec = cfg.system
    kind = spec["kind"]
    alpha = spec.get("alpha", GOLDEN_ROTATION)
    if kind == "cat":
        return cat_map()
    if kind == "cat-rotation":
        return cat_rotation(alpha=alpha)
    terms = spec.get("terms")
    if terms is not None:
        terms = [(t[0], t[1], t[2]) for t in terms]
    return perturbed_cat_rotation(spec.get("magnitude", 0.0), terms=terms, alpha=alpha)


def build_potential(spec):
    kind = spec["kind"]
    if kind == "constant":
        return Constant(rate=spec.get("rate", 0.0))
    if kind == "cocycle":
        return CocycleNorm(exponent=spec.get("exponent", 1.0))
    if kind == "birkhoff-cos":
        return AdditiveBirkhoff(phi=cos_first_coordinate(), name="cos(2 pi x1)")
    if kind == "shift":
        return Shift(offset=spec.get("offset", 0.0), base=build_potential(spec["base"]))
    if kind == "scale":
        return Scale(factor=spec.get("factor", 1.0), base=build_potential(spec["base"]))
    if kind == "sum":
        return Sum(left=build_potential(spec["left"]), right=build_potential(spec["right"]))
    raise ConfigError(f"unknown potential kind {kind!r}")


def build_chart(cfg, sys):
    center = np.zeros(sys.dim) if not cfg.base_point else np.asarray(cfg.base_point, float)
    if center.shape != (sys.dim,):
        raise ConfigError(f"base_point must have {sys.dim} coordinates")
    return build_leaf_chart(sys, center, cfg.delta)
