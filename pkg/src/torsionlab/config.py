"""Run configuration: YAML in, validated dataclass out, lossless round trip."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .boundary_model import Character
from .gluing import DEFAULT_CUTOFF, GluedGeometry
from .interval_spectra import REDUCTION_TABLES


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def _default_thetas() -> list[float]:
    return [float(x) for x in np.linspace(0.0, math.pi / 2, 20)]


def _default_ts() -> list[float]:
    return [float(x) for x in np.geomspace(1e-3, 1.0, 10)]


@dataclass(frozen=True)
class RunConfig:
    alpha: tuple[float, float] = (0.3, 0.0)
    lattice: tuple[tuple[float, float], tuple[float, float]] = ((1.0, 0.0), (0.0, 1.0))
    r: float = 1.0
    far_len: float = 1.0
    far_bc: str = "Rel"
    mode_cutoff: float = DEFAULT_CUTOFF
    tol_algebraic: float = 1e-12
    tol_regularized: float = 1e-6
    r_sweep: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0)
    theta_grid: tuple[float, ...] = field(default_factory=lambda: tuple(_default_thetas()))
    t_grid: tuple[float, ...] = field(default_factory=lambda: tuple(_default_ts()))
    output_dir: str = "torsionlab-out"
    seed: int = 0
    jobs: int = 1
    structure_samples: int = 100
    theta_modes: int = 5
    eta_modes: int = 20

    def __post_init__(self):
        try:
            alpha = tuple(float(a) for a in self.alpha)
            lattice = tuple(tuple(float(v) for v in row) for row in self.lattice)
            object.__setattr__(self, "alpha", alpha)
            object.__setattr__(self, "lattice", lattice)
            for name in ("r_sweep", "theta_grid", "t_grid"):
                object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
            for name in ("r", "far_len", "mode_cutoff", "tol_algebraic", "tol_regularized"):
                object.__setattr__(self, name, float(getattr(self, name)))
            for name in ("seed", "jobs", "structure_samples", "theta_modes", "eta_modes"):
                v = getattr(self, name)
                if isinstance(v, bool) or int(v) != v:
                    raise ConfigError(f"{name} must be an integer")
                object.__setattr__(self, name, int(v))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        self._validate()

    def _validate(self) -> None:
        try:
            Character(self.alpha, self.lattice)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.far_bc not in REDUCTION_TABLES:
            raise ConfigError(f"far_bc must be one of {sorted(REDUCTION_TABLES)}")
        for name in ("r", "far_len", "mode_cutoff", "tol_algebraic", "tol_regularized"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be positive, got {v}")
        for name in ("r_sweep", "theta_grid", "t_grid"):
            v = getattr(self, name)
            if not v:
                raise ConfigError(f"{name} must be nonempty")
            if list(v) != sorted(v):
                raise ConfigError(f"{name} must be sorted")
        if any(x <= 0 for x in self.r_sweep) or any(t <= 0 for t in self.t_grid):
            raise ConfigError("r_sweep and t_grid entries must be positive")
        if any(not 0.0 <= th <= math.pi / 2 for th in self.theta_grid):
            raise ConfigError("theta_grid entries must lie in [0, pi/2]")
        for name in ("jobs", "structure_samples", "theta_modes", "eta_modes"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")

    @property
    def character(self) -> Character:
        return Character(self.alpha, self.lattice)

    def geometry(self, r: float | None = None) -> GluedGeometry:
        return GluedGeometry(self.r if r is None else r, self.character, self.far_len,
                             dict(REDUCTION_TABLES[self.far_bc]), None, self.mode_cutoff)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: _listify(v) for k, v in d.items()}

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def replace(self, **changes) -> "RunConfig":
        d = self.to_dict()
        d.update(changes)
        return RunConfig.from_dict(d)

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        return cls(**data)

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_yaml(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _listify(v):
    if isinstance(v, (tuple, list)):
        return [_listify(x) for x in v]
    return v
