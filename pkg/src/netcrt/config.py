"""Experiment configuration: a JSON document, optional presets, and flag overrides."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError, NetcrtError
from .trial import TrialConfig

_GRID_TEN = [round(0.1 * i, 10) for i in range(11)]
_GRID_HALF = [round(0.1 * i, 10) for i in range(6)]

PRESETS = {
    # full scale
    "full": dict(ensembles=["ER", "BA", "SBM"], infectivities=["unit", "degree"],
                  gammas=_GRID_TEN, n=[300], C=[20], scenarios=[1, 2],
                  null_reps=20000, alt_reps=20000, trial_reps=2000, n_perm=1000),
    "desk": dict(ensembles=["ER", "BA", "SBM"], infectivities=["unit", "degree"],
                 gammas=_GRID_TEN, n=[300], C=[20], scenarios=[1, 2],
                 null_reps=2000, alt_reps=2000, trial_reps=500, n_perm=512),
    "sensitivity": dict(ensembles=["ER", "BA", "SBM"], infectivities=["unit", "degree"],
                   gammas=_GRID_HALF, n=[100, 300, 1000], C=[5, 10, 20], scenarios=[1],
                   null_reps=3000, alt_reps=3000),
    "sensitivity-desk": dict(ensembles=["ER", "BA", "SBM"], infectivities=["unit", "degree"],
                        gammas=_GRID_HALF, n=[100, 300, 1000], C=[5, 10, 20], scenarios=[1],
                        null_reps=300, alt_reps=300),
}

_LISTS = {"ensembles": str, "infectivities": str, "gammas": float, "n": int, "C": int,
          "scenarios": int}


@dataclass(frozen=True)
class ExperimentConfig:
    ensembles: tuple = ("ER",)
    infectivities: tuple = ("unit",)
    gammas: tuple = (0.0,)
    n: tuple = (300,)
    C: tuple = (20,)
    scenarios: tuple = (1,)
    mean_degree: float = 4.0
    p0: float = 0.30
    p1: float = 0.25
    seed_fraction: float = 0.01
    stop_fraction: float = 0.10
    max_steps: int | None = None
    null_reps: int = 2000
    alt_reps: int = 2000
    trial_reps: int = 500
    n_perm: int = 512
    alpha: float = 0.05
    master_seed: int = 0
    output: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config: expected a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"config.{unknown[0]}: unknown field")
        values = {}
        for key, value in data.items():
            values[key] = _coerce(key, value)
        cfg = cls(**values)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for key in _LISTS:
            if len(getattr(self, key)) == 0:
                raise ConfigError(f"config.{key}: must not be empty")
        for i, g in enumerate(self.gammas):
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"config.gammas[{i}]: {g} outside [0, 1]")
        for i, s in enumerate(self.scenarios):
            if s not in (1, 2):
                raise ConfigError(f"config.scenarios[{i}]: scenario must be 1 or 2")
        for key in ("null_reps", "alt_reps", "trial_reps", "n_perm"):
            if getattr(self, key) < 1:
                raise ConfigError(f"config.{key}: must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"config.alpha: {self.alpha} outside (0, 1)")
        if self.master_seed < 0:
            raise ConfigError("config.master_seed: must be non-negative")
        # module preconditions, checked per cell so the message can point at it
        list(self.cells())

    def cells(self):
        """``(cell_index, TrialConfig)`` over the grid, gamma varying fastest."""
        grid = itertools.product(self.ensembles, self.infectivities, self.n, self.C, self.gammas)
        for index, (ens, inf, n, C, g) in enumerate(grid):
            try:
                trial = TrialConfig(ensemble=ens, n=n, C=C, mean_degree=self.mean_degree,
                                    gamma=g, infectivity=inf, p0=self.p0, p1=self.p1,
                                    seed_fraction=self.seed_fraction,
                                    stop_fraction=self.stop_fraction, max_steps=self.max_steps)
            except NetcrtError as exc:
                raise ConfigError(
                    f"config (ensemble={ens}, infectivity={inf}, n={n}, C={C}, gamma={g}): {exc}"
                ) from exc
            yield index, trial

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _coerce(key, value):
    if key in _LISTS:
        kind = _LISTS[key]
        items = value if isinstance(value, (list, tuple)) else [value]
        return tuple(_scalar(f"{key}[{i}]", v, kind) for i, v in enumerate(items))
    kinds = {"mean_degree": float, "p0": float, "p1": float, "seed_fraction": float,
             "stop_fraction": float, "max_steps": int, "null_reps": int, "alt_reps": int,
             "trial_reps": int, "n_perm": int, "alpha": float, "master_seed": int,
             "output": str}
    if value is None and key in ("max_steps", "output"):
        return None
    return _scalar(key, value, kinds[key])


def _scalar(path, value, kind):
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"config.{path}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config.{path}: expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"config.{path}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def load_config(path=None, preset: str | None = None, overrides: dict | None = None
                ) -> ExperimentConfig:
    """Merge preset, then JSON file, then flag overrides (later wins)."""
    data: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        data.update(PRESETS[preset])
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config: expected a JSON object")
        data.update(doc)
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(data)
