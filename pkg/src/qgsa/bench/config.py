"""JSON run configuration for the benchmark harness."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..optimizers import OptimizerConfig
from ..shots_cost import PricingProfile, builtin_profiles, find_profile, load_profiles, shots_for_descent, shots_for_precision

DATASET_KINDS = ("iris", "csv", "synthetic")


class ConfigError(ValueError):
    pass


@dataclass
class DatasetSpec:
    kind: str = "iris"
    path: str | None = None
    classes: tuple[str, str] = ("setosa", "versicolor")
    n_per_class: int = 100
    d: int = 4
    seed: int = 7

    def __post_init__(self):
        if self.kind not in DATASET_KINDS:
            raise ConfigError(f"dataset kind must be one of {DATASET_KINDS}, got {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ConfigError("csv datasets need a path")
        self.classes = tuple(self.classes)
        if len(self.classes) != 2:
            raise ConfigError("classes must name exactly two classes")


@dataclass
class EvaluatorSpec:
    mode: str = "exact"
    shots: int = 100
    n_mu: int | None = None
    n_g: int | None = None
    epsilon: float | None = None
    gap: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ConfigError(f"evaluator mode must be 'exact' or 'sampled', got {self.mode!r}")
        if self.shots < 1:
            raise ConfigError("shots must be at least 1")
        if self.epsilon is not None or self.gap is not None:
            if self.delta is None:
                raise ConfigError("automatic shot counts need delta")

    def resolved(self) -> tuple[int | None, int | None]:
        n_mu, n_g = self.n_mu, self.n_g
        if n_mu is None and self.epsilon is not None:
            n_mu = shots_for_precision(self.epsilon, self.delta)
        if n_g is None and (self.gap is not None or self.epsilon is not None):
            n_g = shots_for_descent(self.gap if self.gap is not None else self.epsilon, self.delta)
        return n_mu, n_g


@dataclass
class RunConfig:
    name: str
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    loss: str = "qh"
    mean_loss: bool = False
    layers: int = 3
    optimizer: dict = field(default_factory=dict)
    iterations: int = 100
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    init_seed: int = 2023
    evaluator: EvaluatorSpec = field(default_factory=EvaluatorSpec)
    pricing: str = "Rigetti - Aspen-M"
    pricing_file: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.loss not in ("qh", "mse"):
            raise ConfigError(f"loss must be 'qh' or 'mse', got {self.loss!r}")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if not self.seeds:
            raise ConfigError("seeds must be a non-empty list")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.layers < 1 or self.workers < 1:
            raise ConfigError("layers and workers must be positive")
        try:
            self.optimizer_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad optimizer settings: {exc}") from None

    def optimizer_config(self) -> OptimizerConfig:
        n_mu, n_g = self.evaluator.resolved()
        opts = dict(self.optimizer)
        known = {f.name for f in fields(OptimizerConfig)}
        unknown = set(opts) - known
        if unknown:
            raise ConfigError(f"unknown optimizer settings {sorted(unknown)}")
        opts.update(
            iterations=self.iterations,
            sampled=self.evaluator.mode == "sampled",
            shots=self.evaluator.shots,
            n_mu=n_mu,
            n_g=n_g,
        )
        return OptimizerConfig(**opts)

    def profiles(self, base_dir: Path | None = None) -> list[PricingProfile]:
        profiles = builtin_profiles()
        if self.pricing_file:
            path = Path(self.pricing_file)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            profiles += load_profiles(path)
        return profiles

    def profile(self, base_dir: Path | None = None) -> PricingProfile:
        profiles = self.profiles(base_dir)
        found = find_profile(self.pricing, profiles)
        if found is None:
            raise ConfigError(f"unknown pricing profile {self.pricing!r}; known: {[p.name for p in profiles]}")
        return found

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dataset"]["classes"] = list(self.dataset.classes)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> RunConfig:
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = dict(raw)
        if "name" not in raw:
            raise ConfigError("config needs a 'name'")
        try:
            raw["dataset"] = DatasetSpec(**raw.get("dataset", {}))
            raw["evaluator"] = EvaluatorSpec(**raw.get("evaluator", {}))
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(raw)
