"""Experiment configuration: a flat ``key = value`` file, every key also a CLI flag."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .lgc import DENSE_GUARD, alpha_from_mu


class ConfigError(ValueError):
    pass


def parse_seeds(text):
    """``"0-19"``, ``"1,4,7"`` or a mix such as ``"0-4,10"``."""
    seeds = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = part.split("-", 1)
            lo, hi = int(a), int(b)
            if hi < lo:
                raise ConfigError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative")
    return seeds


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


@dataclass
class ExperimentConfig:
    dataset: str = "blobs"
    path: str = ""
    label_column: str = "label"
    labels_path: str = ""
    n: int = 1000
    d: int = 10
    c: int = 2
    separation: float = 4.0
    data_seed: int = 0
    k: int = 15
    sigma: str = "heuristic"
    alpha: str = "0.9"
    mu: str = ""
    tolerance: float = 1e-9
    max_iterations: int = 10_000
    labels: int = 150
    noise: float = 0.2
    seeds: str = "0-19"
    protocol: str = "resample"
    filter: str = "lvo"
    rule: str = "fixed_count"
    budget: str = "noise"
    tau: float = 0.8
    correction: str = "remove"
    jobs: int = 1
    dense_guard: int = DENSE_GUARD
    out: str = "out"

    @classmethod
    def keys(cls):
        return {f.name: f.type for f in fields(cls)}

    @classmethod
    def from_mapping(cls, mapping):
        kw = {}
        types = {f.name: f.default for f in fields(cls)}
        for key, raw in mapping.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ConfigError(f"unknown config key {key!r}")
            default = types[key]
            try:
                kw[key] = type(default)(raw) if not isinstance(default, str) else str(raw)
            except ValueError:
                raise ConfigError(f"bad value {raw!r} for {key}") from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def validate(self):
        if self.dataset not in ("blobs", "csv", "idx"):
            raise ConfigError(f"dataset must be blobs, csv or idx, got {self.dataset!r}")
        if self.dataset in ("csv", "idx") and not self.path:
            raise ConfigError(f"dataset {self.dataset} needs a path")
        if self.dataset == "idx" and not self.labels_path:
            raise ConfigError("dataset idx needs labels_path")
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.sigma != "heuristic":
            try:
                if float(self.sigma) <= 0:
                    raise ConfigError("sigma must be positive")
            except ValueError:
                raise ConfigError(f"sigma must be 'heuristic' or a number, got {self.sigma!r}") from None
        for a in self.alphas():
            if not 0 < a < 1:
                raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        if not 0 <= self.noise <= 1:
            raise ConfigError("noise must lie in [0, 1]")
        if self.labels < 1:
            raise ConfigError("labels must be positive")
        parse_seeds(self.seeds)
        if self.protocol not in ("resample", "fixed"):
            raise ConfigError("protocol must be resample or fixed")
        if self.filter not in ("lvo", "ldst", "none"):
            raise ConfigError("filter must be lvo, ldst or none")
        if self.rule not in ("fixed_count", "q_threshold"):
            raise ConfigError("rule must be fixed_count or q_threshold")
        if self.budget != "noise":
            try:
                if int(self.budget) < 0:
                    raise ConfigError("budget must be non-negative")
            except ValueError:
                raise ConfigError(f"budget must be 'noise' or an integer, got {self.budget!r}") from None
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must lie in (0, 1]")
        if self.filter == "ldst" and self.rule != "fixed_count":
            raise ConfigError("the ldst filter supports only rule = fixed_count")
        if self.correction not in ("remove", "replace"):
            raise ConfigError("correction must be remove or replace")
        if self.jobs < 1:
            raise ConfigError("jobs must be at least 1")

    def alphas(self):
        if self.mu:
            try:
                return [alpha_from_mu(m) for m in _floats(self.mu)]
            except ValueError as e:
                raise ConfigError(str(e)) from None
        vals = _floats(self.alpha)
        if not vals:
            raise ConfigError("no alpha given")
        return vals

    def seed_list(self):
        return parse_seeds(self.seeds)

    def to_dict(self):
        return asdict(self)

    def digest(self):
        blob = json.dumps({k: v for k, v in self.to_dict().items() if k not in ("jobs", "out")}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_config_file(path, cfg):
    lines = [f"{k} = {v}" for k, v in cfg.to_dict().items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
