"""Run configuration: plain key=value files with strict key checking.

Every key has a default, so an empty file (or no file) runs the synthetic
pipeline end to end. Lines starting with '#' are comments.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, fields

from .augment import AugmentConfig
from .encoder import TrainConfig
from .synthgen import SynthConfig


class ConfigError(ValueError):
    """Bad key, bad value, or missing referenced path."""


@dataclass
class RunConfig:
    seed: int = 0
    graph_dir: str = ""  # empty: generate a synthetic graph instead
    out_dir: str = "out"

    # contrastive training
    lr: float = 0.001
    dim: int = 64
    tau: float = 0.5
    lam: float = 0.5
    p_feat: float = 0.7
    p_edge: float = 0.7
    epochs: int = 200
    patience: int = 50
    pos_count: int = 5

    # spectral augmentation
    aug_lr: float = 0.1
    aug_iters: int = 50
    norm: str = "l2"
    budget_fraction: float = 0.0  # 0 disables the L1 budget
    mode: str = "deterministic"
    literal_flip: bool = False

    # evaluation protocol
    split_sizes: str = "20,40,60"
    runs: int = 10
    n_val: int = 1000
    n_test: int = 1000

    # synthetic data
    synth_n_target: int = 300
    synth_classes: int = 3
    synth_aux_types: int = 2
    synth_aux_size: int = 150
    synth_p_in: float = 0.1
    synth_p_out: float = 0.01
    synth_feature_dim: int = 32
    synth_feature_noise: float = 1.0

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            dim=self.dim,
            tau=self.tau,
            lam=self.lam,
            p_feat=self.p_feat,
            p_edge=self.p_edge,
            epochs=self.epochs,
            patience=self.patience,
            pos_count=self.pos_count,
            seed=self.seed,
        )

    def aug_config(self) -> AugmentConfig:
        return AugmentConfig(
            lr=self.aug_lr,
            iterations=self.aug_iters,
            norm=self.norm,
            budget_fraction=self.budget_fraction or None,
            mode=self.mode,
            literal_flip=self.literal_flip,
            seed=self.seed,
        )

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            n_target=self.synth_n_target,
            k_classes=self.synth_classes,
            aux_types=self.synth_aux_types,
            aux_size=self.synth_aux_size,
            p_in=self.synth_p_in,
            p_out=self.synth_p_out,
            feature_dim=self.synth_feature_dim,
            feature_noise=self.synth_feature_noise,
            seed=self.seed,
        )

    def split_size_list(self) -> list[int]:
        return [int(v) for v in self.split_sizes.split(",") if v.strip()]

    def hash(self) -> str:
        # out_dir is where results land, not part of what they are
        text = "\n".join(
            f"{f.name}={getattr(self, f.name)}"
            for f in sorted(fields(self), key=lambda f: f.name)
            if f.name != "out_dir"
        )
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]

    def header(self) -> str:
        return f"config={self.hash()} seed={self.seed}"

    def validate(self) -> None:
        try:
            self.train_config().validate()
            self.aug_config().validate()
            self.synth_config().validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.budget_fraction < 0:
            raise ConfigError("budget_fraction must be nonnegative")
        if self.runs <= 0:
            raise ConfigError("runs must be positive")
        if not self.split_size_list():
            raise ConfigError("split_sizes must name at least one size")
        if any(s <= 0 for s in self.split_size_list()):
            raise ConfigError("split sizes must be positive")
        if self.graph_dir and not os.path.isdir(self.graph_dir):
            raise ConfigError(f"graph_dir does not exist: {self.graph_dir}")


_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False}


def _coerce(name: str, raw: str, target_type: type):
    raw = raw.strip()
    try:
        if target_type is bool:
            return _BOOL_WORDS[raw.lower()]
        return target_type(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config(path: str | None) -> RunConfig:
    """Parse a key=value file; unknown keys are rejected, defaults fill gaps."""
    cfg = RunConfig()
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        by_name = {f.name: f.type for f in fields(RunConfig)}
        types = {"int": int, "float": float, "str": str, "bool": bool}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"line {lineno}: expected key = value")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in by_name:
                    raise ConfigError(f"unknown config key {key!r}")
                setattr(cfg, key, _coerce(key, raw, types[by_name[key]]))
    cfg.validate()
    return cfg
