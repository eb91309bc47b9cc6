"""Training configuration: defaults, validation, JSON round trip."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields


class ConfigError(ValueError):
    """Unknown key or invariant-violating value."""


@dataclass
class TrainConfig:
    alpha: float = 1.0
    lr: float = 0.001
    dropout: float = 0.2
    epochs: int = 20
    seed: int = 0
    encoder_mode: str = "toy"          # toy | external
    sememe_mode: str = "off"           # off | char | word
    graph_mode: str = "real"           # real | pseudo
    d_emb: int = 64
    d_h: int = 64
    threshold: float = 0.5
    max_len: int = 512
    max_word_len: int = 4
    tag_dim: int = 25
    sememe_dim: int = 200
    offset_dim: int = 12
    gat_heads: int = 3
    gat_head_dim: int = 16
    sememe_concat: bool = False        # append h_sem to h instead of replacing
    transition_mask: bool = False
    positive_weight: float = 1.0
    coref_literal: bool = False
    predicted_tags_in_training: bool = False
    pipeline_mode: bool = False        # alternate tagger / scorer updates
    early_stop_f: float | None = None  # stop once dev triple F reaches this
    embeddings_path: str | None = None  # precomputed vectors (external mode)

    def validate(self) -> None:
        if not self.alpha > 0.0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.lr < 1.0:
            raise ConfigError(f"lr must lie in (0, 1), got {self.lr}")
        # dropout 0 switches regularization off; 1 would zero every activation
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.encoder_mode not in ("toy", "external"):
            raise ConfigError(f"unknown encoder_mode {self.encoder_mode!r}")
        if self.sememe_mode not in ("off", "char", "word"):
            raise ConfigError(f"unknown sememe_mode {self.sememe_mode!r}")
        if self.graph_mode not in ("real", "pseudo"):
            raise ConfigError(f"unknown graph_mode {self.graph_mode!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError(f"threshold must lie in [0, 1], got {self.threshold}")
        for name in ("d_emb", "d_h", "max_len", "max_word_len", "tag_dim",
                     "sememe_dim", "offset_dim", "gat_heads", "gat_head_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.encoder_mode == "external" and not self.embeddings_path:
            raise ConfigError("external encoder mode needs embeddings_path")

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(obj: dict) -> TrainConfig:
    known = {f.name for f in fields(TrainConfig)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = TrainConfig(**obj)
    cfg.validate()
    return cfg


def load_config(path) -> TrainConfig:
    with open(path, encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: bad JSON ({exc.msg})")
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return config_from_dict(obj)


def save_config(cfg: TrainConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
