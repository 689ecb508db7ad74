"""Trainable parameters and training configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from neifa.errors import ArgumentError
from neifa.fusion import FusionParams, Variant
from neifa.text_encoder import EncoderParams

TENSOR_NAMES = ("word_table", "conv_filter", "conv_bias", "structural", "P", "b_g", "Q", "b_c")


@dataclass
class TrainConfig:
    d_w: int = 100
    d_t: int = 100
    d_s: int = 100
    window: int = 3
    lr: float = 1e-3
    batch_size: int = 64
    negatives: int = 1
    epochs: int = 200
    seed: int = 0
    variant: Variant = Variant.FULL
    max_len: int = 350

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.lr <= 0:
            raise ArgumentError("lr must be positive")
        if self.negatives < 1:
            raise ArgumentError("negatives must be >= 1")
        if self.batch_size < 1:
            raise ArgumentError("batch_size must be >= 1")
        if min(self.d_w, self.d_t, self.d_s, self.window, self.max_len) < 1:
            raise ArgumentError("sizes (d_w, d_t, d_s, window, max_len) must be >= 1")
        if self.epochs < 0:
            raise ArgumentError("epochs must be >= 0")

    @property
    def embedding_dim(self) -> int:
        return self.variant.embedding_dim(self.d_t)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["variant"] = self.variant.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(d) - set(names)
        if unknown:
            raise ArgumentError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class ModelParams:
    encoder: EncoderParams
    structural: np.ndarray  # (num_vertices, d_s)
    fusion: FusionParams

    @property
    def d_t(self) -> int:
        return self.encoder.d_t

    @property
    def num_vertices(self) -> int:
        return self.structural.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        """Name -> array views; in-place updates on them modify the model."""
        e, f = self.encoder, self.fusion
        return {
            "word_table": e.word_table,
            "conv_filter": e.conv_filter,
            "conv_bias": e.conv_bias,
            "structural": self.structural,
            "P": f.P,
            "b_g": f.b_g,
            "Q": f.Q,
            "b_c": f.b_c,
        }

    @classmethod
    def from_tensors(cls, t: dict[str, np.ndarray]) -> "ModelParams":
        return cls(
            EncoderParams(t["word_table"], t["conv_filter"], t["conv_bias"]),
            t["structural"],
            FusionParams(t["P"], t["b_g"], t["Q"], t["b_c"]),
        )

    def copy(self) -> "ModelParams":
        return ModelParams.from_tensors({k: v.copy() for k, v in self.tensors().items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors().items()}


def _glorot(rng, fan_in, fan_out, shape):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(config: TrainConfig, vocab_size: int, num_vertices: int, rng: np.random.Generator) -> ModelParams:
    """Small uniform embeddings, Glorot-uniform matrices, zero biases."""
    c = config
    word_table = rng.uniform(-0.05, 0.05, size=(vocab_size, c.d_w))
    conv_filter = _glorot(rng, c.window * c.d_w, c.d_t, (c.window * c.d_w, c.d_t))
    structural = rng.uniform(-0.05, 0.05, size=(num_vertices, c.d_s))
    P = _glorot(rng, c.d_s, c.d_t, (c.d_t, c.d_s))
    Q = _glorot(rng, c.d_s, c.d_t, (c.d_t, c.d_s))
    return ModelParams(
        EncoderParams(word_table, conv_filter, np.zeros(c.d_t)),
        structural,
        FusionParams(P, np.zeros(c.d_t), Q, np.zeros(c.d_t)),
    )
