"""Complementary fusion of structural and textual features into contextual embeddings.

For a node ``i`` seen from context node ``j``::

    t = r_i * sigmoid(r_j)                     # mutual gate
    g = 1 - sigmoid((P s_i + b_g) * t)         # complement gate
    z = ((Q s_i + b_c) * t) * g                # complementary structural part
    h = [z; t]

Ablations drop pieces of this pipeline, see :class:`Variant`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from neifa._math import sigmoid
from neifa.errors import ArgumentError
from neifa.text_encoder import Corpus, encode_nodes

if TYPE_CHECKING:
    from neifa.params import ModelParams


class Variant(str, enum.Enum):
    FULL = "full"
    WO_M = "wo-m"  # no mutual gate: t := r
    WO_F = "wo-f"  # no fusion: h := t
    WO_FM = "wo-fm"  # neither: h := r

    @property
    def gated(self) -> bool:
        return self in (Variant.FULL, Variant.WO_F)

    @property
    def fused(self) -> bool:
        return self in (Variant.FULL, Variant.WO_M)

    def embedding_dim(self, d_t: int) -> int:
        return 2 * d_t if self.fused else d_t


@dataclass
class FusionParams:
    P: np.ndarray  # (d_t, d_s)
    b_g: np.ndarray  # (d_t,)
    Q: np.ndarray  # (d_t, d_s)
    b_c: np.ndarray  # (d_t,)


@dataclass(frozen=True)
class ContextualEmbedding:
    h: np.ndarray
    context: tuple[int, int]
    z: np.ndarray | None
    t: np.ndarray


def _check_same(name, a, b):
    if np.shape(a) != np.shape(b):
        raise ArgumentError(f"{name}: shape mismatch {np.shape(a)} vs {np.shape(b)}")


def complement_gate(aligned, t):
    """``1 - sigmoid(aligned * t)``, evaluated as ``sigmoid(-aligned * t)``."""
    _check_same("complement_gate", aligned, t)
    return sigmoid(-np.asarray(aligned, dtype=np.float64) * np.asarray(t, dtype=np.float64))


def complementary_info(Q, b_c, s, t, g):
    """``(Q s + b_c) * t * g``; ``s``, ``t`` and ``g`` may be single vectors or stacked rows."""
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != np.shape(s)[-1]:
        raise ArgumentError(f"complementary_info: Q {Q.shape} does not accept s {np.shape(s)}")
    c = np.asarray(s, dtype=np.float64) @ Q.T + b_c
    _check_same("complementary_info", c, t)
    _check_same("complementary_info", c, g)
    return c * t * g


def fuse(z, t, context=(-1, -1)) -> ContextualEmbedding:
    z = np.asarray(z, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    return ContextualEmbedding(np.concatenate([z, t]), tuple(context), z, t)


def embed_rows(r_a, r_b, s_a, fusion: FusionParams, variant: Variant):
    """Vectorized contextual embeddings, one row per (anchor, context) item.

    Args:
        r_a: raw features of the anchors, ``(M, d_t)``.
        r_b: raw features of the contexts, ``(M, d_t)``.
        s_a: structural rows of the anchors, ``(M, d_s)``.

    Returns:
        ``(h, cache)`` with ``h`` of shape ``(M, variant.embedding_dim(d_t))``.
    """
    variant = Variant(variant)
    cache = {"variant": variant, "r_a": r_a, "s_a": s_a}
    if variant.gated:
        sb = sigmoid(r_b)
        t = r_a * sb
        cache["sb"] = sb
    else:
        t = r_a
    if not variant.fused:
        return t, cache
    al = s_a @ fusion.P.T + fusion.b_g
    g = sigmoid(-al * t)
    c = s_a @ fusion.Q.T + fusion.b_c
    z = c * t * g
    cache.update(t=t, al=al, g=g, c=c)
    return np.concatenate([z, t], axis=1), cache


def embed_rows_backward(d_h, cache, fusion: FusionParams, grads: dict):
    """Backprop ``d_h`` through :func:`embed_rows`.

    Fusion-parameter gradients are accumulated into ``grads``; returns
    ``(d_r_a, d_r_b, d_s_a)`` where the last two may be ``None`` when the
    variant does not use them.
    """
    variant = cache["variant"]
    d_s = None
    if variant.fused:
        d = d_h.shape[1] // 2
        d_z, d_t = d_h[:, :d], d_h[:, d:].copy()
        t, al, g, c, s_a = cache["t"], cache["al"], cache["g"], cache["c"], cache["s_a"]
        d_c = d_z * t * g
        d_g = d_z * c * t
        d_u = -d_g * g * (1.0 - g)
        d_al = d_u * t
        d_t += d_z * c * g + d_u * al
        grads["P"] += d_al.T @ s_a
        grads["b_g"] += d_al.sum(axis=0)
        grads["Q"] += d_c.T @ s_a
        grads["b_c"] += d_c.sum(axis=0)
        d_s = d_al @ fusion.P + d_c @ fusion.Q
    else:
        d_t = d_h
    if variant.gated:
        sb = cache["sb"]
        return d_t * sb, d_t * cache["r_a"] * sb * (1.0 - sb), d_s
    return d_t, None, d_s


def contextual_embedding(model: ModelParams, corpus: Corpus, i: int, j: int, variant=Variant.FULL) -> ContextualEmbedding:
    """Embedding of vertex ``i`` in the context of neighbor ``j``."""
    n = model.structural.shape[0]
    if not (0 <= i < n and 0 <= j < n):
        raise ArgumentError(f"vertex pair ({i}, {j}) out of range for {n} vertices")
    if i == j:
        raise ArgumentError("anchor and context must differ")
    variant = Variant(variant)
    r, _ = encode_nodes(model.encoder, corpus, [i, j])
    h, cache = embed_rows(r[:1], r[1:], model.structural[[i]], model.fusion, variant)
    t = cache.get("t", h)[0] if variant.fused else h[0]
    z = h[0, : model.d_t] if variant.fused else None
    return ContextualEmbedding(h[0], (i, j), z, t)
