"""Negative-sampling loss with hand-derived gradients, plus an exact-softmax oracle.

For a training pair ``(i, j)`` with negatives ``k_1..k_K`` the minimized loss is::

    -log sigmoid(h_{i|j} . h_{j|i}) - sum_k log sigmoid(-h_{k|i} . h_{i|j})

where ``h_{a|b}`` is the contextual embedding of ``a`` in the context of ``b``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from neifa._math import log_sigmoid, sigmoid
from neifa.errors import ArgumentError, NumericError
from neifa.fusion import Variant, embed_rows, embed_rows_backward
from neifa.params import ModelParams
from neifa.text_encoder import Corpus, encode_nodes, encode_nodes_backward


def as_batch_arrays(batch) -> tuple[np.ndarray, np.ndarray]:
    """Normalize ``[(i, j, negatives), ...]`` or ``(pairs, negs)`` to int arrays."""
    if isinstance(batch, tuple) and len(batch) == 2 and isinstance(batch[0], np.ndarray):
        pairs, negs = batch
    else:
        batch = list(batch)
        if not batch:
            raise ArgumentError("empty batch")
        pairs = np.array([(i, j) for i, j, _ in batch], dtype=np.int64)
        negs = np.array([list(k) for _, _, k in batch], dtype=np.int64)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    negs = np.asarray(negs, dtype=np.int64).reshape(len(pairs), -1)
    if len(pairs) == 0:
        raise ArgumentError("empty batch")
    return pairs, negs


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite values in {name}")


def _forward(params: ModelParams, corpus: Corpus, pairs, negs, variant):
    B, K = negs.shape
    I, J = pairs[:, 0], pairs[:, 1]
    anchors = np.concatenate([I, J, negs.ravel()])
    contexts = np.concatenate([J, I, np.repeat(I, K)])
    nodes, inv = np.unique(np.concatenate([anchors, contexts]), return_inverse=True)
    a_rows, b_rows = inv[: len(anchors)], inv[len(anchors) :]

    r, enc_cache = encode_nodes(params.encoder, corpus, nodes)
    _check_finite("raw text features", r)
    h, fus_cache = embed_rows(r[a_rows], r[b_rows], params.structural[anchors], params.fusion, variant)
    _check_finite("contextual embeddings", h)

    h_ij, h_ji = h[:B], h[B : 2 * B]
    h_k = h[2 * B :].reshape(B, K, -1)
    x_pos = np.einsum("bd,bd->b", h_ij, h_ji)
    x_neg = np.einsum("bkd,bd->bk", h_k, h_ij)
    losses = -log_sigmoid(x_pos) - log_sigmoid(-x_neg).sum(axis=1)
    _check_finite("loss", losses)
    state = dict(
        anchors=anchors, a_rows=a_rows, b_rows=b_rows, nodes=nodes, enc_cache=enc_cache,
        fus_cache=fus_cache, h_ij=h_ij, h_ji=h_ji, h_k=h_k, x_pos=x_pos, x_neg=x_neg,
    )
    return losses, state


def batch_losses(params: ModelParams, corpus: Corpus, batch, variant=Variant.FULL) -> np.ndarray:
    pairs, negs = as_batch_arrays(batch)
    losses, _ = _forward(params, corpus, pairs, negs, Variant(variant))
    return losses


def pair_loss(params: ModelParams, corpus: Corpus, i: int, j: int, negatives, variant=Variant.FULL) -> float:
    negatives = list(negatives)
    if i in negatives or j in negatives:
        raise ArgumentError(f"negatives {negatives} overlap the positive pair ({i}, {j})")
    return float(batch_losses(params, corpus, [(i, j, negatives)], variant)[0])


def compute_gradients(params: ModelParams, corpus: Corpus, batch, variant=Variant.FULL):
    """Mean batch loss and its gradient with respect to every trainable tensor.

    Returns:
        ``(loss, grads)`` where ``grads`` maps tensor names (see
        :meth:`ModelParams.tensors`) to arrays of the same shape.
    """
    variant = Variant(variant)
    pairs, negs = as_batch_arrays(batch)
    losses, st = _forward(params, corpus, pairs, negs, variant)
    B = len(pairs)
    grads = params.zeros_like()

    d_pos = -sigmoid(-st["x_pos"]) / B
    d_neg = sigmoid(st["x_neg"]) / B
    h_ij, h_ji, h_k = st["h_ij"], st["h_ji"], st["h_k"]
    d_h_ij = d_pos[:, None] * h_ji + np.einsum("bk,bkd->bd", d_neg, h_k)
    d_h_ji = d_pos[:, None] * h_ij
    d_h_k = d_neg[:, :, None] * h_ij[:, None, :]
    d_h = np.concatenate([d_h_ij, d_h_ji, d_h_k.reshape(-1, h_ij.shape[1])])

    d_ra, d_rb, d_sa = embed_rows_backward(d_h, st["fus_cache"], params.fusion, grads)
    d_r = np.zeros((len(st["nodes"]), params.d_t))
    np.add.at(d_r, st["a_rows"], d_ra)
    if d_rb is not None:
        np.add.at(d_r, st["b_rows"], d_rb)
    if d_sa is not None:
        np.add.at(grads["structural"], st["anchors"], d_sa)
    encode_nodes_backward(params.encoder, st["enc_cache"], d_r, grads)

    for name, g in grads.items():
        _check_finite(f"gradient of {name}", g)
    return float(losses.mean()), grads


def exact_log_probs(params: ModelParams, corpus: Corpus, i: int, j: int, variant=Variant.FULL) -> np.ndarray:
    """Full-softmax log-probabilities over candidate context vertices ``z``.

    Entry ``z`` is ``h_{i|j} . h_{z|i} - logsumexp_{z' != i} h_{i|j} . h_{z'|i}``;
    entry ``i`` is ``-inf``. Costs one embedding per vertex.
    """
    n = params.num_vertices
    variant = Variant(variant)
    r, _ = encode_nodes(params.encoder, corpus, range(n))
    S = params.structural
    h_ij, _ = embed_rows(r[[i]], r[[j]], S[[i]], params.fusion, variant)
    others = np.array([z for z in range(n) if z != i], dtype=np.int64)
    h_zi, _ = embed_rows(r[others], np.repeat(r[[i]], len(others), axis=0), S[others], params.fusion, variant)
    scores = h_zi @ h_ij[0]
    out = np.full(n, -np.inf)
    out[others] = scores - logsumexp(scores)
    return out


def exact_log_prob(params: ModelParams, corpus: Corpus, i: int, j: int, variant=Variant.FULL) -> float:
    """``log p(h_i | h_j)`` under the full softmax over all vertices."""
    return float(exact_log_probs(params, corpus, i, j, variant)[j])


# Central differences at epsilon = 1e-5 on an O(1) loss carry about 1e-11 of
# round-off, so gradients below this scale are compared in absolute terms.
RELATIVE_ERROR_FLOOR = 1e-6


def relative_error(analytic, numeric) -> np.ndarray:
    """``|a - n| / max(|a|, |n|, RELATIVE_ERROR_FLOOR)`` elementwise."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), RELATIVE_ERROR_FLOOR)


def numerical_gradients(loss_fn, tensors: dict[str, np.ndarray], epsilon: float = 1e-5) -> dict[str, np.ndarray]:
    """Central differences of ``loss_fn()`` with respect to every scalar in ``tensors``.

    Tensors are perturbed in place and restored exactly.
    """
    out = {}
    for name, arr in tensors.items():
        num = np.zeros_like(arr)
        flat, nflat = arr.reshape(-1), num.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            plus = loss_fn()
            flat[k] = orig - epsilon
            minus = loss_fn()
            flat[k] = orig
            nflat[k] = (plus - minus) / (2 * epsilon)
        out[name] = num
    return out


def finite_difference_check(params: ModelParams, corpus: Corpus, batch, variant=Variant.FULL,
                            epsilon: float = 1e-5, analytic: dict | None = None) -> float:
    """Worst relative error between analytic and central-difference gradients.

    ``analytic`` overrides the gradients under test (used to verify that the
    check itself catches corrupted gradients).
    """
    if analytic is None:
        _, analytic = compute_gradients(params, corpus, batch, variant)
    pairs, negs = as_batch_arrays(batch)

    def loss_fn():
        return float(batch_losses(params, corpus, (pairs, negs), variant).mean())

    numeric = numerical_gradients(loss_fn, params.tensors(), epsilon)
    return max(float(relative_error(analytic[k], numeric[k]).max(initial=0.0)) for k in numeric)
