"""Raw text features from a one-layer CNN with average pooling, plus the mutual gate.

The convolution is a valid 1-D convolution of width ``window`` over word
embeddings; each window's embeddings are concatenated (row-major) and
multiplied by ``conv_filter`` of shape ``(window * d_w, d_t)``. Sequences
shorter than the window are right-padded with a fixed zero embedding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.lib.stride_tricks import sliding_window_view

from neifa._math import sigmoid
from neifa.errors import ArgumentError

UNK = "<unk>"


class Vocabulary:
    """Dense token index with a single reserved unknown-token slot at index 0."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos = [UNK]
        self.stoi = {UNK: 0}
        for tok in tokens:
            if tok not in self.stoi:
                self.stoi[tok] = len(self.itos)
                self.itos.append(tok)

    @property
    def unk_index(self) -> int:
        return 0

    @property
    def size(self) -> int:
        return len(self.itos)

    def __len__(self):
        return len(self.itos)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def index(self, token: str) -> int:
        return self.stoi.get(token, 0)

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        return np.fromiter((self.stoi.get(t, 0) for t in tokens), dtype=np.int64, count=len(tokens))


def build_vocabulary(texts: Iterable[Sequence[str]]) -> Vocabulary:
    """Index every distinct token, sorted for a corpus-order-independent layout."""
    distinct = set()
    for tokens in texts:
        distinct.update(tokens)
    distinct.discard(UNK)
    return Vocabulary(sorted(distinct))


@dataclass
class EncoderParams:
    word_table: np.ndarray  # (vocab, d_w)
    conv_filter: np.ndarray  # (window * d_w, d_t)
    conv_bias: np.ndarray  # (d_t,)

    @property
    def d_w(self) -> int:
        return self.word_table.shape[1]

    @property
    def d_t(self) -> int:
        return self.conv_filter.shape[1]

    @property
    def window(self) -> int:
        return self.conv_filter.shape[0] // self.d_w


def token_windows(ids: np.ndarray, window: int, pad: int) -> np.ndarray:
    """Index matrix ``(n_windows, window)``; empty input gives zero windows."""
    ids = np.asarray(ids, dtype=np.int64)
    if len(ids) == 0:
        return np.empty((0, window), dtype=np.int64)
    if len(ids) < window:
        ids = np.concatenate([ids, np.full(window - len(ids), pad, dtype=np.int64)])
    return np.ascontiguousarray(sliding_window_view(ids, window))


class Corpus:
    """Per-vertex convolution windows, built once for a fixed encoder setup.

    ``pad`` equals the vocabulary size and marks zero-embedding padding slots.
    """

    def __init__(self, vocab: Vocabulary, texts: Sequence[Sequence[str]], window: int, max_len: int):
        self.vocab = vocab
        self.window = window
        self.max_len = max_len
        self.pad = vocab.size
        self.windows = [token_windows(vocab.encode(list(t)[:max_len]), window, self.pad) for t in texts]
        self.counts = np.array([len(w) for w in self.windows], dtype=np.int64)

    def __len__(self):
        return len(self.windows)


@dataclass
class EncodeCache:
    tokens: np.ndarray  # distinct non-pad token ids in the batch
    e: np.ndarray  # their embeddings, plus a trailing zero row for padding
    scatter: sp.csr_matrix  # (n_distinct_slots, n_windows) window membership
    y: np.ndarray
    seg: np.ndarray
    counts: np.ndarray


def _filter_by_offset(params: EncoderParams) -> np.ndarray:
    """Reorder ``conv_filter`` to ``(d_w, window * d_t)`` so column block k acts on offset k."""
    w, d_w, d_t = params.window, params.d_w, params.d_t
    return params.conv_filter.reshape(w, d_w, d_t).transpose(1, 0, 2).reshape(d_w, w * d_t)


def _encode_windows(params: EncoderParams, wins: list[np.ndarray], pad: int):
    # Each distinct token is projected once per window offset; a sparse
    # membership matrix then sums the projections belonging to each window.
    d_t, w = params.d_t, params.window
    counts = np.array([len(x) for x in wins], dtype=np.int64)
    r = np.zeros((len(wins), d_t))
    idx = np.concatenate(wins) if counts.sum() else np.empty((0, w), dtype=np.int64)
    n_win = len(idx)
    tokens, inv = np.unique(np.append(idx.ravel(), pad), return_inverse=True)
    inv = inv[:-1].reshape(n_win, w)
    # pad is the largest id, so it sorts last
    e = params.word_table[tokens[:-1]]
    e = np.vstack([e, np.zeros((1, params.d_w))])
    slots = (inv * w + np.arange(w)).ravel()
    scatter = sp.csr_matrix(
        (np.ones(slots.size), (slots, np.repeat(np.arange(n_win), w))), shape=(len(tokens) * w, n_win)
    )
    proj = (e @ _filter_by_offset(params)).reshape(len(tokens) * w, d_t)
    y = np.tanh(scatter.T @ proj + params.conv_bias)
    nonempty = counts > 0
    if nonempty.any():
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])[nonempty]
        r[nonempty] = np.add.reduceat(y, starts, axis=0) / counts[nonempty, None]
    seg = np.repeat(np.arange(len(wins)), counts)
    return r, EncodeCache(tokens[:-1], e, scatter, y, seg, counts)


def encode_nodes(params: EncoderParams, corpus: Corpus, nodes) -> tuple[np.ndarray, EncodeCache]:
    """Raw features for ``nodes`` as rows of a ``(len(nodes), d_t)`` matrix."""
    return _encode_windows(params, [corpus.windows[v] for v in nodes], corpus.pad)


def encode_nodes_backward(params: EncoderParams, cache: EncodeCache, d_r: np.ndarray, grads: dict) -> None:
    """Accumulate word-table and conv gradients for upstream ``d_r`` into ``grads``."""
    if len(cache.seg) == 0:
        return
    w, d_w, d_t = params.window, params.d_w, params.d_t
    d_y = d_r[cache.seg] / cache.counts[cache.seg, None]
    d_a = d_y * (1.0 - cache.y**2)
    grads["conv_bias"] += d_a.sum(axis=0)
    d_proj = (cache.scatter @ d_a).reshape(len(cache.e), w * d_t)
    d_filter = cache.e.T @ d_proj  # (d_w, w * d_t)
    grads["conv_filter"] += d_filter.reshape(d_w, w, d_t).transpose(1, 0, 2).reshape(w * d_w, d_t)
    d_e = d_proj @ _filter_by_offset(params).T
    grads["word_table"][cache.tokens] += d_e[:-1]


def encode_raw(params: EncoderParams, vocab: Vocabulary, tokens: Sequence[str], max_len: int = 350) -> np.ndarray:
    """Mean over windows of ``tanh(conv_filter . window + conv_bias)``; zeros for empty text."""
    wins = token_windows(vocab.encode(list(tokens)[:max_len]), params.window, vocab.size)
    r, _ = _encode_windows(params, [wins], vocab.size)
    return r[0]


def mutual_gate(r_i, r_j):
    r_i = np.asarray(r_i, dtype=np.float64)
    r_j = np.asarray(r_j, dtype=np.float64)
    if r_i.shape != r_j.shape:
        raise ArgumentError(f"raw feature shapes differ: {r_i.shape} vs {r_j.shape}")
    return r_i * sigmoid(r_j), r_j * sigmoid(r_i)
