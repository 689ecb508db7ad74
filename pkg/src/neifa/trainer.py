"""Minibatch training loop over directed training pairs."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from neifa.errors import ArgumentError, NumericError
from neifa.graph_store import (
    EdgeSplit,
    TextualNetwork,
    build_negative_table,
    directed_pairs,
    sample_negatives,
)
from neifa.objective import compute_gradients
from neifa.optim import AdamState, adam_step
from neifa.params import ModelParams, TrainConfig, init_params
from neifa.text_encoder import Corpus, Vocabulary, build_vocabulary

logger = logging.getLogger(__name__)


@dataclass
class TrainedModel:
    """A trained model together with the vocabulary and settings needed to embed vertices."""

    config: TrainConfig
    vocab: Vocabulary
    params: ModelParams
    loss_trace: list[float] = field(default_factory=list)

    def corpus(self, net: TextualNetwork) -> Corpus:
        return Corpus(self.vocab, net.texts, self.config.window, self.config.max_len)


def seed_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators derived from one user seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def initial_model(net: TextualNetwork, config: TrainConfig) -> TrainedModel:
    init_rng = seed_streams(config.seed, 3)[0]
    vocab = build_vocabulary(net.texts)
    params = init_params(config, vocab.size, net.num_vertices, init_rng)
    return TrainedModel(config, vocab, params)


def train(
    net: TextualNetwork,
    split: EdgeSplit,
    config: TrainConfig,
    on_epoch: Callable[[int, float], None] | None = None,
) -> TrainedModel:
    """Train with Adam on shuffled minibatches of directed training pairs.

    Negatives are drawn per pair from the ``d_v ** 0.75`` table of the training
    graph. The run is a deterministic function of ``config.seed``.
    """
    if not split.train_edges:
        raise ArgumentError("training split has no edges")
    _, shuffle_rng, neg_rng = seed_streams(config.seed, 3)
    model = initial_model(net, config)
    params = model.params
    corpus = model.corpus(net)
    table = build_negative_table(split.train_edges, net.num_vertices)
    pairs = np.asarray(directed_pairs(split.train_edges), dtype=np.int64)
    tensors = params.tensors()
    state = AdamState(tensors)
    bs = config.batch_size

    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, len(pairs), bs):
            bp = pairs[order[start : start + bs]]
            negs = sample_negatives(table, neg_rng, bp, config.negatives)
            try:
                loss, grads = compute_gradients(params, corpus, (bp, negs), config.variant)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}: {exc}") from exc
            adam_step(tensors, grads, state, config.lr)
            total += loss * len(bp)
        epoch_loss = total / len(pairs)
        if not math.isfinite(epoch_loss):
            raise NumericError(f"non-finite loss at epoch {epoch}")
        model.loss_trace.append(epoch_loss)
        logger.info("epoch %d loss %.6f (%.1fs)", epoch, epoch_loss, time.perf_counter() - t0)
        if on_epoch is not None:
            on_epoch(epoch, epoch_loss)
    return model
