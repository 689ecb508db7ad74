"""Shared model builders for the test suite."""

import numpy as np

from neifa.fusion import FusionParams
from neifa.params import ModelParams, TrainConfig, init_params
from neifa.text_encoder import Corpus, EncoderParams, build_vocabulary

# Hand-sized model: d_w = d_t = d_s = 2, window 2, four 2-word texts.
HAND_TEXTS = [("a", "b"), ("c", "d"), ("a", "c"), ("b", "d")]
HAND_PARAMS = {
    # rows: <unk>, a, b, c, d
    "word_table": [[0.0, 0.0], [0.9, -0.6], [0.3, 1.2], [-1.1, 0.4], [0.7, 0.5]],
    "conv_filter": [[0.8, -0.5], [0.4, 0.3], [-0.6, 0.9], [0.5, 0.6]],
    "conv_bias": [0.1, -0.2],
    "structural": [[0.6, -0.3], [1.2, 0.9], [-0.9, 1.5], [0.3, 0.3]],
    "P": [[1.4, -0.4], [0.6, 1.8]],
    "b_g": [0.2, -0.1],
    "Q": [[-0.8, 1.6], [1.2, 0.4]],
    "b_c": [0.05, 0.1],
}


def params_from_lists(d) -> ModelParams:
    a = {k: np.array(v, dtype=np.float64) for k, v in d.items()}
    return ModelParams(
        EncoderParams(a["word_table"], a["conv_filter"], a["conv_bias"]),
        a["structural"],
        FusionParams(a["P"], a["b_g"], a["Q"], a["b_c"]),
    )


def params_to_lists(p: ModelParams) -> dict:
    return {k: v.tolist() for k, v in p.tensors().items()}


def hand_model():
    """(params, corpus, token-id lists) for the hand-sized model."""
    vocab = build_vocabulary(HAND_TEXTS)
    assert vocab.itos == ["<unk>", "a", "b", "c", "d"]
    corpus = Corpus(vocab, HAND_TEXTS, window=2, max_len=350)
    ids = [list(vocab.encode(t)) for t in HAND_TEXTS]
    return params_from_lists(HAND_PARAMS), corpus, ids


def random_small_model(seed, n=6, d=3, window=3, scale=1.0, empty_text=False):
    """Random d_w = d_t = d_s = d model on an n-vertex graph with short random texts."""
    rng = np.random.default_rng(seed)
    words = [f"w{k}" for k in range(8)]
    texts = [tuple(rng.choice(words, size=int(rng.integers(1, 7)))) for _ in range(n)]
    if empty_text:
        texts[-1] = ()
    vocab = build_vocabulary(texts)
    config = TrainConfig(d_w=d, d_t=d, d_s=d, window=window)
    params = init_params(config, vocab.size, n, rng)
    for arr in params.tensors().values():
        arr[...] = rng.uniform(-scale, scale, size=arr.shape)
    return params, Corpus(vocab, texts, window, 350), texts, rng


def random_batch(rng, n, size=4, k=1):
    batch = []
    for _ in range(size):
        i, j = rng.choice(n, size=2, replace=False)
        pool = [v for v in range(n) if v not in (i, j)]
        batch.append((int(i), int(j), [int(x) for x in rng.choice(pool, size=k)]))
    return batch
