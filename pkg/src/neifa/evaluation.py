"""Link-prediction AUC and vertex classification on frozen embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import log_softmax, softmax
from scipy.stats import rankdata

from neifa.errors import ArgumentError
from neifa.fusion import Variant, embed_rows
from neifa.graph_store import EdgeSplit, TextualNetwork, neighbor_lists, sample_nonedges
from neifa.params import ModelParams
from neifa.text_encoder import Corpus, encode_nodes

EXACT_AUC_LIMIT = 4_000_000


# ---------------------------------------------------------------------------
# AUC


def _check_scores(pos, neg):
    pos = np.asarray(pos, dtype=np.float64).ravel()
    neg = np.asarray(neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ArgumentError("AUC needs at least one positive and one negative score")
    return pos, neg


def auc_exact(pos, neg) -> float:
    """Pairwise count: (#{p > n} + 0.5 #{p == n}) / (|pos| |neg|)."""
    pos, neg = _check_scores(pos, neg)
    greater = 0
    ties = 0
    for chunk in np.array_split(pos, max(1, pos.size * neg.size // 1_000_000)):
        diff = chunk[:, None] - neg[None, :]
        greater += int(np.count_nonzero(diff > 0))
        ties += int(np.count_nonzero(diff == 0))
    return (greater + 0.5 * ties) / (pos.size * neg.size)


def auc_rank(pos, neg) -> float:
    """Mann-Whitney form using midranks of the pooled scores."""
    pos, neg = _check_scores(pos, neg)
    ranks = rankdata(np.concatenate([pos, neg]))
    n_p, n_n = pos.size, neg.size
    u = ranks[:n_p].sum() - n_p * (n_p + 1) / 2.0
    return float(u / (n_p * n_n))


def auc(pos, neg) -> float:
    pos, neg = _check_scores(pos, neg)
    if pos.size * neg.size <= EXACT_AUC_LIMIT:
        return auc_exact(pos, neg)
    return auc_rank(pos, neg)


# ---------------------------------------------------------------------------
# Scoring


def raw_features(params: ModelParams, corpus: Corpus, chunk: int = 512) -> np.ndarray:
    """Raw text feature of every vertex, ``(num_vertices, d_t)``."""
    n = len(corpus)
    parts = [encode_nodes(params.encoder, corpus, range(s, min(s + chunk, n)))[0] for s in range(0, n, chunk)]
    return np.concatenate(parts) if parts else np.zeros((0, params.d_t))


def score_pairs(params: ModelParams, corpus: Corpus, pairs, variant=Variant.FULL, r=None) -> np.ndarray:
    """``h_{i|j} . h_{j|i}`` for every row ``(i, j)`` of ``pairs``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if np.any(pairs[:, 0] == pairs[:, 1]):
        raise ArgumentError("cannot score a vertex against itself")
    if r is None:
        r = raw_features(params, corpus)
    I, J = pairs[:, 0], pairs[:, 1]
    S = params.structural
    h_ij, _ = embed_rows(r[I], r[J], S[I], params.fusion, variant)
    h_ji, _ = embed_rows(r[J], r[I], S[J], params.fusion, variant)
    return np.einsum("md,md->m", h_ij, h_ji)


def link_score(params: ModelParams, corpus: Corpus, i: int, j: int, variant=Variant.FULL) -> float:
    if i == j:
        raise ArgumentError("cannot score a vertex against itself")
    r, _ = encode_nodes(params.encoder, corpus, [i, j])
    S = params.structural
    h_ij, _ = embed_rows(r[[0]], r[[1]], S[[i]], params.fusion, variant)
    h_ji, _ = embed_rows(r[[1]], r[[0]], S[[j]], params.fusion, variant)
    return float(h_ij[0] @ h_ji[0])


@dataclass(frozen=True)
class AucReport:
    fraction: float
    auc: float
    positives: int
    negatives: int
    seed: int
    variant: str = "full"


def evaluate_link_prediction(params: ModelParams, corpus: Corpus, net: TextualNetwork, split: EdgeSplit,
                             seed: int, variant=Variant.FULL) -> AucReport:
    """AUC of held-out edges against as many sampled non-edges of the full graph."""
    if not split.test_edges:
        raise ArgumentError("split has no test edges")
    negatives = sample_nonedges(net, len(split.test_edges), seed)
    r = raw_features(params, corpus)
    pos = score_pairs(params, corpus, split.test_edges, variant, r)
    neg = score_pairs(params, corpus, negatives, variant, r)
    return AucReport(split.fraction, auc(pos, neg), len(pos), len(neg), seed, Variant(variant).value)


# ---------------------------------------------------------------------------
# Node embeddings


@dataclass(frozen=True)
class NodeEmbedding:
    vertex: int
    vector: np.ndarray
    neighbor_count: int


def node_embeddings(params: ModelParams, corpus: Corpus, edges, variant=Variant.FULL) -> tuple[np.ndarray, np.ndarray]:
    """Neighbor-averaged contextual embeddings for all vertices.

    Vertex ``i`` gets the mean of ``h_{i|j}`` over its neighbors ``j`` in
    ``edges``. Isolated vertices use their own raw feature as context.

    Returns:
        ``(matrix, neighbor_counts)``; the matrix has one row per vertex.
    """
    n = len(corpus)
    r = raw_features(params, corpus)
    nbrs = neighbor_lists(edges, n)
    counts = np.array([len(x) for x in nbrs], dtype=np.int64)
    anchors = np.repeat(np.arange(n), np.maximum(counts, 1))
    contexts = np.array([j for i in range(n) for j in (nbrs[i] or [i])], dtype=np.int64)
    h, _ = embed_rows(r[anchors], r[contexts], params.structural[anchors], params.fusion, variant)
    out = np.zeros((n, h.shape[1]))
    np.add.at(out, anchors, h)
    out /= np.maximum(counts, 1)[:, None]
    return out, counts


def node_embedding(params: ModelParams, corpus: Corpus, edges, i: int, variant=Variant.FULL) -> NodeEmbedding:
    nbrs = sorted({v for u, v in edges if u == i} | {u for u, v in edges if v == i})
    contexts = nbrs or [i]
    r, _ = encode_nodes(params.encoder, corpus, [i] + contexts)
    m = len(contexts)
    h, _ = embed_rows(np.repeat(r[[0]], m, axis=0), r[1:], np.repeat(params.structural[[i]], m, axis=0),
                      params.fusion, variant)
    return NodeEmbedding(i, h.mean(axis=0), len(nbrs))


# ---------------------------------------------------------------------------
# Classification


@dataclass
class Classifier:
    """Multinomial logistic regression; ``weights`` is ``(num_classes, dim)``."""

    weights: np.ndarray
    bias: np.ndarray
    l2_strength: float
    classes: np.ndarray
    grad_norm: float = 0.0
    iterations: int = 0

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.weights.T + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X), axis=1)

    def predict(self, X) -> np.ndarray:
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def _objective(theta, X, Y, l2):
    C, d = Y.shape[1], X.shape[1]
    W = theta[: C * d].reshape(C, d)
    b = theta[C * d :]
    logits = X @ W.T + b
    logp = log_softmax(logits, axis=1)
    loss = -(Y * logp).sum() + 0.5 * l2 * (W * W).sum()
    G = np.exp(logp) - Y
    dW = G.T @ X + l2 * W
    db = G.sum(axis=0)
    return loss, np.concatenate([dW.ravel(), db])


def train_classifier(X, y, l2_strength: float = 1.0, tol: float = 1e-5, max_iter: int = 10_000) -> Classifier:
    """Fit summed cross-entropy + ``l2_strength / 2 * ||W||^2`` (bias unpenalized).

    Full-batch L-BFGS from a zero start; stops once the gradient norm drops
    below ``tol`` or after ``max_iter`` iterations.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes, yi = np.unique(y, return_inverse=True)
    if len(classes) < 2:
        raise ArgumentError("classification needs at least two classes")
    C, d = len(classes), X.shape[1]
    Y = np.eye(C)[yi]
    theta0 = np.zeros(C * d + C)
    res = minimize(
        _objective, theta0, args=(X, Y, l2_strength), jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": tol / np.sqrt(theta0.size), "ftol": 0.0, "maxcor": 20},
    )
    _, grad = _objective(res.x, X, Y, l2_strength)
    W = res.x[: C * d].reshape(C, d)
    return Classifier(W, res.x[C * d :], l2_strength, classes, float(np.linalg.norm(grad)), int(res.nit))


@dataclass(frozen=True)
class ClassificationReport:
    mean_accuracy: float
    accuracies: tuple[float, ...]
    split_fraction: float
    repetitions: int
    seed: int
    variant: str = "full"
    edge_source: str = "full"


def classification_accuracies(X, labels, split_fraction=0.5, repetitions=10, seed=0, l2_strength=1.0) -> list[float]:
    labels = np.asarray(labels)
    labeled = np.flatnonzero(labels >= 0)
    if len(np.unique(labels[labeled])) < 2:
        raise ArgumentError("need labels from at least two classes")
    rng = np.random.default_rng(seed)
    n_train = int(np.floor(split_fraction * len(labeled)))
    accs = []
    for _ in range(repetitions):
        perm = rng.permutation(labeled)
        tr, te = perm[:n_train], perm[n_train:]
        clf = train_classifier(X[tr], labels[tr], l2_strength)
        accs.append(float(np.mean(clf.predict(X[te]) == labels[te])))
    return accs


def evaluate_classification(params: ModelParams, corpus: Corpus, net: TextualNetwork, edges=None,
                            split_fraction: float = 0.5, repetitions: int = 10, seed: int = 0,
                            l2_strength: float = 1.0, variant=Variant.FULL) -> ClassificationReport:
    """Repeated random node splits; mean held-out accuracy of a logistic regression.

    Embeddings average over neighbors in ``edges``, defaulting to the full
    edge set of ``net``.
    """
    if net.labels is None:
        raise ArgumentError("network has no labels")
    source = "full" if edges is None else "split"
    edges = net.edges if edges is None else edges
    X, _ = node_embeddings(params, corpus, edges, variant)
    accs = classification_accuracies(X, np.asarray(net.labels), split_fraction, repetitions, seed, l2_strength)
    return ClassificationReport(float(np.mean(accs)), tuple(accs), split_fraction, repetitions, seed,
                                Variant(variant).value, source)


# ---------------------------------------------------------------------------
# Report formatting


def report_line(metric: str, fraction: float, value: float, seed: int) -> str:
    return f"{metric}\t{fraction!r}\t{float(value)!r}\t{seed}"


def summary_table(rows: list[tuple[str, float, float, int]]) -> str:
    out = [f"{'metric':<10} {'fraction':>8} {'value':>8} {'seed':>6}"]
    for metric, fraction, value, seed in rows:
        out.append(f"{metric:<10} {fraction:>8.2f} {value:>8.4f} {seed:>6}")
    return "\n".join(out)
