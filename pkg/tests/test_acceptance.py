"""Acceptance checks, one test per numbered criterion.

Every test records a PASS, FAIL or BLOCKED line through the ``record``
fixture; the lines are printed together at the end of the pytest run.

Criteria 4-7 and 9 need the Cora and HepTh textual networks, which are not
bundled. Point ``NEIFA_CORA_DIR`` / ``NEIFA_HEPTH_DIR`` at a directory
holding ``graph.txt`` (edge list), ``data.txt`` (one text per vertex) and,
for classification, ``group.txt`` or ``labels.txt``. Without them those
criteria are reported as BLOCKED and skipped. With them, expect several
hours of single-core training for the full set.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import random_batch, random_small_model
from neifa.cli import main
from neifa.errors import NeifaError
from neifa.evaluation import auc_exact, auc_rank, evaluate_classification, evaluate_link_prediction, score_pairs
from neifa.fusion import Variant, complement_gate, complementary_info
from neifa.graph_store import load_network, save_network, split_edges
from neifa.objective import finite_difference_check
from neifa.params import TrainConfig, init_params
from neifa.synthetic import planted_network
from neifa.text_encoder import Corpus, build_vocabulary, mutual_gate
from neifa.trainer import train

GRAD_TOL = 1e-4
GRAD_MODELS = 20
AUC_AGREEMENT = 1e-12
AUC_SETS = 1000
INVARIANT_CASES = 10_000
CORA_AUC_95 = 0.930
CORA_AUC_55 = 0.880
HEPTH_AUC_95 = 0.920
ABLATION_SEEDS = 3
CLASSIFY_FLOOR = 0.70
CLASSIFY_BASELINE_MULTIPLE = 5.0
CORA_CLASSES = 7
NULL_BAND = (0.40, 0.60)
NULL_SEEDS = 5
RUNTIME_TARGET_S = 30 * 60


def _fmt_ok(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# ---------------------------------------------------------------------------
# Dataset access


def _dataset_paths(env: str):
    root = os.environ.get(env)
    if not root:
        return None
    root = Path(root)
    graph, text = root / "graph.txt", root / "data.txt"
    if not (graph.is_file() and text.is_file()):
        return None
    labels = next((p for p in (root / "group.txt", root / "labels.txt") if p.is_file()), None)
    return graph, text, labels


def _require(env, number, record, labels=False):
    paths = _dataset_paths(env)
    if paths is None or (labels and paths[2] is None):
        reason = f"{env} not set or missing graph.txt/data.txt" + ("/labels" if labels else "")
        record(number, "BLOCKED", reason)
        pytest.skip(reason)
    graph, text, lab = paths
    return load_network(graph, text, lab if labels else None)


_trained: dict = {}


def _trained_model(net, key, fraction, variant="full", seed=0):
    """Default-config model at a training fraction, cached for the session."""
    cache_key = (key, fraction, variant, seed)
    if cache_key not in _trained:
        split = split_edges(net, fraction, seed)
        start = time.perf_counter()
        model = train(net, split, TrainConfig(variant=variant, seed=seed))
        _trained[cache_key] = (model, split, time.perf_counter() - start)
    return _trained[cache_key]


def _link_auc(net, key, fraction, variant="full", seed=0):
    model, split, seconds = _trained_model(net, key, fraction, variant, seed)
    rep = evaluate_link_prediction(model.params, model.corpus(net), net, split, seed, variant)
    return rep.auc, seconds


# ---------------------------------------------------------------------------
# Always-on criteria


def test_1_gradient_correctness(record):
    start = time.perf_counter()
    worst = 0.0
    checks = 0
    for seed in range(GRAD_MODELS):
        params, corpus, _, rng = random_small_model(1000 + seed, n=6, d=3, empty_text=seed % 5 == 0)
        batch = random_batch(rng, 6, size=4, k=2)
        for variant in Variant:
            trial = params.copy()
            worst = max(worst, finite_difference_check(trial, corpus, batch, variant))
            checks += 1
    seconds = time.perf_counter() - start
    ok = worst < GRAD_TOL and seconds < 60
    record(1, _fmt_ok(ok), f"max relative error {worst:.2e} < {GRAD_TOL:g} over {checks} checks in {seconds:.1f}s")
    assert ok


def test_2_auc_paths_agree(record):
    rng = np.random.default_rng(2)
    worst = 0.0
    for k in range(AUC_SETS):
        n_pos, n_neg = rng.integers(1, 300, size=2)
        if k % 2:
            pos = rng.integers(0, 10, n_pos).astype(float)
            neg = rng.integers(0, 10, n_neg).astype(float)
        else:
            pos, neg = rng.normal(0.5, 1, n_pos), rng.normal(0, 1, n_neg)
        worst = max(worst, abs(auc_exact(pos, neg) - auc_rank(pos, neg)))
    ok = worst <= AUC_AGREEMENT
    record(2, _fmt_ok(ok), f"max |exact - rank| = {worst:.1e} <= {AUC_AGREEMENT:g} over {AUC_SETS} sets (half tied)")
    assert ok


def test_3_gate_invariants(record):
    rng = np.random.default_rng(3)
    n, d = INVARIANT_CASES, 8

    # |aligned * t| <= 25 keeps sigmoid strictly inside (0, 1) in float64
    aligned, t = rng.uniform(-5, 5, (n, d)), rng.uniform(-5, 5, (n, d))
    g = complement_gate(aligned, t)
    gate_ok = bool(np.all((g > 0) & (g < 1)))

    Q, b_c, s = rng.normal(size=(d, 5)), rng.normal(size=d), rng.normal(size=(n, 5))
    z = complementary_info(Q, b_c, s, np.zeros((n, d)), rng.uniform(0, 1, (n, d)))
    zero_ok = bool(np.all(z == 0))

    r_i, r_j = rng.uniform(-1, 1, (n, d)), rng.uniform(-1, 1, (n, d))
    r_i[rng.random((n, d)) < 0.05] = 0.0
    t_i, _ = mutual_gate(r_i, r_j)
    nz = r_i != 0
    atten_ok = bool(np.all(np.abs(t_i[nz]) < np.abs(r_i[nz])))

    sym_cases = 0
    sym_ok = True
    for seed in range(INVARIANT_CASES // 100):
        params, corpus, _, mrng = random_small_model(seed, n=12, d=4, scale=2.0)
        variant = list(Variant)[seed % 4]
        pairs = np.array([mrng.choice(12, 2, replace=False) for _ in range(100)])
        sym_ok &= bool(np.array_equal(score_pairs(params, corpus, pairs, variant),
                                      score_pairs(params, corpus, pairs[:, ::-1], variant)))
        sym_cases += len(pairs)

    ok = gate_ok and zero_ok and atten_ok and sym_ok
    record(3, _fmt_ok(ok), f"g in (0,1): {gate_ok}, z=0 at t=0: {zero_ok}, |t|<|r|: {atten_ok} "
                           f"({n}x{d} each), score symmetry: {sym_ok} ({sym_cases} pairs)")
    assert ok


def test_8_determinism(record, tmp_path):
    net = planted_network(80, 4, seed=8)
    data = [tmp_path / "g.txt", tmp_path / "t.txt"]
    save_network(net, *data)
    common = ["--graph", str(data[0]), "--text", str(data[1])]
    opts = ["--d-w", "8", "--dim", "16", "--epochs", "3", "--seed", "5"]
    for run in ("a", "b"):
        assert main(["train", *common, "--fraction", "0.8", "--out", str(tmp_path / run), *opts]) == 0
        assert main(["eval-link", *common, "--checkpoint", str(tmp_path / run / "checkpoint.npz"),
                     "--test-edges", str(tmp_path / run / "test_edges.txt"), "--fraction", "0.8",
                     "--out", str(tmp_path / run / "eval")]) == 0
    files = ["checkpoint.npz", "loss_trace.tsv", "train_edges.txt", "test_edges.txt", "eval/report.tsv"]
    same = {f: (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files}
    ok = all(same.values())
    record(8, _fmt_ok(ok), "identical bytes for " + ", ".join(f for f, s in same.items() if s)
           + ("" if ok else "; differing: " + ", ".join(f for f, s in same.items() if not s)))
    assert ok


# ---------------------------------------------------------------------------
# Dataset criteria


@pytest.mark.slow
def test_4_cora_link_prediction(record):
    net = _require("NEIFA_CORA_DIR", 4, record)
    auc95, t95 = _link_auc(net, "cora", 0.95)
    auc55, t55 = _link_auc(net, "cora", 0.55)
    ok = auc95 >= CORA_AUC_95 and auc55 >= CORA_AUC_55
    slow = [f for f, t in ((0.95, t95), (0.55, t55)) if t > RUNTIME_TARGET_S]
    note = f"; runtime target exceeded at {slow}" if slow else ""
    record(4, _fmt_ok(ok), f"AUC@95% {auc95:.4f} (>= {CORA_AUC_95}), AUC@55% {auc55:.4f} (>= {CORA_AUC_55}); "
                           f"train {t95 / 60:.1f} / {t55 / 60:.1f} min{note}")
    assert ok


@pytest.mark.slow
def test_5_hepth_link_prediction(record):
    net = _require("NEIFA_HEPTH_DIR", 5, record)
    value, seconds = _link_auc(net, "hepth", 0.95)
    ok = value >= HEPTH_AUC_95
    record(5, _fmt_ok(ok), f"AUC@95% {value:.4f} (>= {HEPTH_AUC_95}); train {seconds / 60:.1f} min")
    assert ok


@pytest.mark.slow
def test_6_ablation_ordering(record):
    net = _require("NEIFA_CORA_DIR", 6, record)
    means = {}
    for variant in ("full", "wo-f", "wo-m"):
        means[variant] = float(np.mean([_link_auc(net, "cora", 0.95, variant, seed)[0]
                                        for seed in range(ABLATION_SEEDS)]))
    ok = means["full"] >= means["wo-f"] and means["full"] >= means["wo-m"]
    record(6, _fmt_ok(ok), ", ".join(f"{v} {a:.4f}" for v, a in means.items())
           + f" (mean AUC@95% over {ABLATION_SEEDS} seeds)")
    assert ok


@pytest.mark.slow
def test_7_vertex_classification(record):
    net = _require("NEIFA_CORA_DIR", 7, record, labels=True)
    model, _, _ = _trained_model(net, "cora", 1.0)
    rep = evaluate_classification(model.params, model.corpus(net), net, repetitions=10, seed=0)
    floor = max(CLASSIFY_FLOOR, CLASSIFY_BASELINE_MULTIPLE / CORA_CLASSES)
    ok = rep.mean_accuracy >= floor
    record(7, _fmt_ok(ok), f"mean accuracy {rep.mean_accuracy:.4f} over 10 half splits (>= {floor:.4f})")
    assert ok


@pytest.mark.slow
def test_9_untrained_null_auc(record):
    net = _require("NEIFA_CORA_DIR", 9, record)
    lo, hi = NULL_BAND
    values = []
    vocab = build_vocabulary(net.texts)
    for seed in range(NULL_SEEDS):
        config = TrainConfig(seed=seed)
        params = init_params(config, vocab.size, net.num_vertices, np.random.default_rng(seed))
        corpus = Corpus(vocab, net.texts, config.window, config.max_len)
        split = split_edges(net, 0.55, seed)
        values.append(evaluate_link_prediction(params, corpus, net, split, seed).auc)
    ok = all(lo <= v <= hi for v in values)
    record(9, _fmt_ok(ok), "AUC " + ", ".join(f"{v:.4f}" for v in values) + f" (each in [{lo}, {hi}])")
    assert ok


def test_dataset_loader_error_is_reported(tmp_path, monkeypatch):
    (tmp_path / "graph.txt").write_text("0\tx\n", encoding="utf-8")
    (tmp_path / "data.txt").write_text("a\nb\n", encoding="utf-8")
    monkeypatch.setenv("NEIFA_TMP_DIR", str(tmp_path))
    with pytest.raises(NeifaError):
        _require("NEIFA_TMP_DIR", 0, lambda *a: None)
