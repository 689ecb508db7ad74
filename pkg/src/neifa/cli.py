"""Command-line entry point: ``neifa {split,train,eval-link,eval-classify,export}``.

Training options may also come from a ``key=value`` file passed with
``--config``; flags given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from neifa.checkpoint import load_checkpoint, save_checkpoint
from neifa.errors import ArgumentError, NeifaError, ValidationError
from neifa.evaluation import (
    evaluate_classification,
    evaluate_link_prediction,
    node_embeddings,
    report_line,
    summary_table,
)
from neifa.export import write_embeddings
from neifa.fusion import Variant
from neifa.graph_store import (
    EdgeSplit,
    TextualNetwork,
    canonical_edges,
    load_network,
    read_edge_file,
    split_edges,
    write_edge_file,
)
from neifa.params import TrainConfig
from neifa.trainer import TrainedModel, train

logger = logging.getLogger("neifa")

SWEEP_FRACTIONS = (0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95)

_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
_CASTS = {"int": int, "float": float, "Variant": Variant}


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "dim":
            out["d_t"] = out["d_s"] = _half(int(value))
        elif key in _CONFIG_TYPES:
            out[key] = _CASTS[_CONFIG_TYPES[key]](value)
        else:
            raise ArgumentError(f"{path}:{lineno}: unknown key {key!r}")
    return out


def _half(dim: int) -> int:
    if dim < 2 or dim % 2:
        raise ArgumentError(f"--dim must be an even number >= 2, got {dim}")
    return dim // 2


def resolve_config(args: argparse.Namespace) -> TrainConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    flags = vars(args)
    if "dim" in flags:
        values["d_t"] = values["d_s"] = _half(flags["dim"])
    for name in _CONFIG_TYPES:
        if name in flags:
            values[name] = flags[name]
    return TrainConfig(**values)


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value <= 1.0:
        raise argparse.ArgumentTypeError(f"fraction must lie in (0, 1], got {value}")
    return value


def _add_train_options(p: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    p.add_argument("--config", help="key=value file with training options")
    p.add_argument("--dim", type=int, default=s, help="total embedding size; sets d_t = d_s = dim / 2 (default 200)")
    p.add_argument("--d-w", dest="d_w", type=int, default=s, help="word embedding size (default 100)")
    p.add_argument("--d-t", dest="d_t", type=int, default=s)
    p.add_argument("--d-s", dest="d_s", type=int, default=s)
    p.add_argument("--window", type=int, default=s, help="convolution width (default 3)")
    p.add_argument("--lr", type=float, default=s, help="Adam learning rate (default 1e-3)")
    p.add_argument("--batch-size", dest="batch_size", type=int, default=s, help="default 64")
    p.add_argument("--negatives", type=int, default=s, help="negatives per pair (default 1)")
    p.add_argument("--epochs", type=int, default=s, help="default 200")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=s)
    p.add_argument("--max-len", dest="max_len", type=int, default=s, help="token cap per text (default 350)")
    p.add_argument("--seed", type=int, default=s, help="seed for every random stream (default 0)")


def _add_data_options(p: argparse.ArgumentParser, labels: bool = False) -> None:
    p.add_argument("--graph", required=True, help="full edge list")
    p.add_argument("--text", required=True, help="one text line per vertex")
    if labels:
        p.add_argument("--labels", required=True, help="vertex_id<TAB>label lines")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_edges(path, net: TextualNetwork):
    edges, dropped = canonical_edges(read_edge_file(path))
    n = net.num_vertices
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"{path}: edge ({u}, {v}) out of range for {n} vertices")
    if dropped:
        logger.warning("dropped %d duplicate or self-loop edges from %s", dropped, path)
    return edges


def _load_model(path, net: TextualNetwork) -> TrainedModel:
    model = load_checkpoint(path)
    if model.params.num_vertices != net.num_vertices:
        raise ValidationError(
            f"checkpoint has {model.params.num_vertices} structural rows but the network has "
            f"{net.num_vertices} vertices"
        )
    return model


def _emit_report(rows, out_dir: Path | None) -> None:
    lines = [report_line(*row) for row in rows]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    table = summary_table(rows)
    print(table, file=sys.stderr)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.tsv").write_text(text, encoding="utf-8")
        (out_dir / "summary.txt").write_text(table + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Sub-commands


def cmd_split(args) -> int:
    if args.text:
        net = load_network(args.graph, args.text)
    else:
        edges, _ = canonical_edges(read_edge_file(args.graph))
        n = 1 + max((max(e) for e in edges), default=-1)
        net = TextualNetwork(n, edges, tuple(() for _ in range(n)))
    split = split_edges(net, args.fraction, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_edge_file(out / "train_edges.txt", split.train_edges)
    write_edge_file(out / "test_edges.txt", split.test_edges)
    _write_json(out / "split.json", {"graph": str(args.graph), "fraction": args.fraction, "seed": args.seed,
                                     "train": len(split.train_edges), "test": len(split.test_edges)})
    if not split.test_edges:
        logger.warning("fraction %.3f leaves no test edges", args.fraction)
    print(f"train\t{len(split.train_edges)}\ntest\t{len(split.test_edges)}")
    return 0


def _train_split(args, net: TextualNetwork, config: TrainConfig) -> EdgeSplit:
    if args.train_edges:
        return EdgeSplit(_load_edges(args.train_edges, net), (), 1.0, config.seed)
    fraction = args.fraction if args.fraction is not None else 1.0
    return split_edges(net, fraction, config.seed)


def cmd_train(args) -> int:
    config = resolve_config(args)
    net = load_network(args.graph, args.text)
    split = _train_split(args, net, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", {**config.to_dict(), "embedding_dim": config.embedding_dim,
                                      "graph": str(args.graph), "text": str(args.text),
                                      "train_edges": args.train_edges, "fraction": args.fraction})
    if not args.train_edges:
        write_edge_file(out / "train_edges.txt", split.train_edges)
        write_edge_file(out / "test_edges.txt", split.test_edges)
    model = train(net, split, config)
    save_checkpoint(out / "checkpoint.npz", model)
    with open(out / "loss_trace.tsv", "w", encoding="utf-8", newline="\n") as f:
        for epoch, loss in enumerate(model.loss_trace, start=1):
            f.write(f"{epoch}\t{loss!r}\n")
    print(f"wrote {out / 'checkpoint.npz'}")
    return 0


def cmd_eval_link(args) -> int:
    net = load_network(args.graph, args.text)
    out = Path(args.out) if args.out else None
    rows = []
    if args.sweep is not None:
        if args.checkpoint:
            raise ArgumentError("--sweep trains its own models; do not pass --checkpoint")
        config = resolve_config(args)
        fractions = SWEEP_FRACTIONS if args.sweep == "" else tuple(_fraction(x) for x in args.sweep.split(","))
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "config.json", {**config.to_dict(), "fractions": list(fractions)})
        for fraction in fractions:
            split = split_edges(net, fraction, config.seed)
            model = train(net, split, config)
            rep = evaluate_link_prediction(model.params, model.corpus(net), net, split, args.eval_seed,
                                           config.variant)
            rows.append(("auc", fraction, rep.auc, args.eval_seed))
            logger.info("fraction %.2f auc %.4f", fraction, rep.auc)
    else:
        if not (args.checkpoint and args.test_edges):
            raise ArgumentError("eval-link needs --checkpoint and --test-edges (or --sweep)")
        model = _load_model(args.checkpoint, net)
        test = _load_edges(args.test_edges, net)
        split = EdgeSplit((), test, args.fraction if args.fraction is not None else float("nan"), args.eval_seed)
        rep = evaluate_link_prediction(model.params, model.corpus(net), net, split, args.eval_seed,
                                       model.config.variant)
        rows.append(("auc", split.fraction, rep.auc, args.eval_seed))
    _emit_report(rows, out)
    return 0


def cmd_eval_classify(args) -> int:
    net = load_network(args.graph, args.text, args.labels)
    model = _load_model(args.checkpoint, net)
    edges = _load_edges(args.edges, net) if args.edges else None
    rep = evaluate_classification(model.params, model.corpus(net), net, edges, args.split_fraction,
                                  args.repetitions, args.eval_seed, args.l2, model.config.variant)
    rows = [("accuracy", args.split_fraction, rep.mean_accuracy, args.eval_seed)]
    out = Path(args.out) if args.out else None
    _emit_report(rows, out)
    if out is not None:
        _write_json(out / "classification.json", dataclasses.asdict(rep))
    return 0


def cmd_export(args) -> int:
    net = load_network(args.graph, args.text)
    model = _load_model(args.checkpoint, net)
    edges = _load_edges(args.edges, net) if args.edges else net.edges
    X, _ = node_embeddings(model.params, model.corpus(net), edges, model.config.variant)
    write_embeddings(args.out, X)
    print(f"wrote {len(X)} embeddings of dimension {X.shape[1]} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="neifa", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="random train/test edge split")
    p.add_argument("--graph", required=True)
    p.add_argument("--text", help="text file; fixes the vertex count when given")
    p.add_argument("--fraction", type=_fraction, required=True, help="share of edges kept for training")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    _add_data_options(p)
    p.add_argument("--train-edges", help="train on this edge list instead of splitting --graph")
    p.add_argument("--fraction", type=_fraction, help="split --graph with this training fraction")
    p.add_argument("--out", required=True, help="output directory")
    _add_train_options(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval-link", help="link-prediction AUC")
    _add_data_options(p)
    p.add_argument("--checkpoint")
    p.add_argument("--test-edges")
    p.add_argument("--fraction", type=_fraction, help="training fraction to record in the report")
    p.add_argument("--sweep", nargs="?", const="", default=None,
                   help="train and evaluate at each comma-separated fraction (default 0.15,...,0.95)")
    p.add_argument("--eval-seed", type=int, default=0, help="seed for sampling non-edges")
    p.add_argument("--out", help="directory for report.tsv and summary.txt")
    _add_train_options(p)
    p.set_defaults(func=cmd_eval_link)

    p = sub.add_parser("eval-classify", help="vertex classification accuracy")
    _add_data_options(p, labels=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--edges", help="neighbor edges for averaging (default: full graph)")
    p.add_argument("--split-fraction", type=_fraction, default=0.5)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--l2", type=float, default=1.0, help="L2 strength of the logistic regression")
    p.add_argument("--eval-seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_classify)

    p = sub.add_parser("export", help="write neighbor-averaged embeddings as TSV")
    _add_data_options(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--edges", help="neighbor edges for averaging (default: full graph)")
    p.add_argument("--out", required=True, help="output file")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (NeifaError, OSError) as exc:
        print(f"neifa: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
