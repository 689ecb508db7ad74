"""Textual network storage with edge splitting and negative sampling.

File formats follow the CANE preprocessing layout:

* graph file: one undirected edge per line, ``src<TAB>dst`` (any whitespace
  is accepted), 0-based integer ids;
* text file: line ``i`` is the raw text of vertex ``i``;
* labels file: ``vertex_id<TAB>label`` per line. A file with a single column
  is read as one label per line in vertex order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from neifa.errors import ArgumentError, ParseError, SamplingError, ValidationError

logger = logging.getLogger(__name__)

Edge = tuple[int, int]

MAX_REJECTIONS = 1000


@dataclass(frozen=True)
class TextualNetwork:
    """Vertices, undirected edges, tokenized texts and optional labels.

    Edges are stored canonically as ``(min, max)`` pairs in first-seen order.
    ``labels`` holds a category id per vertex (``-1`` for unlabeled) and
    ``label_names`` maps category ids back to the strings in the labels file.
    """

    num_vertices: int
    edges: tuple[Edge, ...]
    texts: tuple[tuple[str, ...], ...]
    labels: tuple[int, ...] | None = None
    label_names: tuple[str, ...] = ()
    dropped_edges: int = field(default=0, compare=False)

    def __post_init__(self):
        n = self.num_vertices
        if len(self.texts) != n:
            raise ValidationError(f"expected {n} texts, got {len(self.texts)}")
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"edge ({u}, {v}) out of range for {n} vertices")
            if u == v:
                raise ValidationError(f"self-loop on vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"duplicate edge {key}")
            seen.add(key)
        if self.labels is not None:
            if len(self.labels) != n:
                raise ValidationError(f"expected {n} labels, got {len(self.labels)}")
            if any(not (-1 <= c < len(self.label_names)) for c in self.labels):
                raise ValidationError("label id outside label_names")

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_array(self) -> np.ndarray:
        return np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)

    def edge_set(self) -> set[Edge]:
        return set(self.edges)


@dataclass(frozen=True)
class EdgeSplit:
    train_edges: tuple[Edge, ...]
    test_edges: tuple[Edge, ...]
    fraction: float
    seed: int


@dataclass(frozen=True)
class NegativeTable:
    """Cumulative ``d_v ** 0.75`` weights over vertex ids."""

    cumulative: np.ndarray

    @property
    def num_vertices(self) -> int:
        return len(self.cumulative)

    @property
    def probabilities(self) -> np.ndarray:
        w = np.diff(self.cumulative, prepend=0.0)
        return w / self.cumulative[-1]


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(text.lower().split())


def canonical_edges(pairs: Iterable[Edge]) -> tuple[tuple[Edge, ...], int]:
    """Drop self-loops and duplicate undirected edges; return (edges, dropped)."""
    seen: set[Edge] = set()
    out = []
    dropped = 0
    for u, v in pairs:
        key = (min(u, v), max(u, v))
        if u == v or key in seen:
            dropped += 1
            continue
        seen.add(key)
        out.append(key)
    return tuple(out), dropped


def _read_lines(path: Path) -> list[str]:
    content = Path(path).read_text(encoding="utf-8")
    lines = content.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line.rstrip("\r") for line in lines]


def read_edge_file(path) -> list[Edge]:
    """Parse an edge list file. Blank lines are skipped."""
    pairs = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 2:
            raise ParseError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"{path}:{lineno}: non-integer vertex id in {line!r}") from None
        pairs.append((u, v))
    return pairs


def write_edge_file(path, edges: Iterable[Edge]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for u, v in edges:
            f.write(f"{u}\t{v}\n")


def _read_labels(path, num_vertices: int) -> tuple[tuple[int, ...], tuple[str, ...]]:
    raw: dict[int, str] = {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        parts = line.split("\t") if "\t" in line else line.split()
        parts = [p.strip() for p in parts if p.strip()]
        if not parts:
            continue
        if len(parts) == 1:
            vid, name = lineno - 1, parts[0]
        elif len(parts) == 2:
            try:
                vid = int(parts[0])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-integer vertex id") from None
            name = parts[1]
        else:
            raise ParseError(f"{path}:{lineno}: expected 'vertex_id<TAB>label'")
        if not 0 <= vid < num_vertices:
            raise ValidationError(f"{path}:{lineno}: vertex id {vid} out of range")
        raw[vid] = name
    names = tuple(sorted(set(raw.values())))
    index = {name: k for k, name in enumerate(names)}
    labels = tuple(index[raw[v]] if v in raw else -1 for v in range(num_vertices))
    return labels, names


def load_network(graph_path, text_path, labels_path=None, num_vertices: int | None = None) -> TextualNetwork:
    """Load and validate a textual network.

    The vertex count is the number of lines in the text file. If
    ``num_vertices`` is given, the text file must agree with it.
    """
    texts = tuple(tokenize(line) for line in _read_lines(text_path))
    n = len(texts)
    if num_vertices is not None and num_vertices != n:
        raise ValidationError(f"text file has {n} lines, expected {num_vertices}")
    pairs = read_edge_file(graph_path)
    for u, v in pairs:
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edge ({u}, {v}) out of range for {n} vertices")
    edges, dropped = canonical_edges(pairs)
    if dropped:
        logger.warning("dropped %d duplicate or self-loop edges from %s", dropped, graph_path)
    labels, names = (None, ())
    if labels_path is not None:
        labels, names = _read_labels(labels_path, n)
    return TextualNetwork(n, edges, texts, labels, names, dropped_edges=dropped)


def save_network(net: TextualNetwork, graph_path, text_path, labels_path=None) -> None:
    write_edge_file(graph_path, net.edges)
    with open(text_path, "w", encoding="utf-8", newline="\n") as f:
        for tokens in net.texts:
            f.write(" ".join(tokens) + "\n")
    if labels_path is not None and net.labels is not None:
        with open(labels_path, "w", encoding="utf-8", newline="\n") as f:
            for v, c in enumerate(net.labels):
                if c >= 0:
                    f.write(f"{v}\t{net.label_names[c]}\n")


def train_count(fraction: float, num_edges: int) -> int:
    """``round(fraction * num_edges)`` with halves rounded up."""
    return int(math.floor(fraction * num_edges + 0.5))


def split_edges(net: TextualNetwork, fraction: float, seed: int) -> EdgeSplit:
    """Uniformly partition the edges into a training and a test part."""
    if not 0.0 < fraction <= 1.0:
        raise ArgumentError(f"fraction must lie in (0, 1], got {fraction}")
    m = net.num_edges
    n_train = train_count(fraction, m)
    perm = np.random.default_rng(seed).permutation(m)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    train = tuple(net.edges[k] for k in train_idx)
    test = tuple(net.edges[k] for k in test_idx)
    return EdgeSplit(train, test, float(fraction), int(seed))


def degrees(edges: Iterable[Edge], num_vertices: int) -> np.ndarray:
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    return np.bincount(arr.ravel(), minlength=num_vertices)[:num_vertices]


def build_negative_table(train_edges: Sequence[Edge], num_vertices: int) -> NegativeTable:
    if len(train_edges) == 0:
        raise ArgumentError("cannot build a negative table from an empty edge list")
    return table_from_degrees(degrees(train_edges, num_vertices))


def table_from_degrees(deg) -> NegativeTable:
    w = np.asarray(deg, dtype=np.float64) ** 0.75
    if w.sum() <= 0:
        raise ArgumentError("all vertices have zero degree")
    return NegativeTable(np.cumsum(w))


def _draw(table: NegativeTable, rng: np.random.Generator, size=None):
    u = rng.random(size) * table.cumulative[-1]
    # side="right" skips zero-width intervals, so zero-degree vertices never win
    idx = np.searchsorted(table.cumulative, u, side="right")
    return np.minimum(idx, table.num_vertices - 1)


def sample_negative(table: NegativeTable, rng: np.random.Generator, exclude=()) -> int:
    """Draw one vertex from the degree distribution, rejecting ``exclude``."""
    exclude = set(exclude)
    probs = table.probabilities
    if all(probs[v] == 0 for v in range(table.num_vertices) if v not in exclude):
        raise SamplingError("no vertex with positive weight outside the exclusion set")
    for _ in range(MAX_REJECTIONS):
        v = int(_draw(table, rng))
        if v not in exclude:
            return v
    raise SamplingError(f"no admissible vertex after {MAX_REJECTIONS} draws")


def sample_negatives(table: NegativeTable, rng: np.random.Generator, pairs: np.ndarray, k: int) -> np.ndarray:
    """Vectorized ``sample_negative``: ``k`` draws per ``(i, j)`` row of ``pairs``.

    Colliding draws are redrawn until none equals either endpoint of their row.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    out = _draw(table, rng, (len(pairs), k))
    for _ in range(MAX_REJECTIONS):
        bad = (out == pairs[:, :1]) | (out == pairs[:, 1:])
        n_bad = int(bad.sum())
        if n_bad == 0:
            return out
        out[bad] = _draw(table, rng, n_bad)
    raise SamplingError(f"negative sampling did not converge after {MAX_REJECTIONS} rounds")


def sample_nonedges(net: TextualNetwork, count: int, seed: int) -> list[Edge]:
    """Distinct uniformly random vertex pairs that are not edges of ``net``.

    Pairs come back as ``(u, v)`` with ``u < v``.
    """
    n = net.num_vertices
    available = n * (n - 1) // 2 - net.num_edges
    if count > available:
        raise ArgumentError(f"requested {count} non-edges but only {available} exist")
    if count < 0:
        raise ArgumentError("count must be non-negative")
    rng = np.random.default_rng(seed)
    edges = net.edge_set()
    if 2 * count >= available:
        # dense request: enumerate every non-edge and choose without replacement
        cands = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
        pick = rng.choice(len(cands), size=count, replace=False)
        return [cands[k] for k in pick]
    chosen: list[Edge] = []
    taken: set[Edge] = set()
    while len(chosen) < count:
        need = count - len(chosen)
        draws = rng.integers(0, n, size=(2 * need + 8, 2))
        for u, v in draws.tolist():
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            if key in edges or key in taken:
                continue
            taken.add(key)
            chosen.append(key)
            if len(chosen) == count:
                break
    return chosen


def directed_pairs(train_edges: Iterable[Edge]) -> list[Edge]:
    out = []
    for u, v in train_edges:
        out.append((u, v))
        out.append((v, u))
    return out


def neighbor_lists(edges: Iterable[Edge], num_vertices: int) -> list[list[int]]:
    nbrs: list[list[int]] = [[] for _ in range(num_vertices)]
    for u, v in edges:
        nbrs[u].append(v)
        nbrs[v].append(u)
    return nbrs
