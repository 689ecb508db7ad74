"""Tab-separated embedding tables: ``id<TAB>v1<TAB>...<TAB>vd`` per vertex.

Values are written with ``repr`` so a read/write cycle reproduces the file
byte for byte.
"""

from __future__ import annotations

import numpy as np

from neifa.errors import ParseError


def write_embeddings(path, matrix, ids=None) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    ids = range(len(matrix)) if ids is None else ids
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for vid, row in zip(ids, matrix):
            f.write(str(vid) + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(path) -> tuple[list[int], np.ndarray]:
    ids, rows = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split("\t")
            try:
                ids.append(int(parts[0]))
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: malformed embedding row") from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"{path}:{lineno}: expected {len(rows[0])} values, got {len(rows[-1])}")
    return ids, np.array(rows, dtype=np.float64)
