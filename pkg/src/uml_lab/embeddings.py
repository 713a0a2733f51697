"""Plain-text embedding files shared by training and analysis.

Header ``uml-emb v1 <n_rows> <dim> <has_labels:0|1>``, then one row per line
of space-separated floats (shortest round-trip repr), integer label last when
present.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidInput

HEADER = "uml-emb"
VERSION = "v1"


def format_embeddings(embeddings, labels=None) -> str:
    """Serialize rows (and optional integer labels) to the ``uml-emb v1`` text format."""
    E = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (E.shape[0],):
            raise InvalidInput("need one label per embedding row")
    lines = [f"{HEADER} {VERSION} {E.shape[0]} {E.shape[1]} {int(labels is not None)}"]
    for i, row in enumerate(E):
        parts = [repr(float(v)) for v in row]
        if labels is not None:
            parts.append(str(int(labels[i])))
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_embeddings(path, embeddings, labels=None) -> Path:
    text = format_embeddings(embeddings, labels)
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def read_embeddings(path) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Return ``(embeddings, labels or None)``."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise InvalidInput(f"cannot read embedding file {path}: {exc}") from exc
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[0] != HEADER or head[1] != VERSION or head[4] not in ("0", "1"):
        raise InvalidInput(f"{path}: expected header '{HEADER} {VERSION} <n_rows> <dim> <0|1>'")
    n, dim, has_labels = int(head[2]), int(head[3]), head[4] == "1"
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise InvalidInput(f"{path}: header promises {n} rows, found {len(body)}")
    E = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int64) if has_labels else None
    width = dim + int(has_labels)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != width:
            raise InvalidInput(f"{path}: row {i + 1} has {len(parts)} fields, expected {width}")
        try:
            E[i] = [float(v) for v in parts[:dim]]
            if has_labels:
                labels[i] = int(parts[dim])
        except ValueError as exc:
            raise InvalidInput(f"{path}: row {i + 1}: {exc}") from exc
    return E, labels
