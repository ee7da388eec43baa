"""Plain-text formats shared by the CLI.

Batch files hold one batch per line as ``k`` space-separated 1-based
indices after a ``# n=<n> k=<k>`` header. Provenance goes to a sidecar
``<file>.provenance`` (one ``good``/``bad`` per line) so estimators never
see it.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

_HEADER = re.compile(r"#\s*n=(\d+)\s+k=(\d+)\s*$")


class FormatError(ValueError):
    pass


def fmt(x: float) -> str:
    return f"{x:.17g}"


def provenance_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".provenance")


def write_batch_file(path, batches, n: int, k: int) -> None:
    batches = np.asarray(batches, dtype=np.int64).reshape(-1, k)
    lines = [f"# n={n} k={k}"]
    lines += [" ".join(str(v) for v in row) for row in (batches + 1).tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_batch_file(path) -> tuple[np.ndarray, int, int]:
    """Return ``(batches, n, k)`` with batches converted to 0-based indices."""
    path = Path(path)
    text = path.read_text().splitlines()
    if not text:
        raise FormatError(f"{path}: empty batch file")
    header = _HEADER.match(text[0].strip())
    if header is None:
        raise FormatError(f"{path}:1: expected header '# n=<n> k=<k>'")
    n, k = int(header.group(1)), int(header.group(2))
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        try:
            row = [int(v) for v in line.split()]
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-integer entry") from None
        if len(row) != k:
            raise FormatError(f"{path}:{lineno}: expected {k} indices, got {len(row)}")
        if min(row) < 1 or max(row) > n:
            raise FormatError(f"{path}:{lineno}: index outside 1..{n}")
        rows.append(row)
    batches = np.array(rows, dtype=np.int64).reshape(-1, k) - 1
    return batches, n, k


def write_provenance(path, good) -> None:
    flags = ["good" if g else "bad" for g in np.asarray(good, dtype=bool)]
    provenance_path(path).write_text("".join(f + "\n" for f in flags))


def read_provenance(path) -> np.ndarray:
    words = provenance_path(path).read_text().split()
    if any(w not in ("good", "bad") for w in words):
        raise FormatError(f"{provenance_path(path)}: flags must be 'good' or 'bad'")
    return np.array([w == "good" for w in words], dtype=bool)


def write_distribution(path, p) -> None:
    Path(path).write_text("".join(fmt(float(v)) + "\n" for v in p))


def read_distribution(path) -> np.ndarray:
    try:
        return np.array([float(v) for v in Path(path).read_text().split()])
    except ValueError:
        raise FormatError(f"{path}: expected one real per line") from None
