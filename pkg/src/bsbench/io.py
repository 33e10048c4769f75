"""File formats: transmission matrices, sample lists and run manifests.

Matrix files are JSON objects ``{"m": m, "entries": [[re, im], ...]}`` with
``m * m`` row-major entries. Sample files hold one event per line as
comma-separated 0-based output modes. Floats are written with ``repr``
precision, so save/load round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from ._validation import check_matrix
from .exceptions import CollisionError, ParseError
from .likelihood import SampleSet


def unitarity_deviation(U) -> float:
    """Frobenius norm of ``U^dagger U - I``; measured matrices need not be unitary."""
    U = np.asarray(U)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def matrix_to_dict(U) -> dict:
    U = check_matrix(U, square=True, name="U")
    flat = U.reshape(-1)
    return {"m": int(U.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_dict(doc) -> np.ndarray:
    if not isinstance(doc, dict) or "m" not in doc or "entries" not in doc:
        raise ParseError("matrix file must be an object with fields 'm' and 'entries'")
    m = doc["m"]
    if not isinstance(m, int) or m < 1:
        raise ParseError(f"'m' must be a positive integer, got {m!r}")
    entries = doc["entries"]
    if not isinstance(entries, list) or len(entries) != m * m:
        found = len(entries) if isinstance(entries, list) else type(entries).__name__
        raise ParseError(f"expected {m * m} entries for m={m}, found {found}")
    U = np.empty(m * m, dtype=np.complex128)
    for k, z in enumerate(entries):
        row, col = divmod(k, m)
        ok = (isinstance(z, list) and len(z) == 2
              and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in z))
        if not ok or not all(math.isfinite(v) for v in z):
            raise ParseError(f"entry at row {row}, column {col} must be a finite [re, im] pair, got {z!r}")
        U[k] = complex(z[0], z[1])
    return U.reshape(m, m)


def load_matrix(path) -> np.ndarray:
    """Read a transmission matrix file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from None
    return matrix_from_dict(doc)


def save_matrix(path, U) -> None:
    Path(path).write_text(json.dumps(matrix_to_dict(U)) + "\n")


def parse_sample_line(line: str, lineno: int, m: int | None = None) -> tuple[int, ...]:
    try:
        modes = sorted(int(tok) for tok in line.split(","))
    except ValueError:
        raise ParseError(f"line {lineno}: expected comma-separated integers, got {line!r}") from None
    if len(set(modes)) != len(modes):
        raise CollisionError(f"line {lineno}: repeated output mode in {line!r}")
    if modes[0] < 0 or (m is not None and modes[-1] >= m):
        raise ParseError(f"line {lineno}: mode index out of range [0, {m}) in {line!r}")
    return tuple(modes)


def iter_samples(lines, m: int | None = None):
    """Yield canonical (sorted) patterns from an iterable of text lines.

    Blank lines and ``#`` comments are skipped; the photon number is taken
    from the first record and enforced on the rest.
    """
    n = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        pattern = parse_sample_line(line, lineno, m)
        if n is None:
            n = len(pattern)
        elif len(pattern) != n:
            raise ParseError(f"line {lineno}: expected {n} detections, found {len(pattern)}")
        yield pattern


def load_samples(path, m: int | None = None) -> SampleSet:
    """Read a sample file. Without ``m`` the mode count is the largest index + 1."""
    with open(path) as fh:
        rows = list(iter_samples(fh, m))
    if not rows:
        raise ParseError(f"{path}: no samples")
    patterns = np.array(rows, dtype=np.int64)
    if m is None:
        m = int(patterns.max()) + 1
    return SampleSet(patterns, m)


def format_samples(samples: SampleSet) -> str:
    return "".join(",".join(map(str, row)) + "\n" for row in samples.patterns.tolist())


def save_samples(path, samples: SampleSet) -> None:
    Path(path).write_text(format_samples(samples))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(command: str, argv: list[str], params: dict, input_files: dict) -> dict:
    """Everything needed to re-run a command; deliberately free of timestamps."""
    return {
        "tool": "bsbench",
        "version": __version__,
        "command": command,
        "argv": list(argv),
        "params": params,
        "inputs": {name: {"path": str(p), "sha256": file_digest(p)}
                   for name, p in sorted(input_files.items()) if p is not None},
    }


def write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
