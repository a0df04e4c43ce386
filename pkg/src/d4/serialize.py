"""On-disk formats for matrices and fitted models.

Matrix files are either CSV (optional header, decimal floats) or the
binary layout: magic bytes "D4MAT1\\0\\0", u64 little-endian row and
column counts, then row-major 8-byte little-endian IEEE-754 doubles.
Model files are JSON with basis floats printed to 17 significant digits,
enough to round-trip doubles exactly.

Writers go through a temp file in the target directory and rename on
success, so failures never leave partial output behind.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile

import numpy as np

from . import __version__
from .core import D4Model, IterationDiagnostics
from .errors import FileFormatError, MalformedHeaderError, TruncatedRecordError
from .linalg import OrthonormalBasis

MATRIX_MAGIC = b"D4MAT1\x00\x00"


def atomic_write_bytes(path, data: bytes) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".d4tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def matrix_to_binary(X) -> bytes:
    A = np.ascontiguousarray(np.asarray(X, dtype=float))
    if A.ndim != 2:
        raise FileFormatError("binary matrix files hold 2-D matrices")
    header = MATRIX_MAGIC + struct.pack("<QQ", A.shape[0], A.shape[1])
    return header + A.astype("<f8").tobytes()


def matrix_from_binary(blob: bytes, name: str = "matrix") -> np.ndarray:
    if blob[: len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise MalformedHeaderError(f"{name}: missing D4MAT1 magic bytes")
    offset = len(MATRIX_MAGIC)
    if len(blob) < offset + 16:
        raise MalformedHeaderError(f"{name}: header truncated")
    rows, cols = struct.unpack_from("<QQ", blob, offset)
    offset += 16
    expected = rows * cols * 8
    payload = blob[offset:]
    if len(payload) != expected:
        raise TruncatedRecordError(
            f"{name}: declared {rows} x {cols} needs {expected} payload bytes, "
            f"found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f8").astype(float)
    return data.reshape(rows, cols)


def matrix_to_csv(X) -> str:
    A = np.asarray(X, dtype=float)
    if A.ndim != 2:
        raise FileFormatError("CSV matrix files hold 2-D matrices")
    lines = [",".join(repr(v) for v in row.tolist()) for row in A]
    return "\n".join(lines) + ("\n" if lines else "")


def matrix_from_csv(text: str, name: str = "matrix") -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            values = [float(f) for f in fields]
        except ValueError:
            if lineno == 1 and not rows:
                continue  # header line
            raise FileFormatError(f"{name}: row {lineno}: non-numeric field") from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise FileFormatError(
                f"{name}: row {lineno}: expected {width} fields, got {len(values)}"
            )
        rows.append(values)
    if not rows:
        raise FileFormatError(f"{name}: no data rows")
    return np.array(rows, dtype=float)


def save_matrix(X, path, fmt: str) -> None:
    """Write a matrix file; fmt is "bin" or "csv"."""
    if fmt == "bin":
        atomic_write_bytes(path, matrix_to_binary(X))
    elif fmt == "csv":
        atomic_write_text(path, matrix_to_csv(X))
    else:
        raise ValueError(f"unknown matrix format {fmt!r}")


def load_matrix(path) -> tuple[np.ndarray, str]:
    """Read a matrix file, sniffing binary magic; returns (matrix, fmt)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MATRIX_MAGIC)] == MATRIX_MAGIC:
        return matrix_from_binary(blob, str(path)), "bin"
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise FileFormatError(f"{path}: neither D4MAT1 binary nor decodable CSV") from None
    return matrix_from_csv(text, str(path)), "csv"


def load_targets(path) -> tuple[np.ndarray, str]:
    """Read a length-n target vector from a one-column matrix file."""
    matrix, fmt = load_matrix(path)
    if matrix.ndim == 2 and matrix.shape[1] == 1:
        return matrix[:, 0], fmt
    if matrix.ndim == 2 and matrix.shape[0] == 1:
        return matrix[0, :], fmt
    raise FileFormatError(f"{path}: targets must form a single column, got {matrix.shape}")


def _fmt17(value: float) -> str:
    return format(float(value), ".17g")


def model_to_json(model: D4Model, config_echo: dict | None = None) -> str:
    """Serialize a model; basis floats carry 17 significant digits."""
    lines = ["{"]
    lines.append('  "format": "d4-model",')
    lines.append(f'  "tool_version": {json.dumps(__version__)},')
    lines.append(f'  "dim": {model.basis.dim},')
    lines.append(f'  "iterations": {model.basis.size},')
    lines.append(f'  "status": {json.dumps(model.status)},')
    diag_rows = []
    for d in model.diagnostics:
        val = "null" if d.validation_metric is None else _fmt17(d.validation_metric)
        diag_rows.append(
            f'    [{d.iteration}, {_fmt17(d.train_metric)}, {val}]'
        )
    lines.append('  "diagnostics": [' + ("\n" + ",\n".join(diag_rows) + "\n  " if diag_rows else "") + "],")
    lines.append(f'  "config": {json.dumps(config_echo or {}, sort_keys=True)},')
    basis_rows = []
    for row in model.basis.vectors:
        basis_rows.append("    [" + ", ".join(_fmt17(v) for v in row.tolist()) + "]")
    lines.append('  "basis": [' + ("\n" + ",\n".join(basis_rows) + "\n  " if basis_rows else "") + "]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_model(model: D4Model, path, config_echo: dict | None = None) -> None:
    atomic_write_text(path, model_to_json(model, config_echo))


def load_model(path) -> tuple[D4Model, dict]:
    """Read a model file back; validates basis invariants on load."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON: {exc}") from None
    if doc.get("format") != "d4-model":
        raise MalformedHeaderError(f"{path}: not a d4 model file")
    try:
        dim = int(doc["dim"])
        iterations = int(doc["iterations"])
        basis_rows = doc["basis"]
        status = str(doc.get("status", "completed"))
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed model document: {exc}") from None
    if len(basis_rows) != iterations:
        raise FileFormatError(
            f"{path}: declared {iterations} iterations but {len(basis_rows)} basis rows"
        )
    if basis_rows:
        vectors = np.array(basis_rows, dtype=float)
        if vectors.ndim != 2 or vectors.shape[1] != dim:
            raise FileFormatError(f"{path}: basis rows do not match dim {dim}")
    else:
        vectors = None
    basis = OrthonormalBasis(dim, vectors)
    basis.validate()
    diagnostics = []
    for row in doc.get("diagnostics", []):
        it, train, val = row
        diagnostics.append(
            IterationDiagnostics(int(it), float(train), None if val is None else float(val))
        )
    model = D4Model(basis=basis, diagnostics=tuple(diagnostics), status=status)
    return model, dict(doc.get("config", {}))
