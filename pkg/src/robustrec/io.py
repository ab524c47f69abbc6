"""Matrix Market matrices and masks, TOML configs and CSV reports.

Dense matrices are written in Matrix Market ``array`` format and boolean
masks in ``coordinate pattern`` format. Reals are printed with 17
significant digits, which round-trips every double exactly. All writers
produce identical bytes for identical inputs.
"""
from __future__ import annotations

import csv
import math

import numpy as np

from .config import load_config
from .errors import InvalidArgument, ParseError

__all__ = [
    "write_matrix",
    "read_matrix",
    "write_mask",
    "read_mask",
    "read_config",
    "write_report",
    "format_value",
    "REPORT_COLUMNS",
]

REPORT_COLUMNS = ("experiment", "cell", "trial", "seed", "success", "value", "iterations", "runtime_ms", "errata")

_BANNER = "%%MatrixMarket"


def _fmt(x):
    return "%.17g" % x


def write_matrix(path, M):
    """Write a real matrix (or a vector, as one column) in array format."""
    M = np.asarray(M)
    if M.dtype == bool:
        return write_mask(path, M)
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise InvalidArgument(f"expected a 1-D or 2-D array, got {M.ndim} dimensions")
    if not np.all(np.isfinite(M)):
        raise InvalidArgument("matrix has non-finite entries")
    lines = [f"{_BANNER} matrix array real general", f"{M.shape[0]} {M.shape[1]}"]
    lines.extend(_fmt(v) for v in M.ravel(order="F"))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_mask(path, mask):
    """Write a boolean mask in coordinate pattern format (1-based, column-major order)."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise InvalidArgument("mask must be 2-D")
    cols, rows = np.nonzero(mask.T)
    lines = [f"{_BANNER} matrix coordinate pattern general", f"{mask.shape[0]} {mask.shape[1]} {rows.size}"]
    lines.extend(f"{i + 1} {j + 1}" for i, j in zip(rows, cols))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _tokens(path):
    """Yield ``(lineno, line)`` for the non-comment, non-blank lines after the banner."""
    try:
        fh = open(path, encoding="ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not ASCII: {exc}", path=path) from exc
    with fh:
        try:
            lines = fh.read().splitlines()
        except UnicodeDecodeError as exc:
            raise ParseError(f"not ASCII: {exc}", path=path) from exc
    if not lines:
        raise ParseError("empty file", 1, path)
    yield 1, lines[0]
    for k, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if s and not s.startswith("%"):
            yield k, s


def _parse_banner(lineno, line, path):
    parts = line.split()
    if len(parts) != 5 or parts[0] != _BANNER or parts[1].lower() != "matrix":
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", lineno, path)
    fmt, fld, sym = (p.lower() for p in parts[2:])
    if fmt not in ("array", "coordinate"):
        raise ParseError(f"unsupported format {fmt!r}", lineno, path)
    if fld not in ("real", "integer", "double", "pattern"):
        raise ParseError(f"unsupported field {fld!r}", lineno, path)
    if fld == "pattern" and fmt == "array":
        raise ParseError("pattern field requires coordinate format", lineno, path)
    if sym not in ("general", "symmetric"):
        raise ParseError(f"unsupported symmetry {sym!r}", lineno, path)
    return fmt, fld, sym


def _ints(lineno, line, count, path):
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} integers, got {line!r}", lineno, path)
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise ParseError(f"expected integers, got {line!r}", lineno, path) from None
    if any(v < 0 for v in vals):
        raise ParseError("negative size", lineno, path)
    return vals


def _real(lineno, text, path):
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"bad number {text!r}", lineno, path) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", lineno, path)
    return v


def read_matrix(path):
    """Read a Matrix Market file.

    Returns a float array for real/integer data and a boolean array for
    pattern files. Symmetric files are expanded.
    """
    it = _tokens(path)
    lineno, banner = next(it)
    fmt, fld, sym = _parse_banner(lineno, banner, path)
    try:
        lineno, size_line = next(it)
    except StopIteration:
        raise ParseError("missing size line", lineno + 1, path) from None

    if fmt == "array":
        nr, nc = _ints(lineno, size_line, 2, path)
        if sym == "symmetric" and nr != nc:
            raise ParseError("symmetric matrix must be square", lineno, path)
        expected = nr * nc if sym == "general" else nr * (nr + 1) // 2
        vals = []
        for lineno, line in it:
            vals.extend(_real(lineno, t, path) for t in line.split())
            if len(vals) > expected:
                raise ParseError(f"more than {expected} values", lineno, path)
        if len(vals) != expected:
            raise ParseError(f"expected {expected} values, found {len(vals)}", lineno + 1, path)
        if sym == "general":
            return np.array(vals, dtype=float).reshape((nr, nc), order="F")
        M = np.zeros((nr, nr))
        k = 0
        for j in range(nr):
            for i in range(j, nr):
                M[i, j] = M[j, i] = vals[k]
                k += 1
        return M

    nr, nc, nnz = _ints(lineno, size_line, 3, path)
    pattern = fld == "pattern"
    M = np.zeros((nr, nc), dtype=bool if pattern else float)
    count = 0
    for lineno, line in it:
        parts = line.split()
        if len(parts) != (2 if pattern else 3):
            raise ParseError(f"bad entry line {line!r}", lineno, path)
        i, j = _ints(lineno, " ".join(parts[:2]), 2, path)
        if not (1 <= i <= nr and 1 <= j <= nc):
            raise ParseError(f"index ({i}, {j}) outside {nr} x {nc}", lineno, path)
        v = True if pattern else _real(lineno, parts[2], path)
        M[i - 1, j - 1] = v
        if sym == "symmetric":
            M[j - 1, i - 1] = v
        count += 1
        if count > nnz:
            raise ParseError(f"more than {nnz} entries", lineno, path)
    if count != nnz:
        raise ParseError(f"expected {nnz} entries, found {count}", lineno + 1, path)
    return M


def read_mask(path):
    """Read a mask; any file whose nonzero entries mark the mask is accepted."""
    M = read_matrix(path)
    return M if M.dtype == bool else M != 0


def read_config(path):
    """Alias of :func:`robustrec.config.load_config`."""
    return load_config(path)


def format_value(v):
    """Locale-free CSV cell text: floats as ``%.9e``, bools as 0/1, ``None`` as empty."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9e" % v
    return str(v)


def write_report(path, rows, columns=REPORT_COLUMNS):
    """Write rows (mappings keyed by column, or sequences) as CSV with LF line endings.

    ``path`` may also be an open text stream.
    """
    columns = tuple(columns)
    if hasattr(path, "write"):
        _write_rows(path, rows, columns)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _write_rows(fh, rows, columns)


def _write_rows(fh, rows, columns):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        if isinstance(row, dict):
            extra = set(row) - set(columns)
            if extra:
                raise InvalidArgument(f"row has unknown columns {sorted(extra)}")
            values = [row.get(c) for c in columns]
        else:
            values = list(row)
            if len(values) != len(columns):
                raise InvalidArgument(f"row has {len(values)} fields, expected {len(columns)}")
        w.writerow([format_value(v) for v in values])
