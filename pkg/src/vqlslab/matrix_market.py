"""Minimal Matrix Market (coordinate format) reader/writer and plain vector files."""
from __future__ import annotations

from pathlib import Path

import numpy as np

FIELDS = ("real", "integer", "complex", "pattern")
SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


class MatrixMarketError(ValueError):
    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def read_matrix_market(path) -> np.ndarray:
    """Read a coordinate-format file into a dense array (symmetric storage expanded)."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket" or head[1].lower() != "matrix":
        raise MatrixMarketError("bad banner, expected '%%MatrixMarket matrix coordinate <field> <symmetry>'", 1)
    fmt, fld, sym = (h.lower() for h in head[2:])
    if fmt != "coordinate":
        raise MatrixMarketError(f"unsupported format {fmt!r} (only 'coordinate')", 1)
    if fld not in FIELDS:
        raise MatrixMarketError(f"unknown field {fld!r}", 1)
    if sym not in SYMMETRIES:
        raise MatrixMarketError(f"unknown symmetry {sym!r}", 1)

    it = ((k + 1, ln) for k, ln in enumerate(lines) if k > 0 and ln.strip() and not ln.lstrip().startswith("%"))
    try:
        lineno, size_line = next(it)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(lines)) from None
    try:
        rows, cols, nnz = (int(x) for x in size_line.split())
    except ValueError:
        raise MatrixMarketError(f"bad size line {size_line!r}", lineno) from None

    dtype = complex if fld == "complex" else float
    out = np.zeros((rows, cols), dtype=dtype)
    want = {"pattern": 2, "complex": 4}.get(fld, 3)
    count = 0
    for lineno, ln in it:
        parts = ln.split()
        if len(parts) != want:
            raise MatrixMarketError(f"expected {want} fields, got {len(parts)}", lineno)
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
            if fld == "pattern":
                v = 1.0
            elif fld == "complex":
                v = complex(float(parts[2]), float(parts[3]))
            else:
                v = float(parts[2])
        except ValueError:
            raise MatrixMarketError(f"unparseable entry {ln!r}", lineno) from None
        if not (0 <= i < rows and 0 <= j < cols):
            raise MatrixMarketError(f"index ({i + 1}, {j + 1}) outside {rows}x{cols}", lineno)
        out[i, j] = v
        if i != j:
            if sym == "symmetric":
                out[j, i] = v
            elif sym == "skew-symmetric":
                out[j, i] = -v
            elif sym == "hermitian":
                out[j, i] = np.conj(v)
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"header announces {nnz} entries, found {count}", len(lines))
    return out


def write_matrix_market(path, a: np.ndarray, symmetric: bool = False, comment: str | None = None) -> None:
    """Write a dense array in coordinate format, skipping zeros.

    With ``symmetric=True`` only the lower triangle is stored (the matrix must be symmetric).
    """
    a = np.asarray(a)
    cplx = np.iscomplexobj(a) and np.any(a.imag != 0)
    if symmetric and not np.array_equal(a, a.T):
        raise ValueError("matrix is not symmetric")
    rows, cols = a.shape
    ii, jj = np.nonzero(a)
    if symmetric:
        keep = ii >= jj
        ii, jj = ii[keep], jj[keep]
    lines = [f"%%MatrixMarket matrix coordinate {'complex' if cplx else 'real'} {'symmetric' if symmetric else 'general'}"]
    if comment:
        lines += [f"% {ln}" for ln in comment.splitlines()]
    lines.append(f"{rows} {cols} {len(ii)}")
    for i, j in zip(ii, jj):
        v = a[i, j]
        val = f"{v.real!r} {v.imag!r}" if cplx else repr(float(np.real(v)))
        lines.append(f"{i + 1} {j + 1} {val}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_vector(path) -> np.ndarray:
    """One real value per line; blank lines and ``%``/``#`` comments ignored."""
    vals = []
    with open(path) as fh:
        for lineno, ln in enumerate(fh, start=1):
            s = ln.strip()
            if not s or s[0] in "%#":
                continue
            try:
                vals.append(float(s))
            except ValueError:
                raise MatrixMarketError(f"not a number: {s!r}", lineno) from None
    return np.array(vals)


def write_vector(path, v: np.ndarray) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v).ravel()))


def load_matrix_market(path, rhs_path=None) -> tuple[np.ndarray, np.ndarray | None]:
    """Matrix plus optional right-hand side from a companion vector file."""
    a = read_matrix_market(path)
    b = read_vector(rhs_path) if rhs_path is not None else None
    if b is not None and b.size != a.shape[0]:
        raise ValueError(f"rhs has {b.size} entries, matrix has {a.shape[0]} rows")
    return a, b
