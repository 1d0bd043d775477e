"""CSV readers and writers shared by the CLI and the scripts."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DomainError
from .piecewise import NCOEF, PiecewiseFn

PathLike = Union[str, Path]
PIECEWISE_HEADER = ("b", "c0", "c1", "c2", "c3")


def fmt(x: float) -> str:
    """Round-trippable, platform-independent number formatting."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _rows(path: PathLike) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DomainError(f"{path}: empty file")
    return [h.strip().lower() for h in rows[0]], rows[1:]


def read_piecewise(path: PathLike) -> PiecewiseFn:
    """Read a piecewise cubic from CSV with header ``b,c0,c1,c2,c3``.

    Row ``i`` gives the piece starting at ``b_i``; the last row starts the
    constant tail and only its ``c0`` is used.
    """
    header, rows = _rows(path)
    if tuple(header[: len(PIECEWISE_HEADER)]) != PIECEWISE_HEADER and tuple(header[:2]) != ("b", "c0"):
        raise DomainError(f"{path}: expected header {','.join(PIECEWISE_HEADER)}")
    try:
        data = np.array([[float(v) for v in r] + [0.0] * (1 + NCOEF - len(r)) for r in rows])
    except ValueError as exc:
        raise DomainError(f"{path}: {exc}") from None
    if data.shape[0] < 1:
        raise DomainError(f"{path}: no rows")
    return PiecewiseFn(data[:, 0], data[:-1, 1 : 1 + NCOEF], float(data[-1, 1]))


def write_piecewise(f: PiecewiseFn, out) -> None:
    """Inverse of :func:`read_piecewise`; ``out`` is a path or a text stream."""
    lines = [",".join(PIECEWISE_HEADER)]
    lines += [",".join(fmt(v) for v in (b, *c)) for b, c in zip(f.breaks[:-1], f.coeffs)]
    lines.append(",".join(fmt(v) for v in (f.breaks[-1], f.tail, 0.0, 0.0, 0.0)))
    text = "\n".join(lines) + "\n"
    if isinstance(out, (str, Path)):
        Path(out).write_text(text)
    else:
        out.write(text)


def read_diagonal(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and input weights from CSV with header ``lambda,b``."""
    header, rows = _rows(path)
    if tuple(header[:2]) != ("lambda", "b"):
        raise DomainError(f"{path}: expected header lambda,b")
    try:
        data = np.array([[float(r[0]), float(r[1])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise DomainError(f"{path}: {exc}") from None
    if data.size == 0:
        raise DomainError(f"{path}: no modes")
    return data[:, 0], data[:, 1]


def parse_grid(spec: str, allow_zero: bool = False):
    """``log:A:B:N``, ``lin:A:B:N``, ``breakpoints``, ``blocks`` or a comma list.

    Numeric grids must be strictly increasing and positive (nonnegative with
    ``allow_zero``).  The named grids are returned as strings for the caller
    to resolve.
    """
    s = spec.strip()
    if s in ("breakpoints", "blocks"):
        return s
    kind, _, rest = s.partition(":")
    try:
        if kind in ("log", "lin"):
            a, b, n = rest.split(":")
            a, b, n = float(a), float(b), int(n)
            if n < 1:
                raise ValueError("N must be positive")
            if kind == "log":
                if a <= 0 or b <= 0:
                    raise ValueError("log grid needs positive endpoints")
                g = np.logspace(math.log10(a), math.log10(b), n)
            else:
                g = np.linspace(a, b, n)
        else:
            g = np.array([float(v) for v in s.split(",") if v.strip()])
        if g.size == 0:
            raise ValueError("empty grid")
        if np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
            raise ValueError("grid must be strictly increasing and finite")
        if np.any(g < 0) or (not allow_zero and np.any(g == 0)):
            raise ValueError("grid must be positive")
        return g
    except ValueError as exc:
        raise DomainError(f"bad grid {spec!r}: {exc}") from None


def write_table(rows: Sequence[Mapping[str, object]], columns: Sequence[str], out=None) -> str:
    """Render rows as CSV with fixed column order; also write to ``out`` if given."""
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for r in rows:
        buf.write(",".join(fmt(r[c]) if isinstance(r[c], (int, float, np.floating)) and not isinstance(r[c], bool)
                           else str(r[c]) for c in columns) + "\n")
    text = buf.getvalue()
    if out is not None:
        if isinstance(out, (str, Path)):
            Path(out).write_text(text)
        else:
            out.write(text)
    return text


def read_config(path: PathLike) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg
