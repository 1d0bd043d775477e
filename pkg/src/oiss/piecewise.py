"""Exact piecewise cubic functions on the half line.

A :class:`PiecewiseFn` is zero on ``[0, b_0)``, a cubic polynomial on every
``[b_i, b_{i+1})`` (coefficients in the local variable ``x - b_i``) and a
constant ``tail`` on ``[b_m, inf)``.  Every operation here is closed-form:
integrals use antiderivatives, translations re-base coefficients by Taylor
shifts, nothing is ever resampled.  This matters because the supports we care
about reach lengths of order 1e12.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DivergentIntegralError, DomainError, UnsupportedDegreeError

MAX_DEGREE = 3
NCOEF = MAX_DEGREE + 1
BREAK_RTOL = 1e-15


def taylor_shift(coeffs: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Coefficients of ``p(x + delta)`` for each row of cubic coefficients."""
    c = np.asarray(coeffs, dtype=float)
    d = np.asarray(delta, dtype=float)
    if c.ndim == 1:
        c = c[None, :]
    d = np.broadcast_to(d, c.shape[:1])
    c0, c1, c2, c3 = c[:, 0], c[:, 1], c[:, 2], c[:, 3]
    out = np.empty_like(c)
    out[:, 0] = c0 + d * (c1 + d * (c2 + d * c3))
    out[:, 1] = c1 + d * (2.0 * c2 + 3.0 * d * c3)
    out[:, 2] = c2 + 3.0 * d * c3
    out[:, 3] = c3
    return out


def poly_degree(coeffs: np.ndarray) -> np.ndarray:
    """Structural degree of each row (zero polynomial counts as degree 0)."""
    c = np.atleast_2d(coeffs)
    nz = c != 0.0
    idx = np.arange(c.shape[1])
    return np.where(nz, idx, 0).max(axis=1) if c.size else np.zeros(0, dtype=int)


def _horner(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y, dtype=float)
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * y + coeffs[..., j]
    return out


def _antideriv(coeffs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Value at local coordinate ``y`` of the antiderivative vanishing at 0."""
    out = np.zeros_like(y, dtype=float)
    for j in range(coeffs.shape[-1] - 1, -1, -1):
        out = out * y + coeffs[..., j] / (j + 1)
    return out * y


def merge_breaks(arrays: Iterable[np.ndarray]) -> np.ndarray:
    """Sorted union of breakpoint arrays with near-duplicates merged."""
    allb = np.unique(np.concatenate([np.asarray(a, dtype=float).ravel() for a in arrays]))
    if allb.size <= 1:
        return allb
    gap = np.diff(allb) > BREAK_RTOL * np.maximum(1.0, np.abs(allb[1:]))
    return allb[np.concatenate([[True], gap])]


def _critical_points(coeffs: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Local critical points of each cubic inside ``(0, L)``; NaN where absent.

    Returns an ``(n, 2)`` array.
    """
    a = 3.0 * coeffs[:, 3]
    b = 2.0 * coeffs[:, 2]
    c = coeffs[:, 1]
    out = np.full((coeffs.shape[0], 2), np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lin = (a == 0.0) & (b != 0.0)
        out[lin, 0] = -c[lin] / b[lin]
        quad = a != 0.0
        disc = b * b - 4.0 * a * c
        ok = quad & (disc >= 0.0)
        sq = np.sqrt(np.where(ok, disc, 0.0))
        q = -0.5 * (b + np.where(b >= 0.0, sq, -sq))
        r1 = np.where(q != 0.0, q / a, 0.0)
        r2 = np.where(q != 0.0, c / q, 0.0)
        out[ok, 0] = r1[ok]
        out[ok, 1] = r2[ok]
    inside = (out > 0.0) & (out < lengths[:, None])
    return np.where(inside, out, np.nan)


def _extreme_values(coeffs: np.ndarray, lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-piece minimum and maximum over the closed piece (endpoint limits included)."""
    if coeffs.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    crit = _critical_points(coeffs, lengths)
    ys = np.concatenate([np.zeros((lengths.size, 1)), lengths[:, None], np.nan_to_num(crit, nan=0.0)], axis=1)
    vals = _horner(coeffs[:, None, :], ys)
    return vals.min(axis=1), vals.max(axis=1)


def _real_roots_unit(coeffs_scaled: np.ndarray) -> list[float]:
    """Real roots in the open interval (0, 1) of a cubic in ``z``."""
    c = coeffs_scaled[::-1]
    # leading terms below 1e-14 of the largest change the cubic by at most
    # that much on [0, 1]; keeping them overflows the companion matrix
    big = np.abs(c) > 1e-14 * np.max(np.abs(c), initial=0.0)
    c = c[int(np.argmax(big)):] if np.any(big) else c[:0]
    if c.size <= 1:
        return []
    roots = np.roots(c)
    scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
    out = []
    for r in roots:
        if abs(r.imag) <= 1e-10 * scale and 1e-12 < r.real < 1.0 - 1e-12:
            out.append(float(r.real))
    return sorted(out)


@dataclass(frozen=True, eq=False)
class PiecewiseFn:
    """Piecewise cubic function on ``[0, inf)`` with a constant tail.

    Parameters
    ----------
    breaks:
        Strictly increasing breakpoints ``b_0 < ... < b_m`` with ``b_0 >= 0``.
    coeffs:
        Array of shape ``(m, 4)``; row ``i`` holds ``c0..c3`` of the piece on
        ``[b_i, b_{i+1})`` in the variable ``x - b_i``.
    tail:
        Constant value on ``[b_m, inf)``.  Zero for integrable functions.
    """

    breaks: np.ndarray
    coeffs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        b = np.array(self.breaks, dtype=float).ravel()
        c = np.array(self.coeffs, dtype=float).reshape(-1, NCOEF) if np.size(self.coeffs) else np.zeros((0, NCOEF))
        if b.size == 0:
            raise DomainError("need at least one breakpoint")
        if c.shape[0] != b.size - 1:
            raise DomainError(f"{b.size} breakpoints need {b.size - 1} pieces, got {c.shape[0]}")
        if b[0] < 0 or not np.all(np.isfinite(b)):
            raise DomainError("breakpoints must be finite and nonnegative")
        if np.any(np.diff(b) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(c)) or not math.isfinite(self.tail):
            raise DomainError("coefficients must be finite")
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "tail", float(self.tail))

    # construction -----------------------------------------------------------

    @classmethod
    def zero(cls) -> "PiecewiseFn":
        return cls(np.array([0.0]), np.zeros((0, NCOEF)), 0.0)

    @classmethod
    def const(cls, value: float) -> "PiecewiseFn":
        """The constant function on the whole half line."""
        return cls(np.array([0.0]), np.zeros((0, NCOEF)), value)

    @classmethod
    def steps(cls, breaks: Sequence[float], values: Sequence[float], tail: float = 0.0) -> "PiecewiseFn":
        """Piecewise-constant function taking ``values[i]`` on ``[breaks[i], breaks[i+1])``."""
        values = np.asarray(values, dtype=float)
        c = np.zeros((values.size, NCOEF))
        c[:, 0] = values
        return cls(np.asarray(breaks, dtype=float), c, tail)

    @classmethod
    def indicator(cls, a: float, b: float, value: float = 1.0) -> "PiecewiseFn":
        """``value`` times the indicator of ``[a, b)``."""
        if not 0 <= a < b:
            raise DomainError(f"need 0 <= a < b, got [{a}, {b})")
        return cls.steps([a, b], [value])

    @classmethod
    def poly(cls, a: float, b: float, coeffs: Sequence[float]) -> "PiecewiseFn":
        """A single polynomial piece on ``[a, b)`` (local variable ``x - a``)."""
        c = np.zeros(NCOEF)
        c[: len(coeffs)] = coeffs
        if len(coeffs) > NCOEF and np.any(np.asarray(coeffs[NCOEF:]) != 0):
            raise UnsupportedDegreeError("degree above 3")
        return cls(np.array([a, b]), c[None, :])

    # basic properties -------------------------------------------------------

    @property
    def n_pieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def support_end(self) -> float:
        return float(self.breaks[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breaks)

    @property
    def degree(self) -> int:
        return int(poly_degree(self.coeffs).max()) if self.n_pieces else 0

    @property
    def is_piecewise_constant(self) -> bool:
        return self.degree == 0

    @property
    def has_zero_tail(self) -> bool:
        return self.tail == 0.0

    def __repr__(self) -> str:
        return f"PiecewiseFn(pieces={self.n_pieces}, span=[{self.breaks[0]:g}, {self.breaks[-1]:g}), degree={self.degree}, tail={self.tail:g})"

    # evaluation -------------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        out[x >= self.breaks[-1]] = self.tail
        inside = (x >= self.breaks[0]) & (x < self.breaks[-1])
        if np.any(inside):
            xi = x[inside]
            idx = np.searchsorted(self.breaks, xi, side="right") - 1
            out[inside] = _horner(self.coeffs[idx], xi - self.breaks[idx])
        return float(out[0]) if scalar else out

    def local_coeffs(self, new_breaks: np.ndarray) -> np.ndarray:
        """Coefficients of ``self`` re-based on the intervals of ``new_breaks``.

        Piece lookup uses interval midpoints so that breakpoints merged within
        the dedup tolerance never pick up the wrong polynomial.
        """
        nb = np.asarray(new_breaks, dtype=float)
        left, right = nb[:-1], nb[1:]
        mid = 0.5 * (left + right)
        out = np.zeros((left.size, NCOEF))
        out[mid >= self.breaks[-1], 0] = self.tail
        inside = (mid >= self.breaks[0]) & (mid < self.breaks[-1])
        if np.any(inside):
            idx = np.searchsorted(self.breaks, mid[inside], side="right") - 1
            out[inside] = taylor_shift(self.coeffs[idx], left[inside] - self.breaks[idx])
        return out

    def with_breaks(self, new_breaks: np.ndarray) -> "PiecewiseFn":
        """Same function on a refined breakpoint set covering ``self.breaks``."""
        nb = merge_breaks([new_breaks, self.breaks])
        return PiecewiseFn(nb, self.local_coeffs(nb), self.tail)

    # integration ------------------------------------------------------------

    def integrate(self, a: float = 0.0, b: float = math.inf) -> float:
        """Exact integral over ``[a, b]``."""
        if not (0 <= a <= b):
            raise DomainError(f"need 0 <= a <= b, got a={a}, b={b}")
        if a == b:
            return 0.0
        if math.isinf(b) and self.tail != 0.0:
            raise DivergentIntegralError("nonzero tail has infinite integral")
        left, right = self.breaks[:-1], self.breaks[1:]
        lo = np.maximum(a, left)
        hi = np.minimum(b, right)
        mask = hi > lo
        parts = []
        if np.any(mask):
            c = self.coeffs[mask]
            parts = list(_antideriv(c, hi[mask] - left[mask]) - _antideriv(c, lo[mask] - left[mask]))
        if self.tail != 0.0 and b > self.breaks[-1]:
            parts.append(self.tail * (b - max(a, self.breaks[-1])))
        return math.fsum(parts)

    def piece_integrals(self) -> np.ndarray:
        return _antideriv(self.coeffs, self.lengths)

    def antiderivative(self) -> "PiecewiseFn":
        """``F(x) = int_0^x f``; needs a zero tail and degree at most 2."""
        if self.tail != 0.0:
            raise DivergentIntegralError("antiderivative of a nonzero tail is unbounded")
        if self.degree > MAX_DEGREE - 1:
            raise UnsupportedDegreeError("antiderivative would exceed degree 3")
        ints = self.piece_integrals()
        offsets = np.concatenate([[0.0], np.cumsum(ints)])
        c = np.zeros_like(self.coeffs)
        c[:, 0] = offsets[:-1]
        for j in range(MAX_DEGREE):
            c[:, j + 1] = self.coeffs[:, j] / (j + 1)
        return PiecewiseFn(self.breaks, c, float(offsets[-1]))

    def derivative(self) -> "PiecewiseFn":
        c = np.zeros_like(self.coeffs)
        for j in range(1, NCOEF):
            c[:, j - 1] = j * self.coeffs[:, j]
        return PiecewiseFn(self.breaks, c, 0.0)

    # transformations --------------------------------------------------------

    def affine(self, scale: float, offset: float) -> "PiecewiseFn":
        """``x -> f(scale * x + offset)`` for ``scale > 0`` and ``offset >= 0``."""
        if scale <= 0 or offset < 0 or not (math.isfinite(scale) and math.isfinite(offset)):
            raise DomainError("affine map needs scale > 0 and offset >= 0")
        nb = (self.breaks - offset) / scale
        c = self.coeffs * scale ** np.arange(NCOEF)
        keep = nb[1:] > 0
        if not np.any(keep):
            return PiecewiseFn.const(self.tail) if self.tail else PiecewiseFn.zero()
        first = int(np.argmax(keep))
        nb = nb[first:].copy()
        c = c[first:].copy()
        if nb[0] < 0:
            c[0] = taylor_shift(c[0], -nb[0])[0]
            nb[0] = 0.0
        return PiecewiseFn(nb, c, self.tail)

    def reflect(self, t: float) -> "PiecewiseFn":
        """``x -> f(t - x)`` on ``[0, t]``, zero afterwards."""
        if not t > 0:
            raise DomainError("reflection needs t > 0")
        f = self.restrict(0.0, t)
        if f.n_pieces == 0:
            return PiecewiseFn.zero()
        L = f.lengths
        c = taylor_shift(f.coeffs, L) * (-1.0) ** np.arange(NCOEF)
        nb = t - f.breaks[::-1]
        nb[0] = max(nb[0], 0.0)
        return PiecewiseFn(nb, c[::-1], 0.0).trimmed()

    def shift_left(self, t: float) -> "PiecewiseFn":
        """Left translation ``x -> f(x + t)``."""
        if t < 0:
            raise DomainError("translation time must be nonnegative")
        if t == 0:
            return self
        nb = self.breaks - t
        keep = nb[1:] > 0
        if not np.any(keep):
            return PiecewiseFn.const(self.tail) if self.tail else PiecewiseFn.zero()
        first = int(np.argmax(keep))
        nb = nb[first:].copy()
        c = self.coeffs[first:].copy()
        if nb[0] < 0:
            c[0] = taylor_shift(c[0], -nb[0])[0]
            nb[0] = 0.0
        return PiecewiseFn(nb, c, self.tail)

    def restrict(self, a: float = 0.0, b: float = math.inf) -> "PiecewiseFn":
        """``f`` times the indicator of ``[a, b)``."""
        if not 0 <= a < b:
            if a == b:
                return PiecewiseFn.zero()
            raise DomainError(f"need 0 <= a < b, got [{a}, {b})")
        pts = [self.breaks, [a]] + ([[b]] if math.isfinite(b) else [])
        nb = merge_breaks(pts)
        if math.isfinite(b) and nb[-1] < b:
            nb = np.append(nb, b)
        c = self.local_coeffs(nb)
        left = nb[:-1]
        right = nb[1:]
        c[(right <= a) | (left >= b)] = 0.0
        tail = self.tail if math.isinf(b) else 0.0
        return PiecewiseFn(nb, c, tail).trimmed()

    def trimmed(self) -> "PiecewiseFn":
        """Drop leading zero pieces and trailing pieces equal to the tail."""
        c = self.coeffs
        if c.shape[0] == 0:
            return self
        lead_zero = np.all(c == 0.0, axis=1)
        trail = np.all(c[:, 1:] == 0.0, axis=1) & (c[:, 0] == self.tail)
        lo, hi = 0, c.shape[0]
        while lo < hi and lead_zero[lo]:
            lo += 1
        while hi > lo and trail[hi - 1]:
            hi -= 1
        if lo == 0 and hi == c.shape[0]:
            return self
        if lo == hi:
            return PiecewiseFn.const(self.tail) if self.tail else PiecewiseFn.zero()
        return PiecewiseFn(self.breaks[lo : hi + 1], c[lo:hi], self.tail)

    # algebra ----------------------------------------------------------------

    def multiply(self, other: "PiecewiseFn") -> "PiecewiseFn":
        nb = merge_breaks([self.breaks, other.breaks])
        a = self.local_coeffs(nb)
        b = other.local_coeffs(nb)
        deg = poly_degree(a) + poly_degree(b)
        if deg.size and deg.max() > MAX_DEGREE:
            raise UnsupportedDegreeError(f"product has degree {int(deg.max())} > 3")
        c = np.zeros_like(a)
        for i in range(NCOEF):
            for j in range(NCOEF - i):
                c[:, i + j] += a[:, i] * b[:, j]
        return PiecewiseFn(nb, c, self.tail * other.tail)

    def scale(self, factor: float) -> "PiecewiseFn":
        return PiecewiseFn(self.breaks, self.coeffs * factor, self.tail * factor)

    def __mul__(self, other):
        if isinstance(other, PiecewiseFn):
            return self.multiply(other)
        return self.scale(float(other))

    __rmul__ = __mul__

    def __truediv__(self, other: float) -> "PiecewiseFn":
        return self.scale(1.0 / float(other))

    def __add__(self, other):
        if not isinstance(other, PiecewiseFn):
            return NotImplemented
        return linear_combination([self, other], [1.0, 1.0])

    def __sub__(self, other):
        if not isinstance(other, PiecewiseFn):
            return NotImplemented
        return linear_combination([self, other], [1.0, -1.0])

    def __neg__(self):
        return self.scale(-1.0)

    # sign-aware quantities ------------------------------------------------------

    def sign_split(self) -> tuple[np.ndarray, np.ndarray]:
        """Breakpoints and coefficients refined at interior real roots.

        On every returned piece the polynomial has constant sign.
        """
        nb = [self.breaks[0]]
        cs = []
        for i in range(self.n_pieces):
            c = self.coeffs[i]
            L = self.breaks[i + 1] - self.breaks[i]
            cuts = []
            if poly_degree(c)[0] > 0:
                cuts = [z * L for z in _real_roots_unit(c * L ** np.arange(NCOEF))]
            start = 0.0
            for y in cuts + [L]:
                if y - start <= BREAK_RTOL * max(1.0, self.breaks[i] + y):
                    continue
                cs.append(taylor_shift(c, start)[0])
                nb.append(self.breaks[i] + y)
                start = y
            if start < L:  # last sliver swallowed by dedup
                nb[-1] = self.breaks[i + 1]
        nb = np.asarray(nb)
        cs = np.asarray(cs).reshape(-1, NCOEF)
        return nb, cs

    def l1_norm(self, a: float = 0.0, b: float = math.inf) -> float:
        """Exact ``int_a^b |f|`` (pieces split at their real roots)."""
        f = self if (a == 0.0 and math.isinf(b)) else self.restrict(a, b)
        if math.isinf(b) and f.tail != 0.0:
            raise DivergentIntegralError("nonzero tail has infinite L1 norm")
        if f.n_pieces == 0:
            return 0.0
        L = f.lengths
        lo, hi = _extreme_values(f.coeffs, L)
        fixed = (lo >= 0.0) | (hi <= 0.0)
        terms = [np.abs(_antideriv(f.coeffs[fixed], L[fixed]))]
        if not np.all(fixed):
            idx = np.flatnonzero(~fixed)
            for i in idx:
                sub = PiecewiseFn(f.breaks[i : i + 2], f.coeffs[i : i + 1])
                nb, cs = sub.sign_split()
                terms.append(np.abs(_antideriv(cs, np.diff(nb))))
        return math.fsum(np.concatenate(terms))

    def sup_abs(self) -> float:
        """Supremum of ``|f|`` (endpoint limits and interior critical points)."""
        lo, hi = _extreme_values(self.coeffs, self.lengths)
        vals = np.concatenate([[abs(self.tail)], np.abs(lo), np.abs(hi)])
        return float(np.max(vals))

    def min_value(self) -> float:
        """Infimum of ``f`` over ``[0, inf)``."""
        lo, _ = _extreme_values(self.coeffs, self.lengths)
        vals = np.concatenate([[self.tail], lo, [0.0] if self.breaks[0] > 0 else []])
        return float(np.min(vals))

    def allclose(self, other: "PiecewiseFn", rtol: float = 1e-12, atol: float = 1e-12) -> bool:
        """Pointwise comparison on both breakpoint sets and piece midpoints."""
        nb = merge_breaks([self.breaks, other.breaks])
        probe = np.concatenate([nb, 0.5 * (nb[:-1] + nb[1:]), [nb[-1] + 1.0]])
        if not math.isclose(self.tail, other.tail, rel_tol=rtol, abs_tol=atol):
            return False
        return bool(np.allclose(self(probe), other(probe), rtol=rtol, atol=atol))


def linear_combination(fns: Sequence[PiecewiseFn], weights: Sequence[float]) -> PiecewiseFn:
    """``sum_i weights[i] * fns[i]`` on the merged breakpoint set."""
    if len(fns) == 0:
        return PiecewiseFn.zero()
    nb = merge_breaks([f.breaks for f in fns])
    c = np.zeros((nb.size - 1, NCOEF))
    tail = 0.0
    for f, w in zip(fns, weights):
        if w == 0.0:
            continue
        c += w * f.local_coeffs(nb)
        tail += w * f.tail
    return PiecewiseFn(nb, c, tail)


def _forward_difference(c: np.ndarray, alpha: np.ndarray, beta: np.ndarray, gap: np.ndarray) -> np.ndarray:
    """Coefficients in ``y`` of ``p(alpha + y) - p(beta + y)`` with ``gap = alpha - beta``.

    The constant terms of the two shifted polynomials never meet, so the
    result keeps full relative accuracy however close ``alpha`` and ``beta``
    are.
    """
    s1 = np.ones_like(alpha)
    s2 = alpha + beta
    s3 = alpha * alpha + alpha * beta + beta * beta
    out = np.empty_like(c)
    out[:, 0] = gap * (c[:, 1] * s1 + c[:, 2] * s2 + c[:, 3] * s3)
    out[:, 1] = gap * (2.0 * c[:, 2] * s1 + 3.0 * c[:, 3] * s2)
    out[:, 2] = gap * (3.0 * c[:, 3] * s1)
    out[:, 3] = 0.0
    return out


def _node_sums(f: PiecewiseFn) -> tuple[np.ndarray, np.ndarray]:
    """Prefix sums of per-piece drops ``f(x_k) - f(x_{k+1}^-)`` and node jumps, memoized on ``f``."""
    cached = f.__dict__.get("_node_sums")
    if cached is None:
        ends = _horner(f.coeffs, f.lengths)
        drop = -(ends - f.coeffs[:, 0])
        jump = ends - np.append(f.coeffs[1:, 0], f.tail)  # f(x_{k+1}^-) - f(x_{k+1})
        cached = (np.concatenate([[0.0], np.cumsum(drop)]), np.concatenate([[0.0], np.cumsum(jump)]))
        object.__setattr__(f, "_node_sums", cached)
    return cached


def shift_difference(f: PiecewiseFn, a: float, b: float) -> PiecewiseFn:
    """``r -> f(r + a) - f(r + b)`` for ``0 <= a < b``, without cancellation.

    When ``b - a`` is small next to the piece lengths of ``f``, evaluating
    the two translates separately and subtracting loses most significant
    digits, and over pieces of length ~1e12 that loss integrates to visible
    errors.  Here each output piece is assembled from differences taken
    inside single pieces of ``f`` plus exact per-piece drops.
    """
    if not 0.0 <= a < b:
        raise DomainError(f"need 0 <= a < b, got a={a}, b={b}")
    if f.breaks[0] > 0.0:
        f = PiecewiseFn(np.append(0.0, f.breaks), np.vstack([np.zeros((1, NCOEF)), f.coeffs]), f.tail)
    x = f.breaks
    end = x[-1] - a
    if end <= 0.0:
        return PiecewiseFn.zero()
    nb = merge_breaks([x - a, x - b])
    nb = np.concatenate([[0.0], nb[(nb > 0.0) & (nb < end)], [end]])
    p, q = nb[:-1], nb[1:]
    mid = 0.5 * (p + q)
    m = f.n_pieces
    # piece m is the constant tail
    ext = np.vstack([f.coeffs, [[f.tail, 0.0, 0.0, 0.0]]])
    ext_start = x
    i = np.searchsorted(x, mid + a, side="right") - 1
    j = np.searchsorted(x, mid + b, side="right") - 1
    ci, cj = ext[i], ext[j]
    alpha = p + a - ext_start[i]
    beta = p + b - ext_start[j]
    out = np.zeros((p.size, NCOEF))
    same = i == j
    if np.any(same):
        out[same] = _forward_difference(ci[same], alpha[same], beta[same], np.full(int(same.sum()), a - b))
    cross = ~same
    if np.any(cross):
        ii, jj = i[cross], j[cross]
        Li = f.lengths[ii]
        # f(r+a) - f(x_{i+1}^-) as a polynomial in y
        q = taylor_shift(ci[cross], Li)
        q[:, 0] = 0.0
        head = taylor_shift(q, (p[cross] + a) - x[ii + 1])
        # f(x_j) - f(r+b): the constant c0 of piece j cancels analytically
        tail_part = taylor_shift(np.column_stack([np.zeros(ii.size), cj[cross][:, 1:]]), beta[cross])
        # full drops of the pieces strictly between, plus jumps at nodes
        cum_drop, cum_jump = _node_sums(f)
        const = (cum_drop[jj] - cum_drop[ii + 1]) + (cum_jump[jj] - cum_jump[ii])
        block = head - tail_part
        block[:, 0] += const
        out[cross] = block
    return PiecewiseFn(nb, out, 0.0).trimmed()


def compose_young(phi, f: PiecewiseFn) -> PiecewiseFn:
    """``x -> Phi(f(x))`` for piecewise-constant ``f`` (the modular integrand).

    ``phi`` is any callable Young function; it is applied to the absolute
    value of each piece.
    """
    if not f.is_piecewise_constant:
        raise UnsupportedDegreeError("composition with Phi needs a piecewise-constant function")
    c = np.zeros_like(f.coeffs)
    if f.n_pieces:
        c[:, 0] = np.asarray(phi(np.abs(f.coeffs[:, 0])), dtype=float)
    tail = float(np.asarray(phi(np.array([abs(f.tail)])))[0]) if f.tail else 0.0
    return PiecewiseFn(f.breaks, c, tail)
