"""Modulars, Luxemburg norms and L^p norms of piecewise functions.

On piecewise-constant data every modular is a finite sum and therefore exact;
the only error in a Luxemburg norm is then the bisection bracket.  Cubic
pieces (needed for the counterexample's state-norm profiles) are handled
exactly for integer powers and by Gauss-Legendre quadrature otherwise.

Vector-valued inputs enter only through ``s -> ||u(s)||_U``, so everything
here works on scalar functions.  Bounded, compactly supported data lie in
``E_Phi`` automatically, and its norm is the ``L_Phi`` norm, so no separate
``E_Phi`` membership test exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import DivergentIntegralError, DomainError
from .piecewise import NCOEF, PiecewiseFn, _extreme_values, poly_degree
from .young import PowerYoung, YoungFunction, parse_young

DEFAULT_TOL = 1e-10
_GL_NODES = 24
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_NODES)
_GL_X2, _GL_W2 = np.polynomial.legendre.leggauss(_GL_NODES // 2)
_GRADE_RATIO = 1e-2
_GRADE_LEVELS = 44
_HALF = 0.5 ** np.arange(_GRADE_LEVELS, 0, -1)  # 2^-44, ..., 1/2


def _panels(left: bool, right: bool) -> np.ndarray:
    """Panel ends on ``[0, 1]``, geometrically refined toward the flagged ends."""
    if left and right:
        return np.concatenate([[0.0], 0.5 * _HALF, 1.0 - 0.5 * _HALF[::-1][1:], [1.0]])
    if left:
        return np.concatenate([[0.0], _HALF, [1.0]])
    if right:
        return np.concatenate([[0.0], 1.0 - _HALF[::-1], [1.0]])
    return np.array([0.0, 1.0])


@dataclass
class NormResult:
    value: float
    kind: str
    certified_tolerance: float = 0.0
    bracket: Optional[tuple[float, float]] = None

    def __float__(self) -> float:
        return self.value


class _AbsProfile:
    """``|f|`` prepared once for repeated modular evaluation.

    Constant pieces are kept as (value, length) pairs; non-constant pieces are
    split at their roots so that ``|f|`` is a single polynomial on each one.
    """

    def __init__(self, f: PiecewiseFn):
        if f.tail != 0.0:
            raise DivergentIntegralError("function with nonzero tail has infinite modular")
        self._f = f
        deg = poly_degree(f.coeffs)
        const = deg == 0
        self.values = np.abs(f.coeffs[const, 0])
        self.lengths = f.lengths[const]
        keep = self.values > 0
        self.values, self.lengths = self.values[keep], self.lengths[keep]
        self.poly_len = np.zeros(0)
        self.poly_scaled = np.zeros((0, NCOEF))
        if np.any(~const):
            idx = np.flatnonzero(~const)
            lo, hi = _extreme_values(f.coeffs[idx], f.lengths[idx])
            fixed = (lo >= 0.0) | (hi <= 0.0)
            cs_list = [f.coeffs[idx[fixed]]]
            L_list = [f.lengths[idx[fixed]]]
            for i in idx[~fixed]:
                nb, cs = PiecewiseFn(f.breaks[i : i + 2], f.coeffs[i : i + 1]).sign_split()
                cs_list.append(cs)
                L_list.append(np.diff(nb))
            cs, L = np.vstack(cs_list), np.concatenate(L_list)
            nz = np.any(cs != 0.0, axis=1)
            cs, L = cs[nz], L[nz]
            # local variable z = y / L in [0, 1]
            scaled = cs * L[:, None] ** np.arange(NCOEF)
            mid = scaled @ (0.5 ** np.arange(NCOEF))
            scaled = np.where((mid < 0)[:, None], -scaled, scaled)
            self.poly_len = L
            self.poly_scaled = scaled
        self._gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._moments: dict[int, float] = {}

    @property
    def has_poly(self) -> bool:
        return self.poly_len.size > 0

    @property
    def sup(self) -> float:
        return self._f.sup_abs()

    def _gl(self, n: int):
        """Flattened ``(|f| at nodes, weights)`` over all polynomial pieces.

        A piece whose ``|f|`` (nearly) vanishes at an end is split into
        geometric panels toward that end, where non-integer powers of ``|f|``
        are not smooth; other pieces use a single ``n``-point rule.
        """
        if n not in self._gl_cache:
            x, w = (_GL_X, _GL_W) if n == _GL_NODES else (_GL_X2, _GL_W2)
            vals, weights = [], []
            for c, L in zip(self.poly_scaled, self.poly_len):
                ends = np.abs([c[0], np.sum(c)])
                small = ends <= _GRADE_RATIO * np.max(np.abs(c))
                panels = _panels(bool(small[0]), bool(small[1]))
                a, b = panels[:-1, None], panels[1:, None]
                z = (0.5 * (b - a) * (x + 1.0) + a).ravel()
                vals.append(np.abs(np.polyval(c[::-1], z)))
                weights.append((0.5 * (b - a) * w[None, :]).ravel() * L)
            self._gl_cache[n] = (np.concatenate(vals), np.concatenate(weights))
        return self._gl_cache[n]

    def power_moment(self, p: int) -> float:
        """Exact ``int |f|^p`` over the polynomial pieces (cached per ``p``)."""
        if p in self._moments:
            return self._moments[p]
        total = []
        for c, L in zip(self.poly_scaled, self.poly_len):
            q = npoly.polypow(np.trim_zeros(c, "b") if np.any(c) else [0.0], p)
            total.append(L * float(np.sum(q / np.arange(1, q.size + 1))))
        self._moments[p] = math.fsum(total)
        return self._moments[p]

    def modular(self, phi: YoungFunction, k: float) -> tuple[float, float]:
        """``int Phi(|f| / k)`` and an error estimate for the quadrature part."""
        const = math.fsum(self.lengths * np.asarray(phi(self.values / k), dtype=float)) if self.values.size else 0.0
        if not self.has_poly:
            return const, 0.0
        if isinstance(phi, PowerYoung) and float(phi.p).is_integer():
            p = int(phi.p)
            return const + self.power_moment(p) / k**p, 0.0
        vals, w = self._gl(_GL_NODES)
        with np.errstate(over="ignore"):
            fine = float(np.sum(w * phi(vals / k)))
            v2, w2 = self._gl(_GL_NODES // 2)
            coarse = float(np.sum(w2 * phi(v2 / k)))
        err = abs(fine - coarse) if math.isfinite(fine) else 0.0
        return const + fine, err


def modular(phi: YoungFunction, f: PiecewiseFn, k: float) -> float:
    """``int Phi(|f(x)| / k) dx``.

    Exact for piecewise-constant ``f``.  Raises
    :class:`~oiss.errors.DivergentIntegralError` for a nonzero tail.
    """
    if not k > 0:
        raise DomainError("scale k must be positive")
    return _AbsProfile(f).modular(phi, k)[0]


def luxemburg_norm(phi: YoungFunction, f: PiecewiseFn, tol: float = DEFAULT_TOL) -> NormResult:
    """Luxemburg norm ``inf{k > 0 : int Phi(|f|/k) <= 1}`` by bisection.

    ``tol`` is relative: the returned bracket satisfies
    ``k_hi - k_lo <= tol * k_hi`` together with
    ``modular(k_hi) <= 1 <= modular(k_lo)``.  The value is the bracket
    midpoint.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    prof = _AbsProfile(f)
    kind = f"Luxemburg({phi.spec()})"
    if prof.values.size == 0 and not prof.has_poly:
        return NormResult(0.0, kind, 0.0, (0.0, 0.0))
    quad_err = 0.0

    def m(k: float) -> float:
        nonlocal quad_err
        val, err = prof.modular(phi, k)
        quad_err = max(quad_err, err)
        return val

    k0 = max(prof.sup, tol)
    if m(k0) > 1.0:
        lo, hi = k0, 2.0 * k0
        while m(hi) > 1.0:
            lo, hi = hi, 2.0 * hi
    else:
        lo, hi = 0.5 * k0, k0
        while m(lo) <= 1.0:
            lo, hi = 0.5 * lo, lo
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if m(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return NormResult(0.5 * (lo + hi), kind, hi - lo + quad_err * hi, (lo, hi))


def lp_norm(f: PiecewiseFn, p: float) -> NormResult:
    """``L^p`` norm on ``[0, inf)``; ``p = inf`` gives the sup of ``|f|``."""
    if not p >= 1:
        raise DomainError(f"need p >= 1, got {p}")
    if math.isinf(p):
        return NormResult(f.sup_abs(), "Linf")
    kind = f"Lp({p:g})"
    if p == 1:
        return NormResult(f.l1_norm(), kind)
    prof = _AbsProfile(f)
    const = math.fsum(prof.lengths * prof.values**p) if prof.values.size else 0.0
    err = 0.0
    if prof.has_poly:
        if float(p).is_integer():
            const += prof.power_moment(int(p))
        else:
            vals, w = prof._gl(_GL_NODES)
            v2, w2 = prof._gl(_GL_NODES // 2)
            fine = float(np.sum(w * vals**p))
            err = abs(fine - float(np.sum(w2 * v2**p)))
            const += fine
    value = const ** (1.0 / p)
    tol = (err / p) * const ** (1.0 / p - 1.0) if const > 0 else 0.0
    return NormResult(value, kind, tol)


@dataclass(frozen=True)
class NormSpec:
    """Which function-space norm ``Z`` to apply: ``L^p`` or Luxemburg."""

    kind: str  # "lp" or "luxemburg"
    p: float = 1.0
    phi: Optional[YoungFunction] = None

    def __call__(self, f: PiecewiseFn, tol: float = DEFAULT_TOL) -> float:
        if self.kind == "lp":
            return lp_norm(f, self.p).value
        return luxemburg_norm(self.phi, f, tol).value

    @property
    def label(self) -> str:
        if self.kind == "lp":
            return "Linf" if math.isinf(self.p) else f"L{self.p:g}"
        return f"Luxemburg({self.phi.spec()})"

    @classmethod
    def parse(cls, spec: str) -> "NormSpec":
        """``l1``, ``l2``, ``linf``, ``lp:P`` or ``luxemburg:<young spec>``."""
        s = spec.strip().lower()
        if s == "linf":
            return cls("lp", math.inf)
        if s.startswith("luxemburg:"):
            return cls("luxemburg", phi=parse_young(spec.strip()[len("luxemburg:"):]))
        if s.startswith("lp:"):
            try:
                p = float(s[3:])
            except ValueError:
                raise DomainError(f"bad norm spec {spec!r}") from None
            return cls("lp", p)
        if s.startswith("l") and s[1:].replace(".", "", 1).isdigit():
            return cls("lp", float(s[1:]))
        raise DomainError(f"unknown norm spec {spec!r}")


@dataclass
class MeanConvergenceReport:
    """Modulars ``int Phi(r f_n)`` per ``r`` and Luxemburg norms of ``f_n``."""

    tol: float
    modulars: dict[float, list[float]] = field(default_factory=dict)
    modular_below_from: dict[float, Optional[int]] = field(default_factory=dict)
    norms: list[float] = field(default_factory=list)
    norm_below_from: Optional[int] = None

    @property
    def converges(self) -> bool:
        return all(v is not None for v in self.modular_below_from.values()) and self.norm_below_from is not None


def _eventually_below(seq: Sequence[float], tol: float) -> Optional[int]:
    idx = None
    for i in range(len(seq) - 1, -1, -1):
        if seq[i] <= tol:
            idx = i
        else:
            break
    return idx


def mean_convergence_check(phi: YoungFunction, fs: Sequence[PiecewiseFn], rs: Sequence[float],
                           tol: float, norm_tol: float = DEFAULT_TOL) -> MeanConvergenceReport:
    """Check mean convergence to zero of ``(r f_n)`` and the norm decay it forces.

    For every ``r`` the modular sequence is reported with the first index
    from which it stays ``<= tol``; the same is done for the Luxemburg norms.
    """
    rep = MeanConvergenceReport(tol)
    for r in rs:
        seq = [modular(phi, f, 1.0 / r) for f in fs]
        rep.modulars[r] = seq
        rep.modular_below_from[r] = _eventually_below(seq, tol)
    rep.norms = [luxemburg_norm(phi, f, norm_tol).value for f in fs]
    rep.norm_below_from = _eventually_below(rep.norms, tol)
    return rep
