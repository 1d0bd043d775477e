"""Young functions: evaluation, inversion, validity checks, Delta_2, majorants.

A Young function is ``Phi(t) = int_0^t phi(s) ds`` for a generator ``phi`` that
is right-continuous, nondecreasing, vanishes only at 0 and diverges at
infinity.  Right-continuity is a property of the chosen families and is not
tested; divergence can only be certified as a threshold crossing.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import DomainError, InvalidYoungError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
_EXP_SERIES_CUT = 0.5


def _quad(fn: Callable[[float], float], a: float, b: float) -> float:
    """Adaptive quadrature on dyadic sub-intervals so kinks are not skipped."""
    if b <= a:
        return 0.0
    pts = [a]
    k = math.floor(math.log2(a)) + 1 if a > 0 else -30
    while 2.0**k < b:
        if 2.0**k > a:
            pts.append(2.0**k)
        k += 1
    pts.append(b)
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(fn, lo, hi, epsabs=QUAD_EPSABS * (hi - lo) / max(b - a, 1e-300),
                                epsrel=QUAD_EPSREL, limit=200)
        total += val
    return float(total)


class YoungFunction:
    """Base class; subclasses supply ``phi`` (generator) and ``_eval``."""

    family: str = "abstract"

    def phi(self, s):
        raise NotImplementedError

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = self._eval(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def spec(self) -> str:
        return self.family

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.spec()!r})"

    @property
    def notes(self) -> list[str]:
        return []


@dataclass(frozen=True, repr=False)
class PowerYoung(YoungFunction):
    """``Phi(t) = t**p`` with ``p >= 1``."""

    p: float
    family = "power"

    def __post_init__(self):
        if not (self.p >= 1 and math.isfinite(self.p)):
            raise InvalidYoungError(f"power family needs p >= 1, got {self.p}")

    def phi(self, s):
        s = np.asarray(s, dtype=float)
        if self.p == 1:
            out = np.where(s > 0, 1.0, 0.0)
        else:
            out = self.p * s ** (self.p - 1)
        return float(out) if out.ndim == 0 else out

    def _eval(self, t):
        return t**self.p

    def spec(self) -> str:
        return f"power:{self.p:g}"


def _exp_minus(t: np.ndarray) -> np.ndarray:
    # e^t - t - 1 without cancellation near 0 and without overflow warnings
    out = np.empty_like(t)
    small = t < _EXP_SERIES_CUT
    ts = t[small]
    term = ts * ts / 2.0
    acc = term.copy()
    for k in range(3, 20):
        term = term * ts / k
        acc += term
    out[small] = acc
    big = ~small
    with np.errstate(over="ignore"):
        out[big] = np.expm1(t[big]) - t[big]
    return out


@dataclass(frozen=True, repr=False)
class ExpMinusYoung(YoungFunction):
    """``Phi(t) = e^t - t - 1``, generated by ``e^s - 1``.  Overflows to inf."""

    family = "exp_minus"

    def phi(self, s):
        with np.errstate(over="ignore"):
            out = np.expm1(np.asarray(s, dtype=float))
        return float(out) if out.ndim == 0 else out

    def _eval(self, t):
        return _exp_minus(t)


@dataclass(frozen=True, repr=False)
class TabulatedYoung(YoungFunction):
    """Generator given by samples, linearly interpolated.

    Beyond the last sample the last segment is extended linearly, so a
    generator whose final slope is zero stays bounded and fails the
    divergence check.  ``Phi`` is the exact integral of the interpolant.
    """

    s: np.ndarray
    values: np.ndarray
    source: str = "<memory>"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if s.ndim != 1 or s.shape != v.shape or s.size < 2:
            raise InvalidYoungError("tabulated generator needs at least two (s, phi) samples")
        if np.any(np.diff(s) <= 0) or s[0] < 0:
            raise InvalidYoungError("sample abscissae must be nonnegative and strictly increasing")
        if s[0] > 0:
            s = np.concatenate([[0.0], s])
            v = np.concatenate([[0.0], v])
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", v)

    family = "tabulated"

    @cached_property
    def _slope_tail(self) -> float:
        return (self.values[-1] - self.values[-2]) / (self.s[-1] - self.s[-2])

    @cached_property
    def _cum(self) -> np.ndarray:
        seg = 0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.s)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def phi(self, s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.s, self.values)
        beyond = s > self.s[-1]
        out = np.where(beyond, self.values[-1] + self._slope_tail * (s - self.s[-1]), out)
        return float(out) if out.ndim == 0 else out

    def _eval(self, t):
        idx = np.clip(np.searchsorted(self.s, t, side="right") - 1, 0, self.s.size - 1)
        slopes = np.append(np.diff(self.values) / np.diff(self.s), self._slope_tail)
        x0 = self.s[idx]
        v0 = self.values[idx]
        slope = slopes[idx]
        dx = t - x0
        return self._cum[idx] + v0 * dx + 0.5 * slope * dx * dx

    def spec(self) -> str:
        return f"tabulated:{self.source}"

    @property
    def notes(self) -> list[str]:
        return ["generator linearly interpolated between samples"]


@dataclass(frozen=True, repr=False)
class GenericYoung(YoungFunction):
    """Young function from an arbitrary generator; ``Phi`` by adaptive quadrature."""

    generator: Callable[[float], float]
    name: str = "generic"
    family = "generic"

    def phi(self, s):
        arr = np.asarray(s, dtype=float)
        out = np.vectorize(lambda x: float(self.generator(float(x))))(np.atleast_1d(arr))
        return float(out[0]) if arr.ndim == 0 else out

    def _eval(self, t):
        g = lambda x: float(self.generator(x))
        return np.array([_quad(g, 0.0, float(x)) for x in t])

    def spec(self) -> str:
        return f"generic:{self.name}"


@dataclass(frozen=True, repr=False)
class MajorantYoung(YoungFunction):
    """Majorant ``Phi_1`` of a Young function ``Phi``.

    ``Phi_1 = Lambda`` on ``[0, 1)`` with ``Lambda(x) = int_0^x phi(sqrt(t)) dt``,
    and ``Phi_1 = (Lambda(1) / Phi(1)) * Phi(x**2)`` on ``[1, inf)``.  The two
    branches meet at ``x = 1``, ``Phi <= Phi_1`` everywhere, and
    ``Phi(c x) / Phi_1(x)`` stays bounded for each fixed ``c``.
    """

    base: YoungFunction
    family = "piecewise_majorant"

    def __post_init__(self):
        if not self.base(1.0) > 0:
            raise InvalidYoungError("Phi(1) = 0, majorant undefined")

    def lam(self, x):
        """``Lambda(x) = int_0^x phi(sqrt(t)) dt`` (closed form when known)."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        b = self.base
        if isinstance(b, PowerYoung):
            out = 2.0 * b.p / (b.p + 1.0) * arr ** ((b.p + 1.0) / 2.0)
        elif isinstance(b, ExpMinusYoung):
            out = _exp_lambda(arr)
        else:
            g = lambda t: float(b.phi(math.sqrt(t)))
            out = np.array([_quad(g, 0.0, float(v)) for v in arr])
        return float(out[0]) if np.ndim(x) == 0 else out

    @cached_property
    def lam1(self) -> float:
        return float(self.lam(1.0))

    @cached_property
    def base1(self) -> float:
        return float(self.base(1.0))

    @property
    def switch(self) -> float:
        return 1.0

    @property
    def scale(self) -> float:
        """Factor ``Lambda(1) / Psi(1)`` applied to ``Psi(x) = Phi(x**2)`` beyond the switch."""
        return self.lam1 / self.base1

    def phi(self, s):
        arr = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(arr)
        lo = arr < 1.0
        out[lo] = self.base.phi(np.sqrt(arr[lo]))
        hi = ~lo
        with np.errstate(over="ignore", invalid="ignore"):
            out[hi] = self.scale * 2.0 * arr[hi] * self.base.phi(arr[hi] ** 2)
        return float(out[0]) if np.ndim(s) == 0 else out

    def _eval(self, t):
        out = np.empty_like(t)
        lo = t < 1.0
        if np.any(lo):
            out[lo] = self.lam(t[lo])
        hi = ~lo
        if np.any(hi):
            with np.errstate(over="ignore"):
                out[hi] = self.scale * self.base(t[hi] ** 2)
        return out

    def spec(self) -> str:
        return f"majorant({self.base.spec()})"

    @property
    def notes(self) -> list[str]:
        return list(self.base.notes)


def _exp_lambda(x: np.ndarray) -> np.ndarray:
    # int_0^x (e^{sqrt t} - 1) dt = 2((sqrt x - 1) e^{sqrt x} + 1) - x
    out = np.empty_like(x)
    small = x < 1.0
    r = np.sqrt(x[small])
    acc = np.zeros_like(r)
    rk = np.ones_like(r)
    fact = 1.0
    for k in range(1, 30):
        rk = rk * r
        fact *= k
        acc += rk * x[small] / (fact * (k / 2.0 + 1.0))
    out[small] = acc
    big = ~small
    rb = np.sqrt(x[big])
    with np.errstate(over="ignore", invalid="ignore"):
        out[big] = 2.0 * ((rb - 1.0) * np.exp(rb) + 1.0) - x[big]
    return out


# public operations -----------------------------------------------------------


def eval_young(phi: YoungFunction, t: float) -> float:
    """Evaluate ``Phi(t)`` for a single finite ``t >= 0``."""
    if not (isinstance(t, (int, float, np.floating, np.integer)) and math.isfinite(t) and t >= 0):
        raise DomainError(f"Young functions are evaluated at finite t >= 0, got {t!r}")
    if t == 0:
        return 0.0
    return float(phi(float(t)))


def young_inverse(phi: YoungFunction, y: float) -> float:
    """Generalized inverse: the ``t`` with ``Phi(t) = y``.

    Brackets by doubling (or halving) from 1, then bisects to machine
    resolution, which is tighter than ``|Phi(t) - y| <= max(1e-12, 1e-10 y)``.
    """
    if not (math.isfinite(y) and y >= 0):
        raise DomainError(f"need finite y >= 0, got {y!r}")
    if y == 0:
        return 0.0
    hi = 1.0
    while phi(hi) < y:
        hi *= 2.0
        if hi > 1e300:
            raise DomainError(f"Phi never reaches {y}")
    lo = 0.0
    while hi > 1e-300 and phi(hi / 2.0) >= y:
        hi /= 2.0
    lo = hi / 2.0 if phi(hi / 2.0) < y else 0.0
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi(mid) < y:
            lo = mid
        else:
            hi = mid
    return lo if abs(phi(lo) - y) < abs(phi(hi) - y) else hi


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    first_failure: Optional[float] = None
    detail: str = ""


@dataclass
class ValidityReport:
    spec: str
    checks: list[PropertyCheck] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _first(mask: np.ndarray, grid: np.ndarray) -> Optional[float]:
    bad = np.flatnonzero(~mask)
    return float(grid[bad[0]]) if bad.size else None


def check_young(phi: YoungFunction, grid, blowup_threshold: float) -> ValidityReport:
    """Sample the defining properties of a Young function on ``grid``.

    Failures are report entries, never exceptions.  Checked: ``phi(0) = 0``,
    positivity and monotonicity of ``phi``, the divergence proxy
    ``phi(s_max) >= blowup_threshold``, ``Phi(0) = 0``, monotonicity and
    midpoint convexity of ``Phi``, and ``Phi = int phi`` by quadrature.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
        raise DomainError("grid must be nonempty and strictly increasing")
    rep = ValidityReport(phi.spec(), notes=list(phi.notes))
    ph = np.asarray(phi.phi(g), dtype=float)
    ph0 = float(phi.phi(0.0))
    rep.checks.append(PropertyCheck("phi(0)=0", ph0 == 0.0, None if ph0 == 0 else 0.0, f"phi(0)={ph0:g}"))
    pos = g > 0
    m = ~pos | (ph > 0)
    rep.checks.append(PropertyCheck("phi>0", bool(m.all()), _first(m, g)))
    mono = np.concatenate([[True], ph[1:] >= ph[:-1]])
    rep.checks.append(PropertyCheck("phi nondecreasing", bool(mono.all()), _first(mono, g)))
    top = float(ph[-1])
    rep.checks.append(PropertyCheck("phi divergence proxy", top >= blowup_threshold,
                                    None if top >= blowup_threshold else float(g[-1]),
                                    f"phi({g[-1]:g})={top:g} vs threshold {blowup_threshold:g}"))
    P = np.asarray(phi(g), dtype=float)
    P0 = float(phi(0.0))
    rep.checks.append(PropertyCheck("Phi(0)=0", P0 == 0.0, None if P0 == 0 else 0.0))
    pmono = np.concatenate([[True], P[1:] >= P[:-1]])
    rep.checks.append(PropertyCheck("Phi nondecreasing", bool(pmono.all()), _first(pmono, g)))
    mid = 0.5 * (g[1:] + g[:-1])
    Pm = np.asarray(phi(mid), dtype=float)
    avg = 0.5 * (P[1:] + P[:-1])
    with np.errstate(invalid="ignore"):
        conv = np.concatenate([[True], Pm <= avg * (1 + 1e-12)])
    rep.checks.append(PropertyCheck("Phi convex", bool(conv.all()), _first(conv, g)))
    gen = lambda s: float(phi.phi(s))
    okq = np.ones(g.size, dtype=bool)
    prev_t, acc = 0.0, 0.0
    for i, t in enumerate(g):
        if not math.isfinite(P[i]):
            break
        acc += _quad(gen, prev_t, float(t))
        prev_t = float(t)
        okq[i] = abs(acc - P[i]) <= 1e-9 * max(abs(P[i]), 1e-300) + 1e-12
    rep.checks.append(PropertyCheck("Phi = int phi", bool(okq.all()), _first(okq, g)))
    return rep


@dataclass
class Delta2Result:
    index: float  # math.inf stands for "unbounded"
    verdict: str  # "delta2" or "not-delta2"
    max_ratio: float
    grid: np.ndarray
    ratios: np.ndarray

    @property
    def satisfies(self) -> bool:
        return self.verdict == "delta2"


DEFAULT_DELTA2_GRID = np.logspace(-6, 2, 161)


def delta2_index(phi: YoungFunction, grid=None, cap: float = 1e6) -> Delta2Result:
    """Sup of ``Phi(2s) / Phi(s)`` over the grid (the ``s_0 = 0`` form).

    The verdict is ``not-delta2`` when the ratio is still strictly increasing
    across the three largest grid points and its maximum exceeds ``cap``.
    """
    g = DEFAULT_DELTA2_GRID if grid is None else np.asarray(grid, dtype=float)
    if g.size < 3 or g[0] > 1e-6 * (1 + 1e-12) or g[-1] < 1e2 * (1 - 1e-12):
        raise DomainError("delta2 grid must cover at least [1e-6, 1e2]")
    den = np.asarray(phi(g), dtype=float)
    if np.any(den <= 0):
        bad = float(g[np.flatnonzero(den <= 0)[0]])
        raise InvalidYoungError(f"Phi vanishes at s={bad:g} > 0")
    with np.errstate(over="ignore", invalid="ignore"):
        ratios = np.asarray(phi(2.0 * g), dtype=float) / den
    mx = float(np.nanmax(ratios))
    last = ratios[-3:]
    growing = bool(last[1] > last[0] and last[2] > last[1])
    if growing and mx > cap:
        return Delta2Result(math.inf, "not-delta2", mx, g, ratios)
    return Delta2Result(mx, "delta2", mx, g, ratios)


def majorant_phi1(phi: YoungFunction) -> MajorantYoung:
    return MajorantYoung(phi)


def parse_young(spec: str) -> YoungFunction:
    """Parse ``power:P``, ``exp_minus`` or ``tabulated:<csv path>``."""
    spec = spec.strip()
    if spec == "exp_minus":
        return ExpMinusYoung()
    kind, _, arg = spec.partition(":")
    if kind == "power" and arg:
        try:
            p = float(arg)
        except ValueError:
            raise DomainError(f"bad exponent in {spec!r}") from None
        return PowerYoung(p)
    if kind == "tabulated" and arg:
        return load_tabulated(arg)
    raise DomainError(f"unknown Young function spec {spec!r}")


def load_tabulated(path: str) -> TabulatedYoung:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidYoungError(f"{path}: empty file")
    header = [h.strip().lower() for h in rows[0]]
    if len(header) < 2 or header[0] != "s":
        raise InvalidYoungError(f"{path}: header 's,phi' required")
    try:
        data = np.array([[float(x) for x in r[:2]] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InvalidYoungError(f"{path}: {exc}") from None
    return TabulatedYoung(data[:, 0], data[:, 1], source=path)
