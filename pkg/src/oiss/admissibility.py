"""Admissibility constants, sISS/siISS certificate checks and the theta gain.

Suprema over input balls are not computable, so every constant here is a
lower bound taken over a declared finite family of inputs and every verdict
is labelled as evidence.  Comparison functions are certified on probe grids.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, RejectedCertificate
from .orlicz import DEFAULT_TOL, NormSpec, _AbsProfile
from .piecewise import PiecewiseFn
from .systems import (
    SeparableInput,
    StepInput,
    SystemModel,
    TimeReversed,
    TranslationL1,
    apply_semigroup,
    input_norm_profile,
    input_to_state_map,
    mild_solution,
    state_norm,
)
from .young import PowerYoung, YoungFunction

__all__ = [
    "ComparisonFn",
    "AdmissibilityEntry",
    "AdmissibilityReport",
    "CertificateResult",
    "ThetaTable",
    "DEFAULT_SLACK",
    "admissibility_constant",
    "infinite_time_verdict",
    "verify_siss",
    "verify_siiss",
    "estimate_theta",
    "input_to_state_map",
    "family_generator",
]

DEFAULT_SLACK = 1e-9
DEFAULT_PROBE = np.logspace(-6, 6, 200)

CLASSES = ("K", "Kinf", "L")


# comparison functions -------------------------------------------------------


@dataclass(frozen=True)
class ComparisonFn:
    """A scalar function with a claimed comparison class.

    Parameters
    ----------
    fn:
        Vectorized callable on nonnegative reals.
    cls:
        ``"K"``, ``"Kinf"`` or ``"L"``.
    name:
        Label used in reports.
    power:
        If the function is ``coef * s**power`` this is ``power``; it lets
        integrals of ``mu(||u(s)||)`` be computed exactly on cubic profiles.
    coef:
        Multiplier paired with ``power``.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    cls: str
    name: str = "fn"
    power: Optional[float] = None
    coef: float = 1.0

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise DomainError(f"class must be one of {CLASSES}, got {self.cls!r}")

    def __call__(self, s):
        return self.fn(s)

    @classmethod
    def linear(cls, slope: float = 1.0, klass: str = "Kinf") -> "ComparisonFn":
        return cls(lambda s: slope * np.asarray(s, dtype=float), klass, f"{slope:g}*s", 1.0, slope)

    @classmethod
    def power_fn(cls, p: float, coef: float = 1.0, klass: str = "Kinf") -> "ComparisonFn":
        return cls(lambda s: coef * np.asarray(s, dtype=float) ** p, klass, f"{coef:g}*s^{p:g}", p, coef)

    @classmethod
    def exp_decay(cls, amplitude: float, rate: float = 1.0) -> "ComparisonFn":
        """``amplitude * exp(-rate * t)``, class L."""
        return cls(lambda t: amplitude * np.exp(-rate * np.asarray(t, dtype=float)), "L",
                   f"{amplitude:g}*exp(-{rate:g}t)")

    @classmethod
    def orbit(cls, model: SystemModel, x0) -> "ComparisonFn":
        """``t -> ||T(t) x0||``, the choice that makes the sISS estimate sharp at ``u = 0``."""

        def fn(t):
            ts = np.atleast_1d(np.asarray(t, dtype=float))
            out = np.array([state_norm(model, apply_semigroup(model, float(s), x0)) for s in ts])
            return out if np.ndim(t) else float(out[0])

        return cls(fn, "L", "||T(t)x0||")

    def check(self, grid: Optional[np.ndarray] = None, unbounded_threshold: float = 100.0,
              decay_threshold: float = 1e-6, jump_rtol: float = 1e-6) -> list[str]:
        """Violated class properties on a probe grid (empty list when certified)."""
        g = DEFAULT_PROBE if grid is None else np.asarray(grid, dtype=float)
        v = np.asarray(self.fn(g), dtype=float)
        bad = []
        if not np.all(np.isfinite(v)):
            return ["finite values"]
        if np.any(v < 0):
            bad.append("nonnegative")
        if self.cls in ("K", "Kinf"):
            if abs(float(self.fn(np.array([0.0]))[0])) > 1e-12:
                bad.append("zero at 0")
            if np.any(np.diff(v) <= 0):
                bad.append("strictly increasing")
            if not self._continuous(g, jump_rtol):
                bad.append("continuous")
            if self.cls == "Kinf" and v[-1] < unbounded_threshold:
                bad.append(f"exceeds {unbounded_threshold:g} at grid end")
        else:
            pos = v > 0
            # strictly decreasing while positive; once zero it must stay zero
            if np.any(np.diff(v[pos]) >= 0) or np.any(pos[1:] & ~pos[:-1]):
                bad.append("strictly decreasing")
            if v[-1] > decay_threshold:
                bad.append(f"below {decay_threshold:g} at grid end")
        return bad

    def _continuous(self, g: np.ndarray, rtol: float, levels: int = 40) -> bool:
        """Bisect every probe interval towards its larger half; a jump survives, a continuous increment shrinks."""
        lo, hi = g[:-1].copy(), g[1:].copy()
        scale = np.maximum(1.0, np.abs(self.fn(hi)))
        for _ in range(levels):
            mid = 0.5 * (lo + hi)
            fl, fm, fh = self.fn(lo), self.fn(mid), self.fn(hi)
            left = np.abs(fm - fl) >= np.abs(fh - fm)
            hi = np.where(left, mid, hi)
            lo = np.where(left, lo, mid)
        return bool(np.all(np.abs(self.fn(hi) - self.fn(lo)) <= rtol * scale))


def _certify(fn: ComparisonFn, expected: Iterable[str], role: str, grid=None) -> None:
    if fn.cls not in expected:
        raise RejectedCertificate(f"{role} must be of class {'/'.join(expected)}, declared {fn.cls}")
    bad = fn.check(grid)
    if bad:
        raise RejectedCertificate(f"{role} ({fn.name}) fails class-{fn.cls} checks: {', '.join(bad)}")


# admissibility constants ----------------------------------------------------


def _z_norm(model: SystemModel, z: NormSpec, u, t: float, tol: float) -> float:
    prof = input_norm_profile(model, u)
    return z(prof.restrict(0.0, t), tol)


@dataclass
class AdmissibilityEntry:
    t: float
    best_ratio: float
    witness: str
    ratios: dict[str, float] = field(default_factory=dict)


@dataclass
class AdmissibilityReport:
    """Per-time lower bounds for ``c(t)``, their running max and an evidence verdict."""

    z: str
    entries: list[AdmissibilityEntry] = field(default_factory=list)
    running_max: np.ndarray = field(default_factory=lambda: np.zeros(0))
    verdict: str = "inconclusive"
    growth: float = float("nan")

    @property
    def c_inf_estimate(self) -> float:
        return float(self.running_max[-1]) if self.running_max.size else float("nan")

    def rows(self) -> list[dict]:
        return [{"t": e.t, "best_ratio": e.best_ratio, "witness": e.witness, "verdict": self.verdict}
                for e in self.entries]


def admissibility_constant(model: SystemModel, z: Union[NormSpec, str], t: float, family: Sequence,
                           ids: Optional[Sequence[str]] = None, tol: float = DEFAULT_TOL) -> AdmissibilityEntry:
    """Lower bound for ``c(t)``: the largest ``||Phi_t(u)|| / ||u||_Z(0,t)`` over ``family``.

    Inputs with zero norm on ``[0, t]`` are skipped with a warning.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if len(family) == 0:
        raise DomainError("input family is empty")
    z = NormSpec.parse(z) if isinstance(z, str) else z
    ids = list(ids) if ids is not None else [f"u{i}" for i in range(len(family))]
    ratios = {}
    for uid, u in zip(ids, family):
        un = _z_norm(model, z, u, t, tol)
        if un == 0.0:
            warnings.warn(f"input {uid} has zero norm on [0, {t:g}]; skipped", RuntimeWarning, stacklevel=2)
            continue
        ratios[uid] = state_norm(model, input_to_state_map(model, u, t)) / un
    if not ratios:
        raise DomainError(f"every input in the family vanishes on [0, {t:g}]")
    best = max(ratios, key=lambda k: (ratios[k], k))
    return AdmissibilityEntry(float(t), ratios[best], best, ratios)


def infinite_time_verdict(model: SystemModel, z: Union[NormSpec, str], t_grid: Sequence[float],
                          family_generator: Callable[[float], tuple[Sequence, Sequence[str]]],
                          growth_factor: float = 2.0, tol: float = DEFAULT_TOL) -> AdmissibilityReport:
    """Evidence for or against ``sup_t c(t) < inf``.

    ``"bounded-evidence"`` when the running max at the last point is within
    1% of its value at the grid midpoint; ``"unbounded-evidence"`` when it
    has grown by ``growth_factor`` from the first point and is still strictly
    increasing across the last three points; ``"inconclusive"`` otherwise.
    """
    ts = np.asarray(t_grid, dtype=float)
    if ts.size < 5 or np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
        raise DomainError("t_grid needs at least 5 increasing positive points")
    if ts[-1] / ts[0] < 1e3 * (1 - 1e-12):
        raise DomainError("t_grid must span at least three orders of magnitude")
    z = NormSpec.parse(z) if isinstance(z, str) else z
    rep = AdmissibilityReport(z.label)
    for t in ts:
        fam, ids = family_generator(float(t))
        rep.entries.append(admissibility_constant(model, z, float(t), fam, ids, tol))
    rm = np.maximum.accumulate([e.best_ratio for e in rep.entries])
    rep.running_max = rm
    rep.growth = float(rm[-1] / rm[0]) if rm[0] > 0 else math.inf
    mid = rm[(rm.size - 1) // 2]
    if rm[-1] >= growth_factor * rm[0] and rm[-1] > rm[-2] > rm[-3]:
        rep.verdict = "unbounded-evidence"
    elif rm[-1] <= 1.01 * mid:
        rep.verdict = "bounded-evidence"
    return rep


# certificates ----------------------------------------------------------------


@dataclass
class CertificateResult:
    """Both sides of an sISS/siISS estimate along a time grid."""

    kind: str
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: float

    @property
    def ok(self) -> np.ndarray:
        return self.lhs <= self.rhs + self.slack

    @property
    def passed(self) -> bool:
        return bool(np.all(self.ok))

    @property
    def first_violation(self) -> Optional[float]:
        bad = np.flatnonzero(~self.ok)
        return float(self.times[bad[0]]) if bad.size else None

    def rows(self) -> list[dict]:
        return [{"t": t, "lhs": a, "rhs": b, "ok": bool(k)} for t, a, b, k in zip(self.times, self.lhs, self.rhs, self.ok)]


InputOrFamily = Union[object, Callable[[float], object]]


def _input_at(u: InputOrFamily, t: float):
    """A fixed input, or the member of a time-indexed family used at ``t``."""
    if callable(u) and not isinstance(u, PiecewiseFn):
        return u(t)
    return u


def _beta_for(beta, x0) -> ComparisonFn:
    return beta if isinstance(beta, ComparisonFn) else beta(x0)


def _slack(slack: Optional[float]) -> float:
    return DEFAULT_SLACK if slack is None else float(slack)


def verify_siss(model: SystemModel, x0, u: InputOrFamily, t_grid: Sequence[float], beta, mu: ComparisonFn,
                z: Union[NormSpec, str], slack: Optional[float] = None, tol: float = DEFAULT_TOL,
                probe: Optional[np.ndarray] = None) -> CertificateResult:
    """Check ``||x(t)|| <= beta(x0, t) + mu(||u||_Z(0,t))`` on ``t_grid``.

    ``beta`` is a class-L :class:`ComparisonFn` (already specialised to
    ``x0``) or a callable ``x0 -> ComparisonFn``.  ``u`` is an input or a
    callable ``t -> input``; the latter is how time-reversed witnesses such as
    ``TimeReversed(u, t)`` are supplied.  Certificates are class-checked
    first and rejected with :class:`~oiss.errors.RejectedCertificate`.
    """
    b = _beta_for(beta, x0)
    _certify(b, ("L",), "beta(x0, .)", probe)
    _certify(mu, ("K", "Kinf"), "mu", probe)
    z = NormSpec.parse(z) if isinstance(z, str) else z
    ts = np.asarray(t_grid, dtype=float)
    lhs, rhs = [], []
    for t in ts:
        ut = _input_at(u, float(t))
        x = mild_solution(model, x0, ut, float(t))
        lhs.append(state_norm(model, x))
        rhs.append(float(b(np.array([t]))[0]) + float(mu(np.array([_z_norm(model, z, ut, float(t), tol)]))[0]))
    return CertificateResult("siss", ts, np.array(lhs), np.array(rhs), _slack(slack))


def _mu_integral(mu: ComparisonFn, prof: PiecewiseFn) -> float:
    """``int mu(prof(s)) ds`` for a nonnegative profile with zero tail.

    Exact on constant pieces, and on cubic pieces when ``mu`` is an integer
    power; otherwise 24-point Gauss-Legendre per piece.
    """
    ap = _AbsProfile(prof)
    total = math.fsum(ap.lengths * np.asarray(mu(ap.values), dtype=float)) if ap.values.size else 0.0
    if not ap.has_poly:
        return total
    if mu.power is not None and float(mu.power).is_integer():
        return total + mu.coef * ap.power_moment(int(mu.power))
    vals, w = ap._gl(24)
    return total + float(np.sum(w * mu(vals)))


def verify_siiss(model: SystemModel, x0, u: InputOrFamily, t_grid: Sequence[float], beta, theta: ComparisonFn,
                 mu: ComparisonFn, slack: Optional[float] = None, probe: Optional[np.ndarray] = None) -> CertificateResult:
    """Check ``||x(t)|| <= beta(x0, t) + theta(int_0^t mu(||u(s)||) ds)`` on ``t_grid``."""
    b = _beta_for(beta, x0)
    _certify(b, ("L",), "beta(x0, .)", probe)
    _certify(theta, ("Kinf",), "theta", probe)
    _certify(mu, ("K", "Kinf"), "mu", probe)
    ts = np.asarray(t_grid, dtype=float)
    lhs, rhs = [], []
    for t in ts:
        ut = _input_at(u, float(t))
        lhs.append(state_norm(model, mild_solution(model, x0, ut, float(t))))
        inner = _mu_integral(mu, input_norm_profile(model, ut).restrict(0.0, float(t)))
        rhs.append(float(b(np.array([t]))[0]) + float(theta(np.array([inner]))[0]))
    return CertificateResult("siiss", ts, np.array(lhs), np.array(rhs), _slack(slack))


# theta gain ------------------------------------------------------------------


@dataclass
class ThetaTable:
    """Lower-bound estimates of ``theta(alpha)``, forced nondecreasing."""

    alphas: np.ndarray
    raw: np.ndarray
    theta: np.ndarray
    witnesses: list[str]

    def rows(self) -> list[dict]:
        return [{"alpha": a, "theta": th, "raw": r, "witness": w}
                for a, th, r, w in zip(self.alphas, self.theta, self.raw, self.witnesses)]


def _modular_scale(phi: YoungFunction, prof: PiecewiseFn, alpha: float) -> float:
    """Largest ``c`` with ``int Phi(c |prof|) <= alpha`` (bisection in ``log c``)."""
    ap = _AbsProfile(prof)
    if isinstance(phi, PowerYoung) and not ap.has_poly:
        # int (c f)^p = c^p int f^p
        base = math.fsum(ap.lengths * ap.values**phi.p)
        return (alpha / base) ** (1.0 / phi.p) if base > 0 else math.inf

    def m(c: float) -> float:
        return ap.modular(phi, 1.0 / c)[0]

    lo, hi = 1.0, 1.0
    while m(hi) <= alpha:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    while m(lo) > alpha:
        lo *= 0.5
        if lo < 1e-300:
            return 0.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if m(mid) <= alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return lo


def estimate_theta(model: SystemModel, phi1: YoungFunction, alphas: Sequence[float],
                   family_generator: Callable[[float], tuple[Sequence, Sequence[str]]],
                   t_grid: Sequence[float]) -> ThetaTable:
    """Lower bound ``theta_hat(alpha)`` for the gain of the sufficiency argument.

    For every ``t`` in ``t_grid`` and every family input the input is scaled
    as large as allowed by ``int_0^t Phi1(c ||u(s)||) ds <= alpha`` and the
    state norm ``c ||Phi_t(u)||`` recorded.  ``theta_hat`` is the running
    max over increasing ``alpha``, with ``theta_hat(0) = 0``.  The true gain
    is a supremum over all inputs and times, so this is only a lower bound.
    The caller is expected to have established bounded evidence for
    Luxemburg(``phi1``) admissibility on the same grid.
    """
    al = np.asarray(alphas, dtype=float)
    if np.any(al < 0):
        raise DomainError("alphas must be nonnegative")
    order = np.argsort(al, kind="stable")
    raw = np.zeros(al.size)
    wit = [""] * al.size
    cache = []
    for t in np.asarray(t_grid, dtype=float):
        fam, ids = family_generator(float(t))
        if len(fam) == 0:
            raise DomainError("input family is empty")
        for uid, u in zip(ids, fam):
            prof = input_norm_profile(model, u).restrict(0.0, float(t))
            if prof.n_pieces == 0:
                continue
            cache.append((f"{uid}@t={t:g}", prof, state_norm(model, input_to_state_map(model, u, float(t)))))
    if not cache:
        raise DomainError("input family is empty")
    for i in order:
        a = al[i]
        if a == 0.0:
            wit[i] = "zero input"
            continue
        best, bw = 0.0, ""
        for uid, prof, xn in cache:
            c = _modular_scale(phi1, prof, a)
            val = c * xn
            if val > best:
                best, bw = val, uid
        raw[i], wit[i] = best, bw
    theta = np.empty_like(raw)
    theta[order] = np.maximum.accumulate(raw[order])
    return ThetaTable(al, raw, theta, wit)


# input families ----------------------------------------------------------------


def family_generator(name: str, model: SystemModel, seed: int = 0, n: int = 4,
                     counterexample=None) -> Callable[[float], tuple[list, list[str]]]:
    """Named input families indexed by the horizon ``t``.

    ``shifted-bumps``
        Translation: ``u(s) = 1_[M, M+1]`` with ``M > t`` drawn from the seeded
        generator (no mass crosses the origin).  Scalar models: unit bumps
        placed inside ``[0, t]``.
    ``bumps``
        Unit-height bumps of length ``min(1, t)`` at seeded positions in ``[0, t]``.
    ``constant``
        ``u = 1`` on ``[0, inf)`` (scalar models only).
    ``counterexample``
        The separable witness input (translation only); pass a prebuilt
        :class:`~oiss.counterexample.Counterexample` or one is built for
        ``Phi = power 2`` with 40 blocks.
    """
    translation = isinstance(model, TranslationL1)

    def rng_for(t: float) -> np.random.Generator:
        # a fresh stream per t keeps the family a pure function of (seed, t)
        return np.random.default_rng([seed, int(np.float64(t).view(np.int64))])

    if name == "shifted-bumps":
        def gen(t: float):
            offs = rng_for(t).uniform(0.0, 10.0, n)
            if translation:
                fam = [StepInput.constant(PiecewiseFn.indicator(t + 1.0 + o, t + 2.0 + o)) for o in offs]
                return fam, [f"bump@{t + 1.0 + o:.6g}" for o in offs]
            return _scalar_bumps(t, rng_for(t).uniform(0.0, 1.0, n))
        return gen
    if name == "bumps":
        def gen(t: float):
            pos = rng_for(t).uniform(0.0, 1.0, n)
            if translation:
                w = min(1.0, t)
                fam = [StepInput.constant(PiecewiseFn.indicator(p * t, p * t + w)) for p in pos]
                return fam, [f"bump@{p * t:.6g}" for p in pos]
            return _scalar_bumps(t, pos)
        return gen
    if name == "constant":
        if translation:
            raise DomainError("constant family needs a scalar-input model")
        return lambda t: ([PiecewiseFn.const(1.0)], ["one"])
    if name == "counterexample":
        if not translation:
            raise DomainError("counterexample family needs the translation model")
        if counterexample is None:
            from .counterexample import build_counterexample
            counterexample = build_counterexample(PowerYoung(2.0), 40)
        ce = counterexample
        return lambda t: ([ce.u], ["counterexample"])
    raise DomainError(f"unknown family {name!r}")


def _scalar_bumps(t: float, pos: np.ndarray):
    w = min(1.0, t)
    fam = [PiecewiseFn.indicator(p * (t - w), p * (t - w) + w) for p in pos]
    return fam, [f"bump@{p * (t - w):.6g}" for p in pos]


def reversed_family(u) -> Callable[[float], TimeReversed]:
    """``t -> TimeReversed(u, t)``: the witness whose trajectory at ``t`` is ``Phi_t(u)``."""
    return lambda t: TimeReversed(u, float(t))
