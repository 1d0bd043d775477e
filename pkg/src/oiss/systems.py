"""Linear systems ``x' = Ax + Bu`` with bounded ``B`` and their mild solutions.

Three models are available:

* :class:`TranslationL1` -- left translation on ``X = U = L^1(0, inf)``,
  ``(T(t)f)(s) = f(t + s)``, generator ``Af = f'``, ``B = I``.  Strongly but
  not exponentially stable.
* :class:`Diagonal` -- ``N`` decoupled modes ``x_k' = lam_k x_k + b_k u`` with
  scalar input, state norm ``l^1``.
* :class:`ScalarODE` -- the one-mode case.

All inputs are exact objects (see :class:`StepInput`, :class:`SeparableInput`)
so mild solutions are closed-form; :class:`CallableInput` is the fallback
evaluated by composite Gauss quadrature in time.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DomainError, InputDomainError, ModelStateMismatch
from .piecewise import PiecewiseFn, linear_combination, shift_difference

log = logging.getLogger(__name__)


# models ---------------------------------------------------------------------


@dataclass(frozen=True)
class TranslationL1:
    name: str = "translation"


@dataclass(frozen=True)
class Diagonal:
    """Diagonal model with eigenvalues ``lam_k <= 0`` and input weights ``b_k``."""

    eigenvalues: np.ndarray
    b: np.ndarray
    name: str = "diagonal"

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        b = np.broadcast_to(np.asarray(self.b, dtype=float), lam.shape).copy()
        if lam.size < 1:
            raise DomainError("diagonal model needs at least one mode")
        if np.any(lam > 0) or not np.all(np.isfinite(lam)):
            raise DomainError("diagonal model needs finite eigenvalues <= 0")
        lam.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "b", b)

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def truncate(self, x) -> tuple[np.ndarray, float]:
        """First ``N`` coefficients of ``x`` and the discarded ``l^1`` mass."""
        x = np.asarray(x, dtype=float).ravel()
        head = np.zeros(self.n_modes)
        head[: min(x.size, self.n_modes)] = x[: self.n_modes]
        return head, float(np.abs(x[self.n_modes:]).sum())


@dataclass(frozen=True)
class ScalarODE:
    lam: float
    b: float = 1.0
    name: str = "scalar"

    def __post_init__(self):
        if not (self.lam <= 0 and math.isfinite(self.lam)):
            raise DomainError("scalar model needs finite lambda <= 0")

    def as_diagonal(self) -> Diagonal:
        return Diagonal(np.array([self.lam]), np.array([self.b]))


SystemModel = Union[TranslationL1, Diagonal, ScalarODE]


# inputs ---------------------------------------------------------------------


@dataclass(frozen=True)
class StepInput:
    """``u(s) = values[i]`` for ``s`` in ``[times[i], times[i+1])``.

    ``times[0]`` must be 0; ``times[-1]`` may be ``inf``.  Values are
    :class:`PiecewiseFn` elements of ``L^1(0, inf)`` (zero tail).
    """

    times: tuple
    values: tuple

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(self.values)
        if len(times) != len(values) + 1 or not values:
            raise DomainError("need len(times) == len(values) + 1 >= 2")
        if times[0] != 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("times must start at 0 and increase strictly")
        for v in values:
            if not isinstance(v, PiecewiseFn) or v.tail != 0.0:
                raise DomainError("step values must be PiecewiseFn with zero tail")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, f: PiecewiseFn, horizon: float = math.inf) -> "StepInput":
        return cls((0.0, horizon), (f,))

    @property
    def horizon(self) -> float:
        return self.times[-1]

    def segments(self, t: float):
        """``(a, b, value)`` for every segment meeting ``[0, t]``."""
        for a, b, v in zip(self.times, self.times[1:], self.values):
            if a >= t:
                break
            yield a, min(b, t), v

    def at(self, s: float) -> PiecewiseFn:
        i = int(np.searchsorted(self.times, s, side="right")) - 1
        if i < 0 or i >= len(self.values):
            raise InputDomainError(f"input undefined at s={s}")
        return self.values[i]

    def norm_profile(self) -> PiecewiseFn:
        """``s -> ||u(s)||_{L^1}`` as a step function."""
        norms = [v.l1_norm() for v in self.values]
        if math.isinf(self.times[-1]):
            return PiecewiseFn.steps(self.times[:-1], norms[:-1], tail=norms[-1]) if len(norms) > 1 \
                else PiecewiseFn.const(norms[0])
        return PiecewiseFn.steps(self.times, norms)

    def scale(self, c: float) -> "StepInput":
        return StepInput(self.times, tuple(v.scale(c) for v in self.values))

    def reversed(self, t: float) -> "StepInput":
        """``s -> u(t - s)`` on ``[0, t]``."""
        if t > self.horizon:
            raise InputDomainError("cannot reverse beyond the input horizon")
        segs = list(self.segments(t))
        times = [0.0] + [t - a for a, _, _ in reversed(segs)]
        return StepInput(tuple(times), tuple(v for _, _, v in reversed(segs)))

    def __add__(self, other: "StepInput") -> "StepInput":
        times = sorted(set(self.times) | set(other.times))
        hz = min(self.horizon, other.horizon)
        times = [x for x in times if x <= hz]
        vals = [self.at(a) + other.at(a) for a in times[:-1]]
        return StepInput(tuple(times), tuple(vals))


@dataclass(frozen=True)
class SeparableInput:
    """``[u(s)](r) = g(r) * 1{r >= s} * u0(s)`` stored by its factors.

    ``g = -h'`` with ``h`` nonincreasing, so ``int_s^inf g = h(s) - h(inf)``.
    """

    u0: PiecewiseFn
    h: PiecewiseFn
    g: PiecewiseFn

    @property
    def horizon(self) -> float:
        return math.inf

    def norm_profile(self) -> PiecewiseFn:
        """``s -> ||u(s)||_X = u0(s) (h(s) - h(inf))``; degree at most 3."""
        hh = self.h - PiecewiseFn.const(self.h.tail) if self.h.tail else self.h
        return self.u0.multiply(hh).trimmed()

    def sup_bound(self) -> float:
        """A priori bound ``||u0||_inf * ||h||_inf`` on ``||u||_{L^inf(X)}``."""
        return self.u0.sup_abs() * self.h.sup_abs()

    def at(self, s: float) -> PiecewiseFn:
        """The element ``u(s)`` of ``L^1(0, inf)``."""
        v = float(self.u0(s))
        if v == 0.0:
            return PiecewiseFn.zero()
        return self.g.restrict(s, math.inf).scale(v)

    def scale(self, c: float) -> "SeparableInput":
        return SeparableInput(self.u0.scale(c), self.h, self.g)


@dataclass(frozen=True)
class CallableInput:
    """Arbitrary ``s -> u(s)`` (a :class:`PiecewiseFn`) on ``[0, horizon]``."""

    fn: Callable[[float], PiecewiseFn]
    horizon: float = math.inf

    def at(self, s: float) -> PiecewiseFn:
        if s > self.horizon:
            raise InputDomainError(f"input undefined at s={s}")
        return self.fn(s)

    def scale(self, c: float) -> "CallableInput":
        return CallableInput(lambda s: self.fn(s).scale(c), self.horizon)


@dataclass(frozen=True)
class TimeReversed:
    """The input ``s -> base(t - s)`` on ``[0, t]``.

    Driving the mild solution with it up to time ``t`` gives
    ``T(t) x0 + Phi_t(base)``, which is how the input-to-state form enters
    trajectory-based checks.  Rearrangement-invariant norms of the reversed
    input equal those of ``base`` on ``[0, t]``.
    """

    base: object
    t: float

    @property
    def horizon(self) -> float:
        return self.t

    def scale(self, c: float) -> "TimeReversed":
        return TimeReversed(self.base.scale(c), self.t)


TranslationInput = Union[StepInput, SeparableInput, CallableInput, TimeReversed]


def input_norm_profile(model: SystemModel, u) -> PiecewiseFn:
    """Scalar function ``s -> ||u(s)||_U`` for any supported input."""
    if isinstance(u, TimeReversed):
        return input_norm_profile(model, u.base).reflect(u.t)
    if isinstance(model, TranslationL1):
        if isinstance(u, CallableInput):
            raise DomainError("norm profile of a callable input is not exact")
        return u.norm_profile()
    _check_scalar_input(u)
    return PiecewiseFn(u.breaks, np.abs(u.coeffs), abs(u.tail))


# semigroup ------------------------------------------------------------------


def _diag(model) -> Diagonal:
    return model.as_diagonal() if isinstance(model, ScalarODE) else model


def _as_vector(model, x) -> tuple[np.ndarray, bool]:
    if isinstance(x, PiecewiseFn):
        raise ModelStateMismatch(f"{model.name} model needs a finite-dimensional state")
    scalar = np.ndim(x) == 0
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.size != _diag(model).n_modes:
        raise ModelStateMismatch(f"state has {v.size} entries, model has {_diag(model).n_modes} modes")
    return v, scalar


def _out(v: np.ndarray, scalar: bool):
    return float(v[0]) if scalar else v


def apply_semigroup(model: SystemModel, t: float, x):
    """``T(t) x`` for the given model."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    if isinstance(model, TranslationL1):
        if not isinstance(x, PiecewiseFn):
            raise ModelStateMismatch("translation model needs a PiecewiseFn state")
        return x.shift_left(t)
    v, scalar = _as_vector(model, x)
    return _out(np.exp(_diag(model).eigenvalues * t) * v, scalar)


def state_norm(model: SystemModel, x) -> float:
    if isinstance(model, TranslationL1):
        return x.l1_norm()
    return float(np.abs(np.atleast_1d(x)).sum())


def zero_state(model: SystemModel):
    if isinstance(model, TranslationL1):
        return PiecewiseFn.zero()
    if isinstance(model, ScalarODE):
        return 0.0
    return np.zeros(model.n_modes)


# finite-dimensional integrals -------------------------------------------------


def _check_scalar_input(u):
    if not isinstance(u, PiecewiseFn):
        raise ModelStateMismatch("finite-dimensional models take a scalar PiecewiseFn input")
    if not u.is_piecewise_constant:
        raise DomainError("finite-dimensional models need piecewise-constant inputs")


def _scalar_segments(u: PiecewiseFn, t: float):
    """``(a, b, value)`` over ``[0, t]``, including the tail."""
    out = []
    for a, b, c in zip(u.breaks[:-1], u.breaks[1:], u.coeffs[:, 0]):
        if a >= t:
            break
        if c != 0.0:
            out.append((a, min(b, t), c))
    if u.tail != 0.0 and u.breaks[-1] < t:
        out.append((u.breaks[-1], t, u.tail))
    return out


def _exp_integral(lam: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """``int_lo^hi e^{lam s} ds`` per mode, accurate for small ``lam``."""
    w = hi - lo
    out = np.empty_like(lam)
    z = lam == 0
    out[z] = w
    nz = ~z
    out[nz] = np.exp(lam[nz] * lo) * np.expm1(lam[nz] * w) / lam[nz]
    return out


def _diag_forced(model: Diagonal, u: PiecewiseFn, t: float, reverse: bool) -> np.ndarray:
    """``int_0^t e^{lam (t - s)} b u(s) ds`` or, with ``reverse``, ``int_0^t e^{lam s} b u(s) ds``."""
    lam = model.eigenvalues
    acc = np.zeros_like(lam)
    for a, b, c in _scalar_segments(u, t):
        if reverse:
            acc += c * _exp_integral(lam, a, b)
        else:
            acc += c * _exp_integral(lam, t - b, t - a)
    return model.b * acc


# translation integrals -----------------------------------------------------------


def _translation_step(u: StepInput, t: float, reverse: bool) -> PiecewiseFn:
    if t > u.horizon:
        raise InputDomainError(f"input defined only on [0, {u.horizon}]")
    parts, weights = [], []
    for a, b, f in u.segments(t):
        F = f.antiderivative()
        if reverse:  # int_a^b T(s) f ds = F(. + b) - F(. + a)
            parts += [F.shift_left(b), F.shift_left(a)]
        else:  # int_a^b T(t - s) f ds = F(. + t - a) - F(. + t - b)
            parts += [F.shift_left(t - a), F.shift_left(t - b)]
        weights += [1.0, -1.0]
    out = linear_combination(parts, weights)
    return PiecewiseFn(out.breaks, out.coeffs, 0.0).trimmed()


def _u0_blocks(u0: PiecewiseFn, t: float):
    for a, b, c in zip(u0.breaks[:-1], u0.breaks[1:], u0.coeffs[:, 0]):
        if a >= t:
            break
        if c != 0.0:
            yield a, min(b, t), c
    if u0.tail != 0.0 and u0.breaks[-1] < t:
        yield u0.breaks[-1], t, u0.tail


def _translation_separable_ism(u: SeparableInput, t: float) -> PiecewiseFn:
    """``r -> int_0^t g(r + s) u0(s) ds = sum_j v_j (h(r + a_j) - h(r + b_j))``."""
    if not u.u0.is_piecewise_constant:
        raise DomainError("u0 must be piecewise constant")
    parts, weights = [], []
    for a, b, v in _u0_blocks(u.u0, t):
        parts.append(shift_difference(u.h, a, b))
        weights.append(v)
    out = linear_combination(parts, weights)
    return PiecewiseFn(out.breaks, out.coeffs, 0.0).trimmed()


def _translation_separable_mild(u: SeparableInput, t: float) -> PiecewiseFn:
    """Literal variation-of-parameters form for the separable input.

    ``x(t)(r) = int_0^t g(r + t - s) 1{r + t - s >= s} u0(s) ds``; on a block
    ``[a, b)`` the indicator cuts the integral at ``s = (r + t) / 2``.
    """
    if not u.u0.is_piecewise_constant:
        raise DomainError("u0 must be piecewise constant")
    parts, weights = [], []
    half = u.h.affine(0.5, 0.5 * t)
    for a, b, v in _u0_blocks(u.u0, t):
        ra, rb = max(0.0, 2 * a - t), max(0.0, 2 * b - t)
        parts.append(u.h.shift_left(t - b).restrict(rb))
        weights.append(v)
        if rb > ra:
            parts.append(half.restrict(ra, rb))
            weights.append(v)
        parts.append(u.h.shift_left(t - a).restrict(ra))
        weights.append(-v)
    out = linear_combination(parts, weights)
    return PiecewiseFn(out.breaks, out.coeffs, 0.0).trimmed()


@dataclass
class QuadratureInfo:
    panels: int
    estimate: float
    converged: bool


def _translation_callable(u: CallableInput, t: float, reverse: bool, panels: int = 16,
                          rtol: float = 1e-6, max_panels: int = 256) -> tuple[PiecewiseFn, QuadratureInfo]:
    """Composite 4-point Gauss rule in ``s``, doubling panels until the L1 change is below ``rtol``.

    Every node contributes a full translate, so the cost grows quadratically
    with the panel count; this path is a fallback for inputs without an exact
    form, not a production integrator.
    """
    if t > u.horizon:
        raise InputDomainError(f"input defined only on [0, {u.horizon}]")
    xg, wg = np.polynomial.legendre.leggauss(4)

    def rule(n: int) -> PiecewiseFn:
        edges = np.linspace(0.0, t, n + 1)
        parts, weights = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            for x, w in zip(xg, wg):
                s = lo + 0.5 * (x + 1.0) * (hi - lo)
                shift = s if reverse else t - s
                parts.append(u.at(s).shift_left(shift))
                weights.append(0.5 * w * (hi - lo))
        return linear_combination(parts, weights)

    prev = rule(panels)
    n = panels
    while True:
        n *= 2
        cur = rule(n)
        diff = (cur - prev).l1_norm()
        scale = max(cur.l1_norm(), 1e-300)
        if diff <= rtol * scale or n >= max_panels:
            info = QuadratureInfo(n, diff, diff <= rtol * scale)
            if not info.converged:
                log.warning("time quadrature stopped at %d panels, L1 change %.3g", n, diff)
            return cur, info
        prev = cur


# public operations ------------------------------------------------------------


def _check_reversal(u: TimeReversed, t: float) -> None:
    if not math.isclose(t, u.t, rel_tol=1e-15, abs_tol=0.0):
        raise InputDomainError(f"input reversed at t={u.t} cannot be evaluated at t={t}")


def input_to_state_map(model: SystemModel, u, t: float):
    """``Phi_t(u) = int_0^t T(s) B u(s) ds``."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    if isinstance(u, TimeReversed):
        _check_reversal(u, t)
        return mild_solution(model, zero_state(model), u.base, t)
    if isinstance(model, TranslationL1):
        if isinstance(u, StepInput):
            return _translation_step(u, t, reverse=True)
        if isinstance(u, SeparableInput):
            return _translation_separable_ism(u, t)
        if isinstance(u, CallableInput):
            return _translation_callable(u, t, reverse=True)[0]
        raise ModelStateMismatch(f"unsupported input {type(u).__name__} for translation model")
    _check_scalar_input(u)
    out = _diag_forced(_diag(model), u, t, reverse=True)
    return float(out[0]) if isinstance(model, ScalarODE) else out


def mild_solution(model: SystemModel, x0, u, t: float):
    """``x(t) = T(t) x0 + int_0^t T(t - s) B u(s) ds``."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    if isinstance(u, TimeReversed):
        _check_reversal(u, t)
        return apply_semigroup(model, t, x0) + input_to_state_map(model, u.base, t)
    if isinstance(model, TranslationL1):
        free = apply_semigroup(model, t, x0)
        if isinstance(u, StepInput):
            forced = _translation_step(u, t, reverse=False)
        elif isinstance(u, SeparableInput):
            forced = _translation_separable_mild(u, t)
        elif isinstance(u, CallableInput):
            forced = _translation_callable(u, t, reverse=False)[0]
        else:
            raise ModelStateMismatch(f"unsupported input {type(u).__name__} for translation model")
        return free + forced
    _check_scalar_input(u)
    v0, scalar = _as_vector(model, x0)
    model_d = _diag(model)
    x = np.exp(model_d.eigenvalues * t) * v0 + _diag_forced(model_d, u, t, reverse=False)
    return _out(x, scalar)


@dataclass
class DecayReport:
    times: np.ndarray
    norms: np.ndarray
    monotone: bool
    final_below: bool
    threshold: float


def strong_stability_probe(model: SystemModel, x, t_grid: Sequence[float], threshold: float = 1e-8) -> DecayReport:
    """``||T(t) x||`` along ``t_grid`` with a monotone-decay flag."""
    ts = np.asarray(t_grid, dtype=float)
    if ts.size == 0:
        raise DomainError("t_grid must be nonempty")
    norms = np.array([state_norm(model, apply_semigroup(model, float(t), x)) for t in ts])
    mono = bool(np.all(np.diff(norms) <= 1e-15 * np.maximum(norms[:-1], 1.0)))
    return DecayReport(ts, norms, mono, bool(norms[-1] < threshold), threshold)


def parse_model(spec: str) -> SystemModel:
    """``translation``, ``scalar:LAMBDA:B`` or ``diagonal:<csv with lambda,b>``."""
    spec = spec.strip()
    if spec == "translation":
        return TranslationL1()
    kind, _, rest = spec.partition(":")
    if kind == "scalar":
        parts = rest.split(":")
        try:
            lam = float(parts[0])
            b = float(parts[1]) if len(parts) > 1 and parts[1] else 1.0
        except (ValueError, IndexError):
            raise DomainError(f"bad scalar model spec {spec!r}") from None
        return ScalarODE(lam, b)
    if kind == "diagonal" and rest:
        from .io import read_diagonal
        lam, b = read_diagonal(rest)
        return Diagonal(lam, b)
    raise DomainError(f"unknown model spec {spec!r}")
