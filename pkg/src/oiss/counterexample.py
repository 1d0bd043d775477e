"""A system that is L^1-admissible for all time but not E_Phi- or L^inf-admissible.

The system is left translation on ``X = U = L^1(0, inf)`` with ``B = I``.
The witness input is ``[u(s)](r) = g(r) 1{r >= s} u0(s)`` where

* ``u0 = sum_k t_k 1_{I_k}`` is bounded, Orlicz-integrable and not in ``L^1``
  (blocks of length ``1/t_k`` each carrying mass 1);
* ``h`` is a C^1 nonincreasing function squeezed between the reciprocal
  partial masses ``d_n = 1 / (c_0 + ... + c_n)``, ``c_n`` being the mass of
  ``u0`` on the ``n``-th node interval, so that ``int u0 h`` still diverges;
* ``g = -h'``.

Everything is truncated to ``K`` blocks; divergence is certified by monotone
growth plus the lower bound ``int_0^t u0 h >= ln(S(t) / S_0)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import ConstructionError, DomainError
from .orlicz import DEFAULT_TOL, luxemburg_norm
from .piecewise import NCOEF, PiecewiseFn, merge_breaks
from .systems import SeparableInput, TranslationL1, input_to_state_map
from .young import YoungFunction, eval_young

DEFAULT_UNIT_SPAN = 64


@dataclass(frozen=True)
class BlockSpec:
    """Block heights ``t_k`` and the contiguous intervals ``I_k`` of length ``1/t_k``."""

    tk: np.ndarray
    breaks: np.ndarray
    ratios: np.ndarray  # Phi(t_k) / t_k
    modular: float  # sum_k Phi(t_k) / t_k

    @property
    def K(self) -> int:
        return self.tk.size

    def check(self) -> list[str]:
        """Names of violated invariants (empty when the construction is valid)."""
        bad = []
        k = np.arange(self.K)
        if np.any(self.ratios > 2.0 ** (-k)):
            bad.append("Phi(t_k)/t_k <= 2^-k")
        if self.breaks[0] != 0.0 or np.any(np.diff(self.breaks) <= 0):
            bad.append("blocks contiguous from 0")
        if self.modular > 2.0:
            bad.append("modular <= 2")
        return bad


def _largest_admissible(phi: YoungFunction, bound: float, iters: int = 200) -> float:
    # Phi(t)/t is nondecreasing for convex Phi with Phi(0) = 0
    lo, hi = 0.0, 1.0
    if eval_young(phi, 1.0) <= bound:
        return 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if eval_young(phi, mid) / mid <= bound:
            lo = mid
        else:
            hi = mid
    return lo


def construct_u0(phi: YoungFunction, K: int, tk_rule: Union[str, Sequence[float]] = "auto"):
    """Build the block function ``u0 = sum_k t_k 1_{I_k}``.

    With ``tk_rule="auto"`` each ``t_k`` is the largest value in ``(0, 1)``
    with ``Phi(t)/t <= 2^-k``, capped at ``2^-(k+1)``.  An explicit list is
    used as given and validated.

    Returns
    -------
    (BlockSpec, PiecewiseFn)
    """
    if K < 1:
        raise DomainError("need at least one block")
    if isinstance(tk_rule, str):
        if tk_rule != "auto":
            raise DomainError(f"unknown t_k rule {tk_rule!r}")
        tk = []
        for k in range(K):
            t = _largest_admissible(phi, 2.0 ** (-k))
            if t <= 0.0:
                raise ConstructionError(f"no admissible t_k in (0, 1) for k={k}")
            tk.append(min(t, 2.0 ** (-(k + 1))))
        tk = np.array(tk)
    else:
        tk = np.asarray(tk_rule, dtype=float)
        if tk.size != K:
            raise DomainError(f"expected {K} values of t_k, got {tk.size}")
        if np.any((tk <= 0) | (tk >= 1)):
            raise ConstructionError("t_k must lie in (0, 1)")
    ratios = np.array([eval_young(phi, t) / t for t in tk])
    breaks = np.concatenate([[0.0], np.cumsum(1.0 / tk)])
    spec = BlockSpec(tk, breaks, ratios, float(np.sum(ratios)))
    bad = spec.check()
    if bad:
        raise ConstructionError(f"block construction violates: {', '.join(bad)}")
    return spec, PiecewiseFn.steps(breaks, tk)


@dataclass(frozen=True)
class HConstruction:
    """The decreasing weight ``h``, ``g = -h'`` and the sequences behind them."""

    h: PiecewiseFn
    g: PiecewiseFn
    nodes: np.ndarray  # x_0 = 0 < x_1 < ... < x_M
    c: np.ndarray  # mass of f on [x_n, x_{n+1})
    S: np.ndarray  # partial sums c_0 + ... + c_n
    d: np.ndarray  # 1 / S
    strictly_decreasing: bool


def _nodes(f: PiecewiseFn, unit_span: float) -> np.ndarray:
    end = f.support_end
    n_unit = int(min(math.floor(end), unit_span))
    pts = [np.arange(n_unit + 1, dtype=float), f.breaks, [0.0, end]]
    nodes = merge_breaks(pts)
    return nodes[nodes <= end]


def construct_h(f: PiecewiseFn, unit_span: float = DEFAULT_UNIT_SPAN) -> HConstruction:
    """Build ``h`` and ``g = -h'`` from a nonnegative bounded ``f``.

    Nodes are the integers up to ``unit_span`` (unit intervals, as in the
    classical construction) followed by the breakpoints of ``f``; unit nodes
    over a support of length 1e12 are not representable.  ``h(x_n) = d_n``
    and on each node interval ``h`` is a cubic smoothstep
    ``h = d_{n+1} + (d_n - d_{n+1}) sigma((x_{n+1} - x) / L)`` with
    ``sigma(y) = 3y^2 - 2y^3``, which is C^1 with zero slope at every node.
    The value at the final node is 0 and so is the tail, making
    ``int_s^inf g = h(s)`` exact.
    """
    if f.tail != 0.0:
        raise DomainError("f must be truncated (zero tail)")
    if not f.is_piecewise_constant:
        raise DomainError("f must be piecewise constant")
    if f.min_value() < 0:
        raise DomainError("f must be nonnegative")
    nodes = _nodes(f, unit_span)
    if nodes.size < 2:
        raise ConstructionError("f has empty support")
    c = np.array([f.integrate(a, b) for a, b in zip(nodes[:-1], nodes[1:])])
    if c[0] <= 0:
        raise ConstructionError("f has no mass on the first node interval")
    S = np.cumsum(c)
    d = 1.0 / S
    strict = bool(np.all(c[1:] > 0))
    if not strict:
        warnings.warn("f has a zero-mass node interval; d is not strictly decreasing", RuntimeWarning, stacklevel=2)
    top = d
    bottom = np.append(d[1:], 0.0)
    delta = top - bottom
    L = np.diff(nodes)
    coeffs = np.zeros((L.size, NCOEF))
    # d_n - 3 delta z^2 + 2 delta z^3 with z = y / L
    coeffs[:, 0] = top
    coeffs[:, 2] = -3.0 * delta / L**2
    coeffs[:, 3] = 2.0 * delta / L**3
    h = PiecewiseFn(nodes, coeffs, 0.0)
    g = h.derivative().scale(-1.0)
    return HConstruction(h, g, nodes, c, S, d, strict)


def build_input(u0: PiecewiseFn, h: PiecewiseFn, g: Optional[PiecewiseFn] = None) -> SeparableInput:
    """Factored input ``[u(s)](r) = g(r) 1{r >= s} u0(s)``."""
    if g is None:
        g = h.derivative().scale(-1.0)
    return SeparableInput(u0, h, g)


@dataclass
class Counterexample:
    phi: YoungFunction
    blocks: BlockSpec
    u0: PiecewiseFn
    hc: HConstruction
    u: SeparableInput

    @property
    def breakpoints(self) -> np.ndarray:
        """Evaluation times: every node of ``h`` after 0 (includes all block ends)."""
        return self.hc.nodes[1:]


def build_counterexample(phi: YoungFunction, K: int, tk_rule="auto", unit_span: float = DEFAULT_UNIT_SPAN) -> Counterexample:
    blocks, u0 = construct_u0(phi, K, tk_rule)
    hc = construct_h(u0, unit_span)
    return Counterexample(phi, blocks, u0, hc, build_input(u0, hc.h, hc.g))


REPORT_COLUMNS = ("t", "x_norm_fubini", "x_norm_direct", "u_l1", "u_ephi", "ephi_bound",
                  "ratio_l1", "ratio_ephi", "ratio_linf")


@dataclass
class CounterexampleReport:
    """Per-time comparison of the state norm against three input norms."""

    construction: Counterexample
    rows: list[dict] = field(default_factory=list)
    partial_mass: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_bound: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def fubini_ok(self) -> bool:
        a, b = self.column("x_norm_fubini"), self.column("x_norm_direct")
        return bool(np.all(np.abs(a - b) <= 1e-9 * np.maximum(np.abs(a), 1e-300)))

    @property
    def l1_bounded(self) -> bool:
        return bool(np.all(self.column("ratio_l1") <= 1.0 + 1e-9))

    @property
    def ephi_within_bound(self) -> bool:
        return bool(np.all(self.column("u_ephi") <= self.column("ephi_bound") + 1e-9))

    @property
    def ephi_growing(self) -> bool:
        return bool(np.all(np.diff(self.column("ratio_ephi")) > 0))

    @property
    def linf_growing(self) -> bool:
        return bool(np.all(np.diff(self.column("ratio_linf")) > 0))

    @property
    def log_bound_ok(self) -> bool:
        return bool(np.all(self.column("x_norm_fubini") >= self.log_bound - 1e-6))

    @property
    def verdicts(self) -> dict[str, bool]:
        return {
            "fubini_identity": self.fubini_ok,
            "l1_ratio_le_1": self.l1_bounded,
            "ephi_norm_within_bound": self.ephi_within_bound,
            "ephi_ratio_increasing": self.ephi_growing,
            "linf_ratio_increasing": self.linf_growing,
            "log_lower_bound": self.log_bound_ok,
        }


def run_counterexample(phi: YoungFunction, K: int, t_grid="breakpoints", tol: float = DEFAULT_TOL,
                       tk_rule="auto", unit_span: float = DEFAULT_UNIT_SPAN) -> CounterexampleReport:
    """Evaluate the counterexample on a time grid.

    ``t_grid`` is ``"breakpoints"`` (every node of ``h``, which includes every
    block end), ``"blocks"`` (block ends only) or an explicit increasing
    array of positive times.
    """
    ce = build_counterexample(phi, K, tk_rule, unit_span)
    if isinstance(t_grid, str):
        if t_grid == "breakpoints":
            ts = ce.breakpoints
        elif t_grid == "blocks":
            ts = ce.blocks.breaks[1:]
        else:
            raise DomainError(f"unknown grid {t_grid!r}")
    else:
        ts = np.asarray(t_grid, dtype=float)
        if ts.size == 0 or np.any(ts <= 0) or np.any(np.diff(ts) <= 0):
            raise DomainError("time grid must be positive and strictly increasing")
    model = TranslationL1()
    prof = ce.u.norm_profile()
    bound = ce.hc.h.sup_abs() * luxemburg_norm(phi, ce.u0, tol).value
    S0 = ce.hc.S[0]
    rep = CounterexampleReport(ce)
    masses, logs = [], []
    for t in ts:
        t = float(t)
        local = prof.restrict(0.0, t)
        fub = prof.integrate(0.0, t)
        direct = input_to_state_map(model, ce.u, t).l1_norm()
        u_l1 = local.l1_norm()
        u_ephi = luxemburg_norm(phi, local, tol).value
        u_inf = local.sup_abs()
        rep.rows.append({
            "t": t,
            "x_norm_fubini": fub,
            "x_norm_direct": direct,
            "u_l1": u_l1,
            "u_ephi": u_ephi,
            "ephi_bound": bound,
            "ratio_l1": direct / u_l1,
            "ratio_ephi": direct / u_ephi,
            "ratio_linf": direct / u_inf,
        })
        mass = ce.u0.integrate(0.0, t)
        masses.append(mass)
        logs.append(math.log(mass / S0))
    rep.partial_mass = np.array(masses)
    rep.log_bound = np.array(logs)
    return rep
