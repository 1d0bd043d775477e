import math

import numpy as np
import pytest

from oiss import ExpMinusYoung, PiecewiseFn, PowerYoung, TranslationL1, construct_h, construct_u0, input_to_state_map, luxemburg_norm, modular, run_counterexample
from oiss.counterexample import REPORT_COLUMNS, build_counterexample
from oiss.errors import ConstructionError, DomainError

SQ = PowerYoung(2.0)
TK3 = [0.5, 0.25, 0.125]


def test_u0_three_blocks():
    spec, u0 = construct_u0(SQ, 3, TK3)
    assert list(spec.breaks) == [0.0, 2.0, 6.0, 14.0]
    assert list(u0.coeffs[:, 0]) == TK3 and u0.tail == 0.0
    assert u0.integrate() == 3.0
    assert spec.check() == []


@pytest.mark.parametrize("K", [1, 5, 20, 40])
def test_u0_auto_rule(K):
    spec, u0 = construct_u0(SQ, K)
    assert u0.integrate() == pytest.approx(K, rel=1e-14)
    assert np.all(spec.tk <= 2.0 ** -(np.arange(K) + 1))
    assert modular(SQ, u0, 1.0) == pytest.approx(1 - 2.0**-K, rel=1e-14)
    assert spec.check() == []


def test_u0_auto_rule_exp_minus():
    spec, u0 = construct_u0(ExpMinusYoung(), 12)
    ratios = np.array([float(ExpMinusYoung()(t)) / t for t in spec.tk])
    assert np.all(ratios <= 2.0 ** -np.arange(12))
    assert spec.modular <= 2.0 and spec.check() == []


def test_u0_explicit_list_validated():
    with pytest.raises((ConstructionError, DomainError)):
        construct_u0(SQ, 3, [0.5, 0.6, 0.125])  # Phi(t)/t = 0.6 > 2^-1 at k = 1
    with pytest.raises((ConstructionError, DomainError)):
        construct_u0(SQ, 2, [0.5])


def test_h_three_blocks(u0_3):
    hc = construct_h(u0_3)
    assert hc.c[:3] == pytest.approx([0.5, 0.5, 0.25], rel=1e-15)
    assert hc.d[:3] == pytest.approx([2.0, 1.0, 0.8], rel=1e-15)
    assert hc.h.sup_abs() == pytest.approx(hc.d[0], rel=1e-15)
    assert hc.strictly_decreasing


def test_h_invariants(ce3):
    hc = ce3.hc
    h, g = hc.h, hc.g
    assert h(hc.nodes[:-1]) == pytest.approx(hc.d, rel=1e-14)
    # nonincreasing: g = -h' >= 0 on every piece
    assert g.min_value() >= -1e-15
    # g = -h' exactly
    assert g.allclose(h.derivative().scale(-1.0), rtol=0, atol=0)
    # C^1 at nodes: one-sided values and slopes match
    L = h.lengths
    ends = sum(h.coeffs[:, k] * L**k for k in range(4))
    assert np.allclose(ends[:-1], h.coeffs[1:, 0], rtol=1e-14)
    dends = sum(k * h.coeffs[:, k] * L ** (k - 1) for k in range(1, 4))
    assert np.allclose(dends, 0.0, atol=1e-15) and np.all(h.coeffs[:, 1] == 0.0)
    # d_{n+1} <= h <= d_n on each node interval
    xs = np.linspace(0, 1, 33)
    for n in range(h.n_pieces):
        vals = h(hc.nodes[n] + xs[:-1] * L[n])
        lo = hc.d[n + 1] if n + 1 < hc.d.size else 0.0
        assert np.all(vals <= hc.d[n] * (1 + 1e-15)) and np.all(vals >= lo * (1 - 1e-15))
    # fundamental theorem: int_s^inf g = h(s)
    for s in (0.0, 0.3, 5.5, 13.9, 20.0):
        assert g.integrate(s) == pytest.approx(float(h(s)), rel=1e-12, abs=1e-15)


def test_h_rejects_bad_input():
    with pytest.raises(DomainError):
        construct_h(PiecewiseFn.const(1.0))
    with pytest.raises(ConstructionError):
        construct_h(PiecewiseFn.zero())


def test_h_warns_on_zero_mass_interval():
    f = PiecewiseFn.steps([0, 1, 2, 3], [1.0, 0.0, 1.0])
    with pytest.warns(RuntimeWarning):
        hc = construct_h(f)
    assert not hc.strictly_decreasing and hc.g.min_value() >= 0.0


def test_input_norm_identity(ce3):
    prof = ce3.u.norm_profile()
    assert prof(0.0) == pytest.approx(1.0, rel=1e-15)
    assert ce3.u.at(20.0).l1_norm() == 0.0
    assert prof.degree <= 3
    for s in (0.5, 3.0, 10.0):
        assert ce3.u.at(s).l1_norm() == pytest.approx(float(prof(s)), rel=1e-12)
    assert ce3.u.sup_bound() == pytest.approx(0.5 * 2.0)


def test_report_three_blocks():
    rep = run_counterexample(SQ, 3, t_grid="blocks", tk_rule=TK3)
    assert rep.column("t").tolist() == [2.0, 6.0, 14.0]
    assert tuple(rep.rows[0].keys()) == REPORT_COLUMNS
    assert np.all(rep.column("ratio_l1") <= 1 + 1e-9)
    assert rep.fubini_ok and rep.ephi_within_bound


def test_report_l1_path_equality():
    rep = run_counterexample(SQ, 6, t_grid="breakpoints")
    x, ul1 = rep.column("x_norm_fubini"), rep.column("u_l1")
    assert np.allclose(x, ul1, rtol=1e-12)


def test_report_explicit_grid():
    rep = run_counterexample(SQ, 3, t_grid=np.array([1.0, 7.5]), tk_rule=TK3)
    assert rep.column("t").tolist() == [1.0, 7.5]
    ce = rep.construction
    assert rep.rows[1]["x_norm_direct"] == pytest.approx(input_to_state_map(TranslationL1(), ce.u, 7.5).l1_norm())


def test_ephi_bound_formula():
    ce = build_counterexample(SQ, 5)
    rep = run_counterexample(SQ, 5)
    bound = ce.hc.h.sup_abs() * luxemburg_norm(SQ, ce.u0).value
    assert rep.rows[0]["ephi_bound"] == pytest.approx(bound, rel=1e-9)


@pytest.mark.slow
def test_report_exp_minus_runs():
    rep = run_counterexample(ExpMinusYoung(), 12)
    assert rep.fubini_ok and rep.l1_bounded and rep.ephi_within_bound and rep.log_bound_ok
