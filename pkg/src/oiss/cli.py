"""Command-line front end: ``oiss <subcommand> ...``.

Exit codes: 0 success, 1 a requested mathematical check failed, 2 usage or
parse error.  All tables are CSV with a header row and 17 significant
digits, so reruns with the same arguments are byte-identical.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .admissibility import (
    DEFAULT_SLACK,
    ComparisonFn,
    estimate_theta,
    family_generator,
    infinite_time_verdict,
    reversed_family,
    verify_siiss,
    verify_siss,
)
from .counterexample import REPORT_COLUMNS, build_counterexample, run_counterexample
from .errors import OissError
from .io import fmt, parse_grid, read_config, read_piecewise, write_piecewise, write_table
from .orlicz import DEFAULT_TOL, NormSpec, luxemburg_norm, lp_norm
from .piecewise import PiecewiseFn
from .systems import (
    Diagonal,
    StepInput,
    TranslationL1,
    input_norm_profile,
    mild_solution,
    parse_model,
    state_norm,
)
from .young import check_young, delta2_index, eval_young, majorant_phi1, parse_young

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _slack_default() -> float:
    env = os.environ.get("OISS_TOL")
    if env is None:
        return DEFAULT_SLACK
    try:
        return float(env)
    except ValueError:
        raise UsageError(f"OISS_TOL must be a number, got {env!r}") from None


def _emit(rows, columns, path: Optional[str]) -> None:
    if path:
        write_table(rows, columns, path)
    else:
        write_table(rows, columns, sys.stdout)


# young -------------------------------------------------------------------------


def cmd_young(a) -> int:
    phi = parse_young(a.phi)
    if a.action == "check":
        grid = parse_grid(a.grid)
        rep = check_young(phi, grid, a.blowup_threshold)
        rows = [{"property": c.name, "passed": str(c.passed).lower(),
                 "first_failure": "" if c.first_failure is None else fmt(c.first_failure), "detail": c.detail}
                for c in rep.checks]
        _emit(rows, ["property", "passed", "first_failure", "detail"], a.out)
        return EXIT_OK if rep.ok else EXIT_FAIL
    if a.action == "delta2":
        res = delta2_index(phi, None if a.grid_d2 is None else parse_grid(a.grid_d2))
        _emit([{"spec": phi.spec(), "index": res.index, "verdict": res.verdict, "max_ratio": res.max_ratio}],
              ["spec", "index", "verdict", "max_ratio"], a.out)
        return EXIT_OK
    if a.action == "eval":
        ts = parse_grid(a.t, allow_zero=True)
        _emit([{"t": t, "Phi": eval_young(phi, float(t))} for t in ts], ["t", "Phi"], a.out)
        return EXIT_OK
    # majorant
    maj = majorant_phi1(phi)
    xs = parse_grid(a.grid, allow_zero=True)
    rows = [{"x": x, "Phi": eval_young(phi, float(x)), "Phi1": eval_young(maj, float(x))} for x in xs]
    _emit(rows, ["x", "Phi", "Phi1"], a.out)
    return EXIT_OK


# norm ----------------------------------------------------------------------------


def cmd_norm(a) -> int:
    f = read_piecewise(a.input)
    if a.kind == "luxemburg":
        res = luxemburg_norm(parse_young(a.phi), f, a.tol)
        lo, hi = res.bracket
    else:
        p = math.inf if a.p in ("inf", "linf") else float(a.p)
        res = lp_norm(f, p)
        lo = hi = res.value
    _emit([{"value": res.value, "k_lo": lo, "k_hi": hi}], ["value", "k_lo", "k_hi"], a.out)
    return EXIT_OK


# simulate --------------------------------------------------------------------------


def _read_state(model, spec: str):
    if isinstance(model, TranslationL1):
        return read_piecewise(spec) if spec else PiecewiseFn.zero()
    n = model.n_modes if isinstance(model, Diagonal) else 1
    if not spec:
        return 0.0 if n == 1 else np.zeros(n)
    if Path(spec).exists():
        vals = np.loadtxt(spec, delimiter=",", skiprows=1, ndmin=1, usecols=0)
    else:
        try:
            vals = np.array([float(v) for v in spec.split(",")])
        except ValueError:
            raise UsageError(f"--x0 must be a path or numbers, got {spec!r}") from None
    if n == 1:
        return float(vals[0])
    if vals.size != n:
        raise UsageError(f"--x0 has {vals.size} entries, model has {n} modes")
    return vals


def _read_input(model, spec: str):
    if not spec:
        return StepInput.constant(PiecewiseFn.zero()) if isinstance(model, TranslationL1) else PiecewiseFn.zero()
    f = read_piecewise(spec)
    # translation: the same element of L^1 at every time; scalar: u(s) itself
    return StepInput.constant(f) if isinstance(model, TranslationL1) else f


def cmd_simulate(a) -> int:
    model = parse_model(a.model)
    x0 = _read_state(model, a.x0)
    u = _read_input(model, a.input)
    x = mild_solution(model, x0, u, a.t)
    if isinstance(model, TranslationL1):
        write_piecewise(x, a.out or sys.stdout)
    else:
        vals = np.atleast_1d(x)
        _emit([{"k": k + 1, "x": v} for k, v in enumerate(vals)], ["k", "x"], a.out)
    prof = input_norm_profile(model, u).restrict(0.0, a.t) if a.t > 0 else PiecewiseFn.zero()
    norms = {"t": a.t, "state_norm": state_norm(model, x), "input_l1": lp_norm(prof, 1).value,
             "input_linf": lp_norm(prof, math.inf).value}
    _emit([norms], list(norms), a.norms_out)
    return EXIT_OK


# admissibility ----------------------------------------------------------------------


def _counterexample(a):
    return build_counterexample(parse_young(a.phi), a.blocks)


def _grid(a, ce=None):
    g = parse_grid(a.t_grid)
    if isinstance(g, str):
        if ce is None:
            raise UsageError(f"--t-grid {g} needs the counterexample family")
        return ce.breakpoints if g == "breakpoints" else ce.blocks.breaks[1:]
    return g


def cmd_admissibility(a) -> int:
    model = parse_model(a.model)
    ce = _counterexample(a) if a.family == "counterexample" else None
    gen = family_generator(a.family, model, seed=a.seed, counterexample=ce)
    rep = infinite_time_verdict(model, NormSpec.parse(a.z), _grid(a, ce), gen, a.growth)
    _emit(rep.rows(), ["t", "best_ratio", "witness", "verdict"], a.out)
    return EXIT_OK


def cmd_theta(a) -> int:
    model = parse_model(a.model)
    gen = family_generator(a.family, model, seed=a.seed)
    alphas = parse_grid(a.alphas, allow_zero=True)
    tab = estimate_theta(model, parse_young(a.phi), alphas, gen, _grid(a))
    _emit(tab.rows(), ["alpha", "theta", "raw", "witness"], a.out)
    return EXIT_OK


# counterexample ----------------------------------------------------------------------


def cmd_counterexample(a) -> int:
    grid = parse_grid(a.t_grid)
    rep = run_counterexample(parse_young(a.phi), a.blocks, grid, a.tol, unit_span=a.unit_span)
    _emit(rep.rows, list(REPORT_COLUMNS), a.out)
    if a.dump_functions:
        d = Path(a.dump_functions)
        d.mkdir(parents=True, exist_ok=True)
        ce = rep.construction
        write_piecewise(ce.u0, d / "u0.csv")
        write_piecewise(ce.hc.h, d / "h.csv")
        write_piecewise(ce.hc.g, d / "g.csv")
    for name, ok in rep.verdicts.items():
        print(f"# {name}: {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if all(rep.verdicts.values()) else EXIT_FAIL


# verify -------------------------------------------------------------------------------


def _comparison(spec: str, klass: str) -> ComparisonFn:
    """``linear:SLOPE`` or ``power:P[:COEF]``."""
    kind, _, rest = spec.partition(":")
    try:
        parts = [float(v) for v in rest.split(":")] if rest else []
    except ValueError:
        raise UsageError(f"bad comparison function {spec!r}") from None
    if kind in ("linear", "id"):
        return ComparisonFn.linear(parts[0] if parts else 1.0, klass)
    if kind == "power" and parts:
        return ComparisonFn.power_fn(parts[0], parts[1] if len(parts) > 1 else 1.0, klass)
    raise UsageError(f"bad comparison function {spec!r}")


def _beta(model, spec: str, x0):
    if spec == "orbit":
        return ComparisonFn.orbit(model, x0)
    if spec.startswith("exp"):
        _, _, rate = spec.partition(":")
        amp = state_norm(model, x0)
        return ComparisonFn.exp_decay(amp, float(rate) if rate else 1.0)
    raise UsageError(f"bad beta {spec!r} (use orbit or exp[:RATE])")


def cmd_verify(a) -> int:
    model = parse_model(a.model)
    x0 = _read_state(model, a.x0)
    ce = None
    if a.family == "counterexample":
        if not isinstance(model, TranslationL1):
            raise UsageError("the counterexample family needs --model translation")
        ce = _counterexample(a)
        u = reversed_family(ce.u)
    elif a.family == "constant":
        if isinstance(model, TranslationL1):
            raise UsageError("the constant family needs a scalar-input model")
        u = PiecewiseFn.const(1.0)
    elif a.family == "input":
        u = _read_input(model, a.input)
    else:
        raise UsageError(f"unknown family {a.family!r}")
    if a.t_grid is None:
        grid = ce.breakpoints[-1:] if ce is not None else np.array([0.5, 1.0, 2.0, 5.0])
    else:
        grid = _grid(a, ce)
    beta = _beta(model, a.beta, x0)
    slack = _slack_default() if a.slack is None else a.slack
    if a.mode == "siss":
        res = verify_siss(model, x0, u, grid, beta, _comparison(a.mu, "K"), NormSpec.parse(a.z), slack)
    else:
        res = verify_siiss(model, x0, u, grid, beta, _comparison(a.theta, "Kinf"), _comparison(a.mu, "K"), slack)
    rows = [{"t": r["t"], "lhs": r["lhs"], "rhs": r["rhs"], "ok": str(r["ok"]).lower()} for r in res.rows()]
    _emit(rows, ["t", "lhs", "rhs", "ok"], a.out)
    return EXIT_OK if res.passed else EXIT_FAIL


# parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="oiss", description="Orlicz-space input-to-state stability toolkit")
    p.add_argument("--version", action="version", version=f"oiss {__version__}")
    cfg = _Parser(add_help=False)
    cfg.add_argument("--config", help="flat key = value file supplying defaults for the subcommand")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[cfg], **kw)

    sub.add_parser = add_parser

    y = sub.add_parser("young", help="Young functions: checks, Delta_2, evaluation, majorant")
    y.add_argument("action", choices=["check", "delta2", "eval", "majorant"])
    y.add_argument("--phi", default="power:2")
    y.add_argument("--grid", default="log:1e-6:1e2:200")
    y.add_argument("--grid-d2", dest="grid_d2", default=None)
    y.add_argument("--t", default="1")
    y.add_argument("--blowup-threshold", dest="blowup_threshold", type=float, default=10.0)
    y.add_argument("--out")
    y.set_defaults(func=cmd_young)

    n = sub.add_parser("norm", help="Luxemburg or L^p norm of a piecewise function")
    n.add_argument("--phi", default="power:2")
    n.add_argument("--kind", choices=["luxemburg", "lp"], default="luxemburg")
    n.add_argument("--p", default="1")
    n.add_argument("--input", required=True)
    n.add_argument("--tol", type=float, default=DEFAULT_TOL)
    n.add_argument("--out")
    n.set_defaults(func=cmd_norm)

    s = sub.add_parser("simulate", help="mild solution at time T")
    s.add_argument("--model", required=True)
    s.add_argument("--x0", default="")
    s.add_argument("--input", default="")
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--out")
    s.add_argument("--norms-out", dest="norms_out")
    s.set_defaults(func=cmd_simulate)

    def common_family(q, default_family):
        q.add_argument("--model", default="translation")
        q.add_argument("--family", default=default_family)
        q.add_argument("--phi", default="power:2")
        q.add_argument("--blocks", type=int, default=40)
        q.add_argument("--seed", type=int, default=0)
        q.add_argument("--out")

    ad = sub.add_parser("admissibility", help="lower bounds for c(t) and an infinite-time verdict")
    common_family(ad, "shifted-bumps")
    ad.add_argument("--z", default="l1")
    ad.add_argument("--t-grid", dest="t_grid", default="log:1:1e6:13")
    ad.add_argument("--growth", type=float, default=2.0)
    ad.set_defaults(func=cmd_admissibility)

    th = sub.add_parser("theta", help="lower-bound estimate of the theta gain")
    common_family(th, "bumps")
    th.add_argument("--alphas", default="0,1e-6,1e-4,1e-2,1")
    th.add_argument("--t-grid", dest="t_grid", default="1,2,5")
    th.set_defaults(func=cmd_theta)

    c = sub.add_parser("counterexample", help="build and certify the separable counterexample")
    c.add_argument("--phi", default="power:2")
    c.add_argument("--blocks", type=int, default=40)
    c.add_argument("--t-grid", dest="t_grid", default="breakpoints")
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--unit-span", dest="unit_span", type=float, default=64)
    c.add_argument("--out")
    c.add_argument("--dump-functions", dest="dump_functions")
    c.set_defaults(func=cmd_counterexample)

    v = sub.add_parser("verify", help="check an sISS or siISS certificate along a time grid")
    common_family(v, "counterexample")
    v.add_argument("--mode", choices=["siss", "siiss"], default="siss")
    v.add_argument("--z", default="linf")
    v.add_argument("--x0", default="")
    v.add_argument("--input", default="")
    v.add_argument("--t-grid", dest="t_grid", default=None)
    v.add_argument("--beta", default="orbit")
    v.add_argument("--mu", default="linear:1")
    v.add_argument("--theta", default="linear:1")
    v.add_argument("--slack", type=float, default=None)
    v.set_defaults(func=cmd_verify)
    return p


def _config_path(argv: Sequence[str]) -> Optional[str]:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults that flags override."""
    path = _config_path(argv)
    subs = parser._subparsers._group_actions[0].choices
    command = next((tok for tok in argv if tok in subs), None)
    if path is None or command is None:
        return parser.parse_args(argv)
    try:
        cfg = read_config(path)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    sub = subs[command]
    known = {a.dest: a for a in sub._actions}
    unknown = sorted(k for k in cfg if k not in known or k in ("help", "config"))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    defaults = {}
    for k, v in cfg.items():
        act = known[k]
        try:
            defaults[k] = act.type(v) if act.type is not None else v
        except ValueError:
            raise UsageError(f"config key {k}: bad value {v!r}") from None
        if act.choices is not None and defaults[k] not in act.choices:
            raise UsageError(f"config key {k}: {v!r} not in {sorted(act.choices)}")
        act.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, list(sys.argv[1:] if argv is None else argv))
        return args.func(args)
    except UsageError as exc:
        print(f"oiss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OissError, ValueError, OSError) as exc:
        print(f"oiss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
