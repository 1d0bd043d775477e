#!/usr/bin/env python3
"""Does a faster-decaying t_k sequence change the growth of the E_Phi ratio?

The block heights only need Phi(t_k)/t_k <= 2^-k.  This script compares the
default rule (largest admissible value capped at 2^-(k+1)) with sequences
decaying faster by a factor rho per block, at equal block counts, and
reports the E_Phi and L^inf ratios at the last node together with the
logarithmic lower bound.
"""
import argparse
import sys

import numpy as np

from oiss import parse_young, run_counterexample
from oiss.counterexample import construct_u0
from oiss.io import write_table


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--phi", default="power:2")
    ap.add_argument("--blocks", type=int, default=20)
    ap.add_argument("--rho", default="1,0.75,0.5,0.25")
    ap.add_argument("--out")
    a = ap.parse_args(argv)
    phi = parse_young(a.phi)
    auto, _ = construct_u0(phi, a.blocks)
    rows = []
    for rho in [float(r) for r in a.rho.split(",")]:
        tk = auto.tk * rho ** np.arange(a.blocks)
        rep = run_counterexample(phi, a.blocks, "blocks", tk_rule=list(tk))
        last = rep.rows[-1]
        rows.append({"rho": rho, "t_last": last["t"], "x_norm": last["x_norm_fubini"],
                     "ratio_ephi_first": rep.rows[0]["ratio_ephi"], "ratio_ephi_last": last["ratio_ephi"],
                     "ratio_linf_last": last["ratio_linf"], "log_bound": rep.log_bound[-1],
                     "all_verdicts": all(rep.verdicts.values())})
    cols = ["rho", "t_last", "x_norm", "ratio_ephi_first", "ratio_ephi_last", "ratio_linf_last", "log_bound",
            "all_verdicts"]
    write_table(rows, cols, a.out if a.out else sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
