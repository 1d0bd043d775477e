#!/usr/bin/env python3
"""Delta_2 indices and majorant ratios for a few Young functions.

Prints, per function, the sampled sup of Phi(2s)/Phi(s), the verdict, and
the largest Phi(cx)/Phi_1(x) over a log grid for c in {0.5, 1, 2, 10}.
"""
import sys

import numpy as np

from oiss import ExpMinusYoung, PowerYoung, delta2_index, majorant_phi1
from oiss.io import write_table

FUNCTIONS = [PowerYoung(1.0), PowerYoung(1.5), PowerYoung(2.0), PowerYoung(3.0), PowerYoung(5.0), ExpMinusYoung()]
CS = (0.5, 1.0, 2.0, 10.0)


def main():
    grid = np.logspace(-6, 2, 400)
    rows = []
    for phi in FUNCTIONS:
        d2 = delta2_index(phi)
        maj = majorant_phi1(phi)
        row = {"phi": phi.spec(), "index": d2.index, "verdict": d2.verdict}
        with np.errstate(over="ignore", invalid="ignore"):
            for c in CS:
                ratio = np.asarray(phi(c * grid), dtype=float) / np.asarray(maj(grid), dtype=float)
                row[f"max_ratio_c{c:g}"] = float(np.nanmax(ratio))
        rows.append(row)
    write_table(rows, ["phi", "index", "verdict"] + [f"max_ratio_c{c:g}" for c in CS], sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
