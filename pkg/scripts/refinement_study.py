"""Error of the explicit scheme at x = 0, t = 0 against closed forms, over a
sequence of space grids (dx halves at each level).

    python scripts/refinement_study.py --levels 201 401 801 1601
"""
import argparse

import numpy as np

from bsde_envelope import Generator, GridConfig, TerminalCondition, solve_fd

CASES = {
    "heat, x^2": (Generator.zero(), TerminalCondition.polynomial([0, 0, 1]), 1.0, 6.0, 1.0,
                  1.0),
    "g=z, x": (Generator.linear_in_z([1.0]), TerminalCondition.polynomial([0, 1]), 1.0, 6.0,
               1.0, 1.0),
    "heat, cos": (Generator.zero(), TerminalCondition.cosine(), 0.5, 6.0, 1.0,
                  float(np.exp(-0.25))),
    "quartic": (Generator.power_z(1.5, 2 / 3), TerminalCondition.quartic_arbitrage(1.0), 0.25,
                4.0, 50.0, 1.0),
}


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--levels", type=int, nargs="+", default=[201, 401, 801])
    args = p.parse_args()
    for name, (g, phi, T, L, n_max, exact) in CASES.items():
        errs = [abs(solve_fd(g, phi, GridConfig.fitted(T, L, nx, n_max)).y0 - exact)
                for nx in args.levels]
        ratios = [a / b if b else float("inf") for a, b in zip(errs, errs[1:])]
        print(f"{name:10s} errors " + " ".join(f"{e:.2e}" for e in errs)
              + "  ratios " + " ".join(f"{r:.2f}" for r in ratios))


if __name__ == "__main__":
    main()
