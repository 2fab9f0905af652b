"""Max gap between g and its envelopes on a z-grid, against the modulus bound,
as n grows.

    python scripts/envelope_convergence.py --ladder 4 8 16 32 64
"""
import argparse

import numpy as np

from bsde_envelope import Generator, verify_lemma1


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--ladder", type=float, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--K", type=float, default=1.5)
    p.add_argument("--alpha", type=float, default=2 / 3)
    args = p.parse_args()
    g = Generator.power_z(args.K, args.alpha)
    z = np.round(np.arange(-3.0, 3.0 + 1e-9, 0.05), 12)
    rep = verify_lemma1(g, args.ladder, z)
    for name, chk in rep.checks.items():
        print(f"{name:14s} pass={chk.passed} worst={chk.worst:.3e}")
    print(f"{'n':>6} {'max gap':>10} {'bound':>10}")
    for n in rep.n_list:
        print(f"{n:6g} {rep.max_gap[n]:10.3e} {rep.gap_bound[n]:10.3e}")


if __name__ == "__main__":
    main()
