"""Run the sandwich ladder for g(z) = 3/2 |z|^(2/3), Phi = cos, and print the
gap table next to its bound.

    python scripts/squeeze_ladder.py --nx 513 --ladder 4 8 16 32 64
"""
import argparse

from bsde_envelope import (Generator, GridConfig, SqueezeConfig, TerminalCondition,
                           check_monotone, run_squeeze, uniqueness_certificate)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--nx", type=int, default=257)
    p.add_argument("--L", type=float, default=4.0)
    p.add_argument("--T", type=float, default=0.5)
    p.add_argument("--ladder", type=float, nargs="+", default=[4, 8, 16, 32])
    p.add_argument("--threads", type=int, default=None)
    args = p.parse_args()

    grid = GridConfig.fitted(args.T, args.L, args.nx, max(args.ladder))
    if grid.num_time_steps % 2:
        grid = GridConfig(grid.T, grid.num_time_steps + 1, args.L, args.nx, grid.n_max)
    cfg = SqueezeConfig(Generator.power_z(1.5, 2 / 3), TerminalCondition.cosine(), grid,
                        tuple(args.ladder))
    rep = run_squeeze(cfg, workers=args.threads)
    print(f"dx={grid.dx:.4g} dt={grid.dt:.3g} steps={grid.num_time_steps} "
          f"monotone={grid.monotone}")
    print(f"{'n':>6} {'y_lower0':>12} {'y_upper0':>12} {'gap':>10} {'bound':>10} {'eps':>10}")
    for r in rep.rows:
        print(f"{r.n:6g} {r.y_lower0:12.8f} {r.y_upper0:12.8f} {r.gap:10.3e} "
              f"{r.bound:10.3e} {r.eps_num:10.2e}")
    if len(rep.rows) >= 2:
        print("monotone in n:", check_monotone(rep).passed)
    if len(rep.rows) >= 3:
        cert = uniqueness_certificate(rep)
        print(f"certificate: {cert.passed}  extrapolated gap limit {cert.extrapolated_limit:.2e}")


if __name__ == "__main__":
    main()
