"""Acceptance criteria 1-7, one test each. Each prints a PASS/FAIL line."""
import filecmp
import os

import numpy as np
import pytest

from bsde_envelope import (EnvelopeGenerator, Generator, GridConfig, SqueezeConfig,
                           TerminalCondition, check_monotone, eval_envelope, run_squeeze,
                           simulate_paths, solve_fd, strict_comparison_demo,
                           uniqueness_certificate, verify_lemma1, verify_sqrt_family)
from bsde_envelope.cli import main
from bsde_envelope.config import load_config
from bsde_envelope.counterexamples import SqrtFamilyMember

from test_generators import brute_envelope

POWER = Generator.power_z(1.5, 2 / 3)


def test_1_envelope_properties(acceptance):
    z = np.round(np.arange(-3.0, 3.0 + 1e-9, 0.05), 12)
    rep = verify_lemma1(POWER, [4, 8, 16, 32], z)
    worst = {k: c.worst for k, c in rep.checks.items()}
    ok = rep.passed and all(worst[k] <= 0.0 for k in ("i_sandwich", "ii_monotone", "v_bound"))
    acceptance(1, ok, f"worst violations {worst}, h={rep.lattice_step_h:.3g}")
    assert ok


def test_2_envelope_closed_form(acceptance):
    errs = {}
    for n in (4, 10, 32):
        lattice = float(eval_envelope(EnvelopeGenerator(POWER, n, "upper"), 0.0, 0.0))
        brute = brute_envelope(lambda u: POWER.evaluate(0.0, u), n, 0.0, "upper", 3 * 3.0 / (n - 1.5), 1e-6)
        errs[n] = max(abs(lattice - 1 / (2 * n**2)), abs(lattice - brute))
    ok = all(e <= 1e-4 for e in errs.values())
    acceptance(2, ok, "max error " + ", ".join(f"n={n}: {e:.2e}" for n, e in errs.items()))
    assert ok


def _error(g, phi, T, L, nx, n_max, exact):
    return solve_fd(g, phi, GridConfig.fitted(T, L, nx, n_max)).y0 - exact


SOLVER_CASES = {
    "a": (Generator.zero(), TerminalCondition.polynomial([0, 0, 1]), 1.0, 6.0, 1.0, 1.0, 2e-3),
    "b": (Generator.linear_in_z([1.0]), TerminalCondition.polynomial([0, 1]), 1.0, 6.0, 1.0,
          1.0, 2e-3),
    "c": (POWER, TerminalCondition.quartic_arbitrage(1.0), 0.25, 4.0, 50.0, 1.0, 0.02),
}


def test_3_solver_oracles(acceptance):
    parts, ok = [], True
    for name, (g, phi, T, L, n_max, exact, tol) in SOLVER_CASES.items():
        coarse = abs(_error(g, phi, T, L, 401, n_max, exact))
        fine = abs(_error(g, phi, T, L, 801, n_max, exact))
        ratio = coarse / fine if fine > 0 else (np.inf if coarse > 0 else np.nan)
        value_ok = fine <= tol and coarse <= tol
        refine_ok = bool(ratio >= 1.5)
        ok &= value_ok and refine_ok
        parts.append(f"({name}) err {coarse:.2e}->{fine:.2e} ratio {ratio:.3g} "
                     f"value {'ok' if value_ok else 'bad'} "
                     f"refinement {'ok' if refine_ok else 'bad'}")
    acceptance(3, ok, "; ".join(parts))
    assert ok


@pytest.fixture(scope="module")
def power_squeeze(config_dir_module):
    cfg = load_config(config_dir_module / "squeeze_power_cos.json")
    grid = cfg.grid(even_steps=True)
    scfg = SqueezeConfig(cfg.generator(), cfg.terminal(), grid, tuple(cfg.raw["n_ladder"]))
    return run_squeeze(scfg)


@pytest.fixture(scope="module")
def config_dir_module():
    from conftest import CONFIG_DIR
    return CONFIG_DIR


def test_4_squeeze_certificate(acceptance, power_squeeze, config_dir_module):
    rep = power_squeeze
    assert rep.n == [4.0, 8.0, 16.0, 32.0, 64.0]
    formula = [2 * 1.5 * (3 / (n - 1.5)) ** (2 / 3) * 0.5 for n in rep.n]
    gaps_ok = all(r.gap <= b + r.eps_num for r, b in zip(rep.rows, formula))
    bound_match = np.allclose(rep.bounds, formula, rtol=1e-12, atol=0)
    mono = check_monotone(rep)
    cert = uniqueness_certificate(rep)
    cfg = load_config(config_dir_module / "squeeze_abs.json")
    abs_rep = run_squeeze(SqueezeConfig(cfg.generator(), cfg.terminal(),
                                        cfg.grid(even_steps=True), tuple(cfg.raw["n_ladder"])))
    abs_zero = all(g == 0.0 for g in abs_rep.gaps)
    ok = gaps_ok and bound_match and mono.passed and cert.passed and abs_zero
    acceptance(4, ok, "gaps " + ", ".join(f"{g:.2e}" for g in rep.gaps)
               + f"; monotone {mono.passed}; certificate {cert.passed}"
               + f" (limit {cert.extrapolated_limit:.1e}); abs gaps zero {abs_zero}")
    assert ok


def test_5_non_uniqueness(acceptance):
    res = {c: verify_sqrt_family(c, 10_000) for c in (0.0, 0.5, 1.0)}
    gap = float(SqrtFamilyMember(1.0).y(0.0) - SqrtFamilyMember(0.0).y(0.0))
    ok = all(r <= 2e-4 for r in res.values()) and gap == 0.25
    acceptance(5, ok, f"residuals {', '.join(f'{r:.2e}' for r in res.values())}; "
                      f"y0(c=1) - y0(c=0) = {gap}")
    assert ok


def test_6_strict_comparison(acceptance, config_dir_module):
    cfg = load_config(config_dir_module / "counterexample_strict.json")
    p = cfg.raw["paths"]
    assert p["num_paths"] == 100_000
    paths = simulate_paths(cfg.seed, p["num_paths"], p["num_time_steps"], cfg.raw["grid"]["T"])
    demo = strict_comparison_demo(1.0, cfg.grid(), paths)
    ok = demo.passed and abs(demo.y0_numeric - 1.0) <= 0.02 and demo.prob_strictly_below >= 0.999
    acceptance(6, ok, f"y0={demo.y0_numeric:.5f}, P(xi<c)={demo.prob_strictly_below}")
    assert ok


REPRO_RUNS = {
    "envelope_verify_power.json": [],
    "solve_heat_quadratic.json": ["--half-resolution"],
    "squeeze_power_cos.json": ["--set", "grid.num_space_points=129", "--set", "grid.n_max=16",
                               "--set", "n_ladder=[2,4,8,16]",
                               "--set", "paths.num_paths=1000"],
    "squeeze_abs.json": [],
    "counterexample_sqrt.json": [],
    "counterexample_strict.json": ["--set", "paths.num_paths=20000"],
}


def _same_tree(a, b):
    names = sorted(os.listdir(a))
    if names != sorted(os.listdir(b)):
        return False
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    return not mismatch and not errors


def test_7_reproducible(acceptance, config_dir_module, tmp_path):
    bad = []
    for name, extra in REPRO_RUNS.items():
        cfg = str(config_dir_module / name)
        outs = [tmp_path / f"{name}-{i}" for i in range(3)]
        main(["--config", cfg, "--out", str(outs[0]), *extra])
        main(["--config", cfg, "--out", str(outs[1]), *extra])
        main(["--config", cfg, "--out", str(outs[2]), "--threads", "1", *extra])
        if not (_same_tree(outs[0], outs[1]) and _same_tree(outs[0], outs[2])):
            bad.append(name)
    ok = not bad
    acceptance(7, ok, f"{len(REPRO_RUNS)} experiments x 3 runs byte-identical"
               if ok else f"differing outputs: {bad}")
    assert ok
