import copy

import numpy as np
import pytest

from bsde_envelope import (EnvelopeGenerator, Generator, GridConfig, SqueezeConfig,
                           TerminalCondition, check_monotone, run_squeeze, solve_fd,
                           uniform_bound_check, uniqueness_certificate)
from bsde_envelope.errors import ConfigError, ParameterError
from bsde_envelope.generators import combined_constant, envelope_gap_bound
from bsde_envelope.squeeze import a_priori_bound, aitken_limit, bound_sequence_decreasing

POWER = Generator.power_z(1.5, 2 / 3)


def small_cfg(g=POWER, ladder=(2.0, 4.0, 8.0), nx=65, L=4.0, phi=None, **kw):
    grid = GridConfig.fitted(0.5, L, nx, max(ladder))
    if grid.num_time_steps % 2:
        grid = GridConfig(grid.T, grid.num_time_steps + 1, L, nx, grid.n_max)
    return SqueezeConfig(g, phi or TerminalCondition.cosine(), grid, tuple(ladder), **kw)


@pytest.fixture(scope="module")
def power_report():
    return run_squeeze(small_cfg())


def test_rows_within_bound(power_report):
    assert power_report.passed
    for r in power_report.rows:
        assert r.bound == envelope_gap_bound(POWER, r.n, 0.5)
        assert -r.eps_num <= r.gap <= r.bound + r.eps_num
        assert r.eps_num == r.refinement_error + r.lattice_slack


def test_gap_shrinks(power_report):
    gaps = power_report.gaps
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_monotone_in_n(power_report):
    chk = check_monotone(power_report)
    assert chk.passed, chk.witnesses


def test_monotone_negative_control(power_report):
    shuffled = copy.deepcopy(power_report)
    shuffled.rows[0].y_upper0, shuffled.rows[-1].y_upper0 = (
        shuffled.rows[-1].y_upper0 - 1.0, shuffled.rows[0].y_upper0 + 1.0)
    chk = check_monotone(shuffled)
    assert not chk.passed
    assert any(w["what"] == "upper increased" for w in chk.witnesses)


def test_certificate(power_report):
    cert = uniqueness_certificate(power_report)
    assert cert.passed
    assert cert.gap_sequence == power_report.gaps
    assert cert.extrapolated_limit <= cert.gap_sequence[-1]


def test_certificate_negative_control(power_report):
    bad = copy.deepcopy(power_report)
    bad.rows[-1].gap = bad.rows[-1].bound + 3 * bad.rows[-1].eps_num + 1.0
    assert not uniqueness_certificate(bad).passed


def test_uniform_bound(power_report):
    M0 = a_priori_bound(1.0, combined_constant(POWER), 0.5)
    ok, sup = uniform_bound_check(power_report, M0)
    assert ok and sup >= 1.0 - 1e-12
    assert not uniform_bound_check(power_report, 0.5)[0]


def test_table_columns(power_report):
    row = power_report.table()[0]
    assert list(row) == ["n", "y_lower0", "y_upper0", "gap", "bound", "eps_num", "pass"]


def test_lipschitz_generator_zero_gap():
    rep = run_squeeze(small_cfg(Generator.abs_z(), ladder=(2.0, 4.0, 8.0, 16.0), nx=201))
    assert rep.gaps == [0.0] * 4
    assert all(r.passed for r in rep.rows)


def test_middle_solve_sandwiched():
    grid = GridConfig.fitted(0.5, 4.0, 65, 8.0)
    assert grid.monotone
    phi = TerminalCondition.cosine()
    y = solve_fd(POWER, phi, grid).y_values
    lo = solve_fd(EnvelopeGenerator(POWER, 8.0, "lower"), phi, grid).y_values
    hi = solve_fd(EnvelopeGenerator(POWER, 8.0, "upper"), phi, grid).y_values
    # rounding in D1 of size ~1e-16 moves the non-Lipschitz g by up to phi(1e-16)
    tol = 10 * POWER.modulus(1e-16)
    assert np.all(lo <= y + tol) and np.all(y <= hi + tol)


def test_threads_do_not_change_results():
    cfg = small_cfg(ladder=(2.0, 4.0))
    a = run_squeeze(cfg, workers=1).to_dict()
    b = run_squeeze(cfg, workers=4).to_dict()
    assert a == b


def test_pathwise_gap_reported():
    rep = run_squeeze(small_cfg(ladder=(2.0, 4.0), num_paths=500, seed=3))
    for r in rep.rows:
        assert 0.0 <= r.pathwise_gap and r.pathwise_stderr >= 0.0
    assert rep.rows[1].pathwise_gap < rep.rows[0].pathwise_gap


def test_rejects_y_dependent_generator():
    with pytest.raises(ConfigError, match="counterexample-sqrt"):
        small_cfg(Generator.sqrt_y()).validate()


def test_rejects_n_below_constant():
    with pytest.raises(ConfigError, match="n_ladder/0"):
        small_cfg(ladder=(1.5, 4.0)).validate()


def test_rejects_unsorted_ladder():
    with pytest.raises(ConfigError):
        small_cfg(ladder=(4.0, 2.0)).validate()


def test_rejects_small_n_max():
    cfg = small_cfg()
    bad = SqueezeConfig(cfg.generator, cfg.terminal, GridConfig.fitted(0.5, 4.0, 65, 4.0),
                        (2.0, 8.0))
    with pytest.raises(ConfigError, match="n_max"):
        bad.validate()


def test_bound_sequence_decreasing():
    assert bound_sequence_decreasing(POWER, [4, 8, 16, 32, 64])
    assert not bound_sequence_decreasing(POWER, [8, 4])


def test_aitken_geometric():
    seq = 2.0 + 0.5 ** np.arange(3)
    assert aitken_limit(seq) == pytest.approx(2.0, abs=1e-12)
    assert aitken_limit([1.0, 1.0, 1.0]) == 1.0


def test_check_monotone_needs_two_rows(power_report):
    one = copy.deepcopy(power_report)
    one.rows = one.rows[:1]
    with pytest.raises(ParameterError):
        check_monotone(one)
