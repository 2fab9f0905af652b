"""Sandwich experiment: solve the lower- and upper-envelope BSDEs for a ladder
of Lipschitz constants and compare the gap at t = 0 with 2 phi(2C/(n-C)) T.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, ParameterError
from .generators import EnvelopeGenerator, envelope_gap_bound, search_radius
from .solver import GridConfig, evaluate_solution, simulate_paths, solve_fd


@dataclass(frozen=True)
class SqueezeConfig:
    generator: object
    terminal: object
    grid: GridConfig
    n_ladder: tuple
    t_report: float = 0.0
    num_paths: int = 0
    seed: int = 0
    pathwise_time: Optional[float] = None

    def validate(self):
        if self.generator.y_dependent:
            raise ConfigError(
                "generator depends on y; uniqueness requires a z-only driver "
                "(see the counterexample-sqrt experiment)", "/generator/kind")
        ladder = list(self.n_ladder)
        if len(ladder) < 1:
            raise ConfigError("n_ladder must not be empty", "/n_ladder")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigError("n_ladder must be strictly increasing", "/n_ladder")
        for i, n in enumerate(ladder):
            try:
                search_radius(self.generator, n)
            except ParameterError as exc:
                raise ConfigError(str(exc), f"/n_ladder/{i}") from exc
        if self.grid.n_max < max(ladder):
            raise ConfigError("grid.n_max must be >= max(n_ladder)", "/grid/n_max")
        if self.t_report != 0.0:
            raise ConfigError("gaps are reported at t = 0 only", "/t_report")
        self.grid.validate()
        self.grid.half_resolution().validate()
        return self


@dataclass
class LadderRow:
    n: float
    y_lower0: float
    y_upper0: float
    gap: float
    bound: float
    eps_num: float
    refinement_error: float
    lattice_slack: float
    sup_abs_y: float
    lattice_step_h: float
    pathwise_gap: Optional[float] = None
    pathwise_stderr: Optional[float] = None
    passed: bool = False


@dataclass
class SqueezeReport:
    generator: dict
    terminal: dict
    grid: dict
    rows: list = field(default_factory=list)

    @property
    def n(self):
        return [r.n for r in self.rows]

    @property
    def gaps(self):
        return [r.gap for r in self.rows]

    @property
    def bounds(self):
        return [r.bound for r in self.rows]

    @property
    def passed(self):
        return all(r.passed for r in self.rows)

    def table(self):
        """Rows with the exported column names."""
        return [{"n": r.n, "y_lower0": r.y_lower0, "y_upper0": r.y_upper0, "gap": r.gap,
                 "bound": r.bound, "eps_num": r.eps_num, "pass": r.passed} for r in self.rows]

    def to_dict(self):
        return {"generator": self.generator, "terminal": self.terminal, "grid": self.grid,
                "rows": [asdict(r) for r in self.rows]}


def _solve_pair(cfg, n, paths):
    g, T = cfg.generator, cfg.grid.T
    lower = EnvelopeGenerator(g, n, "lower")
    upper = EnvelopeGenerator(g, n, "upper")
    h = max(lower.lattice_step_h, upper.lattice_step_h)
    half = cfg.grid.half_resolution()

    f_lo = solve_fd(lower, cfg.terminal, cfg.grid)
    f_hi = solve_fd(upper, cfg.terminal, cfg.grid)
    c_lo = solve_fd(lower, cfg.terminal, half)
    c_hi = solve_fd(upper, cfg.terminal, half)

    refinement = abs(f_lo.y0 - c_lo.y0) + abs(f_hi.y0 - c_hi.y0)
    slack = 2.0 * n * h * T
    eps = refinement + slack
    gap = f_hi.y0 - f_lo.y0
    bound = envelope_gap_bound(g, n, T)
    row = LadderRow(
        n=float(n), y_lower0=f_lo.y0, y_upper0=f_hi.y0, gap=gap, bound=bound,
        eps_num=eps, refinement_error=refinement, lattice_slack=slack,
        sup_abs_y=float(max(np.abs(f_lo.y_values).max(), np.abs(f_hi.y_values).max())),
        lattice_step_h=h,
        passed=bool(-eps <= gap <= bound + eps),
    )
    if paths is not None:
        t = paths.T
        w = np.clip(paths.W[:, -1], -cfg.grid.domain_half_width, cfg.grid.domain_half_width)
        diff = np.abs(evaluate_solution(f_hi, t, w)[0] - evaluate_solution(f_lo, t, w)[0])
        row.pathwise_gap = float(np.mean(diff))
        row.pathwise_stderr = float(np.std(diff) / math.sqrt(diff.size))
    return row


def run_squeeze(cfg, workers=None):
    """Solve both envelope BSDEs for every n in the ladder.

    Each ladder entry is an independent job; ``workers`` caps the thread
    pool. The report is assembled in ladder order.
    """
    cfg.validate()
    paths = None
    if cfg.num_paths > 0:
        # only W at the reporting time is needed
        t = cfg.pathwise_time if cfg.pathwise_time is not None else cfg.grid.T / 2
        paths = simulate_paths(cfg.seed, cfg.num_paths, 1, t)
    report = SqueezeReport(cfg.generator.to_dict(), cfg.terminal.to_dict(), cfg.grid.to_dict())
    jobs = list(cfg.n_ladder)
    if workers == 1 or len(jobs) == 1:
        rows = [_solve_pair(cfg, n, paths) for n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda n: _solve_pair(cfg, n, paths), jobs))
    report.rows = rows
    return report


@dataclass
class MonotoneCheck:
    passed: bool
    witnesses: list


def check_monotone(report):
    """Upper values non-increasing, lower values non-decreasing in n, and
    lower <= upper, all within eps_num."""
    rows = report.rows
    if len(rows) < 2:
        raise ParameterError("monotonicity needs at least two ladder entries")
    bad = []
    for a, b in zip(rows, rows[1:]):
        tol = max(a.eps_num, b.eps_num)
        if b.n <= a.n:
            bad.append({"pair": [a.n, b.n], "what": "ladder not increasing"})
        if b.y_upper0 > a.y_upper0 + tol:
            bad.append({"pair": [a.n, b.n], "what": "upper increased",
                        "excess": b.y_upper0 - a.y_upper0})
        if b.y_lower0 < a.y_lower0 - tol:
            bad.append({"pair": [a.n, b.n], "what": "lower decreased",
                        "excess": a.y_lower0 - b.y_lower0})
    for r in rows:
        if r.y_lower0 > r.y_upper0 + r.eps_num:
            bad.append({"pair": [r.n, r.n], "what": "lower above upper",
                        "excess": r.y_lower0 - r.y_upper0})
    return MonotoneCheck(not bad, bad)


def a_priori_bound(terminal_sup, C, T):
    """Linear-growth bound ``sup|Phi| + C T exp(C T) + 1`` on ``|y|``."""
    return terminal_sup + C * T * math.exp(C * T) + 1.0


def uniform_bound_check(report, M0_estimate):
    sup = max(r.sup_abs_y for r in report.rows)
    return sup <= M0_estimate, sup


@dataclass
class UniquenessCertificate:
    gap_sequence: list
    bound_sequence: list
    eps_sequence: list
    extrapolated_limit: float
    passed: bool


def uniqueness_certificate(report):
    """Numerical evidence that the gap between maximal and minimal solutions
    vanishes: every gap under its bound and the last gap within
    ``2 eps + bound`` of zero.

    ``extrapolated_limit`` applies Aitken's delta-squared to the last three
    gaps (geometric decay along a doubling ladder).
    """
    rows = report.rows
    if len(rows) < 3:
        raise ParameterError("certificate needs a ladder of at least 3 entries")
    gaps = np.array([r.gap for r in rows])
    bounds = np.array([r.bound for r in rows])
    eps = np.array([r.eps_num for r in rows])
    every = bool(np.all(gaps <= bounds + eps))
    last = bool(gaps[-1] <= 2 * eps[-1] + bounds[-1])
    return UniquenessCertificate(gaps.tolist(), bounds.tolist(), eps.tolist(),
                                 aitken_limit(gaps[-3:]), every and last)


def aitken_limit(seq):
    a, b, c = (float(v) for v in seq[-3:])
    denom = (c - b) - (b - a)
    if denom == 0.0:
        return c
    return c - (c - b) ** 2 / denom


def bound_sequence_decreasing(g, ladder, T=1.0):
    b = [envelope_gap_bound(g, n, T) for n in ladder]
    return all(y < x for x, y in zip(b, b[1:]))
