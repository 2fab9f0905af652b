"""Closed-form solution families showing where the uniqueness result stops.

* ``y' = -sqrt(|y|)`` on [0, 1] with ``y(1) = 0`` (a BSDE with ``z = 0``) has
  the family ``y(t) = (max(0, c - t) / 2)^2``, one solution per ``c`` in [0, 1].
* With ``g(z) = 3/2 |z|^(2/3)`` the pair ``(c - W_t^4/4, -W_t^3)`` solves the
  BSDE with terminal ``c - W_T^4/4``, so the initial value is ``c`` even though
  the terminal value is strictly below ``c`` almost surely.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .generators import Generator
from .solver import TerminalCondition, residual_check, solve_fd


@dataclass(frozen=True)
class SqrtFamilyMember:
    c: float

    def __post_init__(self):
        if not 0.0 <= self.c <= 1.0:
            raise DomainError(f"c must lie in [0, 1], got {self.c}")

    def y(self, t):
        return (np.maximum(0.0, self.c - np.asarray(t, dtype=float)) / 2.0) ** 2

    def z(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def verify_sqrt_family(c, Nt):
    """Max defect of the left-point discretization of ``y(t) = int_t^1 sqrt(y) ds``."""
    member = SqrtFamilyMember(float(c))
    if Nt < 2:
        raise DomainError("Nt must be >= 2")
    t = np.linspace(0.0, 1.0, Nt + 1)
    y = member.y(t)
    dt = 1.0 / Nt
    tail = np.zeros(Nt + 1)
    tail[:-1] = np.cumsum((np.sqrt(y[:-1]) * dt)[::-1])[::-1]
    return float(np.max(np.abs(y - tail)))


@dataclass(frozen=True)
class QuarticSolution:
    c: float

    def y(self, t, w):
        return self.c - np.asarray(w, dtype=float) ** 4 / 4.0

    def z(self, t, w):
        return -np.asarray(w, dtype=float) ** 3

    def xi(self, w_T):
        return self.c - np.asarray(w_T, dtype=float) ** 4 / 4.0


def quartic_generator():
    return Generator.power_z(1.5, 2.0 / 3.0)


def verify_quartic_solution(c, paths):
    sol = QuarticSolution(float(c))
    return residual_check(sol.y, sol.z, quartic_generator(), sol.xi, paths)


@dataclass
class StrictComparisonReport:
    c: float
    y0_numeric: float
    y0_wide_domain: float
    prob_strictly_below: float
    residual_stats: dict
    passed: bool

    def to_dict(self):
        return {"c": self.c, "y0_numeric": self.y0_numeric,
                "y0_wide_domain": self.y0_wide_domain,
                "prob_strictly_below": self.prob_strictly_below,
                "residual_stats": self.residual_stats, "pass": self.passed}


def strict_comparison_demo(c, grid, paths, widen=1.25):
    """Price ``c`` for a payoff that is below ``c`` with probability one.

    Also re-solves on a domain ``widen`` times wider (same dx, dt) so the
    boundary sensitivity is visible in the report.
    """
    c = float(c)
    g = quartic_generator()
    phi = TerminalCondition.quartic_arbitrage(c)
    y0 = solve_fd(g, phi, grid).y0
    y0_wide = solve_fd(g, phi, grid.widened(widen)).y0
    w_T = paths.W[:, -1]
    # xi < c  <=>  shortfall W_T^4/4 > 0; comparing xi with c directly loses
    # paths with |W_T| below ~1e-4 to rounding
    prob = float(np.mean(w_T**4 / 4.0 > 0.0))
    res = verify_quartic_solution(c, paths).to_dict()
    passed = abs(y0 - c) <= 0.02 * max(1.0, abs(c)) and prob >= 0.99
    return StrictComparisonReport(c, y0, y0_wide, prob, res, bool(passed))
