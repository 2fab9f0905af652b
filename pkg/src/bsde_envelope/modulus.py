"""Moduli of continuity: continuous, non-decreasing, subadditive, linear growth.

A modulus bounds the oscillation of a generator in ``z``:
``|g(t, z1) - g(t, z2)| <= phi(|z1 - z2|)``, and carries the constant ``A``
with ``phi(x) <= A (x + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, ParameterError

KINDS = ("holder", "linear", "capped_linear")

CERTIFY_TOL = 1e-12
CERTIFY_DOMAIN = (0.0, 100.0)


@dataclass(frozen=True)
class Modulus:
    kind: str
    K: float
    A: float
    alpha: float = 1.0
    cap: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown modulus kind {self.kind!r}")
        if not self.K > 0:
            raise ParameterError("modulus K must be positive")
        if not self.A > 0:
            raise ParameterError("growth constant A must be positive")
        if self.kind == "holder" and not 0 < self.alpha <= 1:
            raise ParameterError("holder exponent must lie in (0, 1]")
        if self.kind == "capped_linear" and not (self.cap is not None and self.cap > 0):
            raise ParameterError("capped_linear needs a positive cap")

    @classmethod
    def holder(cls, K, alpha, A):
        return cls("holder", float(K), float(A), alpha=float(alpha))

    @classmethod
    def linear(cls, K, A=None):
        return cls("linear", float(K), float(K if A is None else A))

    @classmethod
    def capped_linear(cls, K, cap, A=None):
        return cls("capped_linear", float(K), float(K if A is None else A), cap=float(cap))

    @property
    def growth_constant_A(self):
        return self.A

    def eval(self, x):
        """phi(x) for scalar or array ``x >= 0``."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("modulus argument must be non-negative")
        shape = arr.shape
        arr = np.atleast_1d(arr)
        if self.kind == "holder":
            out = self.K * arr**self.alpha
        elif self.kind == "linear":
            out = self.K * arr
        else:
            out = np.minimum(self.K * arr, self.cap)
        if shape == ():
            return float(out[0])
        return out.reshape(shape)

    __call__ = eval

    def domination_radius(self, n):
        """Smallest rho with ``phi(s) <= n s`` for every ``s >= rho``.

        Beyond this distance a candidate ``u`` cannot beat ``u = z`` in the
        inf-/sup-convolution of a function with this modulus.
        Returns ``math.inf`` when no finite radius exists.
        """
        if self.kind == "holder" and self.alpha < 1:
            return (self.K / n) ** (1.0 / (1.0 - self.alpha))
        if n >= self.K:
            return 0.0
        if self.kind == "capped_linear":
            return self.cap / n
        return math.inf

    def to_dict(self):
        d = {"kind": self.kind, "K": self.K, "A": self.A}
        if self.kind == "holder":
            d["alpha"] = self.alpha
        if self.kind == "capped_linear":
            d["cap"] = self.cap
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "holder":
            return cls.holder(d["K"], d["alpha"], d["A"])
        if kind == "linear":
            return cls.linear(d["K"], d.get("A"))
        if kind == "capped_linear":
            return cls.capped_linear(d["K"], d["cap"], d.get("A"))
        raise ParameterError(f"unknown modulus kind {kind!r}")


def eval_modulus(m, x):
    if np.ndim(x) == 0 and x < 0:
        raise DomainError(f"modulus argument must be non-negative, got {x}")
    return m.eval(x)


@dataclass
class ModulusCertificate:
    sample_count: int
    seed: int
    monotonicity_violation: float
    subadditivity_violation: float
    growth_violation: float
    subadditivity_witness: tuple = field(default=(math.nan, math.nan))
    passed: bool = False


def certify_modulus(m, sample_count, seed, domain=CERTIFY_DOMAIN, tol=CERTIFY_TOL):
    """Sampled check of monotonicity, subadditivity and linear growth.

    ``m`` only needs ``eval`` and ``growth_constant_A``. Violations are
    reported as the worst positive excess; the certificate passes iff all of
    them are at most ``tol``.
    """
    if sample_count < 1:
        raise ParameterError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = domain
    xs = np.sort(rng.uniform(lo, hi, sample_count))
    xs = np.concatenate(([0.0], xs))
    phis = np.asarray(m.eval(xs), dtype=float)

    mono = max(0.0, float(np.max(phis[:-1] - phis[1:], initial=0.0)))
    if phis[0] != 0.0:
        mono = max(mono, abs(float(phis[0])))

    # pairs with x + y kept inside the sampled domain
    a = rng.uniform(lo, hi / 2, sample_count)
    b = rng.uniform(lo, hi / 2, sample_count)
    excess = np.asarray(m.eval(a + b)) - np.asarray(m.eval(a)) - np.asarray(m.eval(b))
    i = int(np.argmax(excess))
    sub = max(0.0, float(excess[i]))
    # small integer pairs catch superlinear growth near the origin
    grid = np.arange(0.0, 4.0, 0.25)
    ga, gb = np.meshgrid(grid, grid)
    gex = np.asarray(m.eval(ga + gb)) - np.asarray(m.eval(ga)) - np.asarray(m.eval(gb))
    j = np.unravel_index(int(np.argmax(gex)), gex.shape)
    witness = (float(a[i]), float(b[i]))
    if gex[j] > sub:
        sub = float(gex[j])
        witness = (float(ga[j]), float(gb[j]))

    growth = max(0.0, float(np.max(phis - m.growth_constant_A * (xs + 1.0))))
    passed = mono <= tol and sub <= tol and growth <= tol
    return ModulusCertificate(sample_count, seed, mono, sub, growth, witness, passed)


def minimal_growth_constant(m, search_grid=100_000, x_max=1e4):
    """Numerical estimate of ``sup_{x >= 0} phi(x) / (x + 1)``.

    Log-spaced grid search on ``[0, x_max]``, polished by a bounded scalar
    search around the best node, combined with an analytic bound for the tail
    ``x > x_max``.
    """
    xs = np.concatenate(([0.0], np.geomspace(1e-8, x_max, search_grid)))
    ratio = np.asarray(m.eval(xs)) / (xs + 1.0)
    i = int(np.argmax(ratio))
    best = float(ratio[i])
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda x: -float(m.eval(x)) / (x + 1.0),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    best = max(best, _tail_bound(m, x_max))
    return best


def _tail_bound(m, x_max):
    if m.kind == "holder":
        return m.K * x_max ** (m.alpha - 1.0)
    if m.kind == "linear":
        return m.K
    return m.cap / (x_max + 1.0)
