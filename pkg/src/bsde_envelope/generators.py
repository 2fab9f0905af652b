"""BSDE generators g(t, z) and their n-Lipschitz lower/upper envelopes.

The lower envelope is the inf-convolution ``inf_u { g(t, u) + n |z - u| }``
and the upper envelope the mirror sup-convolution ``sup_u { g(t, u) - n |z - u| }``.
Both are computed over an absolute lattice ``h Z^d`` restricted to a ball
around ``z``, with ``u = z`` always adjoined so that
``lower <= g <= upper`` holds exactly in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .modulus import Modulus

KINDS = ("zero", "linear_in_z", "abs_z", "power_z", "sqrt_y", "tabulated")

# candidates per axis and side of the search ball at the default lattice step
LATTICE_POINTS_PER_RADIUS = 50
MIN_LATTICE_STEP = 1e-12
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class Generator:
    """A driver ``g(t, z)`` satisfying a modulus bound and linear growth.

    ``sqrt_y`` is the y-dependent driver ``sqrt(|y|)``; it is only usable
    through :meth:`driver` and is rejected by envelopes and the squeeze.
    """

    kind: str
    modulus: Modulus
    growth_B: float
    dim: int = 1
    K: float = 1.0
    alpha: float = 1.0
    mu: tuple = ()
    knots: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown generator kind {self.kind!r}")
        if not self.growth_B > 0:
            raise ParameterError("growth constant B must be positive")
        if self.dim < 1:
            raise ParameterError("dimension must be >= 1")
        if self.kind == "linear_in_z" and len(self.mu) != self.dim:
            raise ParameterError("linear_in_z needs len(mu) == dim")
        if self.kind == "power_z" and not (self.K > 0 and 0 < self.alpha <= 1):
            raise ParameterError("power_z needs K > 0 and alpha in (0, 1]")
        if self.kind == "tabulated":
            if self.dim != 1:
                raise ParameterError("tabulated generators are one-dimensional")
            if len(self.knots) < 2 or len(self.knots) != len(self.values):
                raise ParameterError("tabulated generator needs matching knots/values")
            if np.any(np.diff(self.knots) <= 0):
                raise ParameterError("tabulated knots must be strictly increasing")

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, dim=1, A=1.0, B=1.0):
        return cls("zero", Modulus.linear(1.0, A), float(B), dim)

    @classmethod
    def abs_z(cls, dim=1, A=1.0, B=1.0):
        return cls("abs_z", Modulus.linear(1.0, A), float(B), dim)

    @classmethod
    def linear_in_z(cls, mu, A=None, B=None):
        mu = tuple(float(m) for m in np.atleast_1d(mu))
        norm = float(np.linalg.norm(mu)) or 1.0
        A = norm if A is None else A
        B = norm if B is None else B
        return cls("linear_in_z", Modulus.linear(norm, A), float(B), len(mu), mu=mu)

    @classmethod
    def power_z(cls, K, alpha, A=None, B=None, dim=1):
        A = K if A is None else A
        B = K if B is None else B
        return cls("power_z", Modulus.holder(K, alpha, A), float(B), dim,
                   K=float(K), alpha=float(alpha))

    @classmethod
    def sqrt_y(cls):
        return cls("sqrt_y", Modulus.holder(1.0, 0.5, 1.0), 1.0, 1)

    @classmethod
    def tabulated(cls, knots, values, modulus, B):
        return cls("tabulated", modulus, float(B), 1,
                   knots=tuple(map(float, knots)), values=tuple(map(float, values)))

    # -- evaluation ---------------------------------------------------------
    @property
    def y_dependent(self):
        return self.kind == "sqrt_y"

    @property
    def combined_constant(self):
        return combined_constant(self)

    def norm(self, z):
        z = np.asarray(z, dtype=float)
        if self.dim == 1:
            return np.abs(z)
        return np.sqrt(np.sum(z * z, axis=-1))

    def evaluate(self, t, z):
        """g(t, z); ``z`` has trailing axis ``dim`` when ``dim > 1``."""
        if self.kind == "sqrt_y":
            raise DomainError("sqrt_y depends on y; use driver(t, y, z)")
        z = np.asarray(z, dtype=float)
        shape = z.shape if self.dim == 1 else z.shape[:-1]
        # scalars go through the array path: numpy's scalar pow can differ by an ulp
        z = np.atleast_1d(z) if self.dim == 1 else np.atleast_2d(z)
        if self.kind == "zero":
            out = np.zeros(z.shape if self.dim == 1 else z.shape[:-1])
        elif self.kind == "abs_z":
            out = self.norm(z)
        elif self.kind == "power_z":
            out = self.K * self.norm(z) ** self.alpha
        elif self.kind == "linear_in_z":
            out = z * self.mu[0] if self.dim == 1 else z @ np.asarray(self.mu)
        else:
            out = np.interp(z, self.knots, self.values)
        return out.reshape(shape)

    def driver(self, t, y, z):
        """g(t, y, z), the integrand of the BSDE."""
        if self.kind == "sqrt_y":
            return np.sqrt(np.abs(np.asarray(y, dtype=float)))
        return self.evaluate(t, z)

    def to_dict(self):
        d = {"kind": self.kind, "B": self.growth_B, "dim": self.dim,
             "modulus": self.modulus.to_dict()}
        if self.kind == "power_z":
            d.update(K=self.K, alpha=self.alpha)
        elif self.kind == "linear_in_z":
            d["mu"] = list(self.mu)
        elif self.kind == "tabulated":
            d.update(knots=list(self.knots), values=list(self.values))
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        modulus = Modulus.from_dict(d["modulus"]) if "modulus" in d else None
        B = float(d["B"])
        dim = int(d.get("dim", 1))
        if kind == "sqrt_y":
            return cls.sqrt_y()
        if modulus is None:
            raise ParameterError(f"generator {kind!r} needs a modulus")
        kw = {}
        if kind == "power_z":
            kw = dict(K=float(d["K"]), alpha=float(d["alpha"]))
        elif kind == "linear_in_z":
            kw = dict(mu=tuple(map(float, d["mu"])))
        elif kind == "tabulated":
            kw = dict(knots=tuple(map(float, d["knots"])),
                      values=tuple(map(float, d["values"])))
        return cls(kind, modulus, B, dim, **kw)


def combined_constant(g):
    """C = max{A, B}."""
    return max(g.modulus.growth_constant_A, g.growth_B)


def search_radius(g, n):
    """Radius 2C/(n - C) of the ball that contains every competitive candidate."""
    C = combined_constant(g)
    if not n > C:
        raise ParameterError(f"search_radius: n ≤ C (n={n}, C={C})")
    return 2.0 * C / (n - C)


def effective_radius(g, n):
    """Tightest radius known to contain the optimizer: min of the C-radius
    and the modulus domination radius."""
    return min(search_radius(g, n), g.modulus.domination_radius(n))


def default_lattice_step(g, n):
    r = effective_radius(g, n)
    if r == 0.0:
        r = search_radius(g, n)
    return max(r / LATTICE_POINTS_PER_RADIUS, MIN_LATTICE_STEP)


def envelope_gap_bound(g, n, T=1.0):
    """2 phi(2C/(n - C)) T."""
    if not T > 0:
        raise ParameterError("T must be positive")
    return 2.0 * g.modulus.eval(search_radius(g, n)) * T


@dataclass(frozen=True)
class EnvelopeGenerator:
    base: Generator
    n: float
    side: str
    lattice_step_h: Optional[float] = None

    def __post_init__(self):
        if self.base.y_dependent:
            raise ParameterError("envelopes need a y-independent generator")
        if self.side not in ("lower", "upper"):
            raise ParameterError(f"side must be 'lower' or 'upper', got {self.side!r}")
        if self.base.dim > 2:
            raise ParameterError("envelopes support dim 1 and 2 only")
        search_radius(self.base, self.n)  # validates n > C
        if self.lattice_step_h is None:
            object.__setattr__(self, "lattice_step_h", default_lattice_step(self.base, self.n))
        if not self.lattice_step_h > 0:
            raise ParameterError("lattice step must be positive")

    @property
    def dim(self):
        return self.base.dim

    @property
    def radius(self):
        return effective_radius(self.base, self.n)

    @property
    def C(self):
        return combined_constant(self.base)

    def evaluate(self, t, z):
        return eval_envelope(self, t, z)

    def driver(self, t, y, z):
        return eval_envelope(self, t, z)


def _lattice_offsets(count, dim):
    ks = np.arange(count, dtype=float)
    if dim == 1:
        return ks
    a, b = np.meshgrid(ks, ks, indexing="ij")
    return np.stack([a.ravel(), b.ravel()], axis=-1)


def eval_envelope(e, t, z):
    """Envelope value at ``z`` (scalar/array; trailing axis ``dim`` if dim > 1)."""
    g, n, h, R = e.base, float(e.n), e.lattice_step_h, e.radius
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == (0 if g.dim == 1 else 1)
    own = np.asarray(g.evaluate(t, z), dtype=float)
    if R == 0.0:
        out = own
    else:
        sign = 1.0 if e.side == "lower" else -1.0
        pts = z.reshape(-1) if g.dim == 1 else z.reshape(-1, g.dim)
        count = int(math.floor(2.0 * R / h)) + 2
        offsets = _lattice_offsets(count, g.dim)
        best = np.empty(pts.shape[0])
        step = max(1, _CHUNK_ELEMENTS // len(offsets))
        for s in range(0, pts.shape[0], step):
            zc = pts[s:s + step]
            k0 = np.ceil((zc - R) / h)
            if g.dim == 1:
                u = np.add(k0[:, None], offsets[None, :])
                np.multiply(u, h, out=u)
                dist = np.subtract(zc[:, None], u)
                np.abs(dist, out=dist)
                vals = np.asarray(g.evaluate(t, u))
                if sign < 0:
                    np.negative(vals, out=vals)
                vals += n * dist
                vals[dist > R] = np.inf
                best[s:s + step] = vals.min(axis=-1)
                continue
            else:
                k = k0[:, None, :] + offsets[None, :, :]
                u = k * h
                diff = zc[:, None, :] - u
                dist = np.sqrt(np.sum(diff * diff, axis=-1))
            vals = sign * np.asarray(g.evaluate(t, u)) + n * dist
            vals = np.where(dist <= R, vals, np.inf)
            best[s:s + step] = vals.min(axis=-1)
        best = sign * best.reshape(own.shape)
        out = np.minimum(best, own) if sign > 0 else np.maximum(best, own)
    if scalar:
        return float(out)
    return out


# -- envelope property report ---------------------------------------------------

@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    witness: dict = field(default_factory=dict)


@dataclass
class EnvelopeReport:
    generator: dict
    n_list: list
    lattice_step_h: float
    checks: dict
    max_gap: dict
    gap_bound: dict
    convergence_table: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values())


def _worst(name, excess, zs, ns=None):
    """CheckResult from an array of excesses (positive = violation)."""
    excess = np.asarray(excess, dtype=float)
    if excess.size == 0:
        return CheckResult(name, True, 0.0)
    idx = np.unravel_index(int(np.argmax(excess)), excess.shape)
    worst = float(excess[idx])
    witness = {}
    if worst > 0:
        witness["z"] = np.asarray(zs)[idx[-1]].tolist()
        if ns is not None and len(idx) > 1:
            witness["n"] = ns[idx[0]]
    return CheckResult(name, worst <= 0.0, worst, witness)


def verify_lemma1(g, n_list, z_grid, t=0.0, lattice_step_h=None, lipschitz_slack=True,
                  iv_ladder=None, iv_point=1.0):
    """Check the envelope properties on a z-grid for an increasing list of n.

    A single lattice step is shared across ``n_list`` (the finest default
    step of the list) so candidate sets are nested and monotonicity in ``n``
    is exact.
    """
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ParameterError("n_list must be strictly increasing")
    for n in n_list:
        search_radius(g, n)
    if lattice_step_h is None:
        lattice_step_h = min(default_lattice_step(g, n) for n in n_list)
    h = float(lattice_step_h)
    C = combined_constant(g)
    zs = np.asarray(z_grid, dtype=float)
    f = np.asarray(g.evaluate(t, zs), dtype=float)
    norm = g.norm(zs)

    lower = np.array([eval_envelope(EnvelopeGenerator(g, n, "lower", h), t, zs) for n in n_list])
    upper = np.array([eval_envelope(EnvelopeGenerator(g, n, "upper", h), t, zs) for n in n_list])

    checks = {}
    growth = C * (norm + 1.0)
    checks["i_sandwich"] = _worst("i_sandwich", np.maximum.reduce([
        -growth - lower, lower - f, f - upper, upper - growth]), zs, n_list)
    checks["ii_monotone"] = _worst("ii_monotone", np.concatenate([
        lower[:-1] - lower[1:], upper[1:] - upper[:-1]]) if len(n_list) > 1 else [],
        zs)

    lip = []
    for i, n in enumerate(n_list):
        slack = 2 * n * h if lipschitz_slack else 0.0
        if g.dim == 1:
            dz = np.abs(np.diff(zs))
            for env in (lower[i], upper[i]):
                lip.append(np.abs(np.diff(env)) - n * dz - slack)
        else:
            dz = np.sqrt(np.sum(np.diff(zs, axis=0) ** 2, axis=-1))
            for env in (lower[i], upper[i]):
                lip.append(np.abs(np.diff(env)) - n * dz - slack)
    checks["iii_lipschitz"] = _worst("iii_lipschitz", np.array(lip), zs[1:])

    bound_v = np.array([g.modulus.eval(search_radius(g, n)) for n in n_list])
    v_excess = np.maximum.reduce([
        lower - f[None, :],                    # f - lower >= 0
        f[None, :] - lower - bound_v[:, None],
        f[None, :] - upper,                    # upper - f >= 0
        upper - f[None, :] - bound_v[:, None],
    ])
    checks["v_bound"] = _worst("v_bound", v_excess, zs, n_list)

    table = []
    if iv_ladder:
        # z_n -> z with z_n = z + 1/n; envelopes at z_n approach g(z)
        target = float(g.evaluate(t, iv_point)) if g.dim == 1 else None
        if target is not None:
            for n in iv_ladder:
                zn = iv_point + 1.0 / n
                lo = eval_envelope(EnvelopeGenerator(g, n, "lower"), t, zn)
                hi = eval_envelope(EnvelopeGenerator(g, n, "upper"), t, zn)
                table.append({"n": float(n), "z_n": zn,
                              "lower_gap": abs(lo - target), "upper_gap": abs(hi - target)})

    gaps = upper - lower
    return EnvelopeReport(
        generator=g.to_dict(),
        n_list=n_list,
        lattice_step_h=h,
        checks=checks,
        max_gap={n: float(gaps[i].max()) for i, n in enumerate(n_list)},
        gap_bound={n: envelope_gap_bound(g, n, 1.0) for n in n_list},
        convergence_table=table,
    )
