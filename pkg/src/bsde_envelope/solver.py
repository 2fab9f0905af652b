"""Markovian BSDE solver on a time-space grid, Brownian paths, residual checks.

With terminal value ``xi = Phi(W_T)`` and a driver ``g(t, z)`` the solution is
``y_t = u(t, W_t)``, ``z_t = u_x(t, W_t)`` where ``u`` solves the backward
semilinear heat equation ``u_t + u_xx / 2 + g(t, u_x) = 0``, ``u(T) = Phi``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, EvaluationError, NumericalBlowupError, ParameterError

TERMINAL_KINDS = ("polynomial", "cosine", "quartic_arbitrage", "constant")

CFL_DIFFUSION = 0.4
CFL_ADVECTION = 0.5


@dataclass(frozen=True)
class TerminalCondition:
    """Terminal function Phi, so that ``xi = Phi(W_T)``.

    ``polynomial`` coefficients are in ascending order of degree.
    """

    kind: str
    coefficients: tuple = ()
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in TERMINAL_KINDS:
            raise ParameterError(f"unknown terminal kind {self.kind!r}")
        if self.kind == "polynomial" and not self.coefficients:
            raise ParameterError("polynomial terminal needs coefficients")

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", coefficients=tuple(map(float, coefficients)))

    @classmethod
    def cosine(cls):
        return cls("cosine")

    @classmethod
    def quartic_arbitrage(cls, c):
        return cls("quartic_arbitrage", c=float(c))

    @classmethod
    def constant(cls, c):
        return cls("constant", c=float(c))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.coefficients)
        if self.kind == "cosine":
            return np.cos(x)
        if self.kind == "quartic_arbitrage":
            return self.c - x**4 / 4.0
        return np.full(x.shape, self.c)

    def to_dict(self):
        if self.kind == "polynomial":
            return {"kind": self.kind, "coefficients": list(self.coefficients)}
        if self.kind == "cosine":
            return {"kind": self.kind}
        return {"kind": self.kind, "c": self.c}

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "polynomial":
            return cls.polynomial(d["coefficients"])
        if kind == "cosine":
            return cls.cosine()
        if kind in ("quartic_arbitrage", "constant"):
            return cls(kind, c=float(d["c"]))
        raise ParameterError(f"unknown terminal kind {kind!r}")


@dataclass(frozen=True)
class GridConfig:
    T: float
    num_time_steps: int
    domain_half_width: float
    num_space_points: int
    n_max: float

    @property
    def dt(self):
        return self.T / self.num_time_steps

    @property
    def dx(self):
        return 2.0 * self.domain_half_width / (self.num_space_points - 1)

    @property
    def x(self):
        return np.linspace(-self.domain_half_width, self.domain_half_width, self.num_space_points)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.num_time_steps + 1)

    def cfl_limit(self):
        dx = self.dx
        return min(CFL_DIFFUSION * dx * dx, CFL_ADVECTION * dx / self.n_max)

    @property
    def monotone(self):
        """True when the scheme is monotone for drivers with Lipschitz
        constant up to ``n_max`` (needs ``n_max dx <= 1`` besides the CFL bound)."""
        return self.n_max * self.dx <= 1.0 and self.dt <= self.dx * self.dx

    def validate(self):
        if not self.T > 0:
            raise ConfigError("T must be positive", "/grid/T")
        if self.num_time_steps < 1:
            raise ConfigError("need at least one time step", "/grid/num_time_steps")
        if self.num_space_points < 3 or self.num_space_points % 2 == 0:
            raise ConfigError("num_space_points must be odd and >= 3", "/grid/num_space_points")
        if not self.domain_half_width > 0:
            raise ConfigError("domain_half_width must be positive", "/grid/domain_half_width")
        if not self.n_max > 0:
            raise ConfigError("n_max must be positive", "/grid/n_max")
        limit = self.cfl_limit()
        # relative slack so a step chosen exactly at the limit is accepted
        if self.dt > limit * (1 + 1e-12):
            raise ConfigError(
                f"CFL violated: dt={self.dt:.6g} > min(0.4 dx^2, dx/(2 n_max))={limit:.6g}",
                "/grid/num_time_steps")
        return self

    def half_resolution(self):
        """Companion grid with dx doubled and dt doubled (x = 0 stays a node)."""
        if (self.num_space_points - 1) % 4 != 0:
            raise ConfigError("half resolution needs num_space_points = 1 mod 4",
                              "/grid/num_space_points")
        if self.num_time_steps % 2 != 0:
            raise ConfigError("half resolution needs an even num_time_steps",
                              "/grid/num_time_steps")
        return GridConfig(self.T, self.num_time_steps // 2, self.domain_half_width,
                          (self.num_space_points - 1) // 2 + 1, self.n_max)

    def widened(self, factor):
        """Same dx and dt on a domain ``factor`` times wider."""
        half = (self.num_space_points - 1) // 2
        new_half = int(round(half * factor))
        return GridConfig(self.T, self.num_time_steps, self.dx * new_half,
                          2 * new_half + 1, self.n_max)

    @classmethod
    def fitted(cls, T, domain_half_width, num_space_points, n_max):
        """Grid with the fewest time steps allowed by the CFL contract."""
        probe = cls(T, 1, domain_half_width, num_space_points, n_max)
        nt = int(math.ceil(T / probe.cfl_limit() - 1e-9))
        return cls(T, nt, domain_half_width, num_space_points, n_max)

    def to_dict(self):
        return {"T": self.T, "num_time_steps": self.num_time_steps,
                "domain_half_width": self.domain_half_width,
                "num_space_points": self.num_space_points, "n_max": self.n_max}


@dataclass(frozen=True, eq=False)
class SolutionField:
    y_values: np.ndarray
    z_values: np.ndarray
    grid: GridConfig

    @property
    def y0(self):
        return float(self.y_values[0, self.grid.num_space_points // 2])

    @property
    def z0(self):
        return float(self.z_values[0, self.grid.num_space_points // 2])

    def to_csv(self, path, time_stride=1):
        write_field_csv(self, path, time_stride)


def _central_d1(u, dx):
    d1 = np.empty_like(u)
    d1[1:-1] = (u[2:] - u[:-2]) / (2.0 * dx)
    d1[0] = (u[1] - u[0]) / dx
    d1[-1] = (u[-1] - u[-2]) / dx
    return d1


def _central_d2(u, dx):
    d2 = np.zeros_like(u)
    d2[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
    return d2


def solve_fd(g, phi, grid):
    """Explicit backward finite-difference sweep.

    ``u(k) = u(k+1) + dt [ D2 u(k+1) / 2 + g(t_k, D1 u(k+1)) ]`` with central
    differences in the interior; boundary nodes use one-sided first
    differences and a zero second difference. ``g`` is anything with an
    ``evaluate(t, z)`` method (a Generator or an EnvelopeGenerator).
    """
    grid.validate()
    if getattr(g, "y_dependent", False):
        raise ParameterError("solve_fd needs a y-independent driver")
    if getattr(g, "dim", 1) != 1:
        raise ParameterError("solve_fd supports one-dimensional z only")
    nt, nx = grid.num_time_steps, grid.num_space_points
    dx, dt = grid.dx, grid.dt
    x = grid.x
    ts = grid.t
    y = np.empty((nt + 1, nx))
    z = np.empty((nt + 1, nx))
    y[nt] = phi(x)
    z[nt] = _central_d1(y[nt], dx)
    if not np.all(np.isfinite(y[nt])):
        raise NumericalBlowupError("solver: non-finite terminal values")
    for k in range(nt - 1, -1, -1):
        u = y[k + 1]
        drift = np.asarray(g.evaluate(ts[k], z[k + 1]), dtype=float)
        y[k] = u + dt * (0.5 * _central_d2(u, dx) + drift)
        if not np.all(np.isfinite(y[k])):
            raise NumericalBlowupError(f"solver: non-finite value at time step {k}")
        z[k] = _central_d1(y[k], dx)
    y.flags.writeable = False
    z.flags.writeable = False
    return SolutionField(y, z, grid)


def _grid_coordinate(v, lo, step, n_cells):
    s = (v - lo) / step
    r = np.rint(s)
    s = np.where(np.abs(s - r) <= 1e-9 * np.maximum(1.0, np.abs(r)), r, s)
    i = np.clip(np.floor(s), 0, n_cells - 1).astype(int)
    return i, s - i


def evaluate_solution(field, t, x):
    """Bilinear interpolation of (y, z) at ``(t, x)``; exact at grid nodes."""
    grid = field.grid
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    L = grid.domain_half_width
    if np.any(t < 0) or np.any(t > grid.T * (1 + 1e-12)) or np.any(np.abs(x) > L * (1 + 1e-12)):
        raise DomainError("query outside the solution grid")
    i, a = _grid_coordinate(t, 0.0, grid.dt, grid.num_time_steps)
    j, b = _grid_coordinate(x, -L, grid.dx, grid.num_space_points - 1)

    def interp(v):
        return ((1 - a) * ((1 - b) * v[i, j] + b * v[i, j + 1])
                + a * ((1 - b) * v[i + 1, j] + b * v[i + 1, j + 1]))

    y, z = interp(field.y_values), interp(field.z_values)
    if y.ndim == 0:
        return float(y), float(z)
    return y, z


def write_field_csv(field, path, time_stride=1):
    grid = field.grid
    x = grid.x
    ts = grid.t
    ks = list(range(0, grid.num_time_steps + 1, time_stride))
    if ks[-1] != grid.num_time_steps:
        ks.append(grid.num_time_steps)
    with open(path, "w", newline="") as fh:
        fh.write("t,x,y,z\n")
        for k in ks:
            rows = np.column_stack([np.full(x.shape, ts[k]), x,
                                    field.y_values[k], field.z_values[k]])
            fh.write("\n".join(",".join(f"{v:.17g}" for v in r) for r in rows))
            fh.write("\n")


def read_field_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    return header, data


# -- Brownian paths ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathBundle:
    increments: np.ndarray  # (M, Nt), each ~ N(0, dt)
    T: float
    seed: int | None = None

    @property
    def num_paths(self):
        return self.increments.shape[0]

    @property
    def num_time_steps(self):
        return self.increments.shape[1]

    @property
    def dt(self):
        return self.T / self.num_time_steps

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.num_time_steps + 1)

    @property
    def W(self):
        W = np.zeros((self.num_paths, self.num_time_steps + 1))
        np.cumsum(self.increments, axis=1, out=W[:, 1:])
        return W

    def coarsen(self):
        """Same paths on a grid with half as many steps."""
        if self.num_time_steps % 2:
            raise ParameterError("coarsening needs an even number of steps")
        inc = self.increments[:, 0::2] + self.increments[:, 1::2]
        return PathBundle(inc, self.T, self.seed)


def simulate_paths(seed, M, Nt, T):
    if M < 1 or Nt < 1:
        raise ParameterError("need M >= 1 and Nt >= 1")
    if not T > 0:
        raise ParameterError("T must be positive")
    rng = np.random.default_rng(seed)
    inc = rng.standard_normal((M, Nt)) * math.sqrt(T / Nt)
    inc.flags.writeable = False
    return PathBundle(inc, float(T), seed)


# -- residual of the discretized BSDE ------------------------------------------

@dataclass
class ResidualReport:
    per_path: np.ndarray
    mean: float
    max: float
    dt: float

    def to_dict(self):
        return {"mean": self.mean, "max": self.max, "dt": self.dt,
                "num_paths": int(self.per_path.size)}


def residual_check(y_of, z_of, g, xi_of, paths):
    """Sup-in-time defect of the discretized BSDE along each path.

    ``y_of(t, W)`` and ``z_of(t, W)`` are evaluated on the path array ``W``
    (shape ``(M, Nt+1)``) with ``t`` broadcast along the time axis;
    ``xi_of(W_T)`` gives the terminal value. ``g`` needs ``driver(t, y, z)``.
    """
    W = paths.W
    t = paths.t[None, :]
    dt = paths.dt
    y = np.broadcast_to(np.asarray(y_of(t, W), dtype=float), W.shape)
    z = np.broadcast_to(np.asarray(z_of(t, W), dtype=float), W.shape)
    xi = np.broadcast_to(np.asarray(xi_of(W[:, -1]), dtype=float), W.shape[:1])
    for name, arr in (("y", y), ("z", z), ("xi", xi)):
        bad = ~np.isfinite(arr)
        if bad.any():
            p = int(np.argwhere(bad)[0][0])
            raise EvaluationError(f"non-finite {name} functional on path {p}")
    gv = np.asarray(g.driver(t[:, :-1], y[:, :-1], z[:, :-1]), dtype=float)
    gv = np.broadcast_to(gv, paths.increments.shape)
    if not np.all(np.isfinite(gv)):
        p = int(np.argwhere(~np.isfinite(gv))[0][0])
        raise EvaluationError(f"non-finite driver value on path {p}")
    step = gv * dt - z[:, :-1] * paths.increments
    # tail sums sum_{j >= k}, accumulated right-to-left in a fixed order
    tail = np.zeros(W.shape)
    tail[:, :-1] = np.cumsum(step[:, ::-1], axis=1)[:, ::-1]
    defect = np.abs(y - (xi[:, None] + tail))
    per_path = defect.max(axis=1)
    return ResidualReport(per_path, float(np.mean(per_path)), float(per_path.max()), dt)
