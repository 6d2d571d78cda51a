"""Uniform grids on [0, 2pi], grid functions, Simpson quadrature and comparisons."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

DEFAULT_SOLVE_N = 2048
DEFAULT_VERIFY_N = 256


def default_n() -> int:
    """Grid size for solves, overridable through ``PBVP_DEFAULT_N``."""
    raw = os.environ.get("PBVP_DEFAULT_N")
    if raw is None:
        return DEFAULT_SOLVE_N
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"PBVP_DEFAULT_N must be an integer, got {raw!r}") from None


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_i = i*h, i = 0..n, with h = 2pi/n and n even."""

    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            raise TypeError(f"grid size must be an integer, got {self.n!r}")
        if self.n < 16 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 16, got {self.n}")

    @property
    def h(self) -> float:
        return TWO_PI / self.n

    @property
    def nodes(self) -> np.ndarray:
        t = np.arange(self.n + 1) * self.h
        t[-1] = TWO_PI
        return t

    def sample(self, fn) -> "GridFunction":
        """Tabulate a vectorized callable ``fn(t)`` on the nodes."""
        values = np.broadcast_to(np.asarray(fn(self.nodes), dtype=float), (self.n + 1,))
        return GridFunction(self, values)

    def constant(self, c: float) -> "GridFunction":
        return GridFunction(self, np.full(self.n + 1, float(c)))


@dataclass(frozen=True)
class Tolerance:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be strictly positive")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Node values of a function on a grid.

    ``values[0]`` and ``values[n]`` are independent; nothing here assumes
    periodicity.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"expected {self.grid.n + 1} values for n={self.grid.n}, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise ValueError(f"non-finite value at node {bad} (t={self.grid.nodes[bad]:.6g})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def _other(self, other):
        if isinstance(other, GridFunction):
            check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._other(other))

    def __rsub__(self, other):
        return GridFunction(self.grid, self._other(other) - self.values)

    def __mul__(self, other):
        return GridFunction(self.grid, self.values * self._other(other))

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def __len__(self):
        return self.values.size


def check_same_grid(*gs: GridFunction) -> Grid:
    grid = gs[0].grid
    for g in gs[1:]:
        if g.grid != grid:
            raise GridMismatchError(f"grid mismatch: n={grid.n} vs n={g.grid.n}")
    return grid


def _as_values(g) -> tuple[np.ndarray, float]:
    if isinstance(g, GridFunction):
        return g.values, g.grid.h
    raise TypeError(f"expected a GridFunction, got {type(g).__name__}")


def simpson_values(values: np.ndarray, h: float) -> float:
    n = values.size - 1
    if n % 2:
        raise ValueError(f"Simpson's rule needs an even number of subintervals, got {n}")
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def simpson(g: GridFunction) -> float:
    """Composite Simpson approximation of the integral of ``g`` over [0, 2pi]."""
    values, h = _as_values(g)
    return float(simpson_values(values, h))


def cumulative_simpson(g: GridFunction) -> np.ndarray:
    """Running integrals from 0 to every node.

    Even nodes get exact composite Simpson partial sums. An odd node 2k+1
    adds the half-panel rule h/12 (5 g_2k + 8 g_2k+1 - g_2k+2) to the
    partial sum at 2k.
    """
    v, h = _as_values(g)
    out = np.zeros_like(v)
    panels = h / 3.0 * (v[:-2:2] + 4.0 * v[1::2] + v[2::2])
    out[2::2] = np.cumsum(panels)
    out[1::2] = out[:-2:2] + h / 12.0 * (5.0 * v[:-2:2] + 8.0 * v[1::2] - v[2::2])
    return out


def sup_norm(g: GridFunction) -> float:
    values, _ = _as_values(g)
    return float(np.max(np.abs(values)))


@dataclass(frozen=True)
class OrderingReport:
    """Outcome of a pointwise ``g1 <= g2`` check.

    ``margin`` is min_i (g2[i] - g1[i]); negative means a violation of that
    size at ``worst_index``.
    """

    holds: bool
    margin: float
    worst_index: int
    worst_t: float

    def __bool__(self):
        return self.holds


def leq_pointwise(g1: GridFunction, g2: GridFunction, tol: Tolerance = Tolerance()) -> OrderingReport:
    grid = check_same_grid(g1, g2)
    gap = g2.values - g1.values
    # argmin picks the smallest index on ties
    i = int(np.argmin(gap))
    margin = float(gap[i])
    return OrderingReport(margin >= -tol.abs_tol, margin, i, float(grid.nodes[i]))
