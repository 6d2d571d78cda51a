"""Closed-form solution of the linear problem

    -u'' + M^2 u = sigma(t),   u(0) - u(2pi) = mu,   u'(0) - u'(2pi) = lam

by variation of constants, plus an independent periodic Green's-kernel
evaluation for the mu = lam = 0 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .core import TWO_PI, Grid, GridFunction, check_same_grid, simpson_values
from .expr import field1

M_MAX = 20.0


class LinearSolveError(ValueError):
    pass


def check_M(M: float) -> float:
    M = float(M)
    if not math.isfinite(M) or M <= 0:
        raise LinearSolveError(f"M must be > 0, got {M:g} (M = 0 makes the solution formula divide by zero)")
    if M > M_MAX:
        raise LinearSolveError(f"M must be <= {M_MAX:g}, got {M:g} (exp(2 pi M) overflows)")
    return M


def as_grid_function(data, grid: Grid) -> GridFunction:
    """Tabulate ``data`` on ``grid``.

    Accepts a GridFunction (which must already live on ``grid``), a number,
    an expression string in t, or a callable of t such as a Field.
    """
    if isinstance(data, str):
        data = field1(data)
    if isinstance(data, GridFunction):
        if data.grid != grid:
            check_same_grid(GridFunction(grid, np.zeros(grid.n + 1)), data)
        return data
    if callable(data):
        return grid.sample(data)
    return grid.constant(float(data))


@dataclass(frozen=True)
class LinearPBVP:
    M: float
    sigma: object = 0.0
    mu: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "M", check_M(self.M))
        for name in ("mu", "lam"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise LinearSolveError(f"{name} must be finite")
            object.__setattr__(self, name, value)

    def sigma_on(self, grid: Grid) -> GridFunction:
        return as_grid_function(self.sigma, grid)


@dataclass(frozen=True)
class LinearSolution:
    u: GridFunction
    du0: float
    du2pi: float
    c1: float
    c2: float

    @property
    def jump_value(self) -> float:
        return float(self.u.values[0] - self.u.values[-1])

    @property
    def jump_derivative(self) -> float:
        return self.du0 - self.du2pi


@lru_cache(maxsize=64)
def _fitted_weights(c: float):
    """Weights for the integral of exp(-c (b - x)) q(x) over [0, b].

    q is the quadratic through x = 0, 1, 2. Returns the full-panel (b = 2)
    and half-panel (b = 1) weights; for c -> 0 these tend to Simpson's
    (1, 4, 1)/3 and (5, 8, -1)/12.
    """
    x, w = np.polynomial.legendre.leggauss(24)
    basis = (
        lambda s: 0.5 * (s - 1) * (s - 2),
        lambda s: -s * (s - 2),
        lambda s: 0.5 * s * (s - 1),
    )
    full = x + 1.0
    half = 0.5 * (x + 1.0)
    panel = np.array([np.sum(w * np.exp(-c * (2.0 - full)) * b(full)) for b in basis])
    split = np.array([0.5 * np.sum(w * np.exp(-c * (1.0 - half)) * b(half)) for b in basis])
    return panel, split


def _decaying_running_integral(sigma: np.ndarray, M: float, h: float) -> np.ndarray:
    """P_i = integral over [0, t_i] of exp(-M (t_i - s)) sigma(s) ds.

    Panel recursion with exponentially fitted Simpson weights; every factor
    is at most 1, so nothing overflows for large M.
    """
    panel, split = _fitted_weights(M * h)
    decay = math.exp(-M * h)
    contrib = h * (panel[0] * sigma[:-2:2] + panel[1] * sigma[1::2] + panel[2] * sigma[2::2])
    even = np.empty(sigma.size // 2 + 1)
    even[0] = 0.0
    even[1:] = lfilter([1.0], [1.0, -decay * decay], contrib)
    out = np.empty_like(sigma)
    out[::2] = even
    out[1::2] = decay * even[:-1] + h * (split[0] * sigma[:-2:2] + split[1] * sigma[1::2] + split[2] * sigma[2::2])
    return out


@dataclass(frozen=True)
class _Integrals:
    P: np.ndarray  # int_0^t e^{-M(t-s)} sigma
    Q: np.ndarray  # int_t^{2pi} e^{-M(s-t)} sigma


def _integrals(sigma: GridFunction, M: float) -> _Integrals:
    v, h = sigma.values, sigma.grid.h
    P = _decaying_running_integral(v, M, h)
    Q = _decaying_running_integral(v[::-1], M, h)[::-1]
    return _Integrals(P, Q)


def coefficients(p: LinearPBVP, grid: Grid) -> tuple[float, float]:
    """C1, C2 of the variation-of-constants formula.

    The integrals of e^{-Ms} sigma and e^{Ms} sigma over [0, 2pi] use the
    same fitted quadrature as ``solve``, so u(0) = C1 + C2 holds to rounding.
    """
    sigma = p.sigma_on(grid)
    return _coefficients(p, _integrals(sigma, p.M))


def _coefficients(p: LinearPBVP, ints: _Integrals) -> tuple[float, float]:
    M, mu, lam = p.M, p.mu, p.lam
    E = math.exp(TWO_PI * M)
    int_minus = ints.Q[0]  # int_0^{2pi} e^{-Ms} sigma
    int_plus = E * ints.P[-1]  # int_0^{2pi} e^{Ms} sigma
    c1 = (mu + lam / M) / (2 * (1 - E)) - E / (2 * M * (1 - E)) * int_minus
    c2 = (mu - lam / M) / (2 * (1 - 1 / E)) + (1 / E) / (2 * M * (1 - 1 / E)) * int_plus
    return float(c1), float(c2)


def solve(p: LinearPBVP, grid: Grid) -> LinearSolution:
    """Solve the linear problem on ``grid``.

    The variation-of-constants formula is evaluated in rescaled form:
    C1 e^{Mt} and the running integral against e^{-Ms} are combined into
    integrals of e^{-M|t-s|} before multiplying out, which is algebraically
    identical but free of inf/inf and catastrophic cancellation up to M_MAX.
    """
    sigma = p.sigma_on(grid)
    M, mu, lam = p.M, p.mu, p.lam
    t = grid.nodes
    ints = _integrals(sigma, M)
    P, Q = ints.P, ints.Q
    denom = -math.expm1(-TWO_PI * M)  # 1 - e^{-2 pi M}
    grow = np.exp(M * (t - TWO_PI))  # e^{M(t - 2pi)}
    decay = np.exp(-M * t)

    u = (Q + P + (grow * Q[0] + decay * P[-1]) / denom) / (2 * M)
    u += (-(mu + lam / M) * grow + (mu - lam / M) * decay) / (2 * denom)

    wrap = (Q[0] - P[-1]) / denom / 2
    e_2pi = math.exp(-TWO_PI * M)
    du0 = wrap - ((M * mu + lam) * e_2pi + (M * mu - lam)) / (2 * denom)
    du2pi = wrap - ((M * mu + lam) + (M * mu - lam) * e_2pi) / (2 * denom)

    if not (np.all(np.isfinite(u)) and math.isfinite(du0) and math.isfinite(du2pi)):
        raise LinearSolveError("non-finite values in the linear solve")
    c1, c2 = _coefficients(p, ints)
    return LinearSolution(GridFunction(grid, u), float(du0), float(du2pi), c1, c2)


def green_kernel(d, M: float):
    """Periodic Green's function cosh(M(|d| - pi)) / (2M sinh(M pi)).

    Written as (e^{M(|d| - 2pi)} + e^{-M|d|}) / (2M (1 - e^{-2 pi M})), the
    same function without overflow. Valid for |d| <= 2pi.
    """
    d = np.abs(d)
    return (np.exp(M * (d - TWO_PI)) + np.exp(-M * d)) / (2 * M * -math.expm1(-TWO_PI * M))


def solve_green(sigma, M: float, grid: Grid) -> GridFunction:
    """Periodic solution (mu = lam = 0) as u(t) = int G(t, s) sigma(s) ds.

    Each row splits the integral at the kink s = t and applies composite
    Simpson on both sides to the smooth one-sided kernels; an odd split
    point gets one half-panel rule. O(n^2) work.
    """
    M = check_M(M)
    sig = as_grid_function(sigma, grid).values
    n, h = grid.n, grid.h
    t = grid.nodes
    u = np.empty(n + 1)
    for i in range(n + 1):
        lo, hi = max(i - 1, 0), min(i + 2, n + 1)
        # kernel continued smoothly from each side of the kink
        gl = (np.exp(M * ((t[i] - t[:hi]) - TWO_PI)) + np.exp(-M * (t[i] - t[:hi]))) * sig[:hi]
        gr = (np.exp(M * ((t[lo:] - t[i]) - TWO_PI)) + np.exp(-M * (t[lo:] - t[i]))) * sig[lo:]
        gr = np.concatenate([np.zeros(lo), gr])
        if i % 2 == 0:
            total = (simpson_values(gl[: i + 1], h) if i else 0.0) + (simpson_values(gr[i:], h) if i < n else 0.0)
        else:
            total = (
                (simpson_values(gl[:i], h) if i > 1 else 0.0)
                + h / 12 * (5 * gl[i - 1] + 8 * gl[i] - gl[i + 1])
                + h / 12 * (-gr[i - 1] + 8 * gr[i] + 5 * gr[i + 1])
                + (simpson_values(gr[i + 1 :], h) if i + 1 < n else 0.0)
            )
        u[i] = total
    u /= 2 * M * -math.expm1(-TWO_PI * M)
    return GridFunction(grid, u)
