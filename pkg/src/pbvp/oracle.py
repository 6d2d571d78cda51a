"""Finite-difference ground truth.

The periodic problem -u'' + M^2 u = sigma is discretized with the 3-point
stencil on the unknowns u_0 .. u_{n-1} (u_n := u_0). The resulting cyclic
tridiagonal system is solved by the Sherman-Morrison reduction to two
ordinary tridiagonal solves. The nonlinear problem -u'' = f(t, u) gets a
damped Newton iteration on the same stencil.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import Grid, GridFunction, Tolerance, check_same_grid
from .expr import EvaluationError
from .linsolve import as_grid_function, check_M

log = logging.getLogger(__name__)

MAX_HALVINGS = 30


class NewtonDivergence(RuntimeError):
    def __init__(self, message, residual):
        self.residual = residual
        super().__init__(f"{message} (last residual {residual:.3e})")


@dataclass(frozen=True)
class FDSystem:
    """Constant-coefficient periodic stencil: diag * u_i + off * (u_{i-1} + u_{i+1})."""

    grid: Grid
    M: float

    @property
    def diag(self) -> float:
        return 2.0 / self.grid.h**2 + self.M**2

    @property
    def off(self) -> float:
        return -1.0 / self.grid.h**2

    def dense(self) -> np.ndarray:
        n = self.grid.n
        A = np.diag(np.full(n, self.diag)) + self.off * (np.eye(n, k=1) + np.eye(n, k=-1))
        A[0, -1] = A[-1, 0] = self.off
        return A


def solve_cyclic_tridiagonal(lower, diag, upper, rhs):
    """Solve a cyclic tridiagonal system.

    Row i reads lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]
    with indices taken mod m, so lower[0] and upper[-1] are the corner
    entries. Sherman-Morrison: A = B + w v^T with B tridiagonal.
    """
    lower, diag, upper, rhs = (np.asarray(a, dtype=float) for a in (lower, diag, upper, rhs))
    m = diag.size
    if m < 3:
        raise ValueError("cyclic system needs at least 3 unknowns")
    alpha, beta = upper[-1], lower[0]  # A[-1, 0], A[0, -1]
    gamma = -diag[0] if diag[0] != 0 else 1.0
    b = diag.copy()
    b[0] -= gamma
    b[-1] -= alpha * beta / gamma
    ab = np.zeros((3, m))
    ab[0, 1:] = upper[:-1]
    ab[1] = b
    ab[2, :-1] = lower[1:]
    w = np.zeros(m)
    w[0] = gamma
    w[-1] = alpha
    y, z = solve_banded((1, 1), ab, np.column_stack([rhs, w]), check_finite=False).T
    v_y = y[0] + beta / gamma * y[-1]
    v_z = z[0] + beta / gamma * z[-1]
    return y - z * (v_y / (1.0 + v_z))


def _periodic(grid: Grid, head: np.ndarray) -> GridFunction:
    return GridFunction(grid, np.append(head, head[0]))


def fd_solve_linear(sigma, M: float, grid: Grid, dense: bool = False) -> GridFunction:
    """Periodic FD solution of -u'' + M^2 u = sigma (mu = lam = 0).

    ``sigma[n]`` is ignored: the periodic unknowns use nodes 0 .. n-1.
    ``dense=True`` solves with numpy instead (test cross-check, n <= 64).
    """
    M = check_M(M)
    rhs = as_grid_function(sigma, grid).values[:-1]
    sys = FDSystem(grid, M)
    n = grid.n
    if dense:
        if n > 64:
            raise ValueError("dense fallback is limited to n <= 64")
        return _periodic(grid, np.linalg.solve(sys.dense(), rhs))
    off = np.full(n, sys.off)
    return _periodic(grid, solve_cyclic_tridiagonal(off, np.full(n, sys.diag), off, rhs))


def second_difference(values: np.ndarray, h: float) -> np.ndarray:
    """u'' at the interior nodes 1 .. n-1 by the 3-point stencil."""
    return (values[:-2] - 2.0 * values[1:-1] + values[2:]) / h**2


def _rhs(prob, t, u):
    return np.broadcast_to(prob.f(t, u), u.shape)


def _dfdu(prob, t, u):
    """Partial f / partial u: symbolic when possible, else a central difference."""
    try:
        fu = prob.f.derivative("u")
    except Exception:
        fu = None
    if fu is not None:
        return np.broadcast_to(fu(t, u), u.shape)
    step = 1e-6 * np.maximum(1.0, np.abs(u))
    return (prob.f(t, u + step) - prob.f(t, u - step)) / (2 * step)


def _periodic_residual(prob, t, u, h):
    wrap = np.concatenate([[u[-1]], u, [u[0]]])
    return -second_difference(wrap, h) - _rhs(prob, t, u)


def fd_solve_nonlinear(prob, initial: GridFunction, grid: Grid, tol: Tolerance = Tolerance(), max_iter: int = 50):
    """Damped Newton for the periodic discretization of -u'' = f(t, u).

    Returns (solution, number of Newton steps). Converged once the sup-norm
    of the discrete residual drops below ``tol.abs_tol``.
    """
    check_same_grid(initial, GridFunction(grid, np.zeros(grid.n + 1)))
    h = grid.h
    t = grid.nodes[:-1]
    u = initial.values[:-1].copy()
    res = _periodic_residual(prob, t, u, h)
    norm = float(np.max(np.abs(res)))
    n = grid.n
    off = np.full(n, -1.0 / h**2)
    for step in range(max_iter + 1):
        if norm < tol.abs_tol:
            return _periodic(grid, u), step
        if step == max_iter:
            break
        diag = 2.0 / h**2 - _dfdu(prob, t, u)
        du = solve_cyclic_tridiagonal(off, diag, off, -res)
        scale = 1.0
        for _ in range(MAX_HALVINGS + 1):
            trial = u + scale * du
            try:
                with np.errstate(all="ignore"):
                    trial_res = _periodic_residual(prob, t, trial, h)
                trial_norm = float(np.max(np.abs(trial_res)))
            except EvaluationError:
                trial_norm = float("inf")
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            scale *= 0.5
        else:
            raise NewtonDivergence("step halving exhausted", norm)
        u, res, norm = trial, trial_res, trial_norm
        log.debug("newton step %d: residual %.3e (damping %.3g)", step + 1, norm, scale)
    raise NewtonDivergence(f"no convergence in {max_iter} Newton steps", norm)


@dataclass(frozen=True)
class Residual:
    interior: float
    bc_value: float
    bc_deriv: float


def residual(u: GridFunction, prob) -> Residual:
    """Substitute ``u`` into -u'' = f(t, u) and the periodic conditions.

    Interior residual uses the 3-point stencil at nodes 1 .. n-1; endpoint
    derivatives are one-sided second-order differences.
    """
    v, h = u.values, u.grid.h
    t = u.grid.nodes
    interior = -second_difference(v, h) - _rhs(prob, t[1:-1], v[1:-1])
    du0 = (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    du2pi = (3 * v[-1] - 4 * v[-2] + v[-3]) / (2 * h)
    return Residual(float(np.max(np.abs(interior))), float(abs(v[0] - v[-1])), float(abs(du0 - du2pi)))
