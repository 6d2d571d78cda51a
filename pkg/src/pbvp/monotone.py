"""Monotone iteration between a lower and an upper solution.

The operator A maps eta to the periodic solution of
-u'' + M^2 u = f(t, eta) + M^2 eta. Starting from alpha and beta, the
sequences alpha_{k+1} = A alpha_k and beta_{k+1} = A beta_k should increase
and decrease towards the minimal and maximal solutions phi <= psi. The chain
alpha_0 <= alpha_1 <= ... <= beta_1 <= beta_0 is checked at every step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .bracket import BracketError, BracketPair, NonlinearPBVP, validate
from .core import Grid, GridFunction, Tolerance, default_n, sup_norm
from .linsolve import LinearPBVP, solve

log = logging.getLogger(__name__)

DEFAULT_MAX_ITER = 200
HYPOTHESES_NOT_MET = "HYPOTHESES-NOT-MET"


class AnomalyError(RuntimeError):
    """The computed iterates contradict the monotone theory."""

    def __init__(self, message, history=None):
        self.history = history
        super().__init__(f"ANOMALY: {message}")


class NotConvergedError(RuntimeError):
    def __init__(self, message, history=None):
        self.history = history
        super().__init__(message)


@dataclass(frozen=True)
class IterationConfig:
    tol: Tolerance = Tolerance()
    max_iter: int = DEFAULT_MAX_ITER
    grid: Grid = field(default_factory=lambda: Grid(default_n()))

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class IterationHistory:
    alphas: list
    betas: list
    delta_alpha: list = field(default_factory=list)
    delta_beta: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    chain_violation: float = 0.0
    converged: bool = False
    final_residual: tuple = (float("nan"), float("nan"))
    flags: list = field(default_factory=list)

    @property
    def deltas(self) -> list:
        return [max(a, b) for a, b in zip(self.delta_alpha, self.delta_beta)]

    @property
    def phi(self) -> GridFunction:
        return self.alphas[-1]

    @property
    def psi(self) -> GridFunction:
        return self.betas[-1]

    @property
    def iterations(self) -> int:
        """Updates that changed an iterate by at least the tolerance.

        When converged the last application of A only confirmed the fixed
        point and is not counted.
        """
        steps = len(self.delta_alpha)
        return steps - 1 if self.converged else steps

    @property
    def gap(self) -> float:
        return float(np.max(self.psi.values - self.phi.values))


def apply_A(eta: GridFunction, prob: NonlinearPBVP, grid: Grid | None = None) -> GridFunction:
    """Periodic solution of -u'' + M^2 u = f(t, eta(t)) + M^2 eta(t)."""
    grid = grid or eta.grid
    if eta.grid != grid:
        raise ValueError(f"eta lives on n={eta.grid.n}, not n={grid.n}")
    sigma = GridFunction(grid, prob.shifted_rhs(grid.nodes, eta.values))
    return solve(LinearPBVP(prob.M, sigma), grid).u


def _chain_step(prev_a, a, prev_b, b):
    """Largest violation of prev_a <= a <= b <= prev_b at this step."""
    return max(
        float(np.max(prev_a.values - a.values)),
        float(np.max(b.values - prev_b.values)),
        float(np.max(a.values - b.values)),
    )


def _check_bracket(pair, prob, grid, tol, force):
    report = validate(pair, prob, grid, tol)
    if not report.passed:
        names = ", ".join(c.name for c in report.failing)
        if not force:
            raise BracketError(f"bracket validation failed: {names}")
        log.warning("%s: running despite failing clauses (%s)", HYPOTHESES_NOT_MET, names)
        return [f"{HYPOTHESES_NOT_MET}: {names}"]
    return []


def iterate(pair: BracketPair, prob: NonlinearPBVP, cfg: IterationConfig = IterationConfig(), force: bool = False) -> IterationHistory:
    """Run both monotone sequences until the sup-norm change drops below tol.abs.

    Raises BracketError for an inadmissible bracket (unless ``force``),
    AnomalyError when the chain breaks by more than tol.abs, and
    NotConvergedError after ``cfg.max_iter`` steps. Both errors carry the
    history so far.
    """
    grid, tol = cfg.grid, cfg.tol
    flags = _check_bracket(pair, prob, grid, tol, force)
    a = grid.sample(pair.alpha)
    b = grid.sample(pair.beta)
    hist = IterationHistory([a], [b], flags=flags)
    for k in range(cfg.max_iter):
        a_next = apply_A(a, prob, grid)
        b_next = apply_A(b, prob, grid)
        violation = _chain_step(a, a_next, b, b_next)
        hist.chain_violation = max(hist.chain_violation, violation)
        hist.alphas.append(a_next)
        hist.betas.append(b_next)
        hist.delta_alpha.append(sup_norm(a_next - a))
        hist.delta_beta.append(sup_norm(b_next - b))
        hist.residuals.append((hist.delta_alpha[-1], hist.delta_beta[-1]))
        hist.gaps.append(float(np.max(b_next.values - a_next.values)))
        log.debug("step %d: |da| %.3e |db| %.3e gap %.3e", k + 1, hist.delta_alpha[-1], hist.delta_beta[-1], hist.gaps[-1])
        if violation > tol.abs_tol:
            raise AnomalyError(f"monotone chain broken by {violation:.3e} at step {k + 1}", hist)
        a, b = a_next, b_next
        if max(hist.delta_alpha[-1], hist.delta_beta[-1]) < tol.abs_tol:
            hist.converged = True
            break
    hist.final_residual = (
        sup_norm(hist.phi - apply_A(hist.phi, prob, grid)),
        sup_norm(hist.psi - apply_A(hist.psi, prob, grid)),
    )
    if not hist.converged:
        raise NotConvergedError(
            f"no convergence in {cfg.max_iter} steps (last change {hist.deltas[-1]:.3e})", hist
        )
    return hist


@dataclass
class ModifiedSolution:
    u: GridFunction
    iterations: int
    deltas: list
    in_bracket_margin: float


def solve_modified(pair: BracketPair, prob: NonlinearPBVP, cfg: IterationConfig = IterationConfig(), force: bool = False) -> ModifiedSolution:
    """Fixed point of u -> periodic solution with right-hand side
    f(t, p(t, u)) + M^2 p(t, u), p the clamp into [alpha, beta].

    Picard iteration from (alpha + beta)/2. Any solution of this truncated
    problem is expected inside the bracket; leaving it raises AnomalyError.
    """
    grid, tol = cfg.grid, cfg.tol
    _check_bracket(pair, prob, grid, tol, force)
    t = grid.nodes
    lo, hi = grid.sample(pair.alpha), grid.sample(pair.beta)
    u = 0.5 * (lo + hi)
    deltas = []
    for k in range(cfg.max_iter):
        p = pair.truncate(t, u.values)
        sigma = GridFunction(grid, prob.shifted_rhs(t, p))
        u_next = solve(LinearPBVP(prob.M, sigma), grid).u
        deltas.append(sup_norm(u_next - u))
        u = u_next
        if deltas[-1] < tol.abs_tol:
            break
    else:
        raise NotConvergedError(f"Picard iteration did not converge in {cfg.max_iter} steps (last change {deltas[-1]:.3e})")
    margin = float(min(np.min(u.values - lo.values), np.min(hi.values - u.values)))
    if margin < -tol.abs_tol:
        raise AnomalyError(f"solution of the truncated problem leaves [alpha, beta] by {-margin:.3e}")
    return ModifiedSolution(u, len(deltas), deltas, margin)
