"""Lower/upper solution pairs and their admissibility conditions.

A lower solution alpha needs -alpha'' <= f(t, alpha), alpha(0) < alpha(2pi)
and alpha'(0) >= alpha'(2pi); an upper solution beta the mirrored
inequalities. f must also satisfy the one-sided Lipschitz bound
f(t, u) - f(t, v) >= -M^2 (u - v) for alpha <= v <= u <= beta.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, Grid, Tolerance, default_n
from .expr import Field, field1, field2
from .linsolve import check_M

DEFAULT_LIPSCHITZ_SAMPLES = 32


class BracketError(ValueError):
    pass


@dataclass(frozen=True)
class NonlinearPBVP:
    """-u'' = f(t, u), periodic, with the one-sided Lipschitz constant M."""

    f: Field
    M: float

    def __post_init__(self):
        object.__setattr__(self, "f", field2(self.f))
        object.__setattr__(self, "M", check_M(self.M))

    def shifted_rhs(self, t, u):
        """f(t, u) + M^2 u."""
        return self.f(t, u) + self.M**2 * u


@dataclass(frozen=True)
class Clause:
    name: str
    passed: bool
    margin: float
    approximate: bool = False
    where: float | None = None

    def describe(self) -> str:
        mark = "pass" if self.passed else "FAIL"
        loc = "" if self.where is None else f" at t={self.where:.6f}"
        approx = " (approximate)" if self.approximate else ""
        return f"{self.name:<36} {mark}  margin {self.margin: .6e}{loc}{approx}"


@dataclass
class Report:
    title: str
    clauses: list
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.clauses)

    @property
    def failing(self) -> list:
        return [c for c in self.clauses if not c.passed]

    def __bool__(self):
        return self.passed

    def render(self) -> str:
        lines = [self.title] + ["  " + c.describe() for c in self.clauses]
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)


@dataclass(frozen=True)
class BracketPair:
    """alpha <= beta, checked at construction on ``grid`` (default solve grid)."""

    alpha: Field
    beta: Field
    grid: Grid | None = None
    tol: Tolerance = Tolerance()

    def __post_init__(self):
        object.__setattr__(self, "alpha", field1(self.alpha))
        object.__setattr__(self, "beta", field1(self.beta))
        ordering = self.ordering(self.grid or Grid(default_n()), self.tol)
        if not ordering.passed:
            raise BracketError(f"alpha <= beta fails: {ordering.describe()}")

    def ordering(self, grid: Grid, tol: Tolerance = Tolerance()) -> Clause:
        t = grid.nodes
        gap = np.broadcast_to(self.beta(t) - self.alpha(t), t.shape)
        i = int(np.argmin(gap))
        return Clause("alpha <= beta", bool(gap[i] >= -tol.abs_tol), float(gap[i]), where=float(t[i]))

    def truncate(self, t, u):
        """min(beta(t), max(u, alpha(t)))."""
        return np.minimum(self.beta(t), np.maximum(u, self.alpha(t)))


def _endpoint_data(w: Field):
    return float(w(0.0)), float(w(TWO_PI)), float(w.dt(0.0)), float(w.dt(TWO_PI))


def _differential_clause(name, w: Field, prob: NonlinearPBVP, grid: Grid, tol, sign) -> Clause:
    t = grid.nodes
    w_t = np.broadcast_to(w(t), t.shape)
    minus_w2 = -np.broadcast_to(w.dt2(t), t.shape)
    gap = sign * (np.broadcast_to(prob.f(t, w_t), t.shape) - minus_w2)
    i = int(np.argmin(gap))
    return Clause(name, bool(gap[i] >= -tol.abs_tol), float(gap[i]), w.approximate, float(t[i]))


def verify_lower(alpha, prob: NonlinearPBVP, grid: Grid, tol: Tolerance = Tolerance()) -> Report:
    """Check the three lower-solution clauses; the value jump is strict."""
    alpha = field1(alpha)
    a0, a2pi, da0, da2pi = _endpoint_data(alpha)
    clauses = [
        _differential_clause("-alpha'' <= f(t,alpha)", alpha, prob, grid, tol, +1),
        Clause("alpha(0)-alpha(2pi) < 0", bool(a0 - a2pi < 0), a2pi - a0),
        Clause("alpha'(0)-alpha'(2pi) >= 0", bool(da0 - da2pi >= -tol.abs_tol), da0 - da2pi, alpha.approximate),
    ]
    report = Report(f"lower solution alpha = {alpha}", clauses)
    if a0 == a2pi:
        report.notes.append("alpha(0) = alpha(2pi): classical periodic case, not a boundary-violating bracket")
    return report


def verify_upper(beta, prob: NonlinearPBVP, grid: Grid, tol: Tolerance = Tolerance()) -> Report:
    """Mirror of ``verify_lower``."""
    beta = field1(beta)
    b0, b2pi, db0, db2pi = _endpoint_data(beta)
    clauses = [
        _differential_clause("-beta'' >= f(t,beta)", beta, prob, grid, tol, -1),
        Clause("beta(0)-beta(2pi) > 0", bool(b0 - b2pi > 0), b0 - b2pi),
        Clause("beta'(0)-beta'(2pi) <= 0", bool(db2pi - db0 >= -tol.abs_tol), db2pi - db0, beta.approximate),
    ]
    report = Report(f"upper solution beta = {beta}", clauses)
    if b0 == b2pi:
        report.notes.append("beta(0) = beta(2pi): classical periodic case, not a boundary-violating bracket")
    return report


def verify_one_sided_lipschitz(
    prob: NonlinearPBVP,
    pair: BracketPair,
    grid: Grid,
    samples: int = DEFAULT_LIPSCHITZ_SAMPLES,
    tol: Tolerance = Tolerance(),
    seed: int = 0,
) -> Report:
    """Sample f(t,u) - f(t,v) + M^2 (u - v) >= 0 over alpha <= v <= u <= beta.

    At every node the bracket interval is cut into ``samples`` strata and
    each pair of neighbouring stratum edges is tested, together with
    ``samples`` seeded random ordered pairs. A sampling check, not a proof.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    t = grid.nodes
    lo = np.broadcast_to(pair.alpha(t), t.shape)
    hi = np.broadcast_to(pair.beta(t), t.shape)
    edges = lo[:, None] + (hi - lo)[:, None] * np.linspace(0.0, 1.0, samples + 1)[None, :]
    rng = np.random.default_rng(seed)
    r = np.sort(rng.random((t.size, 2, samples)), axis=1)
    v = np.concatenate([edges[:, :-1], lo[:, None] + (hi - lo)[:, None] * r[:, 0]], axis=1)
    u = np.concatenate([edges[:, 1:], lo[:, None] + (hi - lo)[:, None] * r[:, 1]], axis=1)
    tt = np.broadcast_to(t[:, None], u.shape)
    margin = prob.f(tt, u) - prob.f(tt, v) + prob.M**2 * (u - v)
    k = int(np.argmin(margin))  # first (smallest node index) on ties
    i, j = divmod(k, margin.shape[1])
    worst = float(margin[i, j])
    clause = Clause("f(t,u)-f(t,v) >= -M^2 (u-v)", bool(worst >= -tol.abs_tol), worst, where=float(t[i]))
    report = Report(f"one-sided Lipschitz bound, M = {prob.M:g}", [clause])
    report.notes.append(
        f"sampling check, not a proof: {2 * samples} ordered pairs per node on {t.size} nodes; "
        f"worst pair v={v[i, j]:.6g}, u={u[i, j]:.6g}"
    )
    return report


def validate(pair: BracketPair, prob: NonlinearPBVP, grid: Grid, tol: Tolerance = Tolerance(), samples=DEFAULT_LIPSCHITZ_SAMPLES) -> Report:
    """All admissibility clauses for (alpha, beta, f, M) in one report."""
    lower = verify_lower(pair.alpha, prob, grid, tol)
    upper = verify_upper(pair.beta, prob, grid, tol)
    lip = verify_one_sided_lipschitz(prob, pair, grid, samples, tol)
    report = Report(
        "bracket validation",
        [pair.ordering(grid, tol)] + lower.clauses + upper.clauses + lip.clauses,
        lower.notes + upper.notes + lip.notes,
    )
    return report
