"""Executable sign results for -u'' + M^2 u with jumps at the ends.

Every check evaluates its hypotheses on the grid, each with a numeric
margin (>= 0 means satisfied), and only then looks at the conclusion. A
conclusion that fails while all hypotheses pass is reported as ANOMALY.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, Grid, GridFunction, Tolerance, simpson
from .expr import Field, field1
from .linsolve import LinearSolution, as_grid_function, check_M

log = logging.getLogger(__name__)

JUMP_MATCH_TOL = 1e-9

OK = "ok"
NOT_APPLICABLE = "not applicable"
ANOMALY = "ANOMALY"


class ComparisonError(ValueError):
    pass


@dataclass(frozen=True)
class Hypothesis:
    name: str
    passed: bool
    margin: float
    approximate: bool = False


@dataclass
class ComparisonReport:
    check: str
    hypotheses: list
    conclusion: str
    conclusion_holds: bool | None
    worst_t: float
    worst_value: float
    notes: list = field(default_factory=list)

    @property
    def hypotheses_hold(self) -> bool:
        return all(h.passed for h in self.hypotheses)

    @property
    def status(self) -> str:
        if not self.hypotheses_hold:
            return NOT_APPLICABLE
        return OK if self.conclusion_holds else ANOMALY

    def margin(self, name: str) -> float:
        for h in self.hypotheses:
            if h.name == name:
                return h.margin
        raise KeyError(name)

    def render(self) -> str:
        lines = [f"{self.check}"]
        width = max(len(h.name) for h in self.hypotheses)
        for h in self.hypotheses:
            mark = "pass" if h.passed else "FAIL"
            approx = "  (approximate)" if h.approximate else ""
            lines.append(f"  {h.name:<{width}}  {mark}  margin {h.margin: .6e}{approx}")
        if self.conclusion_holds is None:
            lines.append(f"  conclusion {self.conclusion}: {NOT_APPLICABLE}")
        else:
            verdict = "holds" if self.conclusion_holds else "FAILS"
            lines.append(
                f"  conclusion {self.conclusion}: {verdict} "
                f"(extreme value {self.worst_value:.6e} at t={self.worst_t:.6f})"
            )
        lines.extend(f"  note: {n}" for n in self.notes)
        lines.append(f"  status: {self.status}")
        return "\n".join(lines)


@dataclass(frozen=True)
class Sampled:
    """u on a grid with u'' at every node and the endpoint slopes."""

    u: np.ndarray
    ddu: np.ndarray
    du0: float
    du2pi: float
    approximate: bool
    notes: tuple = ()

    @property
    def mu(self) -> float:
        return float(self.u[0] - self.u[-1])

    @property
    def lam(self) -> float:
        return self.du0 - self.du2pi


def fd_second_derivative(values: np.ndarray, h: float) -> np.ndarray:
    """u'' at all nodes: 3-point stencil inside, one-sided 4-point at the ends."""
    d2 = np.empty_like(values)
    d2[1:-1] = (values[:-2] - 2 * values[1:-1] + values[2:]) / h**2
    d2[0] = (2 * values[0] - 5 * values[1] + 4 * values[2] - values[3]) / h**2
    d2[-1] = (2 * values[-1] - 5 * values[-2] + 4 * values[-3] - values[-4]) / h**2
    return d2


@dataclass(frozen=True)
class ComparisonInstance:
    """Data (u, omega, M, mu, lam) of a sign check.

    ``u`` is an expression (string or Field), a LinearSolution, or a
    GridFunction with ``du0``/``du2pi`` supplied. ``ddu`` optionally gives
    u'' on the grid; a GridFunction without it gets finite differences.
    mu and lam, when given, must match the jumps of u.
    """

    u: object
    omega: object = 0.0
    M: float = 1.0
    mu: float | None = None
    lam: float | None = None
    du0: float | None = None
    du2pi: float | None = None
    ddu: object = None

    def __post_init__(self):
        object.__setattr__(self, "M", check_M(self.M))
        if isinstance(self.u, str):
            object.__setattr__(self, "u", field1(self.u))

    def sample(self, grid: Grid) -> Sampled:
        u = self.u
        notes = []
        if isinstance(u, Field):
            t = grid.nodes
            s = Sampled(
                np.asarray(u(t), dtype=float) + 0 * t,
                np.asarray(u.dt2(t), dtype=float) + 0 * t,
                float(u.dt(0.0)),
                float(u.dt(TWO_PI)),
                u.approximate,
            )
            if u.approximate:
                notes.append("derivatives of u by finite differences")
        else:
            du0, du2pi = self.du0, self.du2pi
            if isinstance(u, LinearSolution):
                du0 = u.du0 if du0 is None else du0
                du2pi = u.du2pi if du2pi is None else du2pi
                u = u.u
            if not isinstance(u, GridFunction):
                raise ComparisonError(f"unsupported u of type {type(u).__name__}")
            if du0 is None or du2pi is None:
                raise ComparisonError("a grid-function u needs endpoint derivatives du0 and du2pi")
            if u.grid != grid:
                raise ComparisonError(f"u lives on n={u.grid.n}, check requested on n={grid.n}")
            if self.ddu is None:
                ddu = fd_second_derivative(u.values, grid.h)
                notes.append("u'' by second differences, O(h^2)")
                approx = True
            else:
                ddu = as_grid_function(self.ddu, grid).values
                approx = False
            s = Sampled(u.values, ddu, float(du0), float(du2pi), approx)
        for name, given, actual in (("mu", self.mu, s.mu), ("lambda", self.lam, s.lam)):
            if given is not None and abs(given - actual) > JUMP_MATCH_TOL:
                raise ComparisonError(f"{name}={given!r} does not match the jump of u ({actual!r})")
        return Sampled(s.u, s.ddu, s.du0, s.du2pi, s.approximate, tuple(notes))

    def negated(self) -> "ComparisonInstance":
        """The mirror instance (-u, -omega, -mu, -lam)."""
        u = self.u
        if isinstance(u, Field):
            from .expr import Neg

            u = Field(Neg(u.expr))
        elif isinstance(u, LinearSolution):
            u = LinearSolution(-u.u, -u.du0, -u.du2pi, -u.c1, -u.c2)
        else:
            u = -u
        omega = self.omega
        if isinstance(omega, str):
            omega = field1(omega)
        if isinstance(omega, Field):
            from .expr import Neg

            omega = Field(Neg(omega.expr))
        elif isinstance(omega, GridFunction):
            omega = -omega
        else:
            omega = -float(omega)

        def neg(x):
            return None if x is None else -x

        ddu = self.ddu
        if isinstance(ddu, GridFunction):
            ddu = -ddu
        elif ddu is not None:
            ddu = -np.asarray(ddu)
        return ComparisonInstance(u, omega, self.M, neg(self.mu), neg(self.lam), neg(self.du0), neg(self.du2pi), ddu)


def _omega_on(omega, grid):
    if isinstance(omega, str):
        omega = field1(omega)
    return as_grid_function(omega, grid)


def jump_budget(M: float, mu: float, lam: float) -> float:
    """mu M (e^{2pi M} - 1) - lam (e^{2pi M} + 1)."""
    E = math.exp(TWO_PI * M)
    return mu * M * (E - 1) - lam * (E + 1)


def weighted_omega_integral(omega: GridFunction, M: float) -> float:
    """Integral of (e^{Ms} + e^{-M(s - 2pi)}) omega(s) over [0, 2pi]."""
    s = omega.grid.nodes
    weight = np.exp(M * s) + np.exp(-M * (s - TWO_PI))
    return simpson(GridFunction(omega.grid, weight * omega.values))


def boundary_ratio(M: float) -> float:
    """1 / (M tanh(pi M))."""
    return 1.0 / (M * math.tanh(math.pi * M))


def _hyp(name, margin, tol, approximate=False):
    return Hypothesis(name, bool(margin >= -tol.abs_tol), float(margin), approximate)


def _finish(check, hyps, conclusion, u_values, grid, tol, sign, notes):
    t = grid.nodes
    i = int(np.argmax(u_values) if sign < 0 else np.argmin(u_values))
    value = float(u_values[i])
    if all(h.passed for h in hyps):
        holds = value <= tol.abs_tol if sign < 0 else value >= -tol.abs_tol
    else:
        holds = None
    report = ComparisonReport(check, hyps, conclusion, holds, float(t[i]), value, list(notes))
    if report.status == ANOMALY:
        log.warning("%s: hypotheses hold but %s fails (%.3e at t=%.4f)", check, conclusion, value, t[i])
    return report


def check_nonpositive(inst: ComparisonInstance, grid: Grid, tol: Tolerance = Tolerance()) -> ComparisonReport:
    """Sign check: omega >= 0, -u'' + M^2 u + omega <= 0 and the weighted
    integral of omega dominating mu M (e^{2pi M} - 1) - lam (e^{2pi M} + 1)
    should force u <= 0."""
    s = inst.sample(grid)
    M = inst.M
    omega = _omega_on(inst.omega, grid)
    op = -s.ddu + M**2 * s.u + omega.values
    hyps = [
        _hyp("omega >= 0", np.min(omega.values), tol),
        _hyp("-u'' + M^2 u + omega <= 0", np.min(-op), tol, s.approximate),
        _hyp(
            "int (e^{Ms} + e^{-M(s-2pi)}) omega >= mu M (e^{2pi M}-1) - lam (e^{2pi M}+1)",
            weighted_omega_integral(omega, M) - jump_budget(M, s.mu, s.lam),
            tol,
            s.approximate,
        ),
    ]
    return _finish("nonpositivity (forced)", hyps, "u <= 0", s.u, grid, tol, -1, s.notes)


def check_nonnegative(inst: ComparisonInstance, grid: Grid, tol: Tolerance = Tolerance()) -> ComparisonReport:
    """Mirror of ``check_nonpositive``: omega <= 0, -u'' + M^2 u + omega >= 0
    and the reversed integral inequality should force u >= 0."""
    s = inst.sample(grid)
    M = inst.M
    omega = _omega_on(inst.omega, grid)
    op = -s.ddu + M**2 * s.u + omega.values
    hyps = [
        _hyp("omega <= 0", np.min(-omega.values), tol),
        _hyp("-u'' + M^2 u + omega >= 0", np.min(op), tol, s.approximate),
        _hyp(
            "int (e^{Ms} + e^{-M(s-2pi)}) omega <= mu M (e^{2pi M}-1) - lam (e^{2pi M}+1)",
            jump_budget(M, s.mu, s.lam) - weighted_omega_integral(omega, M),
            tol,
            s.approximate,
        ),
    ]
    return _finish("nonnegativity (forced)", hyps, "u >= 0", s.u, grid, tol, +1, s.notes)


def check_nonpositive_homogeneous(
    u, M: float, grid: Grid, tol: Tolerance = Tolerance(), **derivs
) -> ComparisonReport:
    """-u'' + M^2 u <= 0 with u(0) - u(2pi) <= (u'(0) - u'(2pi)) / (M tanh(pi M))
    should force u <= 0. ``derivs`` passes du0/du2pi/ddu for grid data."""
    inst = ComparisonInstance(u, 0.0, M, **derivs)
    s = inst.sample(grid)
    M = inst.M
    hyps = [
        _hyp("-u'' + M^2 u <= 0", np.min(s.ddu - M**2 * s.u), tol, s.approximate),
        _hyp(
            "u(0)-u(2pi) <= (u'(0)-u'(2pi)) / (M tanh(pi M))",
            boundary_ratio(M) * s.lam - s.mu,
            tol,
            s.approximate,
        ),
    ]
    return _finish("nonpositivity (homogeneous)", hyps, "u <= 0", s.u, grid, tol, -1, s.notes)


def check_nonpositive_constant(
    u, omega: float, M: float, grid: Grid, tol: Tolerance = Tolerance(), **derivs
) -> ComparisonReport:
    """-u'' + M^2 u <= -omega for a constant omega >= 0, a strictly positive
    excess u(0) - u(2pi) - (u'(0) - u'(2pi)) / (M tanh(pi M)), and omega at
    least M^2/2 times that excess should force u <= 0.

    The strict inequality is an exact floating-point comparison.
    """
    omega = float(omega)
    if not omega >= 0:
        raise ComparisonError(f"omega must be a nonnegative constant, got {omega}")
    inst = ComparisonInstance(u, omega, M, **derivs)
    s = inst.sample(grid)
    M = inst.M
    excess = s.mu - boundary_ratio(M) * s.lam
    hyps = [
        _hyp("-u'' + M^2 u <= -omega", np.min(-omega - (-s.ddu + M**2 * s.u)), tol, s.approximate),
        Hypothesis("u(0)-u(2pi) > (u'(0)-u'(2pi)) / (M tanh(pi M))", bool(excess > 0), float(excess), s.approximate),
        _hyp("omega >= M^2/2 [u(0)-u(2pi) - (u'(0)-u'(2pi)) / (M tanh(pi M))]", omega - M**2 / 2 * excess, tol, s.approximate),
    ]
    return _finish("nonpositivity (constant forcing)", hyps, "u <= 0", s.u, grid, tol, -1, s.notes)
