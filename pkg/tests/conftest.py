import numpy as np
import pytest

from pbvp.bracket import BracketPair, NonlinearPBVP
from pbvp.core import Grid

CUBIC_F = "-u^3 + cos(t) + cos(t)^3"
CUBIC_ALPHA = "-2 - 0.5*exp(-t)"
CUBIC_BETA = "2 + 0.5*exp(-t)"


@pytest.fixture(scope="session")
def grid256():
    return Grid(256)


@pytest.fixture(scope="session")
def grid2048():
    return Grid(2048)


@pytest.fixture(scope="session")
def cubic():
    return NonlinearPBVP(CUBIC_F, 5.0), BracketPair(CUBIC_ALPHA, CUBIC_BETA)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])


def random_trig(rng, t, modes=3, scale=1.0):
    """Smooth random 2pi-periodic combination of low harmonics."""
    out = np.full_like(t, rng.normal() * scale)
    for k in range(1, modes + 1):
        out += scale / k * (rng.normal() * np.cos(k * t) + rng.normal() * np.sin(k * t))
    return out


def random_smooth(rng, t, scale=1.0):
    """Smooth, not necessarily periodic, random function on [0, 2pi]."""
    return random_trig(rng, t, scale=scale) + scale * rng.normal() * np.exp(-rng.uniform(0, 1) * t) + 0.1 * scale * rng.normal() * t


def comparison_instance(rng, grid, mu_nonnegative=False, M_range=(0.25, 4.0)):
    """Build (omega, u) meeting every hypothesis of the nonpositivity check.

    omega >= 0 and sigma = -omega - g with g >= 0, so -u'' + M^2 u + omega
    = -g <= 0. (mu, lam) are drawn from [-2, 2] and rejected until the
    weighted omega integral covers the jump budget. u'' is passed exactly
    as M^2 u - sigma.
    """
    from pbvp.compare import ComparisonInstance, jump_budget, weighted_omega_integral
    from pbvp.core import GridFunction
    from pbvp.linsolve import LinearPBVP, solve

    t = grid.nodes
    M = rng.uniform(*M_range)
    w = random_trig(rng, t, modes=2)
    omega = GridFunction(grid, rng.uniform(0, 1) * (w - w.min()))
    g = random_trig(rng, t, modes=2)
    g = rng.uniform(0, 1) * (g - g.min())
    sigma = GridFunction(grid, -omega.values - g)
    available = weighted_omega_integral(omega, M)
    while True:
        mu = rng.uniform(0 if mu_nonnegative else -2, 2)
        lam = rng.uniform(-2, 2)
        if jump_budget(M, mu, lam) <= available:
            break
    sol = solve(LinearPBVP(M, sigma, mu, lam), grid)
    ddu = GridFunction(grid, M**2 * sol.u.values - sigma.values)
    return ComparisonInstance(sol, omega, M, mu, lam, ddu=ddu)


_UNARY = ["sin", "cos", "exp", "tanh", "sinh", "cosh", "log"]


def random_expr(rng, depth=3):
    """Random smooth expression in t and u, safe on t, u in [-1, 1]."""
    if depth == 0 or rng.random() < 0.25:
        leaf = ["const", "t", "u", "pi"][rng.integers(4)]
        return f"{rng.uniform(-2, 2):.3f}" if leaf == "const" else leaf
    kind = rng.integers(6)
    a = random_expr(rng, depth - 1)
    if kind == 0:
        name = _UNARY[rng.integers(len(_UNARY))]
        if name == "log":
            return f"log(2 + sin({a}))"
        if name in ("exp", "sinh", "cosh"):
            return f"{name}(0.5*sin({a}))"
        return f"{name}({a})"
    if kind == 1:
        return f"({a})^{int(rng.integers(2, 4))}" if "exp" not in a else f"-({a})"
    b = random_expr(rng, depth - 1)
    if kind == 2:
        return f"({a}) / (2 + cos({b}))"
    op = "+-*"[kind % 3]
    return f"({a}) {op} ({b})"
