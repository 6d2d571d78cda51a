import math

import numpy as np
import pytest

from pbvp.core import TWO_PI, Grid, GridFunction, sup_norm
from pbvp.linsolve import LinearPBVP, LinearSolveError, coefficients, green_kernel, solve, solve_green

from conftest import random_smooth, random_trig


def test_sine_forcing(grid2048):
    sol = solve(LinearPBVP(1.0, np.sin), grid2048)
    assert sup_norm(sol.u - grid2048.sample(lambda t: np.sin(t) / 2)) <= 1e-8


def test_sine_forcing_coefficients(grid2048):
    # Hand integration: C1 = -C2 = 1/4 for sigma = sin t, M = 1.
    c1, c2 = coefficients(LinearPBVP(1.0, np.sin), grid2048)
    assert c1 == pytest.approx(0.25, abs=1e-12)
    assert c2 == pytest.approx(-0.25, abs=1e-12)


def test_unit_forcing(grid2048):
    sol = solve(LinearPBVP(1.0, 1.0), grid2048)
    assert sol.c1 == pytest.approx(0.5, abs=1e-10)
    assert sol.c2 == pytest.approx(0.5, abs=1e-10)
    assert sup_norm(sol.u - 1.0) <= 1e-10


def test_pure_jump_data():
    # sigma = 0, mu = 1, lam = 0: u = A e^{Mt} + B e^{-Mt} solved by hand.
    M = 0.7
    grid = Grid(256)
    sol = solve(LinearPBVP(M, 0.0, 1.0, 0.0), grid)
    E = math.exp(TWO_PI * M)
    A, B = -1 / (2 * (E - 1)), E / (2 * (E - 1))
    exact = grid.sample(lambda t: A * np.exp(M * t) + B * np.exp(-M * t))
    assert sup_norm(sol.u - exact) <= 1e-13


@pytest.mark.parametrize("M", [0.0, -1.0, 20.5, float("nan")])
def test_rejects_bad_M(M):
    with pytest.raises(LinearSolveError):
        LinearPBVP(M)


def test_large_M_finite():
    grid = Grid(512)
    sol = solve(LinearPBVP(20.0, np.cos, 1.0, -1.0), grid)
    assert np.all(np.isfinite(sol.u.values))
    assert sol.jump_value == pytest.approx(1.0, abs=1e-10)


def test_jumps_random():
    rng = np.random.default_rng(5)
    grid = Grid(512)
    for _ in range(20):
        M = rng.uniform(0.25, 8)
        mu, lam = rng.uniform(-2, 2, 2)
        sigma = GridFunction(grid, random_smooth(rng, grid.nodes))
        sol = solve(LinearPBVP(M, sigma, mu, lam), grid)
        assert abs(sol.jump_value - mu) <= 1e-8 * (1 + abs(mu) + abs(lam))
        assert abs(sol.jump_derivative - lam) <= 1e-8 * (1 + abs(mu) + abs(lam))


def test_green_kernel_properties():
    M = 1.3
    assert green_kernel(0.1, M) == pytest.approx(green_kernel(-0.1, M))
    assert green_kernel(1.0, M) == pytest.approx(green_kernel(1.0 - TWO_PI, M))
    # derivative jump of -1 at the diagonal
    h = 1e-7
    slope_right = (green_kernel(h, M) - green_kernel(0, M)) / h
    assert 2 * slope_right == pytest.approx(-1.0, abs=1e-5)


def test_green_agrees_periodic(grid2048):
    rng = np.random.default_rng(2)
    for _ in range(3):
        M = rng.uniform(0.25, 8)
        sigma = GridFunction(grid2048, random_trig(rng, grid2048.nodes))
        a = solve(LinearPBVP(M, sigma), grid2048).u
        b = solve_green(sigma, M, grid2048)
        assert sup_norm(a - b) <= 1e-9 * (1 + sup_norm(sigma))


def test_linear_in_data():
    grid = Grid(256)
    a = solve(LinearPBVP(2.0, np.sin, 0.3, 0.1), grid).u
    b = solve(LinearPBVP(2.0, np.cos, -0.2, 0.5), grid).u
    c = solve(LinearPBVP(2.0, lambda t: np.sin(t) + 2 * np.cos(t), -0.1, 1.1), grid).u
    assert sup_norm(a + 2 * b - c) <= 1e-13


def test_accepts_expression_string():
    grid = Grid(64)
    a = solve(LinearPBVP(1.0, "sin(t)"), grid).u
    b = solve(LinearPBVP(1.0, np.sin), grid).u
    assert sup_norm(a - b) == 0
