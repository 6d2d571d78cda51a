import math

import numpy as np
import pytest

from pbvp.compare import (
    ANOMALY,
    NOT_APPLICABLE,
    OK,
    ComparisonError,
    ComparisonInstance,
    check_nonnegative,
    check_nonpositive,
    check_nonpositive_constant,
    check_nonpositive_homogeneous,
)
from pbvp.core import Grid
from pbvp.linsolve import LinearPBVP, solve

from conftest import comparison_instance

BOUNDARY = "u(0)-u(2pi) <= (u'(0)-u'(2pi)) / (M tanh(pi M))"


@pytest.fixture(scope="module")
def grid():
    return Grid(512)


def test_trivial_instance(grid):
    r = check_nonpositive(ComparisonInstance("0", 0.0, 1.0), grid)
    assert r.status == OK and r.conclusion_holds


def test_negative_periodic_instance(grid):
    # u = -1 - 0.5 cos t is periodic, so the integral clause is 0 >= 0.
    r = check_nonpositive(ComparisonInstance("-1 - 0.5*cos(t)", 0.0, 1.0), grid)
    assert r.status == OK
    assert r.worst_value == pytest.approx(-0.5)


def test_positive_constant_is_not_applicable(grid):
    r = check_nonpositive(ComparisonInstance("1", 0.0, 1.0), grid)
    assert r.status == NOT_APPLICABLE
    assert r.margin("-u'' + M^2 u + omega <= 0") == pytest.approx(-1.0)


def test_homogeneous_example(grid):
    # u = -exp(-t): -u'' + u = 0, mu = e^{-2pi} - 1 < 0, lam = 1 - e^{-2pi}.
    r = check_nonpositive_homogeneous("-exp(-t)", 1.0, grid)
    assert r.status == OK
    margin = r.margin(BOUNDARY)
    ratio = 1 / math.tanh(math.pi)
    e = math.exp(-2 * math.pi)
    assert margin == pytest.approx(ratio * (1 - e) - (e - 1), rel=1e-9)


def test_constant_forcing_example(grid):
    r = check_nonpositive_constant("-1 + 0.5*exp(-t)", 0.95, 1.0, grid)
    assert r.status == OK
    assert r.hypotheses[0].margin == pytest.approx(0.05, abs=1e-9)
    assert r.hypotheses[2].margin == pytest.approx(0.45, abs=0.01)
    assert r.worst_value <= -0.49


def test_constant_forcing_rejects_negative_omega(grid):
    with pytest.raises(ComparisonError):
        check_nonpositive_constant("-1", -0.1, 1.0, grid)


def test_jump_mismatch_rejected(grid):
    with pytest.raises(ComparisonError, match="mu"):
        check_nonpositive(ComparisonInstance("-exp(-t)", 0.0, 1.0, mu=0.5), grid)


def test_grid_function_needs_endpoint_derivatives(grid):
    with pytest.raises(ComparisonError):
        check_nonpositive(ComparisonInstance(grid.constant(-1.0)), grid)


def test_grid_function_with_fd_second_derivative_flags_approximation(grid):
    inst = ComparisonInstance(grid.sample(lambda t: -2 + 0.5 * np.cos(t)), 0.0, 1.0, du0=0.0, du2pi=0.0)
    r = check_nonpositive(inst, grid)
    assert r.status == OK
    assert any(h.approximate for h in r.hypotheses)


def test_report_render_mentions_status(grid):
    text = check_nonpositive(ComparisonInstance("1"), grid).render()
    assert NOT_APPLICABLE in text


def test_duality_on_random_instances(grid):
    rng = np.random.default_rng(3)
    for _ in range(20):
        inst = comparison_instance(rng, grid)
        a = check_nonpositive(inst, grid)
        b = check_nonnegative(inst.negated(), grid)
        assert a.status == b.status
        for ha, hb in zip(a.hypotheses, b.hypotheses):
            assert ha.passed == hb.passed
            assert ha.margin == pytest.approx(hb.margin, rel=1e-12, abs=1e-12)
        assert a.worst_value == pytest.approx(-b.worst_value)


def test_sound_for_nonnegative_value_jump(grid):
    rng = np.random.default_rng(4)
    for _ in range(100):
        inst = comparison_instance(rng, grid, mu_nonnegative=True)
        r = check_nonpositive(inst, grid)
        assert r.hypotheses_hold, r.render()
        assert r.status == OK, r.render()
        assert r.worst_value <= 1e-8
        assert check_nonnegative(inst.negated(), grid).status == OK


def test_negative_value_jump_counterexample(grid):
    # sigma = omega = 0, mu = -1, lam = 0: every hypothesis holds (the
    # budget is -M (e^{2pi M} - 1) <= 0) but u(2pi) = 1/2.
    sol = solve(LinearPBVP(1.0, 0.0, -1.0, 0.0), grid)
    r = check_nonpositive(ComparisonInstance(sol, 0.0, 1.0, -1.0, 0.0, ddu=sol.u), grid)
    assert r.hypotheses_hold
    assert r.status == ANOMALY
    assert r.worst_t == pytest.approx(2 * math.pi)
    assert r.worst_value == pytest.approx(0.5, abs=1e-12)
