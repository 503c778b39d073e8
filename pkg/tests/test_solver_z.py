import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import cumulative_trapezoid

from delaybsde.errors import UnsupportedPayoffError
from delaybsde.kernel import ModelParams
from delaybsde.montecarlo import SimConfig, simulate_paths
from delaybsde.payoffs import Constant, ExpBM, ExpIntegral, IndicatorBM, LinearBM, StepFunction
from delaybsde.solver_z import (
    dynamic_rho_z,
    penalty_rate_representation,
    physical_path,
    residual_z,
    rho_star,
    solve_z_path,
    static_rho_z,
    two_factor_decomposition,
)

UNIT = ModelParams(1.0, 1.0)
CUT = 1 / math.e


def batch(n_paths=200, steps=128, seed=0):
    return next(simulate_paths(SimConfig(n_paths=n_paths, grid_steps=steps, seed=seed), 10**6))


def test_static_values():
    np.testing.assert_allclose(static_rho_z(ExpIntegral(), UNIT), math.exp(0.5 - 1.0), rtol=1e-15)
    assert static_rho_z(ExpIntegral(StepFunction.constant(0.0)), UNIT) == 1.0
    h = StepFunction((CUT,), (0.0, 1.0))
    expo = 0.5 * (1 - CUT) - (1 - 2 * CUT)
    np.testing.assert_allclose(static_rho_z(ExpIntegral(h), UNIT), math.exp(expo), rtol=1e-14)
    with pytest.raises(UnsupportedPayoffError):
        static_rho_z(IndicatorBM(1.0), UNIT)


def test_rho_star_cases():
    one = ExpIntegral()
    assert static_rho_z(one, UNIT) == rho_star(one, UNIT)
    late = ExpIntegral(StepFunction((CUT,), (0.0, 1.0)))
    early = ExpIntegral(StepFunction((CUT,), (1.0, 0.0)))
    assert static_rho_z(late, UNIT) > rho_star(late, UNIT)
    assert static_rho_z(early, UNIT) < rho_star(early, UNIT)
    np.testing.assert_allclose(static_rho_z(late, UNIT) / rho_star(late, UNIT), math.exp(CUT), rtol=1e-13)
    with pytest.raises(UnsupportedPayoffError):
        rho_star(ExpBM.martingale(2.0), UNIT)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.01, 3.0), st.floats(0.0, 3.0))
def test_static_decreasing_in_beta_and_below_mean(cut, a, b):
    xi = ExpIntegral(StepFunction((cut,), (a, b)))
    betas = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0]
    rho = [static_rho_z(xi, ModelParams(beta, 1.0)) for beta in betas]
    assert all(x > y for x, y in zip(rho, rho[1:]))
    np.testing.assert_allclose(rho[0], xi.mean_p(1.0), rtol=1e-14)
    assert all(r <= xi.mean_p(1.0) for r in rho)


def test_large_beta_limit():
    assert static_rho_z(ExpIntegral(), ModelParams(1e4, 1.0)) <= 1e-3


def test_trivial_payoff_solution():
    path = batch(5, 32)
    sol = solve_z_path(ExpIntegral(StepFunction.constant(0.0)), path, UNIT)
    np.testing.assert_allclose(sol.y, 1.0)
    np.testing.assert_allclose(sol.z, 0.0)


@pytest.mark.parametrize("xi", [ExpBM.martingale(2.0), ExpIntegral(), LinearBM(), Constant(3.0)])
def test_endpoints(xi):
    path = batch(20, 64)
    sol = solve_z_path(xi, path, UNIT)
    np.testing.assert_allclose(sol.y[:, 0], static_rho_z(xi, UNIT), rtol=1e-14)
    np.testing.assert_array_equal(sol.y[:, -1], sol.v[:, -1])


def test_exp_bm_solution_formula():
    path = batch(10, 256)
    sol = solve_z_path(ExpBM.martingale(2.0), path, UNIT)
    nodes = path.grid.nodes
    v = np.exp(2 * path.w - 2 * nodes - 2.0)
    running = cumulative_trapezoid(v, nodes, initial=0.0)
    expect = v.copy()
    expect[:, 1:] -= 2.0 * np.log(1.0 / nodes[1:]) * running[:, 1:]
    np.testing.assert_allclose(sol.y, expect, rtol=1e-10, atol=1e-13)


def test_two_factor_decomposition():
    path = batch(50, 64)
    xi = ExpIntegral()
    sol = solve_z_path(xi, path, UNIT)
    for t in (0.0, 0.25, 0.5, 1.0):
        x, pen = two_factor_decomposition(xi, path, UNIT, t)
        np.testing.assert_allclose(x - pen, sol.at(t), rtol=1e-12, atol=1e-14)
        assert np.all(sol.at(t) <= x)
    assert np.all(two_factor_decomposition(xi, path, UNIT, 1.0)[1] == 0)
    x0, p0 = two_factor_decomposition(ExpIntegral(StepFunction.constant(0.0)), path, UNIT, 0.5)
    np.testing.assert_allclose(x0, 1.0) and np.testing.assert_allclose(p0, 0.0)


def test_penalty_rate_trivial_cases():
    path = batch(10, 64)
    assert np.all(penalty_rate_representation(ExpIntegral(StepFunction.constant(0.0)), path, UNIT, 0.5) == 0)
    xi = ExpIntegral()
    p0 = ModelParams(0.0, 1.0)
    d = penalty_rate_representation(xi, path, p0, 0.5)
    v = xi.conditional_mean_q(path, p0)
    np.testing.assert_allclose(v[:, 0] + d[:, :32].sum(axis=-1), v[:, 32], rtol=1e-12)


def test_penalty_rate_reconstruction_converges():
    xi = ExpIntegral()
    fine = batch(2000, 1024, seed=4)
    rms = []
    for n in (64, 256, 1024):
        p = fine.coarsen(1024 // n)
        d = penalty_rate_representation(xi, p, UNIT, 0.5)
        k = p.grid.index_of(0.5)
        rec = xi.conditional_mean_q(p, UNIT)[:, 0] + d[:, :k].sum(axis=-1)
        rms.append(np.sqrt(np.mean((rec - solve_z_path(xi, p, UNIT).at(0.5)) ** 2)))
    # at least the sqrt(dt) rate: RMS shrinks by 2 or more per factor-4 refinement
    assert rms[0] / rms[1] >= 2.0 and rms[1] / rms[2] >= 2.0


def test_dynamic_at_zero_is_static():
    path = batch(3, 16)
    np.testing.assert_allclose(dynamic_rho_z(ExpIntegral(), path, UNIT, 0.0), static_rho_z(ExpIntegral(), UNIT))


def test_conditional_invariance_fails_for_known_payoff():
    # xi only depends on the path up to t = 0.5, yet rho_t(xi) < xi there
    xi = ExpIntegral(StepFunction((0.5,), (1.0, 0.0)))
    path = batch(300, 64)
    sol = solve_z_path(xi, path, UNIT)
    known = xi.conditional_mean_q(path, ModelParams(0.0, 1.0))[:, 32]
    np.testing.assert_allclose(xi.terminal(path), known, rtol=1e-12)
    assert np.all(sol.at(0.5) < known)


def test_bounded_by_physical_conditional_mean():
    xi = ExpIntegral()
    path = batch(500, 128)
    sol = solve_z_path(xi, path, UNIT)
    vp = xi.conditional_mean_p(physical_path(path, UNIT))
    assert np.all(sol.y[:, :-1] <= vp[:, :-1])


def test_physical_path_shift():
    path = batch(2, 8)
    back = physical_path(path, UNIT)
    np.testing.assert_allclose(path.w[:, -1] - back.w[:, -1], 1.0)
    np.testing.assert_allclose(back.w[:, 0], 0.0)


def test_residual_vanishes_without_delay():
    path = batch(20, 64)
    p0 = ModelParams(0.0, 1.0)
    sol = solve_z_path(LinearBM(), path, p0)
    np.testing.assert_allclose(residual_z(sol, path, p0, (0.25, 0.5)), 0.0, atol=1e-13)


def test_indicator_unsupported():
    with pytest.raises(UnsupportedPayoffError):
        solve_z_path(IndicatorBM(1.0), batch(2, 8), UNIT)
