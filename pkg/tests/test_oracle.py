import math

import numpy as np
import pytest

from fluidq.errors import DomainError, OutOfRange
from fluidq.model import new_model
from fluidq.oracle import (
    SimConfig, default_truncation, equation_residual, oracle_F, oracle_F_vector, oracle_log,
    oracle_marginal, oracle_marginal_log, simulate, solve_exact,
)

from conftest import FIG_RATES


@pytest.fixture(scope="module")
def sol():
    return solve_exact(new_model(*FIG_RATES, 10.5), 120)


@pytest.fixture(scope="module")
def sol_double():
    return solve_exact(new_model(*FIG_RATES, 10.5), 120, dps=None)


@pytest.fixture(scope="module")
def small_c():
    m = new_model(*FIG_RATES, 5.5)
    return m, solve_exact(m)


def test_mode_count(sol):
    assert sol.n_modes == 110
    assert sol.diagnostics["mode_count"] == 110
    assert np.all(sol.thetas < 0)


def test_diagnostics(sol):
    d = sol.diagnostics
    assert d["eig_residual"] < 1e-10
    assert d["zero_mode_residual"] < 1e-10
    assert d["boundary_residual"] < 1e-10
    assert d["condition"] < 1e12


def test_stationary_vector(sol):
    m = sol.model
    k = np.arange(sol.K_trunc + 1)
    geo = (1 - m.rho) * m.rho ** k
    assert np.max(np.abs(sol.p_stat - geo)) < 1e-12
    assert sol.p_stat.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.max(np.abs(oracle_F_vector(sol, 1e4) - sol.p_stat)) < 1e-12


@pytest.mark.parametrize("x", [0.1, 1.0, 10.0])
def test_equation_residual(sol_double, x):
    assert equation_residual(sol_double, x) < 1e-8


def test_truncation_doubling(sol_double):
    K = sol_double.K_trunc
    big = solve_exact(sol_double.model, 2 * K, dps=None)
    for x in (0.1, 1.0, 10.0, 100.0):
        assert np.max(np.abs(oracle_F_vector(sol_double, x) - oracle_F_vector(big, x)[:K + 1])) < 1e-10


def test_mp_and_double_agree(sol, sol_double):
    for x, k in [(0.5, 3), (5.0, 10), (2.0, 14)]:
        assert oracle_log(sol, x, k)[0] == pytest.approx(oracle_log(sol_double, x, k)[0], abs=1e-10)


def test_boundary_zero_above_c(sol, sol_double):
    m = sol.model
    k = m.floor_c + 1
    assert oracle_F(sol, 0.0, k).F == 0.0
    assert abs(oracle_F_vector(sol_double, 0.0)[k]) < 1e-10


def test_F_limit_and_monotone(sol):
    m = sol.model
    xs = np.linspace(0.0, 40.0, 81)
    for k in (0, 5, 10, 11, 15, 25):
        vals = np.array([oracle_log(sol, x, k)[0] for x in xs])
        assert np.all(np.diff(vals) >= 0.0)
        assert oracle_log(sol, 1e4, k)[0] == pytest.approx(
            math.log(1 - m.rho) + k * m.log_rho, abs=1e-12)


def test_oracle_self_error_is_zero(sol):
    assert oracle_F(sol, 3.0, 4).rel_log_err == 0.0


def test_out_of_range(sol):
    with pytest.raises(OutOfRange):
        oracle_F(sol, 1.0, sol.K_trunc + 1)
    with pytest.raises(DomainError):
        oracle_log(sol, -1.0, 2)


def test_truncation_preconditions():
    m = new_model(*FIG_RATES, 10.5)
    with pytest.raises(DomainError):
        solve_exact(m, 15)
    with pytest.raises(DomainError):
        solve_exact(m, 25)
    K = default_truncation(m)
    assert K >= m.c + 10 and K * -m.log_rho > 14 * math.log(10)


def test_marginal_limits(sol):
    p0 = oracle_marginal(sol, 0.0)
    assert 0.0 < p0 < 1.0
    assert oracle_marginal(sol, 1e4) < 1e-10
    xs = np.linspace(0.0, 100.0, 51)
    assert np.all(np.diff([oracle_marginal_log(sol, x) for x in xs]) < 0)


def test_marginal_tail_rate(sol):
    # the modes nearest 0 are closely spaced, so the slowest one only takes over far out
    x = 1e5
    slope = (oracle_marginal_log(sol, x + 100.0) - oracle_marginal_log(sol, x)) / 100.0
    assert slope / sol.theta_max == pytest.approx(1.0, abs=0.01)


def test_sim_config_validation():
    with pytest.raises(DomainError):
        SimConfig(t_max=10.0, burn_in=20.0)
    with pytest.raises(DomainError):
        SimConfig(t_max=10.0, sample_dt=0.0)
    with pytest.raises(DomainError):
        SimConfig(t_max=10.0, batches=1)
    cfg = SimConfig(t_max=1000.0)
    assert cfg.burn_in_time == 100.0
    assert cfg.n_samples == 900


def test_simulation_is_deterministic(small_c):
    m, _ = small_c
    cfg = SimConfig(t_max=2e4, seed=11)
    a = simulate(m, cfg, x_grid=(0.0, 1.0), joint_points=[(1.0, 2)])
    b = simulate(m, cfg, x_grid=(0.0, 1.0), joint_points=[(1.0, 2)])
    assert np.array_equal(a.marginal, b.marginal)
    assert np.array_equal(a.joint, b.joint)
    assert np.array_equal(a.k_marginal, b.k_marginal)
    c = simulate(m, SimConfig(t_max=2e4, seed=12), x_grid=(0.0, 1.0))
    assert not np.array_equal(a.marginal, c.marginal)


def test_simulated_source_count_is_geometric():
    m = new_model(*FIG_RATES, 40.5)
    sim = simulate(m, SimConfig(t_max=2e5, seed=1))
    ks = np.arange(10)
    z = (sim.k_marginal[:10] - (1 - m.rho) * m.rho ** ks) / sim.k_marginal_se[:10]
    assert np.all(np.abs(z) < 3.0)


def test_simulation_matches_oracle(small_c):
    m, sol = small_c
    pts = [(x, k) for x in (0.5, 2.0, 5.0, 10.0, 20.0) for k in (0, 2, 5, 7)]
    sim = simulate(m, SimConfig(t_max=1e6, seed=3), x_grid=(0.0, 1.0, 5.0), joint_points=pts)
    for (x, k), v, se in zip(pts, sim.joint, sim.joint_se):
        assert abs(v - oracle_F(sol, x, k).F) < 3.0 * se
    for x, v, se in zip(sim.x_grid, sim.marginal, sim.marginal_se):
        assert abs(v - oracle_marginal(sol, x)) < 3.0 * se


def test_sim_result_serializes(small_c):
    m, _ = small_c
    d = simulate(m, SimConfig(t_max=5e3, seed=2), x_grid=(0.0,), joint_points=[(1.0, 1)]).to_dict()
    assert d["marginal"][0]["x"] == 0.0
    assert d["joint"][0]["k"] == 1
    assert len(d["k_marginal"]) == int(math.ceil(4 * m.c)) + 1
