import math

import numpy as np
import pytest

from gasvacuum.barenblatt import DomainError
from gasvacuum.corrector import eval_tilde_eta_r, solve_corrector
from gasvacuum.diagnostics import (
    energy_levels,
    fit_rate,
    observable_series,
    sup_norm_report,
    rate_report,
    vacuum_slope,
)
from gasvacuum.lagrangian_solver import (
    InitialDataSpec,
    LagrangianSolver,
    PerturbationState,
    Trajectory,
    density_power_slope,
    log_times,
)
from gasvacuum.weighted_calculus import build_grid


@pytest.fixture(scope="module")
def solver(p2):
    return LagrangianSolver(p2, solve_corrector(2.0, 1000.0, 1e-10), build_grid(p2, 100))


@pytest.fixture(scope="module")
def run100(solver):
    return solver.run(solver.make_initial_data(InitialDataSpec(amplitude=1e-3)), 100.0, 30)


def zero_state(s, t=0.0):
    z = np.zeros_like(s.r)
    return PerturbationState(t, z, z.copy())


def zero_trajectory(s, horizon, n=80):
    # epsilon = 0 runs keep zeta identically zero (see the solver tests)
    ts = log_times(0.0, horizon, n)
    z = np.zeros((n, s.r.size))
    return Trajectory(ts, z, z.copy())


def test_energy_zero(solver):
    rep = energy_levels(solver, zero_state(solver, 3.0))
    assert rep.E_total == 0.0
    assert all(v == 0.0 for v in rep.E_j)
    assert np.all(rep.E_ji[rep.computed] == 0.0)
    assert all(v == 0.0 for v in sup_norm_report(solver, zero_state(solver, 3.0)).values())


def test_energy_cells_and_additivity(solver, run100):
    st = run100.state(10)
    rep = energy_levels(solver, st)
    l = solver.p.ell
    for j in range(3):
        for i in range(1, 5):
            assert rep.computed[j, i] == (i <= l - j)
    assert rep.E_total == pytest.approx(sum(rep.E_j) + rep.E_ji[rep.computed].sum(), rel=1e-14)
    assert all(v >= 0.0 for v in rep.E_j) and np.all(rep.E_ji[rep.computed] >= 0.0)


def test_energy_scaling_of_state_terms(solver, run100):
    st = run100.state(5)
    twice = PerturbationState(st.t, 2 * st.zeta, 2 * st.zeta_t)
    a, b = energy_levels(solver, st), energy_levels(solver, twice)
    # E_0 and E_{0,i}, E_{1,i} are built from zeta and zeta_t only
    assert b.E_j[0] == pytest.approx(4 * a.E_j[0], rel=1e-12)
    for j in (0, 1):
        for i in range(1, 5):
            if a.computed[j, i]:
                assert b.E_ji[j, i] == pytest.approx(4 * a.E_ji[j, i], rel=1e-12, abs=1e-300)


def test_energy_bounded_small_run(solver, run100):
    E = [energy_levels(solver, run100.state(i)).E_total for i in range(len(run100))]
    assert max(E) <= 10 * E[0]


def test_energy_depth_limit(solver):
    with pytest.raises(DomainError):
        energy_levels(solver, zero_state(solver), jmax=3)


def test_sup_norms_constant_field(solver):
    c = 3e-3
    st = PerturbationState(0.0, np.full_like(solver.r, c), np.zeros_like(solver.r))
    sup = sup_norm_report(solver, st)
    assert sup["zeta_j0"] == pytest.approx(c * c, rel=1e-15)
    assert sup["zeta_r_j0"] < 1e-24


def test_a_priori_set_bounded(solver, run100):
    vals = [sup_norm_report(solver, run100.state(i))["a_priori"] for i in range(len(run100))]
    assert max(vals) < 1.0
    assert vals[-1] < vals[0]


def test_vacuum_slope_zero_perturbation(solver, p2):
    s = density_power_slope(solver, zero_state(solver))
    assert abs(s[-1]) == pytest.approx(2 * math.sqrt(p2.A * p2.B), rel=1e-14)
    assert abs(s[-1]) == pytest.approx(0.27241, abs=1e-5)
    for t in (0.0, 7.0, 300.0):
        e = eval_tilde_eta_r(solver.path, t, 0)
        closed = 2 * p2.B * solver.r * e ** (2 - 3 * p2.gamma)
        assert np.allclose(np.abs(density_power_slope(solver, zero_state(solver, t))), closed, rtol=1e-13, atol=0)


def test_vacuum_bracket_ratio_two(p2):
    s = LagrangianSolver(p2, solve_corrector(2.0, 100.0, 1e-10), build_grid(p2, 64, "uniform"))
    for t in (0.0, 50.0):
        vb = vacuum_slope(s, zero_state(s, t))
        assert vb.normalized_max / vb.normalized_min == pytest.approx(2.0, rel=1e-12)


def test_vacuum_bracket_drift(solver):
    a = vacuum_slope(solver, zero_state(solver, 0.0))
    b = vacuum_slope(solver, zero_state(solver, 100.0))
    assert b.normalized_max == pytest.approx(a.normalized_max, rel=0.05)


def test_fit_exact_power():
    t = np.linspace(0.0, 1000.0, 50)
    f = fit_rate(t, (1 + t) ** 0.2)
    assert abs(f.exponent - 0.2) < 1e-10 and f.r_squared == pytest.approx(1.0, abs=1e-12)
    assert not f.constant


def test_fit_constant_series():
    t = np.linspace(0.0, 10.0, 20)
    f = fit_rate(t, np.full_like(t, 7.0))
    assert f.constant and f.exponent == 0.0


def test_fit_power_times_log():
    t = np.linspace(1.0, 1000.0, 60)
    f = fit_rate(t, (1 + t) ** -0.8 * np.log(2 + t), model="power_times_log")
    assert abs(f.exponent + 0.8) < 1e-3


@pytest.mark.parametrize("p", [-3.0, -0.37, 0.5, 2.0])
def test_fit_recovers_random_exponents(p):
    t = np.geomspace(1.0, 1e4, 40)
    assert fit_rate(t, 3.0 * (1 + t) ** p).exponent == pytest.approx(p, abs=1e-10)
    assert fit_rate(t, (1 + t) ** p * np.log(2 + t), model="power_times_log").exponent == pytest.approx(p, abs=1e-10)


def test_fit_errors():
    t = np.linspace(0.0, 10.0, 20)
    with pytest.raises(DomainError):
        fit_rate(t, t + 1, model="exponential")
    with pytest.raises(DomainError):
        fit_rate(t, t - 1)
    with pytest.raises(DomainError):
        fit_rate(t, t + 1, window=(0.0, 2.0))


def test_zero_run_radius_exponent(p2):
    # the corrector tail approaches the Barenblatt rate slowly; h/eta_bar ~ t^-1 ln t
    s = LagrangianSolver(p2, solve_corrector(2.0, 1e5, 1e-10), build_grid(p2, 64))
    rep = rate_report(s, zero_trajectory(s, 1e5))
    assert rep["boundary_radius"]["pure_power"]["exponent"] == pytest.approx(0.2, abs=1e-3)


def test_zero_run_velocity_below_envelope(solver):
    traj = zero_trajectory(solver, 1000.0, 120)
    ser = observable_series(solver, traj)
    t = ser["t"]
    env = (1 + t) ** -1.0 * (1 + t) ** -0.8 * np.log(2 + t)
    q = ser["velocity"][1:] / env[1:]
    late = t[1:] >= 100.0
    assert q[late].max() <= q[~late].max()


def test_report_regime_and_keys(solver, run100):
    rep = rate_report(solver, run100)
    assert rep["window"] == [1.0, 100.0]
    for key in ("velocity", "density"):
        assert set(rep[key]) == {"theory_exponent", "pure_power", "power_times_log"}
    assert rep["density"]["theory_exponent"] == pytest.approx(-0.8)
    assert rep["regime"]["statement"]
    assert rep["vacuum_slope"]["ratio"] >= 1.0
