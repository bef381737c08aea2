import numpy as np
import pytest

from gasvacuum.barenblatt import DomainError
from gasvacuum.corrector import (
    ansatz_residual,
    bar_slope,
    corrector_table,
    decay_quotients,
    decay_report,
    eval_tilde_eta_r,
    phase_signature,
    sign_changes,
    solve_corrector,
    volterra_oracle,
)
from gasvacuum.lagrangian_solver import log_times

TOL = 1e-10


@pytest.fixture(scope="module", params=[1.5, 2.0, 3.0])
def path_any(request):
    return solve_corrector(request.param, 1e4, TOL)


def test_initial_data(path_any):
    h, h_t = path_any.state(0.0)
    assert h == 0.0 and h_t == 0.0
    g = path_any.gamma
    assert eval_tilde_eta_r(path_any, 0.0, 0) == 1.0
    assert eval_tilde_eta_r(path_any, 0.0, 1) == pytest.approx(1.0 / (3 * g - 1), abs=1e-15)


def test_phase_plane_signature(path_any):
    sig = phase_signature(path_any)
    assert sig.h_min >= -1e-12
    assert sig.slope_rate_min >= -1e-12
    assert sig.h_t_sign_changes == 1
    assert sig.first_sign == 1
    assert sig.h_interior_maxima == 1


def test_slope_dominates_barenblatt(path_any):
    ts = log_times(0.0, 1e4, 400)
    assert np.all(eval_tilde_eta_r(path_any, ts, 0) >= bar_slope(path_any.gamma, ts) - 1e-12)


def test_volterra_log_spaced(path_any):
    res = [volterra_oracle(path_any, float(t)) for t in log_times(0.0, 1e4, 50)]
    assert max(res) < 10 * TOL


def test_decay_report_stable(path_any):
    rep = decay_report(path_any)
    assert np.isfinite(rep.sup_h) and np.isfinite(rep.sup_ht)
    assert rep.tail_stable


def test_decay_quotient_vanishes_at_start(path2_1e4):
    q_h, q_ht = decay_quotients(path2_1e4, np.array([0.0, 1e-6]))
    assert q_h[0] == 0.0 and q_ht[0] == 0.0
    assert q_h[1] < 1e-10


def test_tail_ratio(path2_1e4):
    ratio = eval_tilde_eta_r(path2_1e4, 1e4, 0) / (1e4 + 1.0) ** 0.2
    assert 1.0 <= ratio <= 1.01


def test_volterra_examples(path2_1e4):
    assert volterra_oracle(path2_1e4, 0.0) < 1e-15
    assert volterra_oracle(path2_1e4, 10.0) < 10 * TOL
    p3 = solve_corrector(3.0, 200.0, TOL)
    assert volterra_oracle(p3, 100.0) < 10 * TOL


@pytest.mark.parametrize("k", [1, 2, 3])
def test_derivatives_match_differences(path2_1e3, k):
    t = 2.5
    errs = []
    for d in (1e-2, 5e-3, 2.5e-3):
        fd = (eval_tilde_eta_r(path2_1e3, t + d, k - 1) - eval_tilde_eta_r(path2_1e3, t - d, k - 1)) / (2 * d)
        errs.append(abs(fd - eval_tilde_eta_r(path2_1e3, t, k)))
    # second order until the dense-output noise floor
    assert errs[0] / errs[1] > 3.5
    assert errs[-1] < 1e-6


def test_ansatz_residual_examples(p2, path2_1e3):
    r = np.linspace(0.1, 2.6, 9)
    assert np.max(np.abs(ansatz_residual(p2, path2_1e3, r, 0.0))) < 10 * TOL
    assert abs(ansatz_residual(p2, path2_1e3, 1.0, 10.0)) < 10 * TOL


def test_ansatz_residual_detects_missing_corrector(p2, path2_1e3):
    r, t = 1.0, 10.0
    g = p2.gamma
    bare = ansatz_residual(p2, path2_1e3, r, t, use_corrector=False)
    rho0 = (p2.A - p2.B * r * r) ** p2.alpha
    e = [bar_slope(g, t, k) for k in range(3)]
    # the left side of the equation on the bare slope: rho0 r (e'' + e' - e^(2-3g)/(3g-1))
    defect = rho0 * r * (e[2] + e[1] - e[0] ** (2 - 3 * g) / (3 * g - 1))
    assert bare == pytest.approx(defect, rel=1e-12)
    assert abs(bare) > 1e6 * TOL


def test_ansatz_radius_domain(p2, path2_1e3):
    with pytest.raises(DomainError):
        ansatz_residual(p2, path2_1e3, p2.radius0, 1.0)


def test_state_outside_horizon(path2_1e3):
    with pytest.raises(DomainError):
        path2_1e3.state(1001.0)


@pytest.mark.parametrize("kw", [dict(gamma=1.0, horizon=10.0), dict(gamma=2.0, horizon=0.5), dict(gamma=2.0, horizon=10.0, tol=1e-3)])
def test_solve_rejects_bad_input(kw):
    with pytest.raises(DomainError):
        solve_corrector(**kw)


def test_bad_derivative_order(path2_1e3):
    with pytest.raises(DomainError):
        eval_tilde_eta_r(path2_1e3, 1.0, 4)


def test_sign_changes_deadband():
    assert sign_changes(np.array([1.0, 1e-14, -1e-14, 2.0, -3.0])) == 1
    assert sign_changes(np.array([1.0, -1.0, 1.0])) == 2


def test_corrector_table_columns(path2_1e3):
    tab = corrector_table(path2_1e3, [0.0, 1.0])
    assert tab.shape == (2, 4)
    assert tab[0, 3] == 1.0
    assert tab[1, 3] == pytest.approx(eval_tilde_eta_r(path2_1e3, 1.0, 0), rel=1e-15)

