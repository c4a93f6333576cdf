import numpy as np
import pytest
from scipy.integrate import solve_ivp

from frbd.integrators import IntegrationError, IntegratorConfig, solve


def test_config_validation():
    with pytest.raises(ValueError, match="method"):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(rtol=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(t_end=-1.0)


@pytest.mark.parametrize("method", ["rk45_adaptive", "rk4_fixed"])
def test_exponential_decay(method):
    cfg = IntegratorConfig(method=method, dt=1e-3, t_end=2.0, rtol=1e-10, atol=1e-12)
    t = np.linspace(0.0, 2.0, 21)
    sol = solve(lambda t, y: -3.0 * y, np.array([1.0]), cfg, t_eval=t)
    np.testing.assert_allclose(sol.y[:, 0], np.exp(-3.0 * t), rtol=1e-9, atol=1e-12)


def test_rk4_fourth_order():
    def err(dt):
        cfg = IntegratorConfig(method="rk4_fixed", dt=dt, t_end=1.0)
        sol = solve(lambda t, y: np.cos(t) * y, np.array([1.0]), cfg)
        return abs(sol.y[-1, 0] - np.exp(np.sin(1.0)))

    ratio = err(0.02) / err(0.01)
    assert 14.0 < ratio < 18.0


def test_dense_output_matches_step_landing():
    f = lambda t, y: np.array([y[1], -y[0] - 0.1 * y[1] + np.sin(3 * t)])
    cfg = IntegratorConfig(t_end=5.0, rtol=1e-10, atol=1e-12)
    t = np.linspace(0.0, 5.0, 37)
    a = solve(f, np.array([1.0, 0.0]), cfg, t_eval=t)
    b = solve(f, np.array([1.0, 0.0]), cfg, t_eval=t, dense=False)
    np.testing.assert_allclose(a.y, b.y, atol=1e-8)


def test_against_reference_solver():
    # Van der Pol, mildly nonlinear, cross-checked with an independent 8th-order solver
    f = lambda t, y: np.array([y[1], 2.0 * (1 - y[0] ** 2) * y[1] - y[0]])
    t = np.linspace(0.0, 10.0, 51)
    ours = solve(f, np.array([2.0, 0.0]), IntegratorConfig(t_end=10.0, rtol=1e-11, atol=1e-12), t_eval=t)
    ref = solve_ivp(f, (0.0, 10.0), [2.0, 0.0], method="DOP853", t_eval=t, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(ours.y, ref.y.T, atol=1e-7)


def test_batch_matches_individual_runs():
    rates = np.array([0.5, 2.0, 8.0])
    cfg = IntegratorConfig(t_end=1.0, rtol=1e-10, atol=1e-13)
    t = np.linspace(0.0, 1.0, 11)
    batch = solve(lambda s, y: -rates * y + np.sin(s), np.ones(3), cfg, t_eval=t, batch_axis=0)
    for i, r in enumerate(rates):
        one = solve(lambda s, y: -r * y + np.sin(s), np.ones(1), cfg, t_eval=t)
        np.testing.assert_allclose(batch.y[:, i], one.y[:, 0], atol=1e-10)


def test_blow_up_is_reported():
    cfg = IntegratorConfig(t_end=2.0)
    with pytest.raises(IntegrationError):
        solve(lambda t, y: y * y, np.array([1.0]), cfg)


def test_blow_up_retires_only_the_failing_batch_row():
    cfg = IntegratorConfig(t_end=2.0)
    sol = solve(lambda t, y: y * y, np.array([1.0, -1.0]), cfg, t_eval=np.array([0.0, 2.0]), batch_axis=0)
    assert sol.failed.tolist() == [True, False]
    assert np.isnan(sol.y[-1, 0])
    assert sol.y[-1, 1] == pytest.approx(-1.0 / 3.0, rel=1e-7)


def test_t_eval_outside_horizon_rejected():
    with pytest.raises(ValueError):
        solve(lambda t, y: -y, np.array([1.0]), IntegratorConfig(t_end=1.0), t_eval=[0.0, 2.0])
