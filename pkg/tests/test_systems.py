import numpy as np
import pytest

from frbd.integrators import IntegratorConfig
from frbd.presets import BENCH, VALVE, VALVE_PLANT
from frbd.signals import Constant, Ramp, Sinusoid
from frbd.systems import (
    MassSpringParams,
    ValveParams,
    breakaway_force,
    count_stick_events,
    energy_audit,
    loop_area,
    simulate_friction_lag,
    simulate_presliding,
    simulate_stickslip,
    simulate_valve,
)


def test_parameter_validation():
    with pytest.raises(ValueError):
        MassSpringParams(m=0.0)
    with pytest.raises(ValueError):
        ValveParams(tau=0.0)
    with pytest.raises(ValueError):
        ValveParams(P_min=-1.0)


def test_stick_event_counter():
    xdot = np.array([0.0, 0.06, 0.0005, 0.0, 0.07, 0.09, 0.0, 0.04, 0.0])
    assert count_stick_events(xdot, 0.1) == 2


def test_loop_area_of_unit_square():
    assert loop_area([0, 1, 1, 0], [0, 0, 1, 1]) == pytest.approx(1.0)
    assert loop_area([0, 0, 1, 1], [0, 1, 1, 0]) == pytest.approx(-1.0)


def test_stickslip_energy_balance_and_events():
    ms = MassSpringParams()
    te = np.linspace(0.0, 15.0, 15001)
    tr = simulate_stickslip(ms, BENCH, IntegratorConfig(t_end=15.0), t_eval=te)
    mismatch, dissipated = energy_audit(tr)
    assert mismatch <= 1e-8
    assert dissipated > 0
    assert count_stick_events(tr["xdot"], ms.v_ref) >= 1
    # the spring never pulls harder than breakaway plus inertia while sticking
    assert np.max(tr["F_b"]) <= 1.1 * breakaway_force(BENCH, ms.p)


def test_stickslip_lugre_and_batch():
    ms = MassSpringParams()
    cfg = IntegratorConfig(t_end=2.0)
    te = np.linspace(0.0, 2.0, 11)
    a = simulate_stickslip(ms, BENCH, cfg, kind="lugre", t_eval=te)
    assert np.all(np.isfinite(a["x"]))
    batch = simulate_stickslip(ms, BENCH.replace(sigma1=np.array([30.0, 64.5])), cfg, t_eval=te)
    single = simulate_stickslip(ms, BENCH, cfg, t_eval=te)
    np.testing.assert_allclose(batch["x"][:, 1], single["x"], atol=1e-9)


@pytest.mark.parametrize("freq", [1.0, 10.0])
def test_presliding_stays_below_breakaway(freq):
    T = 1.0 / freq
    te = np.linspace(0.0, 5 * T, 2001)
    tr = simulate_presliding(Sinusoid(0.9 * BENCH.mu_s, freq), 1.0, BENCH, IntegratorConfig(t_end=5 * T), t_eval=te)
    assert np.max(np.abs(tr["z"])) < BENCH.mu_s / BENCH.sigma0
    last = te >= 4 * T - 1e-12
    x = tr["x"][last]
    assert abs(x[-1] - x[0]) <= 1e-4 * np.ptp(x)


def test_presliding_above_breakaway_slides():
    tr = simulate_presliding(Sinusoid(1.5 * BENCH.mu_s, 1.0), 1.0, BENCH, IntegratorConfig(t_end=2.0))
    assert np.max(np.abs(tr["x"])) > 100 * BENCH.mu_s / BENCH.sigma0


def test_friction_lag_loop_is_clockwise_hysteresis():
    te = np.linspace(0.0, 0.4, 4001)
    tr = simulate_friction_lag(Sinusoid(0.04, 25.0, 0.0, 0.05), BENCH, IntegratorConfig(t_end=0.4), t_eval=te)
    last = te >= 0.36
    # friction is higher while accelerating than while decelerating
    assert loop_area(tr["v"][last], tr["mu_b"][last]) != 0
    assert np.all(tr["v"] > 0)


@pytest.fixture(scope="module")
def plant():
    return ValveParams(**VALVE_PLANT)


def test_valve_starts_at_equilibrium(plant):
    tr = simulate_valve(Constant(30.0), plant, VALVE, IntegratorConfig(t_end=0.5), t_eval=np.linspace(0, 0.5, 6))
    np.testing.assert_allclose(tr["x"], plant.equilibrium_x(plant.pressure_target(30.0)), atol=1e-12)
    np.testing.assert_allclose(tr["P"], plant.pressure_target(30.0), rtol=1e-12)


def test_valve_pressure_fixed_point(plant):
    tr = simulate_valve(Constant(40.0), plant, VALVE, IntegratorConfig(t_end=30.0), P0=plant.P_min)
    assert abs(tr["P"][-1] - plant.pressure_target(40.0)) <= 1e-6


def test_valve_ramp_moves_stem(plant):
    te = np.linspace(0.0, 4.0, 401)
    tr = simulate_valve(Ramp(rate=50.0, start=0.5, hold=2.5), plant, VALVE, IntegratorConfig(t_end=4.0), t_eval=te)
    assert tr["x"][-1] - tr["x"][0] > 0.02
    assert np.all(np.diff(tr["x"]) >= -1e-9)


def test_valve_rejects_out_of_range_opening(plant):
    with pytest.raises(ValueError):
        simulate_valve(Constant(120.0), plant, VALVE, IntegratorConfig(t_end=1.0))
