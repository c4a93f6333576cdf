"""Exit-criteria suite. Each test prints one PASS/FAIL line.

Run alone with ``pytest -m acceptance -s``.
"""

import time

import numpy as np
import pytest

from frbd import distributed as dist
from frbd import friction as fc
from frbd import lumped
from frbd.calibration import CalibrationProblem, fit, synthetic_reference
from frbd.checks import RandomSmooth, random_params, random_velocity
from frbd.friction import FrictionParams
from frbd.integrators import IntegratorConfig
from frbd.presets import BENCH, TIRE, TIRE_CONTACT_LENGTH, TIRE_PRESSURE_DECAY, VALVE, VALVE_PLANT, VALVE_TAU_SINUSOID
from frbd.signals import Constant, Ramp, Sinusoid
from frbd.systems import (
    MassSpringParams,
    ValveParams,
    count_stick_events,
    loop_area,
    simulate_friction_lag,
    simulate_presliding,
    simulate_stickslip,
    simulate_valve,
)

pytestmark = pytest.mark.acceptance

V_TIRE = 300.0


def _tire_geometry(shape):
    profile = dist.PressureProfile("constant") if shape == "constant" else dist.PressureProfile("exponential", a=TIRE_PRESSURE_DECAY)
    return dist.ContactGeometry(TIRE_CONTACT_LENGTH, profile, V=V_TIRE)


def _member(params, i):
    return FrictionParams(**{k: float(np.asarray(x)[i]) for k, x in params.as_dict().items()})


def _subset(params, idx):
    return FrictionParams(**{k: np.asarray(x)[idx] for k, x in params.as_dict().items()})


def _signal_member(v, i):
    return RandomSmooth(v.c[i], v.A[i], v.w[i], v.phi[i])


def _signal_subset(v, idx, column=False):
    return RandomSmooth(v.c[idx], v.A[idx], v.w[idx], v.phi[idx], column)


def test_criterion_1_steady_force(report):
    start = time.perf_counter()
    slips = np.logspace(-3, 0, 50)
    worst = 0.0
    for shape in ("constant", "exponential"):
        geo = _tire_geometry(shape)
        _, closed = dist.slip_sweep(slips, geo, TIRE)
        # independent route: trapezoidal rule over the stationary field
        quad = []
        for s in slips:
            v = s * geo.L * V_TIRE
            f = dist.stationary_profile(v, geo, TIRE, N=400)
            _, _, sb0, sb2 = dist.coefficients(f.xi, v, geo, TIRE)
            integrand = geo.L * (sb0 * f.z + sb2 * v) * geo.pressure(f.xi)
            quad.append(np.trapezoid(integrand, f.xi) / dist.normal_force(geo))
        worst = max(worst, float(np.max(np.abs(closed - quad) / np.abs(closed))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 5.0
    report("criterion 1", ok, f"max relative gap {worst:.2e} (tol 1e-3), {elapsed:.1f} s (limit 5 s)")
    assert ok


def test_criterion_2_pde_vs_characteristics(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    sizes = (50, 100, 200, 400)
    worst400 = 0.0
    orders = {"semi_lagrangian": [], "upwind": []}
    for shape in ("constant", "exponential"):
        geo = _tire_geometry(shape)
        T = 3.0 * float(dist.varpi(1.0, geo))
        B = 10
        v = random_velocity(rng, B, v_max=3.0, f_max=3.0 / T, offset=rng.uniform(1.75, 2.5, B), column=True)
        v0 = v(0.0)[:, 0]

        def z0(x, v0=v0, geo=geo):
            return np.array([dist.stationary_profile(a, geo, TIRE, xi=np.atleast_1d(x)).z for a in v0])

        xi = dist.grid(50)
        ref = np.array(
            [
                dist.characteristics_solution(
                    xi,
                    T,
                    lambda x, a=v0[i], geo=geo: dist.stationary_profile(a, geo, TIRE, xi=np.atleast_1d(x)).z[0],
                    _signal_member(v, i),
                    geo,
                    TIRE,
                )
                for i in range(B)
            ]
        )
        for scheme in orders:
            errs = []
            for N in sizes:
                field, _ = dist.simulate_pde(v, geo, TIRE, T, z0=z0, N=N, scheme=scheme)
                errs.append(np.max(np.abs(field.z[:, :: N // 50] - ref), axis=1))
            errs = np.array(errs)
            orders[scheme].append(np.log2(errs[:-1] / errs[1:]).min())
            if scheme == "semi_lagrangian":
                worst400 = max(worst400, float(errs[-1].max()))
    elapsed = time.perf_counter() - start
    sl, up = min(orders["semi_lagrangian"]), min(orders["upwind"])
    ok = worst400 <= 1e-4 and sl >= 1.8 and up >= 0.9 and elapsed < 60.0
    report(
        "criterion 2",
        ok,
        f"sup-norm gap at N=400 {worst400:.2e} (tol 1e-4), observed order {sl:.2f} semi-Lagrangian (min 1.8), "
        f"{up:.2f} upwind (min 0.9), {elapsed:.1f} s (limit 60 s)",
    )
    assert ok


def test_criterion_3_lumped_oracle(report):
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    B = 100
    p = random_params(rng, B, sigma0=(1e3, 1e4), sigma1=(20.0, 100.0))
    v = random_velocity(rng, B)
    z0 = rng.uniform(-1.0, 1.0, B) * p.mu_d / p.sigma0
    t = np.linspace(0.0, 10.0, 51)
    num = lumped.integrate(z0, v, IntegratorConfig(t_end=10.0, atol=1e-12), p, t_eval=t)["z"]
    ref = np.array(
        [lumped.closed_form_solution(t, float(z0[i]), _signal_member(v, i), _member(p, i), rtol=1e-8, atol=1e-12) for i in range(B)]
    ).T
    err = float(np.max(np.abs(num - ref)))
    elapsed = time.perf_counter() - start
    ok = err <= 1e-8 and elapsed < 30.0
    report("criterion 3", ok, f"sup-norm gap {err:.2e} (tol 1e-8), {elapsed:.1f} s (limit 30 s)")
    assert ok


@pytest.fixture(scope="module")
def lumped_suite():
    """10^4 randomized lumped runs, in chunks of similar stiffness."""
    rng = np.random.default_rng(4)
    n = 10_000
    p = random_params(rng, n)
    v = random_velocity(rng, n)
    bound = lumped.mu_bar_max(p, v_max=1.0)
    z0 = rng.uniform(-1.0, 1.0, n) * bound
    order = np.argsort(p.sigma0 / (p.sigma1 + p.mu_d))
    res, diss, excess = np.inf, np.inf, -np.inf
    for chunk in np.array_split(order, 5):
        tr = lumped.integrate(z0[chunk], _signal_subset(v, chunk), IntegratorConfig(t_end=1.0), _subset(p, chunk))
        res = min(res, float(np.min(tr["residual"])))
        diss = min(diss, float(np.min(tr["dissipated"])))
        excess = max(excess, float(np.max(np.abs(tr["z"]) - bound[chunk])))
    return res, diss, excess


def test_criterion_4_passivity(report, lumped_suite):
    res, diss, _ = lumped_suite
    rng = np.random.default_rng(5)
    worst = {}
    for shape in ("constant", "exponential"):
        geo = _tire_geometry(shape)
        values = []
        for _ in range(4):
            v = random_velocity(rng, 250, v_max=5.0, f_max=100.0, column=True)
            _, tr = dist.simulate_pde(v, geo, TIRE, 0.02, N=100)
            values.append(float(np.min(tr["dissipated"])))
        worst[shape] = min(values)
    verdict = dist.passivity_condition(dist.ContactGeometry(0.1, dist.PressureProfile("parabolic")))
    ok = res >= -1e-12 and diss >= -1e-9 and min(worst.values()) >= -1e-8 and verdict.status == "fails"
    report(
        "criterion 4",
        ok,
        f"lumped min residual {res:.2e} (tol -1e-12), min dissipated {diss:.2e} (tol -1e-9); "
        f"distributed min dissipated {worst['constant']:.2e} constant, {worst['exponential']:.2e} exponential "
        f"(tol -1e-8); parabolic profile {verdict.status}",
    )
    assert ok


def test_criterion_5_stability_bound(report, lumped_suite):
    _, _, excess = lumped_suite
    ok = excess <= 1e-9
    report("criterion 5", ok, f"max |z| - bound {excess:.2e} over 10^4 runs (tol 1e-9)")
    assert ok


def test_criterion_6_model_reduction(report):
    rng = np.random.default_rng(6)
    B = 50
    t = np.linspace(0.0, 2.0, 201)
    cfg = IntegratorConfig(t_end=2.0, rtol=1e-10, atol=1e-14)
    p = random_params(rng, B, sigma0=(1e2, 1e3), sigma1=(0.0, 0.0), sigma2=(0.0, 0.0))
    v = random_velocity(rng, B)
    z0 = rng.uniform(-1.0, 1.0, B) * p.mu_d / p.sigma0
    a = lumped.integrate(z0, v, cfg, p, t_eval=t)
    b = lumped.integrate(z0, v, cfg, p, kind="lugre", t_eval=t)
    gap_lugre = max(float(np.max(np.abs(a["z"] - b["z"]))), float(np.max(np.abs(a["mu_b"] - b["mu_b"]))))
    pd = p.replace(mu_s=p.mu_d)
    c = lumped.integrate(z0, v, cfg, pd, t_eval=t)
    d = lumped.integrate(z0, v, cfg, pd, kind="dahl", t_eval=t)
    gap_dahl = max(float(np.max(np.abs(c["z"] - d["z"]))), float(np.max(np.abs(c["mu_b"] - d["mu_b"]))))
    ok = gap_lugre <= 1e-10 and gap_dahl <= 1e-10
    report("criterion 6", ok, f"sup-norm gap {gap_lugre:.2e} to LuGre, {gap_dahl:.2e} to Dahl over {B} runs (tol 1e-10)")
    assert ok


def _fd(f, x, h):
    # fourth-order central difference
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h)


def test_criterion_7_linearization(report):
    rng = np.random.default_rng(7)
    hs = (1e-2, 5e-3, 2.5e-3)

    # lumped
    ratios = []
    t = np.linspace(0.0, 2.0, 401)
    cfg = IntegratorConfig(t_end=2.0, rtol=1e-12, atol=1e-15)
    for v_star in (0.1, 0.5, 1.0):
        u = random_velocity(rng, v_max=1.0, f_max=1.0, offset=0.0)
        u0 = float(u(0.0))
        z_star = lumped.linearize(v_star, BENCH).z_star
        gaps = []
        for h in hs:
            nl = lumped.integrate(z_star, lambda s, h=h: v_star + h * (u(s) - u0), cfg, BENCH, t_eval=t)["z"] - z_star
            lin = lumped.simulate_linearized(0.0, lambda s, h=h: h * (u(s) - u0), v_star, BENCH, cfg, t_eval=t)["z"]
            gaps.append(np.max(np.abs(nl - lin)))
        ratios += [gaps[0] / gaps[1], gaps[1] / gaps[2]]
    lumped_ratios = ratios

    # distributed
    ratios = []
    for shape in ("constant", "exponential"):
        geo = _tire_geometry(shape)
        T = 3.0 * float(dist.varpi(1.0, geo))
        for v_star in (1.0, 3.0):
            u = random_velocity(rng, v_max=1.0, f_max=3.0 / T, offset=0.0)
            u0 = float(u(0.0))
            z_star = dist.stationary_profile(v_star, geo, TIRE, N=400).z
            gaps = []
            for h in hs:
                field, nl = dist.simulate_pde(lambda s, h=h: v_star + h * (u(s) - u0), geo, TIRE, T, z0=z_star, N=400, keep_fields=True)
                _, lin = dist.simulate_linearized_distributed(lambda s, h=h: h * (u(s) - u0), v_star, geo, TIRE, T, N=400, keep_fields=True)
                d = nl.meta["fields"] - z_star - lin.meta["fields"]
                gaps.append(np.max(np.sqrt(np.trapezoid(d * d, field.xi, axis=-1))))
            ratios += [gaps[0] / gaps[1], gaps[1] / gaps[2]]
    dist_ratios = ratios

    # analytic partials against finite differences
    n = 100
    p = random_params(rng, n, sigma2=(0.0, 0.1), eps=(0.0, 0.0))
    v = rng.uniform(0.05, 2.0, n) * rng.choice([-1.0, 1.0], n)
    z = rng.uniform(-1.0, 1.0, n) * p.mu_s / p.sigma0
    _, H1, _, H2 = lumped.jacobians(z, v, p)
    h = 1e-4 * np.abs(v)
    fd1 = _fd(lambda x: lumped.rhs(z, x, p), v, h)
    fd2 = _fd(lambda x: lumped.output(z, x, p), v, h)
    rel = max(
        float(np.max(np.abs(H1 - fd1) / np.maximum(np.abs(H1), 1e-300))),
        float(np.max(np.abs(H2 - fd2) / np.maximum(np.abs(H2), 1e-300))),
    )

    all_ratios = lumped_ratios + dist_ratios
    ok = all(2.7 <= r <= 5.3 for r in all_ratios) and rel <= 1e-6
    report(
        "criterion 7",
        ok,
        f"halving ratios lumped [{min(lumped_ratios):.3f}, {max(lumped_ratios):.3f}], distributed "
        f"[{min(dist_ratios):.3f}, {max(dist_ratios):.3f}] (range [2.7, 5.3]); H1/H2 max relative error {rel:.2e} (tol 1e-6)",
    )
    assert ok


def test_criterion_8_qualitative_shapes(report):
    notes, ok = [], True

    # steady slip sweep: rises from 0, peaks, decays toward the dynamic level
    slips = np.logspace(-3, 0, 200)
    for shape in ("constant", "exponential"):
        geo = _tire_geometry(shape)
        _, F = dist.slip_sweep(slips, geo, TIRE)
        k = int(np.argmax(F))
        v_end = slips[-1] * geo.L * V_TIRE
        end_level = float(fc.mu(v_end, TIRE))  # mu_d plus the viscous share
        j = k + int(np.argmin(F[k:]))
        # past the trough only the viscous share can lift the force again
        shape_ok = (
            np.all(F >= 0)
            and F[0] < 0.1 * F[k]
            and 0 < k < F.size - 1
            and np.all(np.diff(F[: k + 1]) > 0)
            and np.all(np.diff(F[k : j + 1]) < 0)
            and F[j] >= TIRE.mu_d
            and F[-1] - F[j] <= TIRE.sigma2 * v_end
            and abs(F[-1] - end_level) <= 0.05 * end_level
        )
        ok &= bool(shape_ok)
        notes.append(f"sweep {shape}: peak {F[k]:.3f} at slip {slips[k]:.3g}, end {F[-1]:.3f} vs {end_level:.3f}")

    # pre-sliding: bristle deflection below breakaway, closed hysteresis loops
    zmax, drift = 0.0, 0.0
    for f in (1.0, 5.0, 10.0):
        T = 1.0 / f
        te = np.linspace(0.0, 10 * T, 4001)
        tr = simulate_presliding(Sinusoid(0.9 * BENCH.mu_s, f), 1.0, BENCH, IntegratorConfig(t_end=10 * T), t_eval=te)
        last = te >= 9 * T - 1e-12
        x = tr["x"][last]
        zmax = max(zmax, float(np.max(np.abs(tr["z"])) * BENCH.sigma0 / BENCH.mu_s))
        drift = max(drift, abs(x[-1] - x[0]) / (np.ptp(x)))
        ok &= abs(loop_area(x, tr["F_ext"][last])) > 0
    ok &= zmax < 1.0 and drift < 1e-4
    notes.append(f"pre-sliding max sigma0|z|/mu_s {zmax:.3f}, loop closure {drift:.1e}")

    # friction lag: peak friction falls with frequency
    peaks = []
    for f in (25.0, 50.0, 100.0):
        T = 1.0 / f
        te = np.linspace(0.0, 20 * T, 4001)
        tr = simulate_friction_lag(Sinusoid(0.04, f, 0.0, 0.05), BENCH, IntegratorConfig(t_end=20 * T), t_eval=te)
        peaks.append(float(tr["mu_b"][te >= 19 * T].max()))
    ok &= peaks[0] > peaks[1] > peaks[2]
    notes.append("friction lag peaks " + ", ".join(f"{x:.5f}" for x in peaks))

    # stick-slip
    plant = MassSpringParams(m=1.0, k=2.0, v_ref=0.1, p=1.0)
    te = np.linspace(0.0, 30.0, 30001)
    tr = simulate_stickslip(plant, BENCH, IntegratorConfig(t_end=30.0), t_eval=te)
    events = count_stick_events(tr["xdot"], plant.v_ref)
    ok &= events >= 3
    notes.append(f"stick events {events} (min 3)")

    report("criterion 8", bool(ok), "; ".join(notes))
    assert ok


def test_criterion_9_valve(report):
    start = time.perf_counter()
    plant = ValveParams(**VALVE_PLANT)
    te = np.linspace(0.0, 8.0, 8001)
    op = Ramp(rate=20.0, start=0.5, hold=5.5)
    a = simulate_valve(op, plant, VALVE, IntegratorConfig(t_end=8.0), t_eval=te)
    b = simulate_valve(op, plant, VALVE, IntegratorConfig(t_end=8.0), kind="lugre", t_eval=te)
    span = float(np.ptp(a["x"]))
    gap = float(np.max(np.abs(a["x"] - b["x"]))) / span
    steady = simulate_valve(Constant(40.0), plant, VALVE, IntegratorConfig(t_end=30.0), P0=plant.P_min)
    p_err = abs(float(steady["P"][-1]) - plant.pressure_target(40.0))

    sin_plant = ValveParams(**{**VALVE_PLANT, "tau": VALVE_TAU_SINUSOID})
    t = np.linspace(0.0, 2.0, 201)
    op_sin = Sinusoid(30.0, 0.5, 0.0, 50.0)
    free = {"sigma1": (1.0, 5000.0)}
    start_guess = VALVE.replace(sigma1=1.0)
    template = CalibrationProblem(sin_plant, op_sin, t, np.zeros_like(t), free, start_guess)
    x_ref = synthetic_reference(template, VALVE)
    problem = CalibrationProblem(sin_plant, op_sin, t, x_ref, free, start_guess)
    first = fit(problem, budget=2000, seed=1)
    second = fit(problem, budget=2000, seed=1)
    found = first.best_values["sigma1"]
    rel = abs(found - VALVE.sigma1) / VALVE.sigma1
    same = first.best_values == second.best_values and first.history == second.history
    elapsed = time.perf_counter() - start
    ok = span > 0 and gap <= 0.1 and p_err <= 1e-6 and rel <= 0.05 and first.evaluations <= 2000 and same and elapsed < 300.0
    report(
        "criterion 9",
        ok,
        f"stroke {span * 1e3:.1f} mm, FrBD-LuGre gap {gap:.1e} of range (tol 0.1), steady P error {p_err:.1e} Pa "
        f"(tol 1e-6); fitted sigma1 {found:.2f} vs {VALVE.sigma1} ({rel:.2%}, tol 5%) in {first.evaluations} "
        f"evaluations, rerun identical: {same}; {elapsed:.0f} s (limit 300 s)",
    )
    assert ok
