"""Randomized invariant checks shared by the ``check`` experiment and the tests.

Every check draws its scenarios from a generator seeded by the caller and
returns a :class:`CheckResult`. The suite is sized to run in well under a
minute; the test-suite versions of the same properties use larger samples.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import distributed as dist
from . import friction as fc
from . import lumped
from .friction import FrictionParams
from .integrators import IntegratorConfig
from .presets import BENCH, TIRE, TIRE_CONTACT_LENGTH, TIRE_PRESSURE_DECAY
from .signals import InputSignal

__all__ = [
    "CheckResult",
    "RandomSmooth",
    "random_params",
    "random_velocity",
    "run_checks",
    "CHECKS",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


class RandomSmooth(InputSignal):
    """``c + sum_k A_k sin(w_k t + phi_k)``; array rows give a batch.

    Coefficient arrays have shape ``(K,)`` or ``(B, K)``; ``c`` has shape
    ``()`` or ``(B,)``. Evaluated at scalar ``t`` a batch returns ``(B,)``.
    With ``column=True`` (distributed solver convention) a batch maps ``t``
    of shape ``()`` or ``(n,)`` to ``(B, 1)`` or ``(B, n)``.
    """

    kind = "random_smooth"

    def __init__(self, c, A, w, phi, column=False):
        self.c = np.asarray(c, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.w = np.asarray(w, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.column = column

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.column and self.c.ndim:
            t = np.atleast_1d(t)[None, :, None]
            return self.c[:, None] + np.sum(self.A[:, None] * np.sin(self.w[:, None] * t + self.phi[:, None]), axis=-1)
        return self.c + (self.A * np.sin(self.w * t[..., None] + self.phi)).sum(axis=-1)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        return np.sum(self.A * self.w * np.cos(self.w * t[..., None] + self.phi), axis=-1)

    def as_dict(self):
        return dict(kind=self.kind, c=self.c.tolist(), A=self.A.tolist(), w=self.w.tolist(), phi=self.phi.tolist())


def random_velocity(rng, size=None, terms=3, v_max=1.0, f_max=2.0, offset=None, column=False) -> RandomSmooth:
    """Smooth velocity with ``|v| <= v_max``; may change sign unless ``offset`` fixes the mean."""
    shape = () if size is None else (size,)
    A = rng.uniform(-1.0, 1.0, shape + (terms,))
    w = 2.0 * np.pi * rng.uniform(0.05, f_max, shape + (terms,))
    phi = rng.uniform(0.0, 2.0 * np.pi, shape + (terms,))
    if offset is None:
        c = rng.uniform(-0.5, 0.5, shape)
        scale = v_max / (np.abs(c) + np.sum(np.abs(A), axis=-1))
        return RandomSmooth(c * scale, A * scale[..., None], w, phi, column)
    c = np.broadcast_to(np.asarray(offset, dtype=float), shape)
    scale = (v_max - np.abs(c)) / np.sum(np.abs(A), axis=-1)
    return RandomSmooth(c, A * scale[..., None], w, phi, column)


def random_params(rng, size=None, sigma0=(1e2, 1e4), sigma1=(0.0, 100.0), sigma2=(0.0, 0.1), eps=(0.0, 1e-3)) -> FrictionParams:
    """Friction parameters drawn from broad physical ranges (log-uniform where natural)."""
    shape = () if size is None else (size,)

    def logu(lo, hi):
        return np.exp(rng.uniform(np.log(lo), np.log(hi), shape))

    mu_d = rng.uniform(0.2, 1.0, shape)
    fields = dict(
        mu_d=mu_d,
        mu_s=mu_d * rng.uniform(1.0, 2.0, shape),
        v_S=logu(1e-3, 0.1),
        delta=rng.uniform(0.5, 2.5, shape),
        sigma2=rng.uniform(*sigma2, shape),
        eps=rng.uniform(*eps, shape),
        sigma0=logu(*sigma0),
        sigma1=rng.uniform(*sigma1, shape),
    )
    if size is None:
        fields = {k: float(v) for k, v in fields.items()}
    return FrictionParams(**fields)


# individual checks; each takes a generator and returns (passed, detail)


def _check_sigma_bars(rng):
    p = random_params(rng, 2000)
    v = rng.uniform(-2.0, 2.0, 2000)
    sb0, sb2 = fc.sigma_bars(v, p)
    ratio = fc.mu(v, p) / fc.g(v, p)
    err = max(np.max(np.abs(sb0 / p.sigma0 - ratio)), np.max(np.abs(sb2 - p.sigma1 * ratio)))
    return err <= 1e-14, f"max deviation {err:.2e} (tol 1e-14)"


def _check_steady_force(rng):
    worst = 0.0
    slips = np.logspace(-3, 0, 10)
    for profile in (dist.PressureProfile("constant"), dist.PressureProfile("exponential", a=TIRE_PRESSURE_DECAY)):
        geo = dist.ContactGeometry(TIRE_CONTACT_LENGTH, profile, V=300.0)
        _, closed = dist.slip_sweep(slips, geo, TIRE)
        _, quad = dist.slip_sweep(slips, geo, TIRE, method="quadrature", N=400)
        worst = max(worst, float(np.max(np.abs(closed - quad) / np.abs(closed))))
    return worst <= 1e-3, f"max relative gap {worst:.2e} (tol 1e-3)"


def _check_lumped_oracle(rng):
    worst = 0.0
    t = np.linspace(0.0, 2.0, 41)
    cfg = IntegratorConfig(t_end=2.0, rtol=1e-11, atol=1e-14)
    for _ in range(3):
        p = random_params(rng)
        v = random_velocity(rng)
        z0 = rng.uniform(-1.0, 1.0) * p.mu_d / p.sigma0
        num = lumped.integrate(z0, v, cfg, p, t_eval=t)["z"]
        ref = lumped.closed_form_solution(t, z0, v, p)
        worst = max(worst, float(np.max(np.abs(num - ref))))
    return worst <= 1e-8, f"sup-norm gap {worst:.2e} (tol 1e-8)"


def _check_lumped_passivity(rng):
    B = 400
    p = random_params(rng, B)
    v = random_velocity(rng, B)
    bound = lumped.mu_bar_max(p, v_max=1.0)
    z0 = rng.uniform(-1.0, 1.0, B) * p.mu_d / p.sigma0
    tr = lumped.integrate(z0, v, IntegratorConfig(t_end=2.0), p)
    res = float(np.min(tr["residual"]))
    diss = float(np.min(tr["dissipated"]))
    excess = float(np.max(np.abs(tr["z"]) - bound))
    ok = res >= -1e-12 and diss >= -1e-9 and excess <= 1e-9
    return ok, f"min residual {res:.2e}, min dissipated {diss:.2e}, max |z| - bound {excess:.2e}"


def _check_reduction(rng):
    worst = 0.0
    t = np.linspace(0.0, 2.0, 201)
    cfg = IntegratorConfig(t_end=2.0, rtol=1e-10, atol=1e-14)
    B = 10
    p = random_params(rng, B, sigma0=(1e2, 1e3), sigma1=(0.0, 0.0), sigma2=(0.0, 0.0))
    v = random_velocity(rng, B)
    z0 = rng.uniform(-1.0, 1.0, B) * p.mu_d / p.sigma0
    a = lumped.integrate(z0, v, cfg, p, t_eval=t)
    b = lumped.integrate(z0, v, cfg, p, kind="lugre", t_eval=t)
    worst = max(float(np.max(np.abs(a["z"] - b["z"]))), float(np.max(np.abs(a["mu_b"] - b["mu_b"]))))
    pd = p.replace(mu_s=p.mu_d)
    c = lumped.integrate(z0, v, cfg, pd, t_eval=t)
    d = lumped.integrate(z0, v, cfg, pd, kind="dahl", t_eval=t)
    worst = max(worst, float(np.max(np.abs(c["z"] - d["z"]))))
    return worst <= 1e-10, f"sup-norm gap {worst:.2e} (tol 1e-10)"


def _check_distributed_passivity(rng):
    worst = np.inf
    for profile in (dist.PressureProfile("constant"), dist.PressureProfile("exponential", a=rng.uniform(0.1, 2.0))):
        geo = dist.ContactGeometry(TIRE_CONTACT_LENGTH, profile, V=300.0)
        v = random_velocity(rng, 20, v_max=5.0, f_max=100.0, column=True)
        _, tr = dist.simulate_pde(v, geo, TIRE, 0.02, N=100)
        worst = min(worst, float(np.min(tr["dissipated"])))
    verdict = dist.passivity_condition(dist.ContactGeometry(0.1, dist.PressureProfile("parabolic")))
    ok = worst >= -1e-8 and verdict.status == "fails"
    return ok, f"min dissipated {worst:.2e} (tol -1e-8); parabolic profile: {verdict.status}"


def _check_linearization(rng):
    v_star = float(rng.uniform(0.5, 1.0))
    u = random_velocity(rng, v_max=1.0, f_max=1.0, offset=0.0)
    z_star = lumped.linearize(v_star, BENCH).z_star
    t = np.linspace(0.0, 2.0, 401)
    cfg = IntegratorConfig(t_end=2.0, rtol=1e-12, atol=1e-15)
    gaps = []
    for h in (1e-2, 5e-3, 2.5e-3):
        nl = lumped.integrate(z_star, lambda s, h=h: v_star + h * u(s), cfg, BENCH, t_eval=t)["z"] - z_star
        lin = lumped.simulate_linearized(0.0, lambda s, h=h: h * u(s), v_star, BENCH, cfg, t_eval=t)["z"]
        gaps.append(float(np.max(np.abs(nl - lin))))
    ratios = [gaps[0] / gaps[1], gaps[1] / gaps[2]]
    ok = all(2.7 <= r <= 5.3 for r in ratios)
    return ok, "halving ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (range [2.7, 5.3])"


def _check_characteristics(rng):
    geo = dist.ContactGeometry(TIRE_CONTACT_LENGTH, dist.PressureProfile("constant"), V=300.0)
    T = 3.0 * float(dist.varpi(1.0, geo))
    v = random_velocity(rng, v_max=3.0, f_max=3.0 / T, offset=1.5)
    field, _ = dist.simulate_pde(v, geo, TIRE, T, N=200)
    xi = field.xi[::20]
    ref = dist.characteristics_solution(xi, T, lambda x: 0.0 * x, v, geo, TIRE)
    err = float(np.max(np.abs(field.z[::20] - ref)))
    return err <= 1e-4, f"sup-norm gap {err:.2e} at N=200 (tol 1e-4)"


def _check_energy(rng):
    from .systems import MassSpringParams, energy_audit, simulate_stickslip

    tr = simulate_stickslip(MassSpringParams(), BENCH, IntegratorConfig(t_end=10.0))
    mismatch, dissipated = energy_audit(tr)
    return mismatch <= 1e-6 and dissipated >= -1e-9, f"energy mismatch {mismatch:.2e}, dissipated {dissipated:.3g} J"


CHECKS = (
    ("sigma-bar identity", _check_sigma_bars),
    ("steady force closed form vs quadrature", _check_steady_force),
    ("lumped variation-of-constants oracle", _check_lumped_oracle),
    ("lumped passivity and stability bound", _check_lumped_passivity),
    ("model reduction (LuGre, Dahl)", _check_reduction),
    ("distributed passivity", _check_distributed_passivity),
    ("lumped linearization order", _check_linearization),
    ("PDE vs characteristics", _check_characteristics),
    ("stick-slip energy balance", _check_energy),
)


def _run_one(index, name, fn, seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    start = time.perf_counter()
    try:
        passed, detail = fn(rng)
    except Exception as exc:  # a crashing check is a failed check
        passed, detail = False, f"{type(exc).__name__}: {exc}"
    return CheckResult(name, bool(passed), detail, time.perf_counter() - start)


def run_checks(seed: int = 0, workers: int = 1) -> list[CheckResult]:
    """Run every check; results keep the order of :data:`CHECKS`."""
    jobs = [(i, name, fn, seed) for i, (name, fn) in enumerate(CHECKS)]
    if workers <= 1:
        return [_run_one(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: _run_one(*job), jobs))
