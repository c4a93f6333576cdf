"""Mechanical plants driven by a bristle friction model.

Each simulator integrates one monolithic state vector with the shared
Runge-Kutta driver. The friction force acts on the body velocity ``xdot``
(the counter-surface is at rest) and uses the normal load ``p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .friction import FrictionParams
from .integrators import IntegratorConfig, solve
from .lumped import ModelKind, check_model, integrate, output, relaxation_coefficients, storage, terms
from .signals import Constant, InputSignal
from .trace import SimTrace

__all__ = [
    "MassSpringParams",
    "ValveParams",
    "STICKSLIP_SCHEMA",
    "PRESLIDING_SCHEMA",
    "FRICLAG_SCHEMA",
    "VALVE_SCHEMA",
    "simulate_stickslip",
    "simulate_presliding",
    "simulate_friction_lag",
    "simulate_valve",
    "count_stick_events",
    "loop_area",
    "energy_audit",
    "breakaway_force",
]

STICKSLIP_SCHEMA = ("t", "x", "xdot", "y", "v", "z", "F_b")
PRESLIDING_SCHEMA = ("t", "F_ext", "x", "z", "mu_b")
FRICLAG_SCHEMA = ("t", "v", "mu_b")
VALVE_SCHEMA = ("t", "OP", "P", "x", "xdot", "z", "F_b")


@dataclass(frozen=True)
class MassSpringParams:
    """Mass dragged through a spring whose free end moves at ``v_ref``."""

    m: float = 1.0
    k: float = 2.0
    v_ref: float = 0.1
    p: float = 1.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("m must be > 0")
        if not self.k > 0:
            raise ValueError("k must be > 0")
        if not self.p > 0:
            raise ValueError("p must be > 0")


@dataclass(frozen=True)
class ValveParams:
    """Stem mass, actuator and I/P converter data of a pneumatic valve."""

    m: float = 1.6
    S_a: float = 445e-4
    k: float = 203495.8
    F0: float = 2578.3
    K_P: float = 1666.49
    P_min: float = 41276.40
    tau: float = 0.933
    p: float = 1.0

    def __post_init__(self):
        for name in ("m", "S_a", "k", "K_P", "tau", "p"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.P_min >= 0:
            raise ValueError("P_min must be >= 0")

    def pressure_target(self, op):
        return self.K_P * np.asarray(op, dtype=float) + self.P_min

    def equilibrium_x(self, P):
        """Stem position where spring, preload and actuator balance."""
        return (self.S_a * P - self.F0) / self.k


def breakaway_force(params: FrictionParams, p=1.0):
    """Stiction threshold ``mu_s p``."""
    return params.mu_s * p


def _signal(value) -> InputSignal:
    return value if callable(value) else Constant(float(value))


def _batch_shape(params, *extra):
    return np.broadcast_shapes(*(np.shape(x) for x in params.as_dict().values()), *(np.shape(e) for e in extra))


def _run(fun, y0, cfg, t_eval, shape):
    if len(shape) > 1:
        raise ValueError("only one batch dimension is supported")
    return solve(fun, y0, cfg, t_eval=t_eval, batch_axis=1 if shape else None)


def simulate_stickslip(
    ms: MassSpringParams,
    params: FrictionParams,
    cfg: IntegratorConfig,
    kind=ModelKind.FRBD,
    v_ref=None,
    x0=0.0,
    t_eval=None,
):
    """Mass-spring rig ``m xddot = k (y - x) - F_b``, ``ydot = v_ref``.

    ``v_ref`` defaults to the constant ``ms.v_ref``; any input signal may be
    given instead. The ``v`` column is the drive velocity. Extra columns
    ``E_mech`` (kinetic plus spring energy), ``work_drive``
    (``int k (y - x) v_ref``), ``work_friction`` (``int F_b xdot``) and ``W``
    support :func:`energy_audit`.
    """
    kind = check_model(params, kind)
    drive = _signal(ms.v_ref if v_ref is None else v_ref)
    shape = _batch_shape(params)
    y0 = np.zeros((6,) + shape)
    y0[0] = x0

    def fun(t, s):
        x, xd, y, z = s[0], s[1], s[2], s[3]
        vr = drive(t)
        zd, mu_b = terms(z, xd, params, kind)
        F = mu_b * ms.p
        spring = ms.k * (y - x)
        out = np.empty_like(s)
        out[0] = xd
        out[1] = (spring - F) / ms.m
        out[2] = vr
        out[3] = zd
        out[4] = spring * vr
        out[5] = F * xd
        return out

    sol = _run(fun, y0, cfg, t_eval, shape)
    x, xd, y, z, wd, wf = (sol.y[:, i] for i in range(6))
    tt = sol.t.reshape((-1,) + (1,) * len(shape))
    a, b = relaxation_coefficients(xd, params, kind)
    F = output(z, xd, params, kind, zdot=-a * z + b) * ms.p
    data = dict(
        t=sol.t,
        x=x,
        xdot=xd,
        y=y,
        v=np.broadcast_to(drive(tt), x.shape).astype(float),
        z=z,
        F_b=F,
        E_mech=0.5 * ms.m * xd**2 + 0.5 * ms.k * (y - x) ** 2,
        work_drive=wd,
        work_friction=wf,
        W=storage(z, params, ms.p),
    )
    return SimTrace(data, STICKSLIP_SCHEMA, dict(model=kind.value, nsteps=sol.nsteps, failed=sol.failed))


def energy_audit(trace: SimTrace):
    """Relative mismatch of the mechanical energy balance of a stick-slip run.

    ``Delta E_mech = int k (y - x) v_ref dt - int F_b xdot dt``. Returns
    ``(mismatch, dissipated)`` where ``dissipated = int F_b xdot - Delta W``
    is the energy absorbed by the friction element (nonnegative for a
    passive model).
    """
    dE = trace["E_mech"][-1] - trace["E_mech"][0]
    balance = trace["work_drive"][-1] - trace["work_friction"][-1]
    scale = max(abs(trace["work_drive"][-1]), abs(trace["work_friction"][-1]), abs(dE), 1e-300)
    dissipated = trace["work_friction"][-1] - (trace["W"][-1] - trace["W"][0])
    return abs(dE - balance) / scale, dissipated


def count_stick_events(xdot, v_ref, slip_level=0.5, stick_level=0.01):
    """Number of times ``xdot`` drops below ``stick_level * v_ref`` after
    having exceeded ``slip_level * v_ref``."""
    xdot = np.asarray(xdot, dtype=float)
    armed = False
    count = 0
    for value in xdot:
        if not armed and value > slip_level * v_ref:
            armed = True
        elif armed and value < stick_level * v_ref:
            armed = False
            count += 1
    return count


def loop_area(x, y):
    """Signed area enclosed by the polygon ``(x, y)`` (shoelace formula)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def simulate_presliding(force_input, m, params: FrictionParams, cfg: IntegratorConfig, kind=ModelKind.FRBD, p=1.0, t_eval=None):
    """Free mass ``m xddot = F_ext(t) - F_b`` starting at rest.

    ``x`` is measured from the unforced equilibrium.
    """
    kind = check_model(params, kind)
    if not m > 0:
        raise ValueError("m must be > 0")
    force = _signal(force_input)
    shape = _batch_shape(params, force(0.0))
    y0 = np.zeros((3,) + shape)

    def fun(t, s):
        x, xd, z = s
        zd, mu_b = terms(z, xd, params, kind)
        out = np.empty_like(s)
        out[0] = xd
        out[1] = (force(t) - mu_b * p) / m
        out[2] = zd
        return out

    sol = _run(fun, y0, cfg, t_eval, shape)
    x, xd, z = (sol.y[:, i] for i in range(3))
    tt = sol.t.reshape((-1,) + (1,) * len(shape))
    a, b = relaxation_coefficients(xd, params, kind)
    data = dict(
        t=sol.t,
        F_ext=np.broadcast_to(force(tt), x.shape).astype(float),
        x=x,
        xdot=xd,
        z=z,
        mu_b=output(z, xd, params, kind, zdot=-a * z + b),
    )
    return SimTrace(data, PRESLIDING_SCHEMA, dict(model=kind.value, nsteps=sol.nsteps, failed=sol.failed))


def simulate_friction_lag(v_input, params: FrictionParams, cfg: IntegratorConfig, kind=ModelKind.FRBD, z0=0.0, t_eval=None):
    """Friction coefficient under a prescribed unidirectional velocity."""
    v_input = _signal(v_input)
    tr = integrate(z0, v_input, cfg, params, kind, t_eval=t_eval)
    data = {k: tr[k] for k in ("t", "v", "mu_b", "z", "F_b")}
    return SimTrace(data, FRICLAG_SCHEMA, dict(tr.meta))


def _check_op(op, t_end):
    probe = np.asarray(op(np.linspace(0.0, t_end, 4001)), dtype=float)
    if np.any(probe < 0) or np.any(probe > 100):
        raise ValueError(f"OP input leaves [0, 100] %: range [{probe.min():.4g}, {probe.max():.4g}]")


def simulate_valve(
    op_input,
    vp: ValveParams,
    params: FrictionParams,
    cfg: IntegratorConfig,
    kind=ModelKind.FRBD,
    x0=None,
    P0=None,
    t_eval=None,
):
    """Pneumatic valve: ``m xddot = S_a P - k x - F_b - F0``,
    ``Pdot = (K_P OP + P_min - P)/tau``.

    By default the run starts at rest with ``P`` at its fixed point for
    ``OP(0)`` and the stem at the matching force balance.
    Array-valued friction fields run a batch of candidates.
    """
    kind = check_model(params, kind)
    op = _signal(op_input)
    _check_op(op, cfg.t_end)
    shape = _batch_shape(params)
    P_init = float(vp.pressure_target(op(0.0))) if P0 is None else float(P0)
    x_init = float(vp.equilibrium_x(P_init)) if x0 is None else float(x0)
    y0 = np.zeros((4,) + shape)
    y0[0] = x_init
    y0[3] = P_init
    # scale the pressure so that one tolerance serves all states
    Ps = vp.K_P * 100.0 + vp.P_min
    y0[3] /= Ps
    target_scale, P_min_scaled = vp.K_P / Ps, vp.P_min / Ps

    def fun(t, s):
        x, xd, z, Pn = s
        zd, mu_b = terms(z, xd, params, kind)
        F = mu_b * vp.p
        out = np.empty_like(s)
        out[0] = xd
        out[1] = (vp.S_a * Ps * Pn - vp.k * x - F - vp.F0) / vp.m
        out[2] = zd
        out[3] = (target_scale * op(t) + P_min_scaled - Pn) / vp.tau
        return out

    sol = _run(fun, y0, cfg, t_eval, shape)
    x, xd, z, Pn = (sol.y[:, i] for i in range(4))
    tt = sol.t.reshape((-1,) + (1,) * len(shape))
    a, b = relaxation_coefficients(xd, params, kind)
    data = dict(
        t=sol.t,
        OP=np.broadcast_to(op(tt), x.shape).astype(float),
        P=Pn * Ps,
        x=x,
        xdot=xd,
        z=z,
        F_b=output(z, xd, params, kind, zdot=-a * z + b) * vp.p,
    )
    return SimTrace(data, VALVE_SCHEMA, dict(model=kind.value, nsteps=sol.nsteps, failed=sol.failed))
