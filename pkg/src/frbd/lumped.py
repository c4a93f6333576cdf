"""Lumped bristle models: FrBD and the LuGre and Dahl references.

All three share the scalar linear form ``zdot = -a(v) z + b(v)``; only the
relaxation rate ``a``, the forcing ``b`` and the output map differ.

==========  =========================  ==========  ==============================
model       a(v)                       b(v)        mu_b
==========  =========================  ==========  ==============================
FrBD        sigma0 |v|_eps / g(v)      mu/g * v    sbar0(v) z + sbar2(v) v
LuGre       sigma0 |v|_eps / mu_L(v)   v           sigma0 z + sigma1 zdot + sigma2 v
Dahl        sigma0 |v|_eps / mu_d      v           sigma0 z
==========  =========================  ==========  ==============================

``mu_L`` is the Stribeck curve without the viscous term; LuGre carries the
viscous part in its output instead.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from . import friction as fc
from .friction import FrictionParams, ParameterError
from .integrators import IntegratorConfig, solve
from .quadrature import linear_ode_solution
from .trace import SimTrace

__all__ = [
    "ModelKind",
    "LUMPED_SCHEMA",
    "relaxation_coefficients",
    "rhs",
    "output",
    "terms",
    "integrate",
    "closed_form_solution",
    "steady_state",
    "storage",
    "passivity_residual",
    "mu_bar_max",
    "Linearization",
    "jacobians",
    "linearize",
    "simulate_linearized",
]

LUMPED_SCHEMA = ("t", "v", "z", "zdot", "mu_b", "F_b", "W", "residual")


class ModelKind(str, enum.Enum):
    FRBD = "frbd"
    LUGRE = "lugre"
    DAHL = "dahl"


def _kind(kind) -> ModelKind:
    try:
        return ModelKind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ValueError(f"unknown model {kind!r}; expected one of {[k.value for k in ModelKind]}") from None


def check_model(params: FrictionParams, kind) -> ModelKind:
    kind = _kind(kind)
    if kind is ModelKind.DAHL and np.any(np.asarray(params.sigma1) != 0):
        raise ParameterError("sigma1", "the Dahl model has no micro-damping; set sigma1 = 0")
    return kind


def _mu_lugre(v, params):
    av = np.abs(np.asarray(v, dtype=float))
    return params.mu_d + (params.mu_s - params.mu_d) * fc._stribeck(av, params)


def relaxation_coefficients(v, params: FrictionParams, kind=ModelKind.FRBD):
    """Return ``(a, b)`` with ``zdot = -a z + b``."""
    kind = _kind(kind)
    av = fc.abs_eps(v, params.eps)
    if kind is ModelKind.FRBD:
        m = fc.mu(v, params)
        gv = params.sigma1 * av + m
        return params.sigma0 * av / gv, m / gv * v
    v = np.asarray(v, dtype=float)
    if kind is ModelKind.LUGRE:
        return params.sigma0 * av / _mu_lugre(v, params), v
    return params.sigma0 * av / params.mu_d, v


def rhs(z, v, params: FrictionParams, kind=ModelKind.FRBD):
    """Bristle deflection rate."""
    a, b = relaxation_coefficients(v, params, kind)
    return -a * z + b


def output(z, v, params: FrictionParams, kind=ModelKind.FRBD, zdot=None):
    """Virtual friction coefficient ``mu_b`` (force per unit normal load)."""
    kind = _kind(kind)
    if kind is ModelKind.FRBD:
        sb0, sb2 = fc.sigma_bars(v, params)
        return sb0 * z + sb2 * v
    if kind is ModelKind.DAHL:
        return params.sigma0 * z
    if zdot is None:
        zdot = rhs(z, v, params, kind)
    return params.sigma0 * z + params.sigma1 * zdot + params.sigma2 * v


def terms(z, v, params: FrictionParams, kind=ModelKind.FRBD):
    """``(zdot, mu_b)`` in one pass; the fast path used by the simulators."""
    if kind is ModelKind.FRBD:
        av = fc.abs_eps(v, params.eps)
        m = fc.mu(v, params)
        gv = params.sigma1 * av + m
        ratio = m / gv
        return -(params.sigma0 * av / gv) * z + ratio * v, params.sigma0 * ratio * z + params.sigma1 * ratio * v
    a, b = relaxation_coefficients(v, params, kind)
    zd = -a * z + b
    return zd, output(z, v, params, kind, zdot=zd)


def storage(z, params: FrictionParams, p=1.0):
    """``W = sigma0 p z**2 / 2``."""
    return 0.5 * params.sigma0 * p * np.square(z)


def passivity_residual(z, v, params: FrictionParams, p=1.0):
    """Dissipation rate ``F_b v - dW/dt`` of the FrBD model in closed form.

    ``Sigma0 sigma0 |v|_eps / g z**2 + p sigma1 mu / g v**2`` with
    ``Sigma0 = sigma0 p``; nonnegative by construction.
    """
    av = fc.abs_eps(v, params.eps)
    m = fc.mu(v, params)
    gv = params.sigma1 * av + m
    v = np.asarray(v, dtype=float)
    return params.sigma0 * p * params.sigma0 * av / gv * np.square(z) + p * params.sigma1 * m / gv * v * v


def _residual(z, v, zdot, F_b, params, kind, p):
    if kind is ModelKind.FRBD:
        return passivity_residual(z, v, params, p)
    return F_b * v - params.sigma0 * p * z * zdot


def steady_state(v, params: FrictionParams, p=1.0, kind=ModelKind.FRBD):
    """Stationary deflection and force for constant ``v``: ``(z_star, F_star)``."""
    kind = check_model(params, kind)
    s = fc.sgn_eps(v, params.eps)
    if kind is ModelKind.FRBD:
        return s * fc.mu(v, params) / params.sigma0, fc.friction_force_r(v, p, params)
    level = _mu_lugre(v, params) if kind is ModelKind.LUGRE else params.mu_d + 0.0 * s
    z = s * level / params.sigma0
    return z, output(z, v, params, kind, zdot=0.0) * p


def mu_bar_max(params: FrictionParams, kind=ModelKind.FRBD, v_max=0.0):
    """Upper bound of ``mu(v)/sigma0`` over ``|v| <= v_max``.

    The viscous term makes ``mu`` unbounded, so the input bound must be given.
    """
    kind = _kind(kind)
    if kind is ModelKind.FRBD:
        return (params.mu_s + params.sigma2 * v_max) / params.sigma0
    if kind is ModelKind.LUGRE:
        return params.mu_s / params.sigma0
    return params.mu_d / params.sigma0


def integrate(z0, v_of_t, cfg: IntegratorConfig, params: FrictionParams, kind=ModelKind.FRBD, p=1.0, t_eval=None):
    """Integrate the bristle ODE under a prescribed velocity ``v_of_t``.

    Parameters
    ----------
    z0 : float or array_like
        Initial deflection. A 1-D array (or array-valued parameter fields or
        signal fields) runs a batch of independent trajectories in one pass.
    v_of_t : callable
        Relative velocity ``v(t)``.
    cfg : IntegratorConfig
    params : FrictionParams
    kind : ModelKind
    p : float
        Normal load [N].
    t_eval : array_like, optional
        Output times; default is every accepted step.

    Returns
    -------
    SimTrace
        Columns of ``LUMPED_SCHEMA`` plus ``work`` (``int F_b v dt``,
        integrated alongside ``z``) and ``dissipated`` (``work - (W - W0)``).
        Rows that failed in a batched run hold NaN; see ``meta["failed"]``.
    """
    kind = check_model(params, kind)
    shape = np.broadcast_shapes(
        np.shape(z0), np.shape(v_of_t(0.0)), *(np.shape(x) for x in params.as_dict().values()), np.shape(p)
    )
    if len(shape) > 1:
        raise ValueError("only one batch dimension is supported")
    y0 = np.zeros((2,) + shape)
    y0[0] = z0

    def fun(t, y):
        v = v_of_t(t)
        zd, mu_b = terms(y[0], v, params, kind)
        out = np.empty_like(y)
        out[0] = zd
        out[1] = mu_b * p * v
        return out

    sol = solve(fun, y0, cfg, t_eval=t_eval, batch_axis=1 if shape else None)
    t = sol.t
    tt = t.reshape((-1,) + (1,) * len(shape))
    z, work = sol.y[:, 0], sol.y[:, 1]
    v = np.broadcast_to(v_of_t(tt), z.shape).astype(float)
    a, b = relaxation_coefficients(v, params, kind)
    zdot = -a * z + b
    mu_b = output(z, v, params, kind, zdot=zdot)
    F_b = mu_b * p
    W = storage(z, params, p)
    data = dict(
        t=t,
        v=v,
        z=z,
        zdot=zdot,
        mu_b=np.broadcast_to(mu_b, z.shape),
        F_b=np.broadcast_to(F_b, z.shape),
        W=np.broadcast_to(W, z.shape),
        residual=np.broadcast_to(_residual(z, v, zdot, F_b, params, kind, p), z.shape),
        work=work,
        dissipated=work - (W - W[0]),
    )
    meta = dict(model=kind.value, nfev=sol.nfev, nsteps=sol.nsteps, nrejected=sol.nrejected)
    if sol.failed is not None:
        meta["failed"] = sol.failed
    return SimTrace(data, LUMPED_SCHEMA, meta)


def closed_form_solution(t, z0, v_of_t, params: FrictionParams, kind=ModelKind.FRBD, atol=1e-16, rtol=1e-12):
    """Deflection from the variation-of-constants formula.

    ``z(t) = Phi(t, 0) z0 + int_0^t Phi(t, s) b(s) ds`` with
    ``Phi(t, s) = exp(-int_s^t a)``, evaluated by adaptive quadrature
    (no time stepping). ``t`` may be a scalar or a sorted array.
    """
    kind = check_model(params, kind)

    def coef(s):
        return relaxation_coefficients(v_of_t(s), params, kind)

    out = linear_ode_solution(coef, z0, t, atol=atol, rtol=rtol)
    return out[0] if np.ndim(t) == 0 else out


class Linearization(NamedTuple):
    """Small-signal model ``dz~/dt = A z~ + H1 v~``, ``mu_b~ = sigma_bar0 z~ + H2 v~``."""

    A: float
    H1: float
    H2: float
    sigma_bar0: float
    z_star: float


def jacobians(z, v, params: FrictionParams):
    """Partial derivatives of the FrBD right-hand side and output map.

    Returns ``(A, H1, sigma_bar0, H2)`` with ``A = df/dz``, ``H1 = df/dv``,
    ``sigma_bar0 = d mu_b/dz`` and ``H2 = d mu_b/dv``. Broadcasts over
    ``z``, ``v`` and array-valued parameter fields.
    """
    v = np.asarray(v, dtype=float)
    av = fc.abs_eps(v, params.eps)
    dav = fc.d_abs_eps(v, params.eps)
    m = fc.mu(v, params)
    dm = fc.dmu_dv(v, params)
    gv = params.sigma1 * av + m
    dg = params.sigma1 * dav + dm
    A = -params.sigma0 * av / gv
    H1 = m / gv * (1.0 - v * dg / gv) + v * dm / gv - params.sigma0 * z / gv * (dav - av * dg / gv)
    sb0, sb2 = fc.sigma_bars(v, params)
    ds0, ds2 = fc.d_sigma_bars_dv(v, params)
    return A, H1, sb0, ds0 * z + ds2 * v + sb2


def linearize(v_star, params: FrictionParams) -> Linearization:
    """Small-signal model of FrBD about the steady state for ``v_star``."""
    v = float(v_star)
    z, _ = steady_state(v, params)
    A, H1, sb0, H2 = jacobians(z, v, params)
    return Linearization(float(A), float(H1), float(H2), float(sb0), float(z))


def simulate_linearized(ztilde0, vtilde_of_t, v_star, params: FrictionParams, cfg: IntegratorConfig, p=1.0, t_eval=None):
    """Trace of the linearized model; columns hold perturbation quantities."""
    lin = linearize(v_star, params)

    def fun(t, y):
        return lin.A * y + lin.H1 * vtilde_of_t(t)

    sol = solve(fun, np.array([float(ztilde0)]), cfg, t_eval=t_eval)
    t = sol.t
    z = sol.y[:, 0]
    vt = np.broadcast_to(vtilde_of_t(t), t.shape).astype(float)
    mu_b = lin.sigma_bar0 * z + lin.H2 * vt
    data = dict(t=t, v=vt, z=z, zdot=lin.A * z + lin.H1 * vt, mu_b=mu_b, F_b=mu_b * p)
    return SimTrace(data, ("t", "v", "z", "zdot", "mu_b", "F_b"), dict(linearization=lin._asdict()))
