"""Distributed FrBD model on the unit contact domain.

The bristle field ``z(xi, t)``, ``xi in [0, 1]``, obeys the transport equation

    z_t + V(xi) z_xi = -a(xi, v) z + b(xi, v),    z(0, t) = 0,

with ``a = sigma0(xi) |v|_eps / g(v, xi)``, ``b = mu(v) / g(v, xi) * v`` and
``g = sigma1(xi) |v|_eps + mu(v)``. ``V`` is the transport velocity scaled to
the unit domain [1/s], so the travel time from 0 to ``xi`` is
``varpi(xi) = int_0^xi 1/V``. The force is ``F_b = int_0^1 L mu_b p dxi``.

Fields may carry leading batch axes: ``z`` of shape ``(..., N + 1)`` with a
velocity of shape ``(..., 1)`` advances several independent runs at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import friction as fc
from .friction import FrictionParams
from .lumped import jacobians
from .quadrature import linear_ode_solution
from .trace import SimTrace

__all__ = [
    "PressureProfile",
    "ContactGeometry",
    "Field",
    "CFLError",
    "FORCE_SCHEMA",
    "FIELD_SCHEMA",
    "SWEEP_SCHEMA",
    "grid",
    "varpi",
    "varpi_inv",
    "coefficients",
    "step_pde",
    "simulate_pde",
    "characteristics_solution",
    "stationary_profile",
    "total_force",
    "normal_force",
    "steady_force_constant",
    "steady_force_exponential",
    "slip_sweep",
    "PassivityVerdict",
    "passivity_condition",
    "distributed_storage_and_residual",
    "DistributedLinearization",
    "linearize_distributed",
    "simulate_linearized_distributed",
    "field_table",
]

FORCE_SCHEMA = ("t", "v", "F_b", "W", "residual")
FIELD_SCHEMA = ("t", "xi", "z", "mu_b", "f_b")
SWEEP_SCHEMA = ("slip", "F_b_norm")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


class CFLError(ValueError):
    """Upwind step violates ``dt * max(V) <= dxi``."""


@dataclass(frozen=True)
class PressureProfile:
    """Contact pressure along the unit domain.

    ``constant``: ``p0``; ``exponential``: ``p0 exp(-a xi)``;
    ``parabolic``: ``p0 xi (1 - xi)``.
    """

    shape: str = "constant"
    p0: float = 1.0
    a: float = 0.0

    def __post_init__(self):
        if self.shape not in ("constant", "exponential", "parabolic"):
            raise ValueError(f"unknown pressure shape {self.shape!r}")
        if not self.p0 > 0:
            raise ValueError("pressure p0 must be > 0")
        if self.shape == "exponential" and not self.a > 0:
            raise ValueError("exponential pressure needs a > 0")

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if self.shape == "constant":
            return self.p0 + 0.0 * xi
        if self.shape == "exponential":
            return self.p0 * np.exp(-self.a * xi)
        return self.p0 * xi * (1.0 - xi)

    def mean(self) -> float:
        """``int_0^1 p``."""
        if self.shape == "constant":
            return self.p0
        if self.shape == "exponential":
            return self.p0 * float(_phi1(self.a))
        return self.p0 / 6.0


def _as_profile(value):
    if value is None or callable(value):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    knots = np.linspace(0.0, 1.0, arr.size)
    return lambda xi: np.interp(xi, knots, arr)


@dataclass(frozen=True)
class ContactGeometry:
    """Contact length, pressure and transport data.

    Parameters
    ----------
    L : float
        Contact length [m].
    pressure : PressureProfile
    V : float, callable or array_like
        Transport velocity on the unit domain [1/s]; arrays are samples on a
        uniform grid over [0, 1], interpolated linearly.
    sigma0, sigma1 : float, callable, array_like or None
        Spatial micro-stiffness and micro-damping profiles. ``None`` takes
        the constant value from the friction parameters.
    """

    L: float
    pressure: PressureProfile
    V: object = 1.0
    sigma0: object = None
    sigma1: object = None

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("contact length L must be > 0")
        for name in ("V", "sigma0", "sigma1"):
            object.__setattr__(self, name, _as_profile(getattr(self, name)))
        probe = np.linspace(0.0, 1.0, 201)
        if not np.all(self.V_at(probe) > 0):
            raise ValueError("transport velocity V must be > 0 on [0, 1]")
        if self.sigma0 is not None and not np.all(self._eval(self.sigma0, probe) > 0):
            raise ValueError("sigma0 profile must be > 0")
        if self.sigma1 is not None and not np.all(self._eval(self.sigma1, probe) >= 0):
            raise ValueError("sigma1 profile must be >= 0")

    @staticmethod
    def _eval(prof, xi):
        xi = np.asarray(xi, dtype=float)
        return prof(xi) if callable(prof) else prof + 0.0 * xi

    def V_at(self, xi):
        return self._eval(self.V, xi)

    def sigma0_at(self, xi, params):
        return self._eval(params.sigma0 if self.sigma0 is None else self.sigma0, xi)

    def sigma1_at(self, xi, params):
        return self._eval(params.sigma1 if self.sigma1 is None else self.sigma1, xi)

    @property
    def uniform(self) -> bool:
        """True when V, sigma0 and sigma1 do not vary along the contact."""
        return not any(callable(x) for x in (self.V, self.sigma0, self.sigma1))

    def local_params(self, xi, params: FrictionParams) -> FrictionParams:
        """Friction parameters with sigma0, sigma1 sampled at ``xi``."""
        return params.replace(sigma0=self.sigma0_at(xi, params), sigma1=self.sigma1_at(xi, params))


@dataclass
class Field:
    """Bristle deflection sampled on a uniform grid at time ``t``."""

    xi: np.ndarray
    z: np.ndarray
    t: float = 0.0

    @property
    def N(self) -> int:
        return self.xi.size - 1


def grid(N: int) -> np.ndarray:
    if N < 3:
        raise ValueError("need at least N = 3 intervals")
    return np.linspace(0.0, 1.0, N + 1)


def _phi1(x):
    """``(1 - exp(-x)) / x`` with its series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    series = 1.0 - x / 2.0 + x * x / 6.0 - x**3 / 24.0
    return np.where(small, series, -np.expm1(-safe) / safe)


def _one_minus_phi1(x):
    """``(x + exp(-x) - 1) / x`` with its series near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    series = x / 2.0 - x * x / 6.0 + x**3 / 24.0 - x**4 / 120.0
    return np.where(small, series, (safe + np.expm1(-safe)) / safe)


def _psi(x):
    """``int_0^1 s exp(-x s) ds``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.05
    safe = np.where(small, 1.0, x)
    series = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(9):
        series = series + term / (k + 2)
        term = term * (-x) / (k + 1)
    return np.where(small, series, (-np.expm1(-safe) - safe * np.exp(-safe)) / (safe * safe))


# travel time along the contact


def varpi(xi, geometry: ContactGeometry):
    """Travel time ``int_0^xi 1/V`` [s]."""
    xi = np.asarray(xi, dtype=float)
    if not callable(geometry.V):
        return xi / geometry.V
    nodes = xi[..., None] * _GL_U
    return xi * np.sum(_GL_W / geometry.V_at(nodes), axis=-1)


def varpi_inv(w, geometry: ContactGeometry, tol=1e-13):
    """Inverse of :func:`varpi` on [0, 1] by safeguarded Newton iteration."""
    w = np.asarray(w, dtype=float)
    if not callable(geometry.V):
        return w * geometry.V
    lo = np.zeros_like(w)
    hi = np.ones_like(w)
    x = np.clip(w / varpi(1.0, geometry), 0.0, 1.0)
    for _ in range(60):
        f = varpi(x, geometry) - w
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        step = f * geometry.V_at(x)
        new = x - step
        outside = (new <= lo) | (new >= hi)
        new = np.where(outside, 0.5 * (lo + hi), new)
        done = np.abs(new - x) < tol
        x = new
        if np.all(done):
            break
    return x


# coefficients


def coefficients(xi, v, geometry: ContactGeometry, params: FrictionParams):
    """Relaxation rate ``a``, forcing ``b`` and effective ``(sbar0, sbar2)``.

    Broadcasts ``xi`` against ``v``.
    """
    v = np.asarray(v, dtype=float)
    av = fc.abs_eps(v, params.eps)
    m = fc.mu(v, params)
    s0 = geometry.sigma0_at(xi, params)
    s1 = geometry.sigma1_at(xi, params)
    gv = s1 * av + m
    ratio = m / gv
    return s0 * av / gv, ratio * v, s0 * ratio, s1 * ratio


def _trapezoid(y, xi):
    dx = xi[1] - xi[0]
    return dx * (np.sum(y, axis=-1) - 0.5 * (y[..., 0] + y[..., -1]))


# time stepping


class _SemiLagrangian:
    """Precomputed feet and interpolation weights for a fixed grid and step."""

    def __init__(self, xi, dt, geometry):
        self.xi = xi
        self.dt = dt
        n = xi.size - 1
        dx = 1.0 / n
        w = varpi(xi, geometry)
        self.inflow = w < dt
        self.tau = np.where(self.inflow, w, dt)
        foot = np.where(self.inflow, 0.0, varpi_inv(np.maximum(w - dt, 0.0), geometry))
        foot = np.clip(foot, 0.0, 1.0)
        self.foot = foot
        j = np.clip(np.floor(foot / dx).astype(int) - 1, 0, n - 3)
        self.index = j[:, None] + np.arange(4)
        s = foot[:, None] / dx - self.index  # foot position relative to each stencil node
        weights = np.ones((xi.size, 4))
        for m in range(4):
            for q in range(4):
                if q != m:
                    weights[:, m] *= s[:, q] / (m - q)
        self.weights = weights

    def step(self, z, t, coef):
        t_new = t + self.dt
        z_foot = np.sum(z[..., self.index] * self.weights, axis=-1)
        z_foot = np.where(self.inflow, 0.0, z_foot)
        a_f, b_f = coef(self.foot, t_new - self.tau)
        a_n, b_n = coef(self.xi, t_new)
        x = 0.5 * (a_f + a_n) * self.tau
        psi = _psi(x)
        out = z_foot * np.exp(-x) + self.tau * (b_n * (_phi1(x) - psi) + b_f * psi)
        out[..., 0] = 0.0
        return out


class _Upwind:
    def __init__(self, xi, dt, geometry):
        self.xi = xi
        self.dt = dt
        lam = dt * geometry.V_at(xi) * (xi.size - 1)
        if np.max(lam) > 1.0 + 1e-12:
            raise CFLError(f"upwind CFL number {np.max(lam):.4g} > 1; reduce dt")
        self.lam = lam

    def step(self, z, t, coef):
        adv = z.copy()
        adv[..., 1:] = z[..., 1:] - self.lam[1:] * (z[..., 1:] - z[..., :-1])
        a, b = coef(self.xi, t + 0.5 * self.dt)
        x = a * self.dt
        out = adv * np.exp(-x) + b * self.dt * _phi1(x)
        out[..., 0] = 0.0
        return out


def _stepper(scheme, xi, dt, geometry):
    if scheme == "semi_lagrangian":
        return _SemiLagrangian(xi, dt, geometry)
    if scheme == "upwind":
        return _Upwind(xi, dt, geometry)
    raise ValueError(f"unknown scheme {scheme!r}; expected 'semi_lagrangian' or 'upwind'")


def _velocity_coef(v_of_t, geometry, params):
    def coef(xi, t):
        a, b, _, _ = coefficients(xi, v_of_t(t), geometry, params)
        return a, b

    return coef


def step_pde(field: Field, v, dt, geometry: ContactGeometry, params: FrictionParams, scheme="semi_lagrangian") -> Field:
    """Advance ``field`` by ``dt`` under the (constant over the step) velocity ``v``.

    The default semi-Lagrangian scheme follows each node's characteristic
    back to its foot, interpolates there with a cubic Lagrange stencil and
    integrates the linear source exactly along the characteristic, so it has
    no step-size restriction. ``scheme="upwind"`` is first-order upwind with
    exact relaxation of the source and requires ``dt * max(V) <= dxi``.
    """
    stepper = _stepper(scheme, field.xi, dt, geometry)
    vv = np.asarray(v, dtype=float)
    z = stepper.step(np.asarray(field.z, dtype=float), field.t, _velocity_coef(lambda t: vv, geometry, params))
    if not np.all(np.isfinite(z)):
        raise FloatingPointError(f"non-finite bristle field at t = {field.t + dt:.6g} s")
    return Field(field.xi, z, field.t + dt)


def _time_map(transport_of_t, t_end, n=20001):
    # s(t) = int_0^t lambda, and its inverse, on a fine grid
    t = np.linspace(0.0, t_end, n)
    lam = np.asarray(transport_of_t(t), dtype=float) + 0.0 * t
    if not np.all(lam > 0):
        raise ValueError("transport scale must stay > 0")
    s = np.concatenate([[0.0], np.cumsum(0.5 * (lam[1:] + lam[:-1]) * np.diff(t))])
    return (lambda tt: np.interp(tt, t, s)), (lambda ss: np.interp(ss, s, t)), s[-1]


def simulate_pde(
    v_of_t,
    geometry: ContactGeometry,
    params: FrictionParams,
    t_end: float,
    z0=None,
    N: int = 400,
    dt: float | None = None,
    scheme: str = "semi_lagrangian",
    cfl: float = 0.8,
    transport_of_t=None,
    keep_fields: bool = False,
):
    """Simulate the distributed model from ``t = 0`` to ``t_end``.

    Parameters
    ----------
    v_of_t : callable
        Sliding velocity ``v(t)``. The scheme evaluates it at one time per
        node, so it must accept ``t`` of shape ``()`` or ``(n,)``; a batch of
        ``B`` signals returns shape ``(B, 1)`` or ``(B, n)``.
    z0 : callable, array_like or None
        Initial field, as a function of ``xi`` or samples on the grid.
        ``None`` starts from rest.
    dt : float, optional
        Step size; by default ``cfl * dxi / max(V)``, shortened so that an
        integer number of steps reaches ``t_end``.
    transport_of_t : callable, optional
        Positive scale ``lambda(t)`` of a time-varying transport velocity
        ``lambda(t) V(xi)``. The run is carried out in the rescaled time
        ``s = int lambda dt``, where the transport is stationary.
    keep_fields : bool
        Also return every intermediate field (``meta["fields"]``).

    Returns
    -------
    (Field, SimTrace)
        Final field and the force trace (``FORCE_SCHEMA`` plus ``work`` and
        ``dissipated``).
    """
    xi = grid(N)
    dx = 1.0 / N
    vmax = float(np.max(geometry.V_at(xi)))
    if transport_of_t is None:
        to_s = from_s = None
        s_end = float(t_end)
    else:
        to_s, from_s, s_end = _time_map(transport_of_t, t_end)
    if dt is None:
        dt = cfl * dx / vmax
    n_steps = max(1, int(np.ceil(s_end / dt - 1e-9)))
    dt = s_end / n_steps
    stepper = _stepper(scheme, xi, dt, geometry)

    if transport_of_t is None:
        coef = _velocity_coef(v_of_t, geometry, params)
    else:

        def coef(x, s):
            t = from_s(s)
            lam = transport_of_t(t)
            a, b, _, _ = coefficients(x, v_of_t(t), geometry, params)
            return a / lam, b / lam

    if z0 is None:
        z = np.zeros(np.broadcast_shapes(np.shape(v_of_t(0.0))[:-1] + (1,), xi.shape))
    elif callable(z0):
        z = np.asarray(z0(xi), dtype=float)
    else:
        z = np.array(z0, dtype=float)
        if z.shape[-1] != xi.size:
            raise ValueError(f"initial field has {z.shape[-1]} nodes, grid has {xi.size}")
    z = np.array(np.broadcast_to(z, np.broadcast_shapes(z.shape, np.shape(v_of_t(0.0))[:-1] + (1,))))
    z[..., 0] = 0.0

    times = np.empty(n_steps + 1)
    recs = []
    fields = [] if keep_fields else None

    def record(k, s, zz):
        t = s if from_s is None else float(from_s(s))
        times[k] = t
        v = np.asarray(v_of_t(t), dtype=float)
        F, W, res = _force_storage_residual(zz, v, xi, geometry, params)
        recs.append((np.broadcast_to(v, zz.shape[:-1] + (1,))[..., 0], F, W, res))
        if keep_fields:
            fields.append(zz.copy())

    s = 0.0
    record(0, s, z)
    for k in range(1, n_steps + 1):
        z = stepper.step(z, s, coef)
        s = k * dt
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite bristle field at step {k}")
        record(k, s, z)

    v_tr = np.array([r[0] for r in recs])
    F_tr = np.array([r[1] for r in recs])
    W_tr = np.array([r[2] for r in recs])
    R_tr = np.array([r[3] for r in recs])
    power = F_tr * v_tr
    dt_col = np.diff(times).reshape((-1,) + (1,) * (power.ndim - 1))
    work = np.concatenate([np.zeros((1,) + power.shape[1:]), np.cumsum(0.5 * (power[1:] + power[:-1]) * dt_col, axis=0)])
    data = dict(t=times, v=v_tr, F_b=F_tr, W=W_tr, residual=R_tr, work=work, dissipated=work - (W_tr - W_tr[0]))
    meta = dict(N=N, dt=dt, scheme=scheme, steps=n_steps)
    if keep_fields:
        meta["fields"] = np.array(fields)
    return Field(xi, z, times[-1]), SimTrace(data, FORCE_SCHEMA, meta)


# oracle


def characteristics_solution(xi, t, z0_func, v_of_t, geometry: ContactGeometry, params: FrictionParams, atol=1e-16, rtol=1e-12):
    """Field value at ``(xi, t)`` by integration along the characteristic line.

    The characteristic through ``(xi, t)`` started either on the boundary at
    time ``t - varpi(xi)`` (from ``z = 0``) or inside the domain at time 0
    (from ``z0_func``). Along it the equation is a scalar linear ODE, solved
    here by adaptive quadrature of its variation-of-constants form.
    ``xi`` may be an array; ``t`` is a scalar.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty_like(xi_arr)
    t = float(t)
    for i, x in enumerate(xi_arr):
        w = float(varpi(x, geometry))
        if t >= w:
            s0, start = t - w, 0.0
        else:
            s0, start = 0.0, float(z0_func(float(varpi_inv(w - t, geometry))))
        if t == s0:
            out[i] = start
            continue

        def position(s, w=w):
            return varpi_inv(w - (t - s), geometry)

        def coef(s):
            return coefficients(position(s), v_of_t(s), geometry, params)[:2]

        out[i] = linear_ode_solution(coef, start, [t], s0=s0, atol=atol, rtol=rtol)[0]
    return out[0] if np.ndim(xi) == 0 else out


# steady state


def stationary_profile(v, geometry: ContactGeometry, params: FrictionParams, N: int = 400, xi=None) -> Field:
    """Stationary field for constant ``v``.

    Uniform coefficients give ``sgn(v) mu/sigma0 (1 - exp(-x xi))`` with
    ``x = sigma0 |v|_eps / (V g)``; otherwise the stationary equation
    ``V z' = -a z + b`` is integrated in ``xi`` from ``z(0) = 0``.
    """
    xi = grid(N) if xi is None else np.asarray(xi, dtype=float)
    v = float(v)
    if geometry.uniform:
        av = fc.abs_eps(v, params.eps)
        m = fc.mu(v, params)
        s0 = geometry.sigma0_at(0.0, params)
        gv = geometry.sigma1_at(0.0, params) * av + m
        x = s0 * av / (geometry.V_at(0.0) * gv)
        z = fc.sgn_eps(v, params.eps) * m / s0 * -np.expm1(-x * xi)
    else:

        def coef(s):
            a, b, _, _ = coefficients(s, v, geometry, params)
            V = geometry.V_at(s)
            return a / V, b / V

        z = linear_ode_solution(coef, 0.0, xi, atol=1e-18, rtol=1e-13)
    return Field(xi, np.asarray(z, dtype=float) + 0.0 * xi, np.inf)


def total_force(field: Field, v, geometry: ContactGeometry, params: FrictionParams):
    """``F_b = int_0^1 L (sbar0 z + sbar2 v) p dxi`` by the trapezoidal rule."""
    _, _, sb0, sb2 = coefficients(field.xi, v, geometry, params)
    f = geometry.L * (sb0 * field.z + sb2 * np.asarray(v, dtype=float)) * geometry.pressure(field.xi)
    return _trapezoid(f, field.xi)


def normal_force(geometry: ContactGeometry) -> float:
    """``F_z = int_0^1 L p dxi``."""
    return geometry.L * geometry.pressure.mean()


def _uniform_terms(v, geometry, params, V):
    if not geometry.uniform:
        raise ValueError("closed-form steady force needs uniform V, sigma0 and sigma1")
    V = geometry.V_at(0.0) if V is None else V
    v = np.asarray(v, dtype=float)
    av = fc.abs_eps(v, params.eps)
    m = fc.mu(v, params)
    s0 = geometry.sigma0_at(0.0, params)
    s1 = geometry.sigma1_at(0.0, params)
    gv = s1 * av + m
    x = s0 * av / (V * gv)
    level = fc.sgn_eps(v, params.eps) * m / s0  # lumped steady deflection
    return x, level, s0 * m / gv, s1 * m / gv, v


def steady_force_constant(v, geometry: ContactGeometry, params: FrictionParams, V=None):
    """Steady force under constant pressure ``p0``.

    ``L p0 [sbar0 sgn(v) mu/sigma0 (x + exp(-x) - 1)/x + sbar2 v]`` with
    ``x = sigma0 |v|_eps / (V g)``.
    """
    if geometry.pressure.shape != "constant":
        raise ValueError("steady_force_constant needs a constant pressure profile")
    x, level, sb0, sb2, v = _uniform_terms(v, geometry, params, V)
    return geometry.L * geometry.pressure.p0 * (sb0 * level * _one_minus_phi1(x) + sb2 * v)


def steady_force_exponential(v, geometry: ContactGeometry, params: FrictionParams, V=None):
    """Steady force under pressure ``p0 exp(-a xi)``.

    ``L p0 [sbar0 sgn(v) mu/sigma0 (phi(a) - phi(a + x)) + sbar2 v phi(a)]``
    with ``phi(y) = (1 - exp(-y))/y``.
    """
    if geometry.pressure.shape != "exponential":
        raise ValueError("steady_force_exponential needs an exponential pressure profile")
    x, level, sb0, sb2, v = _uniform_terms(v, geometry, params, V)
    a = geometry.pressure.a
    pa = _phi1(a)
    # phi(a) - phi(a + x) over a common denominator, free of cancellation in x
    diff = (-x * np.expm1(-a) + a * np.exp(-a) * np.expm1(-x)) / (a * (a + x))
    return geometry.L * geometry.pressure.p0 * (sb0 * level * diff + sb2 * v * pa)


def slip_sweep(slips, geometry: ContactGeometry, params: FrictionParams, method="closed_form", N=400):
    """Normalized steady force ``F_b / F_z`` against slip ``v / (L V)``."""
    if not geometry.uniform:
        raise ValueError("slip sweeps need a uniform transport velocity")
    slips = np.asarray(slips, dtype=float)
    V = float(geometry.V_at(0.0))
    v = slips * geometry.L * V
    if method == "closed_form":
        if geometry.pressure.shape == "constant":
            F = steady_force_constant(v, geometry, params)
        elif geometry.pressure.shape == "exponential":
            F = steady_force_exponential(v, geometry, params)
        else:
            method = "quadrature"
    if method == "quadrature":
        F = np.array([total_force(stationary_profile(vi, geometry, params, N), vi, geometry, params) for vi in v])
    elif method != "closed_form":
        raise ValueError(f"unknown method {method!r}")
    return slips, F / normal_force(geometry)


# passivity


class PassivityVerdict(NamedTuple):
    status: str  # "holds", "holds-strictly" or "fails"
    worst_xi: float
    margin: float  # min over nodes of -d(Sigma0 V)/dxi, scaled by max(Sigma0 V)


def _sigma0_V_slope(xi, geometry, params):
    s0 = geometry.sigma0_at(xi, params) if params is not None else (
        geometry._eval(geometry.sigma0, xi) if geometry.sigma0 is not None else 1.0 + 0.0 * xi
    )
    prod = s0 * geometry.pressure(xi) * geometry.V_at(xi)
    return prod, np.gradient(prod, xi, edge_order=2)


def passivity_condition(geometry: ContactGeometry, params: FrictionParams | None = None, N: int = 400, rtol=1e-9):
    """Check ``d(Sigma0 V)/dxi <= 0`` with ``Sigma0 = sigma0 p``.

    The condition is equivalent to ``dSigma0/dxi <= -(Sigma0/V) dV/dxi`` and
    makes the storage ``(L/2) int Sigma0 z**2`` a valid dissipation
    certificate. A constant sigma0 is used when ``params`` is omitted and the
    geometry has no sigma0 profile (the verdict is independent of its value).
    """
    xi = grid(N)
    prod, slope = _sigma0_V_slope(xi, geometry, params)
    tol = rtol * float(np.max(np.abs(prod)))
    worst = int(np.argmax(slope))
    margin = -float(slope[worst]) / float(np.max(np.abs(prod)))
    if slope[worst] > tol:
        status = "fails"
    elif np.all(slope < -tol):
        status = "holds-strictly"
    else:
        status = "holds"
    return PassivityVerdict(status, float(xi[worst]), margin)


def _force_storage_residual(z, v, xi, geometry, params):
    v = np.asarray(v, dtype=float)
    a, _, sb0, sb2 = coefficients(xi, v, geometry, params)
    p = geometry.pressure(xi)
    L = geometry.L
    s0p = geometry.sigma0_at(xi, params) * p
    F = _trapezoid(L * (sb0 * z + sb2 * v) * p, xi)
    W = 0.5 * L * _trapezoid(s0p * z * z, xi)
    prod = s0p * geometry.V_at(xi)
    dprod = np.gradient(prod, xi, edge_order=2)
    vv = np.broadcast_to(v, z.shape[:-1] + (1,))[..., 0]
    residual = (
        L * _trapezoid(s0p * a * z * z, xi)
        + L * _trapezoid(p * sb2, xi) * vv * vv
        + 0.5 * L * prod[-1] * z[..., -1] ** 2
        - 0.5 * L * _trapezoid(dprod * z * z, xi)
    )
    return F, W, residual


def distributed_storage_and_residual(field: Field, v, geometry: ContactGeometry, params: FrictionParams):
    """Storage ``W = (L/2) int Sigma0 z**2`` and dissipation rate ``F_b v - dW/dt``.

    The rate is evaluated after integrating the transport term by parts:

        L int Sigma0 a z**2 + L int p sbar2 v**2
        + (L/2) Sigma0(1) V(1) z(1)**2 - (L/2) int (Sigma0 V)' z**2,

    every term of which is nonnegative when :func:`passivity_condition` holds.
    """
    _, W, res = _force_storage_residual(np.asarray(field.z, dtype=float), v, field.xi, geometry, params)
    return W, res


# linearization


class DistributedLinearization(NamedTuple):
    xi: np.ndarray
    decay: np.ndarray  # sigma0(xi) |v*|_eps / g(v*, xi)
    H1: np.ndarray
    H2: np.ndarray
    sigma_bar0: np.ndarray
    z_star: np.ndarray


def linearize_distributed(v_star, geometry: ContactGeometry, params: FrictionParams, N: int = 400, xi=None):
    """Coefficient fields of the small-signal model about the stationary profile.

    ``z~_t + V z~_xi = -decay z~ + H1 v~`` and ``mu_b~ = sbar0 z~ + H2 v~``,
    with sigma0 and sigma1 frozen at the operating point.
    """
    xi = grid(N) if xi is None else np.asarray(xi, dtype=float)
    z_star = stationary_profile(v_star, geometry, params, xi=xi).z
    A, H1, sb0, H2 = jacobians(z_star, float(v_star), geometry.local_params(xi, params))
    shape = xi.shape
    return DistributedLinearization(
        xi, np.broadcast_to(-A, shape), np.broadcast_to(H1, shape), np.broadcast_to(H2, shape),
        np.broadcast_to(sb0, shape), z_star,
    )


def simulate_linearized_distributed(
    vtilde_of_t, v_star, geometry: ContactGeometry, params: FrictionParams, t_end, N=400, dt=None, cfl=0.8, keep_fields=False
):
    """Simulate the linearized transport model from rest.

    Returns the final perturbation field and a trace with columns
    ``t, v, F_b`` (perturbations).
    """
    xi = grid(N)
    fine = grid(max(4 * N, 1600))
    lin = linearize_distributed(v_star, geometry, params, xi=fine)

    if geometry.uniform:

        def h1_fn(x):
            return _H1_exact(x, v_star, geometry, params)

    else:

        def h1_fn(x):
            return np.interp(x, fine, lin.H1)

    def coef(x, t):
        return np.interp(x, fine, lin.decay), h1_fn(x) * np.asarray(vtilde_of_t(t), dtype=float)

    vmax = float(np.max(geometry.V_at(xi)))
    if dt is None:
        dt = cfl / (N * vmax)
    n_steps = max(1, int(np.ceil(t_end / dt - 1e-9)))
    dt = t_end / n_steps
    stepper = _SemiLagrangian(xi, dt, geometry)
    on_grid = linearize_distributed(v_star, geometry, params, xi=xi)
    batch = np.shape(vtilde_of_t(0.0))[:-1]
    z = np.zeros(batch + xi.shape)
    p = geometry.pressure(xi)
    times, vs, Fs, fields = [], [], [], []

    def record(t, zz):
        vt = np.asarray(vtilde_of_t(t), dtype=float)
        mu = on_grid.sigma_bar0 * zz + on_grid.H2 * vt
        times.append(t)
        vs.append(np.broadcast_to(vt, zz.shape[:-1] + (1,))[..., 0])
        Fs.append(_trapezoid(geometry.L * mu * p, xi))
        if keep_fields:
            fields.append(zz.copy())

    record(0.0, z)
    for k in range(1, n_steps + 1):
        z = stepper.step(z, (k - 1) * dt, coef)
        record(k * dt, z)
    data = dict(t=np.array(times), v=np.array(vs), F_b=np.array(Fs))
    meta = dict(N=N, dt=dt, steps=n_steps, linearization=on_grid)
    if keep_fields:
        meta["fields"] = np.array(fields)
    return Field(xi, z, times[-1]), SimTrace(data, ("t", "v", "F_b"), meta)


def _H1_exact(x, v_star, geometry, params):
    z_star = stationary_profile(v_star, geometry, params, xi=np.ravel(x)).z.reshape(np.shape(x))
    return jacobians(z_star, float(v_star), geometry.local_params(x, params))[1] + 0.0 * np.asarray(x)


def field_table(field: Field, v, geometry: ContactGeometry, params: FrictionParams):
    """Columns ``t, xi, z, mu_b, f_b`` of a field snapshot."""
    _, _, sb0, sb2 = coefficients(field.xi, v, geometry, params)
    mu_b = sb0 * field.z + sb2 * float(v)
    f_b = geometry.L * mu_b * geometry.pressure(field.xi)
    n = field.xi.size
    return dict(t=np.full(n, field.t), xi=field.xi, z=np.asarray(field.z, float), mu_b=mu_b, f_b=f_b)
