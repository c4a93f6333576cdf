"""Scalar friction-curve machinery shared by the lumped and distributed models.

Every function is a pure numpy expression and broadcasts over its velocity
argument and over array-valued parameter fields, so a batch of trajectories
with different parameters can be evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

__all__ = [
    "FrictionParams",
    "ParameterError",
    "NonDifferentiableError",
    "abs_eps",
    "d_abs_eps",
    "sgn_eps",
    "mu",
    "dmu_dv",
    "g",
    "dg_dv",
    "sigma_bars",
    "d_sigma_bars_dv",
    "friction_force_r",
]


class ParameterError(ValueError):
    """Raised when a parameter record violates its invariants."""

    def __init__(self, name, message):
        super().__init__(f"{name}: {message}")
        self.name = name


class NonDifferentiableError(ValueError):
    """Raised when a derivative is requested at a point where none exists."""


@dataclass(frozen=True)
class FrictionParams:
    """Stribeck curve, viscous, regularization and bristle parameters.

    Parameters
    ----------
    mu_d, mu_s : float
        Dynamic and static friction coefficients, ``mu_s >= mu_d > 0``.
    v_S : float
        Stribeck velocity [m/s].
    delta : float
        Stribeck exponent.
    sigma2 : float
        Viscous coefficient [s/m]; the viscous part of the friction
        coefficient is ``sigma2 * |v|``.
    eps : float
        Regularization of the absolute value [m^2/s^2].
    sigma0 : float
        Normalized micro-stiffness [1/m].
    sigma1 : float
        Normalized micro-damping [s/m].

    Any field may be a numpy array; all functions in this module broadcast.
    """

    mu_d: float
    mu_s: float
    v_S: float
    delta: float
    sigma2: float
    eps: float
    sigma0: float
    sigma1: float

    def __post_init__(self):
        for f in fields(self):
            value = np.asarray(getattr(self, f.name), dtype=float)
            if not np.all(np.isfinite(value)):
                raise ParameterError(f.name, "must be finite")
        if not np.all(np.asarray(self.mu_d) > 0):
            raise ParameterError("mu_d", "must be > 0")
        if not np.all(np.asarray(self.mu_s) >= np.asarray(self.mu_d)):
            raise ParameterError("mu_s", "must satisfy mu_s >= mu_d")
        for name in ("v_S", "delta", "sigma2", "eps", "sigma1"):
            if not np.all(np.asarray(getattr(self, name)) >= 0):
                raise ParameterError(name, "must be >= 0")
        if not np.all(np.asarray(self.sigma0) > 0):
            raise ParameterError("sigma0", "must be > 0")
        # lets the Stribeck term skip the v_S -> 0 limit handling
        object.__setattr__(self, "_vS_positive", bool(np.all(np.asarray(self.v_S) > 0)))

    def replace(self, **changes) -> "FrictionParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


def abs_eps(v, eps):
    """Regularized absolute value ``sqrt(v**2 + eps)``."""
    if not isinstance(v, (np.ndarray, np.floating)):
        v = np.asarray(v, dtype=float)
    # hypot keeps subnormal v from underflowing to zero
    return np.hypot(v, np.sqrt(eps))


def sgn_eps(v, eps):
    """Regularized sign ``v / abs_eps(v, eps)``, with 0 at ``v = 0, eps = 0``."""
    v = np.asarray(v, dtype=float)
    a = abs_eps(v, eps)
    out = np.zeros(np.broadcast(v, a).shape)
    np.divide(v, a, out=out, where=a > 0)
    return out[()] if out.ndim == 0 else out


def d_abs_eps(v, eps):
    """Derivative of :func:`abs_eps` with respect to ``v``."""
    v = np.asarray(v, dtype=float)
    if np.any((v == 0) & (np.asarray(eps) == 0)):
        raise NonDifferentiableError("|v| is not differentiable at v = 0 with eps = 0")
    return sgn_eps(v, eps)


def _stribeck(av, params):
    # exp(-(|v|/v_S)^delta), with the v_S -> 0 limit taken explicitly
    if params._vS_positive:
        return np.exp(-((av / params.v_S) ** params.delta))
    v_S = np.asarray(params.v_S, dtype=float)
    safe = np.where(v_S > 0, v_S, 1.0)
    smooth = np.exp(-((av / safe) ** params.delta))
    return np.where(v_S > 0, smooth, np.where(av == 0, 1.0, 0.0))


def mu(v, params: FrictionParams):
    """Friction coefficient with Stribeck effect and viscous term.

    ``mu_d + (mu_s - mu_d) * exp(-(|v|/v_S)**delta) + sigma2 * |v|``
    """
    av = np.abs(v) if isinstance(v, (np.ndarray, np.floating)) else np.abs(np.asarray(v, dtype=float))
    return params.mu_d + (params.mu_s - params.mu_d) * _stribeck(av, params) + params.sigma2 * av


def dmu_dv(v, params: FrictionParams):
    """Analytic derivative of :func:`mu`.

    The viscous term contributes ``sigma2 * sign(v)`` with ``sign(0) = 0``.
    Raises :class:`NonDifferentiableError` at ``v = 0`` when ``delta < 1``.
    """
    v = np.asarray(v, dtype=float)
    av = np.abs(v)
    delta = np.asarray(params.delta, dtype=float)
    if np.any((av == 0) & (delta < 1) & (np.asarray(params.v_S) > 0)):
        raise NonDifferentiableError("Stribeck term is not differentiable at v = 0 for delta < 1")
    v_S = np.asarray(params.v_S, dtype=float)
    safe = np.where(v_S > 0, v_S, 1.0)
    r = av / safe
    with np.errstate(divide="ignore", invalid="ignore"):
        # d/d|v| of exp(-r^delta) = -exp(-r^delta) * delta * r^(delta-1) / v_S
        slope = -np.exp(-(r**delta)) * delta * np.where(r > 0, r ** (delta - 1), np.where(delta == 1, 1.0, 0.0)) / safe
    slope = np.where(v_S > 0, slope, 0.0)
    return (params.mu_s - params.mu_d) * slope * np.sign(v) + params.sigma2 * np.sign(v)


def g(v, params: FrictionParams):
    """Damping-augmented coefficient ``sigma1 * |v|_eps + mu(v)``."""
    return params.sigma1 * abs_eps(v, params.eps) + mu(v, params)


def dg_dv(v, params: FrictionParams):
    return params.sigma1 * d_abs_eps(v, params.eps) + dmu_dv(v, params)


def sigma_bars(v, params: FrictionParams):
    """Effective stiffness and damping ``(sigma_bar0, sigma_bar2)``.

    The virtual friction coefficient is ``sigma_bar0 * z + sigma_bar2 * v``.
    """
    mv = mu(v, params)
    gv = params.sigma1 * abs_eps(v, params.eps) + mv
    ratio = mv / gv
    # sigma0 * (1 - sigma1 |v|/g) written as sigma0 * mu/g: no cancellation
    return params.sigma0 * ratio, params.sigma1 * ratio


def d_sigma_bars_dv(v, params: FrictionParams):
    """Velocity derivatives of :func:`sigma_bars` for constant sigma0, sigma1."""
    v = np.asarray(v, dtype=float)
    sigma1 = np.asarray(params.sigma1, dtype=float)
    if np.any((v == 0) & (np.asarray(params.eps) == 0) & (sigma1 != 0)):
        raise NonDifferentiableError("sigma_bars are not differentiable at v = 0 with eps = 0")
    a = abs_eps(v, params.eps)
    da = sgn_eps(v, params.eps)
    mv = mu(v, params)
    dm = dmu_dv(v, params)
    gv = sigma1 * a + mv
    dg = sigma1 * da + dm
    ds0 = -params.sigma0 * sigma1 / gv * (da - a / gv * dg)
    ds2 = sigma1 / gv**2 * (gv * dm - mv * dg)
    return ds0, ds2


def friction_force_r(v_s, p, params: FrictionParams):
    """Friction characteristic ``sgn_eps(v_s) * mu(v_s) * p``."""
    return sgn_eps(v_s, params.eps) * mu(v_s, params) * p
