"""Explicit Runge-Kutta integrators for (batched) ODE systems.

Two methods are provided: a fixed-step classical RK4, and the Dormand-Prince
5(4) embedded pair with step-size control in the max norm. States may have
any shape; with ``batch_axis=0`` each leading-axis row is an independent
trajectory, and a row that blows up is retired (filled with NaN) instead of
aborting the whole batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["IntegratorConfig", "IntegrationError", "Solution", "solve"]


class IntegrationError(RuntimeError):
    """Step-size underflow or non-finite state."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (t = {t:.6g} s)")
        self.t = t


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``dt`` is the fixed step for ``rk4_fixed`` and the initial step for
    ``rk45_adaptive``.
    """

    method: str = "rk45_adaptive"
    dt: float = 1e-4
    rtol: float = 1e-8
    atol: float = 1e-10
    t_end: float = 1.0
    max_step: float = math.inf
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be > 0")
        if not self.t_end >= 0:
            raise ValueError("t_end must be >= 0")
        if not self.max_step > 0:
            raise ValueError("max_step must be > 0")


@dataclass
class Solution:
    t: np.ndarray
    y: np.ndarray  # shape (len(t), *state_shape)
    failed: np.ndarray | None  # per batch row, when batched
    nfev: int
    nsteps: int
    nrejected: int


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# continuous extension: y(t + th h) = y + h * sum_i k_i * (P[i] @ [th, th^2, th^3, th^4])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])


def _combine(y, h, coeffs, ks):
    acc = y
    for c, k in zip(coeffs, ks):
        if c != 0.0:
            acc = acc + (h * c) * k
    return acc


def _row_max(arr, batch_axis):
    axes = tuple(i for i in range(arr.ndim) if i != batch_axis)
    return arr.max(axis=axes) if axes else arr


def solve(fun, y0, cfg: IntegratorConfig, t_eval=None, t0=0.0, batch_axis=None, dense=True) -> Solution:
    """Integrate ``dy/dt = fun(t, y)`` from ``t0`` to ``cfg.t_end``.

    Parameters
    ----------
    fun : callable
        ``fun(t, y) -> dy`` with ``dy.shape == y.shape``.
    y0 : array_like
        Initial state.
    cfg : IntegratorConfig
    t_eval : array_like, optional
        Output times (sorted, within ``[t0, t_end]``). Default: every
        accepted step.
    batch_axis : int, optional
        Axis indexing independent trajectories.
    dense : bool
        Fill ``t_eval`` from the 4th-order continuous extension of the
        Dormand-Prince pair (default). With ``False`` steps are shortened to
        land on every output time.
    """
    y = np.array(y0, dtype=float)
    t_end = float(cfg.t_end)
    if t_eval is not None:
        t_eval = np.asarray(t_eval, dtype=float)
        if np.any(np.diff(t_eval) < 0) or (t_eval.size and (t_eval[0] < t0 or t_eval[-1] > t_end * (1 + 1e-12) + 1e-300)):
            raise ValueError("t_eval must be sorted and lie within [t0, t_end]")
        t_eval = np.minimum(t_eval, t_end)
    if cfg.method == "rk4_fixed":
        return _solve_rk4(fun, y, t0, t_end, cfg, t_eval, batch_axis)
    return _solve_dopri(fun, y, t0, t_end, cfg, t_eval, batch_axis, dense)


def _solve_rk4(fun, y, t0, t_end, cfg, t_eval, batch_axis):
    if t_eval is None:
        n = max(1, int(math.ceil((t_end - t0) / cfg.dt - 1e-9)))
        marks = np.linspace(t0, t_end, n + 1)
    else:
        marks = np.unique(np.concatenate([[t0], t_eval]))
    ts, ys = [t0], [y.copy()]
    nfev = 0
    t = t0
    for t_next in marks[1:]:
        span = t_next - t
        n = max(1, int(math.ceil(span / cfg.dt - 1e-9)))
        h = span / n
        for i in range(n):
            ti = t + i * h
            k1 = fun(ti, y)
            k2 = fun(ti + h / 2, y + (h / 2) * k1)
            k3 = fun(ti + h / 2, y + (h / 2) * k2)
            k4 = fun(ti + h, y + h * k3)
            y = y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            nfev += 4
        t = t_next
        if batch_axis is None and not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", t)
        ts.append(t)
        ys.append(y.copy())
    t_arr, y_arr = np.array(ts), np.array(ys)
    failed = None
    if batch_axis is not None:
        failed = _row_max(~np.isfinite(y_arr[-1]), batch_axis).astype(bool)
    if t_eval is not None:
        keep = np.searchsorted(t_arr, t_eval)
        t_arr, y_arr = t_arr[keep], y_arr[keep]
    return Solution(t_arr, y_arr, failed, nfev, len(marks) - 1, 0)


def _interpolate(y, h, ks, theta):
    powers = np.cumprod(np.full(4, theta))
    coeffs = _P @ powers
    return _combine(y, h, coeffs, ks)


def _solve_dopri(fun, y, t0, t_end, cfg, t_eval, batch_axis, dense=True):
    rtol, atol = cfg.rtol, cfg.atol
    span = t_end - t0
    min_step = 16 * np.spacing(max(abs(t0), abs(t_end), 1.0))
    h = min(cfg.dt, cfg.max_step, span) if span > 0 else 0.0
    failed = None
    if batch_axis is not None:
        failed = np.zeros(y.shape[batch_axis], dtype=bool)

    def expand(mask):
        shape = [1] * y.ndim
        shape[batch_axis] = mask.size
        return mask.reshape(shape)

    t = t0
    ts, ys = [], []
    if t_eval is None or (t_eval.size and t_eval[0] == t0):
        ts.append(t0)
        ys.append(y.copy())
    eval_idx = len(ts) if t_eval is not None else 0
    k1 = fun(t, y)
    nfev, nsteps, nrej = 1, 0, 0
    while t < t_end and span > 0:
        if nsteps >= cfg.max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        target = t_end
        if t_eval is not None and not dense and eval_idx < t_eval.size:
            target = min(target, t_eval[eval_idx])
        h = min(h, cfg.max_step)
        landing = False
        if t + h >= target - min_step:
            h = target - t
            landing = True
        ks = [k1]
        for s in range(1, 7):
            ys_ = _combine(y, h, _A[s], ks)
            ks.append(fun(t + _C[s] * h, ys_))
        nfev += 6
        y_new = ys_  # FSAL: stage 7 is evaluated at the 5th-order solution
        err = _combine(np.zeros_like(y), h, _E, ks)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = np.abs(err) / scale
        finite = np.isfinite(ratio) & np.isfinite(y_new)
        if batch_axis is not None:
            dead = expand(failed)
            live_ratio = np.where(finite, ratio, np.inf)
            row_err = _row_max(np.where(dead, 0.0, live_ratio), batch_axis)
            err_norm = float(row_err.max()) if row_err.size else 0.0
        else:
            err_norm = float(np.max(np.where(finite, ratio, np.inf))) if ratio.size else 0.0
        if err_norm <= 1.0:
            t_old, y_old = t, y
            t = target if landing else t + h
            y = y_new
            if t_eval is not None and dense:
                while eval_idx < t_eval.size and t_eval[eval_idx] <= t:
                    te = t_eval[eval_idx]
                    ts.append(te)
                    ys.append(y.copy() if te == t else _interpolate(y_old, h, ks, (te - t_old) / h))
                    eval_idx += 1
            k1 = ks[6]
            nsteps += 1
            if t_eval is None:
                ts.append(t)
                ys.append(y.copy())
            elif not dense and landing and eval_idx < t_eval.size and t == t_eval[eval_idx]:
                while eval_idx < t_eval.size and t_eval[eval_idx] == t:
                    ts.append(t)
                    ys.append(y.copy())
                    eval_idx += 1
            fac = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
            h = h * fac
        else:
            nrej += 1
            if h <= min_step:
                if batch_axis is not None:
                    bad_rows = (row_err > 1.0) & ~failed
                    if np.any(bad_rows) and not np.all(bad_rows | failed):
                        # retire the rows that cannot be advanced and retry
                        failed |= bad_rows
                        y = np.where(expand(failed), np.nan, y)
                        k1 = np.where(expand(failed), 0.0, k1)
                        h = cfg.dt
                        continue
                if not np.all(np.isfinite(y_new)):
                    raise IntegrationError("non-finite state (NaN/inf in trial step)", t)
                raise IntegrationError("step size underflow", t)
            if np.isfinite(err_norm):
                h = h * max(0.1, 0.9 * err_norm ** -0.2)
            else:
                h = h * 0.1
        if batch_axis is not None and np.any(failed):
            y = np.where(expand(failed), np.nan, y)
            k1 = np.where(expand(failed), 0.0, k1)
    if span == 0:
        ts, ys = [t0], [y.copy()]
        if t_eval is not None:
            ts, ys = [t0] * t_eval.size, [y.copy()] * t_eval.size
    return Solution(np.array(ts), np.array(ys), failed, nfev, nsteps, nrej)
