"""Adaptive quadrature for scalar linear time-varying ODEs.

Evaluates the variation-of-constants formula

    y(t) = Phi(t, s0) y0 + int_{s0}^{t} Phi(t, s) b(s) ds,
    Phi(t, s) = exp(-int_s^t a(r) dr)

for ``y' = -a(s) y + b(s)`` by nested Gauss-Legendre rules on panels that
are bisected until two successive refinements agree. It never steps the ODE,
so it serves as an independent check on the time integrators.
"""

from __future__ import annotations

import numpy as np

__all__ = ["QuadratureError", "linear_ode_solution"]

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(16)
_U = 0.5 * (_NODES + 1.0)  # nodes on [0, 1]
_W = 0.5 * _WEIGHTS
# largest |int a| over one accepted panel; beyond it every node can sit in
# the underflowed tail of the kernel and the refinements agree on nothing
_MAX_DECAY = 16.0


class QuadratureError(RuntimeError):
    pass


def _panel(coef, s0, s1):
    """Return (int_{s0}^{s1} a, int_{s0}^{s1} exp(-int_s^{s1} a) b(s) ds)."""
    h = s1 - s0
    x = s0 + h * _U
    # exponent at each outer node: int_{s0}^{x_j} a, by a GL rule on [s0, x_j]
    inner = s0 + (x - s0)[:, None] * _U[None, :]
    n = _U.size
    a, b = coef(np.concatenate([inner.ravel(), x]))
    a = np.broadcast_to(np.asarray(a, dtype=float), (n * n + n,))
    b = np.broadcast_to(np.asarray(b, dtype=float), (n * n + n,))
    cum = (x - s0) * (a[: n * n].reshape(n, n) @ _W)
    total = h * float(np.dot(_W, a[n * n :]))
    forcing = h * float(np.dot(_W, np.exp(-(total - cum)) * b[n * n :]))
    return total, forcing


def _adaptive_panel(coef, s0, s1, atol, rtol, yscale, min_width, whole=None):
    if whole is None:
        whole = _panel(coef, s0, s1)
    mid = 0.5 * (s0 + s1)
    left = _panel(coef, s0, mid)
    right = _panel(coef, mid, s1)
    split = (left[0] + right[0], np.exp(-right[0]) * left[1] + right[1])
    scale = max(yscale, abs(split[1]))
    err = abs(split[1] - whole[1]) + abs(split[0] - whole[0]) * scale
    tol = atol + rtol * scale
    if err <= tol and abs(whole[0]) <= _MAX_DECAY:
        return split
    if (s1 - s0) <= min_width:
        if err > 1e3 * tol:
            raise QuadratureError(f"no convergence on [{s0:.6g}, {s1:.6g}] (error {err:.3g})")
        return split
    lt = _adaptive_panel(coef, s0, mid, atol, rtol, yscale, min_width, left)
    rt = _adaptive_panel(coef, mid, s1, atol, rtol, yscale, min_width, right)
    return lt[0] + rt[0], np.exp(-rt[0]) * lt[1] + rt[1]


def linear_ode_solution(coef, y0, s_out, s0=0.0, atol=1e-15, rtol=1e-12, max_panel=None):
    """Solution of ``y' = -a(s) y + b(s)``, ``y(s0) = y0``, at sorted ``s_out``.

    Parameters
    ----------
    coef : callable
        ``coef(s) -> (a(s), b(s))``, vectorized over a 1-D array ``s``.
    y0 : float
    s_out : array_like
        Sorted output abscissae, all ``>= s0``.
    atol, rtol : float
        Per-panel tolerance ``atol + rtol * |y|`` on the refinement difference.
    max_panel : float, optional
        Upper bound on the initial panel width.
    """
    s_out = np.atleast_1d(np.asarray(s_out, dtype=float))
    if np.any(np.diff(s_out) < 0) or (s_out.size and s_out[0] < s0):
        raise ValueError("s_out must be sorted and >= s0")
    span = (s_out[-1] - s0) if s_out.size else 0.0
    min_width = max(span, 1.0) * 1e-12
    out = np.empty_like(s_out)
    y, s = float(y0), float(s0)
    for i, target in enumerate(s_out):
        if target > s:
            n = 1 if max_panel is None else max(1, int(np.ceil((target - s) / max_panel)))
            edges = np.linspace(s, target, n + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                total, forcing = _adaptive_panel(coef, lo, hi, atol, rtol, abs(y), min_width)
                y = np.exp(-total) * y + forcing
            s = target
        out[i] = y
    return out
