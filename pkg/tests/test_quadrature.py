import numpy as np
import pytest
from scipy.integrate import quad

from frbd.quadrature import linear_ode_solution


def test_constant_coefficients():
    s = np.linspace(0.0, 3.0, 7)
    y = linear_ode_solution(lambda x: (2.0 + 0 * x, 4.0 + 0 * x), 0.5, s)
    np.testing.assert_allclose(y, 2.0 + (0.5 - 2.0) * np.exp(-2.0 * s), rtol=1e-13)


def test_time_varying_against_nested_reference_quadrature():
    a = lambda s: 1.0 + 0.5 * np.sin(3 * s)
    b = lambda s: np.cos(s)
    A = lambda s: s + (1 - np.cos(3 * s)) / 6.0  # int_0^s a
    t = 2.5
    ref = np.exp(-A(t)) * (0.2 + quad(lambda r: np.exp(A(r)) * b(r), 0.0, t, epsabs=1e-14, epsrel=1e-13)[0])
    got = linear_ode_solution(lambda s: (a(s), b(s)), 0.2, [t])[0]
    assert got == pytest.approx(ref, rel=1e-11)


def test_stiff_relaxation_tracks_quasi_steady_state():
    # a = 1e5: y follows b/a closely after a short transient
    got = linear_ode_solution(lambda s: (1e5 + 0 * s, 1e5 * np.sin(s)), 0.0, [1.0])[0]
    expected = (np.sin(1.0) - 1e-5 * np.cos(1.0)) / (1 + 1e-10)
    assert got == pytest.approx(expected, rel=1e-9)


def test_start_offset_and_repeated_outputs():
    y = linear_ode_solution(lambda s: (1.0 + 0 * s, 0 * s), 1.0, [1.0, 1.0, 2.0], s0=1.0)
    np.testing.assert_allclose(y, [1.0, 1.0, np.exp(-1.0)], rtol=1e-14)


def test_unsorted_outputs_rejected():
    with pytest.raises(ValueError):
        linear_ode_solution(lambda s: (s, s), 0.0, [1.0, 0.5])
    with pytest.raises(ValueError):
        linear_ode_solution(lambda s: (s, s), 0.0, [0.5], s0=1.0)
