import numpy as np
import pytest

from frbd.checks import RandomSmooth, random_velocity
from frbd.signals import Constant, Ramp, Sinusoid, Table, signal_from_dict
from frbd.trace import SimTrace, atomic_write_text, format_csv


def test_signal_values():
    t = np.array([0.0, 0.25, 1.0])
    np.testing.assert_allclose(Constant(2.0)(t), [2.0, 2.0, 2.0])
    np.testing.assert_allclose(Sinusoid(2.0, 1.0, offset=1.0)(t), [1.0, 3.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(Ramp(10.0, start=0.2, hold=0.5)(t), [0.0, 0.5, 3.0])
    np.testing.assert_allclose(Table([0.0, 1.0], [0.0, 4.0])(np.array([-1.0, 0.5, 2.0])), [0.0, 2.0, 4.0])


def test_signal_validation():
    with pytest.raises(ValueError):
        Ramp(1.0, start=2.0, hold=1.0)
    with pytest.raises(ValueError):
        Table([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="unknown input kind"):
        signal_from_dict({"kind": "chirp"})


@pytest.mark.parametrize("sig", [Constant(1.5), Sinusoid(1.0, 2.0, 0.3, 0.1), Ramp(2.0, 0.1, 0.9), Table([0.0, 1.0], [1.0, 2.0])])
def test_signal_dict_roundtrip(sig):
    again = signal_from_dict(sig.as_dict())
    t = np.linspace(0.0, 1.0, 7)
    np.testing.assert_array_equal(again(t), sig(t))


def test_random_smooth_shapes_and_derivative():
    rng = np.random.default_rng(0)
    v = random_velocity(rng, 4, v_max=2.0)
    assert v(0.3).shape == (4,)
    assert np.all(np.abs(v(np.linspace(0, 5, 101)[:, None])) <= 2.0 + 1e-12)
    col = RandomSmooth(v.c, v.A, v.w, v.phi, column=True)
    assert col(0.3).shape == (4, 1)
    assert col(np.array([0.1, 0.2, 0.3])).shape == (4, 3)
    np.testing.assert_allclose(col(0.3)[:, 0], v(0.3))
    one = random_velocity(rng, v_max=1.0)
    h = 1e-6
    assert one.derivative(0.4) == pytest.approx((one(0.4 + h) - one(0.4 - h)) / (2 * h), rel=1e-6)


def test_offset_velocity_keeps_sign():
    rng = np.random.default_rng(1)
    v = random_velocity(rng, 50, v_max=3.0, offset=2.0)
    t = np.linspace(0.0, 10.0, 501)[:, None]
    assert np.all(v(t) >= 1.0 - 1e-12)


def test_csv_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(2)
    data = {"t": np.linspace(0, 1, 5), "x": rng.normal(size=5), "extra": np.zeros(5)}
    tr = SimTrace(data, ("t", "x"))
    path = tmp_path / "sub" / "trace.csv"
    tr.to_csv(path)
    back = SimTrace.from_csv(path)
    assert back.schema == ("t", "x")
    np.testing.assert_array_equal(back["x"], data["x"])
    assert path.read_text().splitlines()[0] == "t,x"


def test_trace_rejects_missing_columns():
    with pytest.raises(ValueError, match="missing"):
        SimTrace({"t": np.zeros(2)}, ("t", "z"))


def test_format_csv_length_check():
    with pytest.raises(ValueError):
        format_csv(("a", "b"), ([1.0, 2.0], [1.0]))


def test_member_and_state_access():
    z = np.arange(6.0).reshape(3, 2)
    data = {k: z for k in ("z", "zdot", "mu_b", "F_b", "W", "residual")}
    data["t"] = np.array([0.0, 1.0, 2.0])
    tr = SimTrace(data, ("t", "z"))
    assert tr.member(1)["z"].tolist() == [1.0, 3.0, 5.0]
    assert len(tr) == 3
    assert tr.member(0).state_at(2).z == 4.0


def test_atomic_write_leaves_no_temporary(tmp_path):
    atomic_write_text(tmp_path / "a.txt", "hello\n")
    assert (tmp_path / "a.txt").read_text() == "hello\n"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]
