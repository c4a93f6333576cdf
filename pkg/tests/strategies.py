"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from frbd.friction import FrictionParams

finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def friction_params(draw, eps_zero=False):
    mu_d = draw(st.floats(0.05, 2.0, **finite))
    return FrictionParams(
        mu_d=mu_d,
        mu_s=mu_d * draw(st.floats(1.0, 3.0, **finite)),
        v_S=draw(st.floats(1e-3, 10.0, **finite)),
        delta=draw(st.floats(0.5, 3.0, **finite)),
        sigma2=draw(st.floats(0.0, 1.0, **finite)),
        eps=0.0 if eps_zero else draw(st.floats(0.0, 1e-2, **finite)),
        sigma0=draw(st.floats(1.0, 1e8, **finite)),
        sigma1=draw(st.floats(0.0, 1e3, **finite)),
    )
