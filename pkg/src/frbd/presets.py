"""Published parameter sets.

``TIRE`` is the rolling-contact set used for steady-state force curves,
``BENCH`` the set used for pre-sliding, frictional-lag and stick-slip runs,
``VALVE`` the diaphragm-valve friction set.
"""

from .friction import FrictionParams

TIRE = FrictionParams(
    mu_d=0.2, mu_s=0.6, v_S=10.0, delta=2.0, sigma2=0.0018, eps=0.0, sigma0=252.0, sigma1=0.0
)
TIRE_CONTACT_LENGTH = 0.1  # m
TIRE_PRESSURE_DECAY = 0.1  # exponential pressure parameter a

BENCH = FrictionParams(
    mu_d=1.0, mu_s=1.5, v_S=0.01, delta=2.0, sigma2=0.04, eps=0.0, sigma0=1e4, sigma1=64.5
)

VALVE = FrictionParams(
    mu_d=39.73, mu_s=59.86, v_S=6.42e-3, delta=2.0, sigma2=2.97e3, eps=0.0, sigma0=6.82e7, sigma1=701.97
)

# stem mass, I/P converter and spring data for the valve plant
VALVE_PLANT = dict(
    m=1.6,
    P_min=41276.40,
    K_P=1666.49,
    tau=0.933,  # ramp test; 0.425 for the sinusoidal test
    S_a=445e-4,
    k=203495.8,
    F0=2578.3,
)
VALVE_TAU_SINUSOID = 0.425

PRESETS = {"tire": TIRE, "bench": BENCH, "valve": VALVE}
