"""Rate-dependent bristle friction models: lumped and distributed FrBD,
LuGre and Dahl references, plant simulators, passivity and stability
checks, linearization and parameter calibration."""

from .calibration import CalibrationProblem, FitResult, GAConfig, fit
from .distributed import (
    ContactGeometry,
    Field,
    PressureProfile,
    characteristics_solution,
    passivity_condition,
    simulate_pde,
    slip_sweep,
    stationary_profile,
    steady_force_constant,
    steady_force_exponential,
)
from .friction import FrictionParams, ParameterError, g, mu, sigma_bars
from .integrators import IntegrationError, IntegratorConfig
from .lumped import ModelKind, closed_form_solution, integrate, linearize, passivity_residual, rhs, steady_state
from .presets import BENCH, PRESETS, TIRE, VALVE
from .signals import Constant, Ramp, Sinusoid, Table
from .systems import MassSpringParams, ValveParams, simulate_friction_lag, simulate_presliding, simulate_stickslip, simulate_valve
from .trace import SimTrace

__version__ = "0.1.0"
