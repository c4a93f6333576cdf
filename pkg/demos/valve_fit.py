"""Identify a friction parameter of a pneumatic valve from a step response.

Run with ``python3 demos/valve_fit.py``. A synthetic stem trajectory is
generated with known parameters, then the genetic search recovers
``sigma1`` from it with a small evaluation budget.
"""

import numpy as np

from frbd import VALVE, CalibrationProblem, GAConfig, IntegratorConfig, Ramp, ValveParams, fit
from frbd.calibration import synthetic_reference
from frbd.presets import VALVE_PLANT

plant = ValveParams(**VALVE_PLANT)
op = Ramp(rate=20.0, start=0.2, hold=1.2)
t = np.linspace(0.0, 2.0, 101)
cfg = IntegratorConfig(t_end=2.0)
bounds = {"sigma1": (0.5 * VALVE.sigma1, 2.0 * VALVE.sigma1)}
start = VALVE.replace(sigma1=1.5 * VALVE.sigma1)

template = CalibrationProblem(plant, op, t, np.zeros_like(t), bounds, start, cfg=cfg)
x_ref = synthetic_reference(template, VALVE)
problem = CalibrationProblem(plant, op, t, x_ref, bounds, start, cfg=cfg)
result = fit(problem, budget=300, seed=1, ga=GAConfig(population=20))
print(f"true sigma1 {VALVE.sigma1:.2f}, fitted {result.best_values['sigma1']:.2f} "
      f"after {result.evaluations} evaluations, objective {result.history[-1]:.3e}")
