"""Steady friction against slip for a rolling contact patch.

Run with ``python3 demos/tire_sweep.py``. Compares the closed-form steady
force with a quadrature over the stationary bristle profile and prints
where the friction peak sits for each pressure shape.
"""

import numpy as np

from frbd import TIRE, ContactGeometry, PressureProfile, slip_sweep
from frbd.presets import TIRE_CONTACT_LENGTH, TIRE_PRESSURE_DECAY

slips = np.linspace(0.0, 1.0, 201)[1:]
shapes = {
    "constant": PressureProfile("constant"),
    "exponential": PressureProfile("exponential", a=TIRE_PRESSURE_DECAY),
}
for name, profile in shapes.items():
    geom = ContactGeometry(TIRE_CONTACT_LENGTH, profile, V=300.0)
    _, mu_closed = slip_sweep(slips, geom, TIRE)
    _, mu_quad = slip_sweep(slips[::20], geom, TIRE, method="quadrature")
    k = int(np.argmax(mu_closed))
    gap = np.max(np.abs(mu_closed[::20] - mu_quad))
    print(f"{name:12s} peak {mu_closed[k]:.4f} at slip {slips[k]:.3f}, "
          f"value at slip 1 {mu_closed[-1]:.4f}, closed form vs quadrature {gap:.1e}")
