"""Large-scale fading: dual-slope SMa path loss, material penetration, and
the three O2I building models.

Run:  python3 demos/02_path_loss_and_penetration.py
"""

import numpy as np

from fr3sim import (breakpoint_distance, load_parameter_tables, material_loss,
                    o2i_penetration, path_loss)
from fr3sim.geometry import LinkGeometry
from fr3sim.scenario import PropagationState

reg = load_parameter_tables()
sma = reg.scenario("SMa")

fc = 7.0
dbp = breakpoint_distance("rma_dual", 35.0, 1.5, fc)
print(f"SMa breakpoint distance at {fc} GHz: {dbp:.1f} m")
print("\n  d2D [m]    LOS [dB]   NLOS [dB]")
for d in (50, 100, 300, 1000, 3000, 5000):
    g = LinkGeometry(d2d=d, d3d=float(np.hypot(d, 33.5)), h_bs=35, h_ue=1.5,
                     aod_az=0, aoa_az=180, zod=95, zoa=85)
    pl_los = path_loss(sma, g, PropagationState("LOS", "outdoor"), fc)
    pl_nlos = path_loss(sma, g, PropagationState("NLOS", "outdoor"), fc)
    print(f"  {d:7d}    {pl_los:8.2f}   {pl_nlos:8.2f}")

print("\nmaterial penetration loss [dB]")
print("  fc [GHz]   glass  IRR-glass  concrete   wood  plywood")
for fc_i in (2, 7, 10, 15, 24):
    row = [material_loss(reg.materials, m, fc_i)
           for m in ("glass", "IRR-glass", "concrete", "wood", "plywood")]
    print(f"  {fc_i:8.0f}   " + "  ".join(f"{v:7.2f}" for v in row))

print("\nO2I building penetration at 7 GHz, d2D_in = 10 m "
      "(through-wall + indoor, random part excluded)")
rng = np.random.default_rng(0)
for model in ("low", "high", "low-A"):
    tw, pin, _ = o2i_penetration(reg.materials, model, 7.0, 10.0, rng)
    print(f"  {model:6s}  PL_tw = {tw:6.2f} dB   PL_in = {pin:4.1f} dB")
print("the low-A model substitutes plywood for concrete, matching the "
      "lighter external walls of suburban housing")
