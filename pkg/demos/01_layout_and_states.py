"""Network layouts, wrap-around distances, UE dropping, and propagation
states for the suburban macro scenario.

Run:  python3 demos/01_layout_and_states.py
"""

import numpy as np

from fr3sim import (assign_states, build_hex_layout, drop_ues,
                    link_geometry, load_parameter_tables)
from fr3sim.geometry import effective_ue_position, drop_rng

reg = load_parameter_tables()
sma = reg.scenario("SMa")

# 19-site hexagonal grid at the geometrically derived ISD (750 m cell radius)
layout = build_hex_layout(isd=1299.0, h_bs=35.0)
print(f"sites: {layout.n_sites}, ISD = {layout.isd} m")
ring1 = [s for s in layout.sites
         if abs(np.linalg.norm(s.position[:2]) - 1299.0) < 1e-6]
print(f"first ring: {len(ring1)} sites at exactly one ISD")
print(f"wrap translations: {len(layout.wrap_vectors)}, "
      f"|t| = {np.linalg.norm(layout.wrap_vectors[0][:2]):.1f} m "
      f"(= ISD * sqrt(19))")

# a UE far outside the central cluster maps back to a nearby image
far_ue = np.array([5000.0, 1000.0, 1.5])
eff = effective_ue_position(layout.sites[0].position, far_ue,
                            layout.wrap_vectors)
print(f"\nUE at {far_ue[:2]} wraps to {np.round(eff[:2], 1)} "
      f"-> distance {np.linalg.norm(eff[:2]):.1f} m")

# drop UEs: 80 percent indoor, 90/10 residential/commercial building mix,
# heights uniform across the floors of the building type
rng = drop_rng(master_seed=1, drop_index=0)
ues = drop_ues(layout, 2000, sma, rng)
indoor = [u for u in ues if u.indoor]
print(f"\ndropped {len(ues)} UEs, indoor fraction "
      f"{len(indoor) / len(ues):.2f}")
for btype in ("residential", "commercial"):
    hs = sorted({u.height for u in indoor if u.building == btype})
    frac = np.mean([u.building == btype for u in indoor])
    print(f"  {btype:12s} {frac:.2f} of indoor, floor heights {hs}")

# propagation states: LOS draw, O2I model, and indoor depth per link;
# every UE sees its nearest wrap image of the central site
links, near_ues = [], []
site = layout.sites[0]
for u in ues:
    eff = effective_ue_position(site.position, u.position, layout.wrap_vectors)
    g = link_geometry(site.position, eff)
    if g.d2d < 750.0:
        links.append(g)
        near_ues.append(u)
states = assign_states(links, sma, np.random.default_rng(7), ues=near_ues)
los_frac = np.mean([s.los == "LOS" for s in states])
print(f"\nstates for {len(links)} links within one cell radius: "
      f"LOS fraction {los_frac:.2f}")
o2i = {}
for s in states:
    if s.location == "indoor":
        o2i[s.o2i_model] = o2i.get(s.o2i_model, 0) + 1
print(f"O2I model mix among indoor links: {o2i}")
d_in = [s.d2d_in for s in states if s.location == "indoor"]
print(f"indoor depth d2D_in: mean {np.mean(d_in):.1f} m, max {np.max(d_in):.1f} m")
