"""
A three-component relaxation oscillator
=======================================

Here f = y, so the critical manifold is the plane y = 0.  The layer field
N f loses normal hyperbolicity on the line x = 1/alpha2, y = 0, and that
fold line carries cusps where 1 + z^2 = alpha2.
"""
import numpy as np

from contactkit import classifier as cl
from contactkit.geomflow import (continue_contact_curve, desingularized_equilibria, full_equilibrium,
                                 integrate_full)
from contactkit.models import load_model

model = load_model("three_component")
print("parameters:", model.params)

# fold coefficient along the contact line changes sign at z = +-1
for z in (0.0, 0.5, 1.0, 1.5):
    d = cl.classify(model, [0.5, 0.0, z])
    print(f"z = {z:.2f}: {d.classification.label:5s} fold {d.fold_coefficient:+.6f}  cusp {d.cusp_coefficient:+.6f}")

branch = continue_contact_curve(model, [0.5, 0.0, 0.2])
print(f"\ncontinuation: {len(branch.points)} points, z in [{branch.states[:, 2].min():.3f}, "
      f"{branch.states[:, 2].max():.3f}]")
for e in branch.cusps():
    print("  cusp at", e.z, "third-order coefficient", e.cusp_coefficient)

q, spec = desingularized_equilibria(model, [0.4, 0.8, 0.8])
print("\nequilibrium of the reduced flow:", q, "eigenvalues", np.round(spec.eigenvalues, 5))
# eps G does not vanish at q, so the full system's equilibrium sits slightly off it
qe, dist = full_equilibrium(model, q)
print("full-system equilibrium:", qe, f"(distance {dist:.2e} from q)")

# The full system with a small eps relaxes onto a periodic orbit.
tr = integrate_full(model, [0.5198, 1.0205, 1.0205], (0.0, 4000.0))
print(f"\nsimulated to t = {tr.t[-1]:.0f} in {tr.stats['steps']} steps")
print("state range:", tr.states.min(axis=0), tr.states.max(axis=0))
late = tr(np.linspace(3000, 4000, 6)).T
print("late samples:\n", np.round(late, 4))
