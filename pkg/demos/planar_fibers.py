"""
Fibers and contact points of a planar fast-slow system
======================================================

The layer problem here is x' = (x - 2) f, y' = f with f = y + x^2 - 1.
Its critical manifold is the parabola y = 1 - x^2 and the fibres are
the level sets of y - ln|x - 2|.
"""
import numpy as np

from contactkit import classifier as cl
from contactkit.geomflow import fiber_family, find_contact_point
from contactkit.models import load_model

model = load_model("planar_parabola")

# Two fibres touch the parabola tangentially. Newton on (f, det Df N) finds them.
for guess in ([0.4, 0.84], [1.6, -1.56]):
    z = find_contact_point(model, guess)
    d = cl.classify(model, z)
    print(f"contact at x = {z[0]:.12f}  ->  {d.classification.label}, fold coefficient {d.fold_coefficient:+.6f}")

print("exact: x = (2 -+ sqrt 2)/2 =", (2 - np.sqrt(2)) / 2, (2 + np.sqrt(2)) / 2)

# Away from those points S is normally hyperbolic.
d = cl.classify(model, [0.0, 1.0])
print("at (0, 1):", d.classification.kind, "eigenvalue", d.spectrum.eigenvalues[0])

# Trace a handful of fibres and check the first integral.
seeds = np.column_stack([np.linspace(-1, 1.5, 6), np.zeros(6)])
for seed, tr in zip(seeds, fiber_family(model, seeds, (-2.0, 2.0))):
    inv = tr.states[:, 1] - np.log(np.abs(tr.states[:, 0] - 2))
    crossings = sum(e.kind == "f=0" for e in tr.events)
    print(f"seed {seed}: {len(tr.t):4d} samples, crosses S {crossings}x, drift {np.ptp(inv):.1e}")
