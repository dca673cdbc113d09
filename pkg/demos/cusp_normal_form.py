"""
The cusp normal form
====================

g = x + y z + z^3 with the fast direction along z.  The fold curve is the
parabola (2s^3, -3s^2, s) and it degenerates to a cusp at the origin.
"""
from dataclasses import replace

import numpy as np

from contactkit import classifier as cl
from contactkit.geomflow import continue_contact_curve, find_contact_point
from contactkit.models import load_model

model = load_model("cusp_normal_form")

d = cl.classify(model, np.zeros(3))
print(d.classification.label, "order", d.classification.order, "slow-generic", d.classification.slow_generic)
print("third-order coefficient:", d.cusp_coefficient)
print("C0 =\n", d.C0)

# same thing with finite differences in place of the analytic tensors
fd = replace(model, provider=model.provider.without_analytic())
print("finite-difference coefficient:", cl.classify(fd, np.zeros(3)).cusp_coefficient)

# Follow the fold curve through the cusp.
z0 = find_contact_point(model, [0.1, -0.3, 0.3], fixed={2: 0.3})
branch = continue_contact_curve(model, z0)
print(f"\n{len(branch.points)} branch points, terminated by {branch.termination}")
for p in branch.points[::8]:
    print(f"  s = {p.s:+.4f}  z = {p.z}  {p.label:5s}  a = {p.fold_coefficient:+.6f}  (6z = {6 * p.z[2]:+.6f})")
for e in branch.events:
    print("event:", e.before, "->", e.after, "at", e.z, "label", e.label)
