"""
Mitotic oscillator on the faces of the unit cube
================================================

Each face of [0,1]^3 is a piece of the critical manifold.  On every face the
fold line carries a cusp.
"""
import numpy as np

from contactkit import classifier as cl
from contactkit.geomflow import continue_contact_curve, integrate_full
from contactkit.models import load_model

points = {"X=0": (0, 0.7, 0.5), "X=1": (1, 0.7, 0.5), "M=0": (0.5, 0, 0.5), "M=1": (0.5, 1, 0.5)}
for face, z in points.items():
    model = load_model("mitotic", face=face)
    d = cl.classify(model, z)
    print(f"{face}: {d.classification.label} at {z}, third-order {d.cusp_coefficient:.6f}, C0 rank {d.C0_rank}")

face = load_model("mitotic", face="X=0")
Cs = np.linspace(0.1, 0.9, 5)
print("\nfold coefficient along M = 0.7 on X = 0:")
for C in Cs:
    print(f"  C = {C:.1f}: {cl.fold_test(face, [0, 0.7, C]).coefficient:+.6f}")

branch = continue_contact_curve(face, [0, 0.7, 0.2])
print("cusps found by continuation:", [e.z.round(8).tolist() for e in branch.cusps()])

full = load_model("mitotic")
tr = integrate_full(full, [0.5, 0.5, 0.5], (0.0, 20000.0))
print(f"\nfull system, eps = {full.eps}: {tr.stats['steps']} steps")
print("bounding box:", tr.states.min(axis=0).round(4), tr.states.max(axis=0).round(4))
