"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``criterion N: PASS/FAIL`` line (also collected into the
terminal summary) before asserting.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest
import sympy as sp

from conftest import ACCEPTANCE_LINES
from contactkit import classifier as cl
from contactkit import derivatives as dv
from contactkit.errors import ProjectionError
from contactkit.geomflow import (continue_contact_curve, fiber_family, find_contact_point, integrate_full,
                                 project_to_S)
from contactkit.models import conjugate_affine, eval_layer, load_model, zoo


def report(n, checks):
    """``checks`` maps a short description to a bool; prints one line per criterion."""
    failed = [k for k, ok in checks.items() if not ok]
    line = f"criterion {n}: {'PASS' if not failed else 'FAIL'}"
    if failed:
        line += " (" + "; ".join(failed) + ")"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def fd_only(model):
    return replace(model, provider=model.provider.without_analytic())


# ---------------------------------------------------------------------------


def test_criterion_01_planar_contact_points():
    t0 = time.perf_counter()
    m = load_model("planar_parabola")
    checks = {}
    for sign, seed in ((-1, 0.4), (1, 1.6)):
        z = find_contact_point(m, [seed, 1 - seed * seed])
        x = (2 + sign * math.sqrt(2)) / 2
        checks[f"x = {x:.6f} located"] = abs(z[0] - x) <= 1e-10 and abs(z[1] - (1 - x * x)) <= 1e-10
        c = cl.classify(m, z).classification
        checks[f"x = {x:.6f} contact order 1"] = c.kind == "contact" and c.order == 1
    d = cl.classify(m, [0.0, 1.0])
    checks["(0,1) normally hyperbolic"] = d.classification.kind == "normally_hyperbolic"
    lam = d.spectrum.eigenvalues[0]
    checks["(0,1) eigenvalue 1"] = abs(lam - 1.0) <= 1e-10
    elapsed = time.perf_counter() - t0
    checks[f"runtime {elapsed:.3f}s < 1s"] = elapsed < 1.0
    report(1, checks)


def test_criterion_02_cusp_normal_form():
    m = load_model("cusp_normal_form")
    checks = {}
    d = cl.classify(m, np.zeros(3))
    c = d.classification
    checks["origin order 2 slow-generic"] = c.kind == "contact" and c.order == 2 and c.slow_generic
    checks["third-order 6 (analytic)"] = abs(d.cusp_coefficient - 6.0) <= 1e-8
    d_fd = cl.classify(fd_only(m), np.zeros(3))
    checks["third-order 6 (FD chain)"] = abs(d_fd.cusp_coefficient - 6.0) <= 6e-3
    checks["C0 = [[1,0,0],[0,1,0]]"] = np.max(np.abs(d.C0 - [[1, 0, 0], [0, 1, 0]])) <= 1e-8
    z0 = find_contact_point(m, [0.1, -0.3, 0.3], fixed={2: 0.3})
    b = continue_contact_curve(m, z0)
    sampled = [p for p in b.points if 1e-3 <= abs(p.z[2]) <= 0.5]
    checks["branch covers |z| in [1e-3, 0.5]"] = (len(sampled) > 10 and min(p.z[2] for p in sampled) < -0.4
                                                  and max(p.z[2] for p in sampled) > 0.4)
    checks["branch points are folds with coefficient 6z"] = all(
        p.label == "fold" and abs(p.fold_coefficient - 6 * p.z[2]) <= 1e-6 for p in sampled)
    report(2, checks)


def _rows_match_up_to_scale(A, B, tol=1e-8):
    if A.shape != B.shape:
        return False
    for a, b in zip(A, B):
        a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
        if min(np.max(np.abs(a - b)), np.max(np.abs(a + b))) > tol:
            return False
    return True


def test_criterion_03_three_component():
    m = load_model("three_component")
    a1, a2 = 0.2, 2.0
    checks = {}
    d = cl.classify(m, [0.5, 0.0, 1.0])
    checks["K is a contact cusp"] = d.classification.is_cusp
    checks["third-order 0.04"] = abs(d.cusp_coefficient - 0.04) <= 1e-8
    checks["C0 rank 2"] = d.C0_rank == 2
    checks["C0 rows ~ [[0,1,0],[2,0,0]]"] = _rows_match_up_to_scale(d.C0, np.array([[0, 1.0, 0], [2.0, 0, 0]]))
    zs = np.linspace(0.05, 1.95, 20)
    errs = [abs(cl.fold_test(m, [0.5, 0.0, z]).coefficient - a1 * (a2 - (1 + z * z)) / (1 + z * z)) for z in zs]
    checks["fold coefficient along F (20 z)"] = max(errs) <= 1e-8
    checks["K- at z = -1 detected"] = cl.classify(m, [0.5, 0.0, -1.0]).classification.is_cusp
    b = continue_contact_curve(m, [0.5, 0.0, 0.2])
    checks["branch reaches z = 1.5"] = b.states[:, 2].max() >= 1.5
    physical = [e for e in b.cusps() if e.z[2] >= 0]
    checks["exactly one cusp, at z = 1"] = len(physical) == 1 and abs(physical[0].z[2] - 1.0) <= 1e-6
    report(3, checks)


@pytest.mark.xfail(strict=True, reason="the stated third-order value 0.063 disagrees with the exact "
                   "chain value 63/1600 = 0.039375 of this factorization")
def test_criterion_04_mitotic():
    models = {f: load_model("mitotic", face=f) for f in ("X=0", "X=1", "M=0", "M=1")}
    m = models["X=0"]
    checks = {}
    d = cl.classify(m, [0.0, 0.7, 0.5])
    checks["(0,0.7,0.5) is a cusp"] = d.classification.is_cusp
    checks[f"third-order 0.063 (computed {d.cusp_coefficient:.9g})"] = abs(d.cusp_coefficient - 0.063) <= 1e-8
    checks["C0 entries +-0.21"] = np.max(np.abs(np.abs(d.C0) - [[0.21, 0, 0], [0, 0.21, 0]])) <= 1e-8
    Cs = np.linspace(0.02, 0.98, 20)
    errs = [abs(cl.fold_test(m, [0.0, 0.7, C]).coefficient - 63 / 200 * (2 * C - 1) / (2 * C + 1)) for C in Cs]
    checks["fold coefficient along F (20 C)"] = max(errs) <= 1e-8
    for face, z in (("X=1", (1, 0.7, 0.5)), ("M=0", (0.5, 0, 0.5)), ("M=1", (0.5, 1, 0.5))):
        checks[f"cusp {z} on face {face}"] = cl.classify(models[face], z).classification.is_cusp
    report(4, checks)


def _random_points_on_S(model, count, rng):
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    pts = []
    while len(pts) < count:
        try:
            z = project_to_S(model, lo + (hi - lo) * rng.random(model.n))
        except ProjectionError:
            continue
        pts.append(z)
    return pts


def _fd_layer_jacobian(model, z):
    h = 1e-6 * np.maximum(1.0, np.abs(z))
    cols = []
    for i in range(model.n):
        e = np.zeros(model.n)
        e[i] = h[i]
        cols.append((eval_layer(model, z + e) - eval_layer(model, z - e)) / (2 * h[i]))
    return np.column_stack(cols)


def _spectra_agree(J, A, k):
    lam = list(np.linalg.eigvals(J))
    for mu in np.linalg.eigvals(A):
        i = int(np.argmin([abs(x - mu) for x in lam]))
        if abs(lam[i] - mu) > 1e-6 * max(1.0, abs(mu)):
            return False
        lam.pop(i)
    scale = max(1.0, float(np.max(np.abs(J))))
    return len(lam) == k and all(abs(x) <= 1e-6 * scale for x in lam)


def test_criterion_05_eigenvalue_equality():
    rng = np.random.default_rng(5)
    checks = {}
    for model in zoo():
        failures = 0
        for z in _random_points_on_S(model, 200, rng):
            A = dv.jacobian_f(model.provider, z) @ model.N(z)
            failures += not _spectra_agree(_fd_layer_jacobian(model, z), A, model.k)
        checks[f"{model.name}: {failures}/200 failures"] = failures == 0
    report(5, checks)


def _random_affine(rng, n, max_cond=50.0):
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    s = np.exp(rng.uniform(-0.5, 0.5, n) * math.log(max_cond))
    A = U @ np.diag(s) @ V.T
    assert np.linalg.cond(A) <= max_cond * (1 + 1e-9)
    return A, rng.uniform(-1, 1, n)


def test_criterion_06_coordinate_invariance():
    rng = np.random.default_rng(6)
    models = zoo() + [load_model("mitotic", face=f) for f in ("X=1", "M=0", "M=1")]
    checks = {}
    for model in models:
        for kp in model.known.points:
            z0 = np.array(kp.point, dtype=float)
            ref = cl.classify(model, z0).classification
            failures = 0
            for _ in range(50):
                A, b = _random_affine(rng, model.n)
                t = conjugate_affine(model, A, b)
                w0 = np.linalg.solve(A, z0 - b)
                failures += not cl.classify(t, w0).classification.same_verdict(ref)
            checks[f"{model.name}{'/' + model.face if model.face else ''} {kp.label}: {failures}/50"] = failures == 0
    report(6, checks)


def test_criterion_07_standard_form():
    checks = {}
    rng = np.random.default_rng(7)
    for c in range(1, 5):
        m = load_model(f"ac_family({c})")
        d = cl.classify(m, np.zeros(c + 1))
        cls = d.classification
        checks[f"c={c}: order {c}, slow-generic"] = cls.kind == "contact" and cls.order == c and cls.slow_generic
        # independent oracle: pure x-partials of the normal form
        zs = sp.symbols(f"z1:{c + 1}")
        x = sp.Symbol("x")
        g = x ** (c + 1) + zs[0] + sum(zs[i] * x**i for i in range(1, c))
        gxx = sp.lambdify((*zs, x), sp.diff(g, x, 2))
        gxxx = sp.lambdify((*zs, x), sp.diff(g, x, 3))
        points = [np.zeros(c + 1)] + [rng.uniform(-1, 1, c + 1) for _ in range(5)]
        worst = 0.0
        for z in points:
            ch = dv.chain_values(m.provider, z, np.ones(1), np.ones(1), j_max=3).projected
            worst = max(worst, abs(ch[2] - gxx(*z)), abs(ch[3] - gxxx(*z)))
        checks[f"c={c}: coefficients = pure partials"] = worst <= 1e-10
        checks[f"c={c}: fold_test at origin"] = abs(cl.fold_test(m, np.zeros(c + 1)).coefficient
                                                    - gxx(*np.zeros(c + 1))) <= 1e-10
        if c >= 2:
            rep = cl.cusp_test(m, np.zeros(c + 1))
            checks[f"c={c}: cusp_test at origin"] = abs(rep.third_order_coefficient - gxxx(*np.zeros(c + 1))) <= 1e-10
    report(7, checks)


def test_criterion_08_fiber_first_integral():
    m = load_model("planar_parabola")
    rng = np.random.default_rng(8)
    seeds = []
    while len(seeds) < 50:
        s = rng.uniform(-3, 3, 2)
        if abs(s[0] - 2) > 0.1:
            seeds.append(s)
    drift = 0.0
    for tr in fiber_family(m, seeds, (-2.0, 2.0)):
        inv = tr.states[:, 1] - np.log(np.abs(tr.states[:, 0] - 2))
        drift = max(drift, float(np.ptp(inv)))
    report(8, {f"max drift {drift:.2e} <= 1e-6": drift <= 1e-6})


def _recurs(tr, t_grid, radius=0.05, excursion=0.5):
    Z = tr(t_grid).T
    for i in range(0, len(Z) // 2, 5):
        d = np.max(np.abs(Z[i + 1:] - Z[i]), axis=1)
        far = np.flatnonzero(d > excursion)
        if far.size == 0:
            continue
        back = np.flatnonzero(d[far[0]:] <= radius)
        if back.size:
            return True
    return False


def test_criterion_09_trajectories():
    checks = {}
    three = load_model("three_component")
    tr = integrate_full(three, [0.5198, 1.0205, 1.0205], (0.0, 4000.0))
    checks["three-component bounded in [-1,3]^3"] = bool(np.all(tr.states >= -1) and np.all(tr.states <= 3))
    checks["three-component recurs within 0.05"] = _recurs(tr, np.linspace(0, 4000, 8001))
    mit = load_model("mitotic")
    tr = integrate_full(mit, [0.5, 0.5, 0.5], (0.0, 20000.0))
    dense = tr(np.linspace(0, 20000, 40001)).T
    checks["mitotic confined to [-0.1,1.1]^3"] = bool(np.all(tr.states >= -0.1) and np.all(tr.states <= 1.1)
                                                      and np.all(dense >= -0.1) and np.all(dense <= 1.1))
    report(9, checks)


def test_criterion_10_fd_cross_validation():
    rng = np.random.default_rng(10)
    checks = {}
    for model in zoo():
        lo, hi = model.domain[:, 0], model.domain[:, 1]
        rep = dv.validate_provider(model.provider, lo + (hi - lo) * rng.random((50, model.n)))
        worst = ", ".join(f"{k} {v:.1e}" for k, v in rep.discrepancies.items())
        checks[f"{model.name} [{worst}]"] = rep.passed
    report(10, checks)
