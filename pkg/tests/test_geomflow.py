import numpy as np
import pytest

from contactkit import classifier as cl
from contactkit.errors import IntegrationError, ProjectionError, SearchError
from contactkit.geomflow import (ContinuationConfig, IntegratorConfig, NewtonConfig, augmented_residual,
                                 continue_contact_curve, curve_tangent, desingularized_equilibria, det_gradient,
                                 fiber_family, find_contact_point, full_equilibrium,
                                 gauss_newton, integrate_full, project_to_S)
from contactkit.models import eval_full, load_model, model_from_dict


def test_gauss_newton_underdetermined_minimum_norm():
    # single equation x + y = 2 from the origin: minimum-norm step lands on (1, 1)
    res = gauss_newton(lambda z: np.array([z[0] + z[1] - 2]), lambda z: np.array([[1.0, 1.0]]), [0.0, 0.0])
    assert res.converged and np.allclose(res.x, [1, 1]) and res.iterations == 1
    with pytest.raises(ValueError):
        NewtonConfig(step_tol=0)


def test_project_to_S(planar, mitotic):
    seed = np.array([0.3, 0.95])
    z = project_to_S(planar, seed)
    assert abs(z[1] - (1 - z[0] ** 2)) <= 1e-12
    # close to the nearest point of the parabola
    xs = np.linspace(-1, 1, 200001)
    nearest = np.min(np.hypot(xs - seed[0], 1 - xs**2 - seed[1]))
    assert np.linalg.norm(z - seed) <= 1.1 * nearest
    on = np.array([0.3, 0.91])
    assert np.array_equal(project_to_S(planar, on), on)
    z = project_to_S(mitotic["X=0"], [0.001, 0.4, 0.3])
    assert np.allclose(z, [0, 0.4, 0.3], atol=1e-11)


def test_projection_failure():
    m = model_from_dict({"variables": ["x", "y"], "f": ["x^2 + 1"], "N": [["1"], ["0"]]})
    with pytest.raises(ProjectionError) as info:
        project_to_S(m, [0.5, 0.0])
    assert info.value.residual >= 1.0


def test_find_contact_point_examples(planar, three, cusp):
    z = find_contact_point(planar, [0.4, 0.84])
    assert z[0] == pytest.approx((2 - np.sqrt(2)) / 2, abs=1e-12) and z[1] == pytest.approx(1 - z[0] ** 2, abs=1e-12)
    z = find_contact_point(three, [0.6, 0.1, 0.5])
    assert z[:2] == pytest.approx([0.5, 0.0], abs=1e-12)
    z = find_contact_point(cusp, [0.01, -0.1, 0.2], fixed={2: 0.2})
    assert z == pytest.approx([0.016, -0.12, 0.2], abs=1e-12)
    assert np.max(np.abs(augmented_residual(cusp, z))) <= 1e-12


def test_det_gradient_analytic_matches_fd(three):
    z = np.array([0.4, 0.3, 0.9])
    fd = load_model("three_component")
    from dataclasses import replace
    fd = replace(fd, provider=fd.provider.without_analytic())
    assert np.allclose(det_gradient(three, z), det_gradient(fd, z), atol=1e-7)


def test_search_errors(planar):
    with pytest.raises(SearchError):
        find_contact_point(planar, [2.0, 0.0], cfg=NewtonConfig(max_iters=1))
    with pytest.raises(SearchError):
        desingularized_equilibria(planar, [0.0, 0.0])


def test_equilibria_three_component(three):
    q, spec = desingularized_equilibria(three, [0.4, 0.8, 0.8])
    assert q == pytest.approx([0.5, 1.0, 1.0], abs=1e-12)
    w = spec.eigenvalues
    real = w[np.abs(w.imag) < 1e-12]
    pair = w[np.abs(w.imag) >= 1e-12]
    assert len(real) == 1 and len(pair) == 2
    assert np.sign(real[0].real) == -np.sign(pair[0].real)


def test_full_equilibrium_moves_off_q(three):
    q = np.array([0.5, 1.0, 1.0])
    assert eval_full(three, q) == pytest.approx([0, three.eps, 0], abs=1e-15)
    z, dist = full_equilibrium(three, q)
    assert np.max(np.abs(eval_full(three, z))) <= 1e-12
    assert 0 < dist <= 10 * three.eps
    assert full_equilibrium(three, q, eps=0.0)[1] == 0.0


def test_continuation_three_component(three):
    b = continue_contact_curve(three, [0.5, 0, 0.5])
    S = b.states
    assert np.allclose(S[:, :2], [0.5, 0.0], atol=1e-12)
    assert S[:, 2].min() < 0.05 and S[:, 2].max() > 1.9
    assert b.termination == ("domain exit", "domain exit")
    cusps = b.cusps()
    assert len(cusps) == 1 and cusps[0].z[2] == pytest.approx(1.0, abs=1e-9)
    for z in S:
        assert np.max(np.abs(augmented_residual(three, z))) <= 1e-12
    assert np.all(np.diff(b.arclength) > 0)


def test_continuation_mitotic(mitotic):
    b = continue_contact_curve(mitotic["X=0"], [0, 0.7, 0.2])
    assert np.allclose(b.states[:, :2], [0, 0.7], atol=1e-12)
    (c,) = b.cusps()
    assert c.z == pytest.approx([0, 0.7, 0.5], abs=1e-9)


def test_continuation_cusp_parabola(cusp):
    z0 = find_contact_point(cusp, [0.1, -0.3, 0.3], fixed={2: 0.3})
    b = continue_contact_curve(cusp, z0)
    S = b.states
    assert np.allclose(S[:, 1], -3 * S[:, 2] ** 2, atol=1e-12)
    (c,) = b.cusps()
    assert np.allclose(c.z, 0.0, atol=1e-9)
    # tangent agrees with the parabola's analytic tangent (6s^2, -6s, 1)
    for p in b.points[::5]:
        s = p.z[2]
        t = np.array([6 * s * s, -6 * s, 1.0])
        t /= np.linalg.norm(t)
        assert np.arccos(min(1.0, abs(float(t @ p.tangent)))) <= 1e-6


def test_branch_points_reclassify_identically(three):
    b = continue_contact_curve(three, [0.5, 0, 0.5])
    for p in b.points:
        assert cl.classify(three, p.z).classification.label == p.label


def test_continuation_rejects_bad_input(planar, three):
    with pytest.raises(SearchError):
        continue_contact_curve(planar, [0.29, 0.91])
    with pytest.raises(SearchError):
        continue_contact_curve(three, [0.6, 0, 0.5])
    with pytest.raises(ValueError):
        ContinuationConfig(min_step=0.5)


def test_continuation_step_bounds(three):
    cfg = ContinuationConfig(bidirectional=False, max_points=6)
    b = continue_contact_curve(three, [0.5, 0, 0.5], cfg, direction=[0, 0, -1])
    assert b.termination == ("max points",) and len(b.points) == 6
    assert np.all(np.diff(b.states[:, 2]) < 0)
    assert curve_tangent(three, [0.5, 0, 0.5]) == pytest.approx([0, 0, 1])


def test_layer_equilibria_stay_fixed(three):
    tr = integrate_full(three, [0.3, 0.0, 0.8], (0, 50), eps=0.0)
    assert np.max(np.abs(tr.states - [0.3, 0.0, 0.8])) <= 1e-10


def test_integration_events_on_planar_fiber(planar):
    # x' = (x-2) f, y' = f; with eps = 0 the flow is a time change of the fibers, so
    # integrate the fibre field directly and compare crossings with the analytic ones
    (tr,) = fiber_family(planar, [[0.5, 0.5]], (-2, 2), IntegratorConfig(rtol=1e-12, atol=1e-14))
    crossings = [e for e in tr.events if e.kind == "f=0"]
    assert len(crossings) == 2
    for e in crossings:
        assert abs(planar.f(e.z)[0]) <= 1e-12
        x_exact = 2 + (0.5 - 2) * np.exp(e.t)
        y_exact = 0.5 + e.t
        assert abs(y_exact + x_exact**2 - 1) <= 1e-9
        assert np.max(np.abs(e.z - [x_exact, y_exact])) <= 1e-9
    assert np.all(np.diff(tr.t) > 0)
    assert tr(0.0) == pytest.approx([0.5, 0.5])


def test_integrator_convergence(planar):
    def run(tol):
        (tr,) = fiber_family(planar, [[0.5, 0.5]], (0, 2), IntegratorConfig(rtol=tol, atol=tol * 1e-2))
        return np.max(np.abs(tr.states[-1] - exact)), tr.stats["steps"]

    exact = np.array([2 - 1.5 * np.exp(2.0), 2.5])
    e6, n6 = run(1e-6)
    e8, n8 = run(1e-8)
    # error follows the tolerance within a factor 10
    assert e8 <= 10 * (1e-8 / 1e-6) * e6
    # step count grows like (tolerance ratio)^(1/5) for a fifth-order pair
    assert 0.5 * 100 ** 0.2 <= n8 / n6 <= 2 * 100 ** 0.2


def test_step_underflow_raises_with_partial_trajectory():
    m = model_from_dict({"variables": ["x", "y"], "f": ["x^2"], "N": [["1"], ["0"]]})
    with pytest.raises(IntegrationError) as info:
        integrate_full(m, [1.0, 0.0], (0, 2))
    tr = info.value.trajectory
    assert tr.t[-1] < 1.0 + 1e-6 and tr.t[-1] > 0.9


def test_fibers(planar, three, rng):
    seeds = np.column_stack([rng.uniform(-1, 1.5, 10), rng.uniform(-1, 1, 10)])
    for tr in fiber_family(planar, seeds):
        inv = tr.states[:, 1] - np.log(np.abs(tr.states[:, 0] - 2))
        assert np.ptp(inv) <= 1e-6
        assert tr.t[0] == -2 and tr.t[-1] == 2
    (fq,) = fiber_family(three, [[0.5, 1.0, 1.0]], (-5, 5))
    assert np.max(np.abs(fq.states - [0.5, 1.0, 1.0])) <= 1e-12
    with pytest.raises(SearchError):
        fiber_family(_two_fast(), [[0, 0, 0, 0]])


def _two_fast():
    return model_from_dict({"variables": ["a", "b", "c", "d"], "f": ["c", "d"],
                            "N": [["0", "0"], ["0", "0"], ["1", "0"], ["0", "1"]]})


def test_fiber_tangent_at_contact_point(planar):
    x = (2 - np.sqrt(2)) / 2
    z = np.array([x, 1 - x * x])
    (tr,) = fiber_family(planar, [z], (-0.1, 0.1))
    i = int(np.argmin(np.abs(tr.t)))
    h = 1e-6
    tangent = (tr(h) - tr(-h)) / (2 * h)
    assert tangent == pytest.approx(planar.N(z)[:, 0], abs=1e-6)
    assert abs((planar.provider.df(z) @ planar.N(z)).item()) <= 1e-12
    assert tr.t[i] == 0.0
