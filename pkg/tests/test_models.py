import json

import numpy as np
import pytest
import sympy as sp

from contactkit.errors import ParameterError, UnknownModelError
from contactkit.models import (_mitotic_full_field, conjugate_affine, eval_full, eval_layer, load_model,
                               load_model_file, model_from_dict, model_names, parameter_specs, rescale_model, zoo)


def test_registry_and_zoo():
    assert model_names() == ["planar_parabola", "cusp_normal_form", "ac_family", "three_component", "mitotic"]
    models = zoo()
    assert [m.name for m in models] == ["planar_parabola", "cusp_normal_form", "ac_family(2)",
                                        "three_component", "mitotic"]
    assert [(m.n, m.m) for m in models] == [(2, 1), (3, 1), (3, 1), (3, 1), (3, 1)]
    assert parameter_specs("three_component")["alpha2"].constraint("alpha2") == "alpha2 > 1"


def test_parameter_validation():
    m = load_model("three_component", {"alpha2": 3.0})
    assert m.params["alpha2"] == 3.0
    assert m.known.by_label("K").point == pytest.approx((1 / 3, 0.0, np.sqrt(2.0)))
    with pytest.raises(ParameterError, match="alpha2 > 1"):
        load_model("three_component", {"alpha2": 0.5})
    with pytest.raises(ParameterError):
        load_model("three_component", {"beta": 1.0})
    with pytest.raises(ParameterError):
        load_model("ac_family(6)")
    with pytest.raises(ParameterError):
        load_model("mitotic", face="C=0")
    with pytest.raises(ParameterError):
        load_model("planar_parabola", face="X=0")
    with pytest.raises(UnknownModelError):
        load_model("van_der_pol")


def test_layer_field_vanishes_on_S(three, mitotic):
    assert np.allclose(eval_layer(three, [0.3, 0.0, 1.1]), 0.0)
    assert np.allclose(eval_layer(mitotic["X=0"], [0.0, 0.3, 0.9]), 0.0)
    assert not np.allclose(eval_full(three, [0.3, 0.0, 1.1]), 0.0)


def test_mitotic_split_reproduces_full_field(mitotic, rng):
    X, M, C, e = sp.symbols("X M C e")
    full = sp.lambdify((X, M, C, e), _mitotic_full_field(X, M, C, e))
    for face, model in mitotic.items():
        for z in rng.uniform(0, 1, size=(5, 3)):
            for eps in (0.0021, 0.05):
                assert np.allclose(eval_full(model, z, eps), full(*z, eps), atol=1e-13), face


def test_three_component_perturbation(three):
    # full field: N y + eps G with G = (a1(1/(1+z^2)-x), a2 x, a3(y-z))
    z = np.array([0.3, 0.4, 0.5])
    x, y, w = z
    a1, a2, a3 = 0.2, 2.0, 0.2
    N = np.array([a1 * (1 / (1 + w * w) - x), a2 * x - 1, a3 * (y - w)])
    G = np.array([a1 * (1 / (1 + w * w) - x), a2 * x, a3 * (y - w)])
    assert np.allclose(eval_full(three, z), N * y + three.eps * G)


def test_affine_conjugation_maps_layer_field(three, rng):
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    b = rng.standard_normal(3)
    t = conjugate_affine(three, A, b)
    w = rng.standard_normal(3)
    # conjugate field: A^{-1} h(A w + b)
    assert np.allclose(eval_layer(t, w), np.linalg.solve(A, eval_layer(three, A @ w + b)))
    K = np.asarray(t.known.by_label("K").point)
    assert np.allclose(A @ K + b, three.known.by_label("K").point)
    from contactkit.derivatives import validate_provider
    assert validate_provider(t.provider, rng.uniform(-1, 1, size=(5, 3))).passed


def test_rescaling_keeps_layer_field(cusp):
    s = rescale_model(cusp, 7.5)
    z = np.array([0.1, -0.2, 0.3])
    assert np.allclose(eval_layer(s, z), eval_layer(cusp, z))
    assert np.allclose(s.f(z), 7.5 * cusp.f(z))
    with pytest.raises(ValueError):
        rescale_model(cusp, -1.0)


USER_M2 = {
    "name": "two_fast",
    "variables": ["u1", "u2", "v", "w"],
    "k": 2,
    "params": {"a": {"value": 1.0, "min": 0.0}},
    "f": ["v^2 + a*u1", "w - u2"],
    "N": [["0", "0"], ["0", "0"], ["1", "0"], ["0", "1"]],
    "domain": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]],
}


def test_user_model_from_dict_and_file(tmp_path):
    m = model_from_dict(USER_M2)
    assert (m.n, m.m, m.k) == (4, 2, 2)
    z = np.array([0.0, 0.3, 0.0, 0.3])
    assert np.allclose(m.f(z), 0.0)
    path = tmp_path / "model.json"
    path.write_text(json.dumps(USER_M2))
    m2 = load_model_file(path, {"a": 2.0})
    assert np.allclose(m2.f([1.0, 0, 0, 0]), [2.0, 0.0])
    with pytest.raises(ParameterError):
        load_model_file(path, {"a": -1.0})


@pytest.mark.parametrize("expr", ["__import__('os')", "v;1", "open(v)", "lambda: 1", "q + v"])
def test_user_model_rejects_unsafe_or_unknown(expr):
    bad = dict(USER_M2, f=[expr, "w"])
    with pytest.raises((ValueError, ParameterError)):
        model_from_dict(bad)


def test_user_model_shape_errors():
    with pytest.raises(ParameterError):
        model_from_dict(dict(USER_M2, f=["v"]))
    with pytest.raises(ParameterError):
        model_from_dict({"variables": ["x"]})
