"""Factorized slow-fast models ``z' = N(z) f(z) + eps G(z, eps)`` and the built-in zoo."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
import sympy as sp

from .derivatives import DerivativeProvider, FDConfig
from .errors import ParameterError, UnknownModelError
from .symbolic import SymbolicFactorization, parse_expression
from .tensorkit import numerical_rank

__all__ = [
    "FactorizedModel",
    "KnownAnswers",
    "KnownPoint",
    "MITOTIC_FACES",
    "ParamSpec",
    "check_model",
    "conjugate_affine",
    "eval_full",
    "eval_layer",
    "load_model",
    "load_model_file",
    "model_names",
    "rescale_model",
    "zoo",
]


@dataclass(frozen=True)
class ParamSpec:
    default: float
    lower: float | None = None
    lower_strict: bool = False
    upper: float | None = None
    integer: bool = False
    description: str = ""

    def constraint(self, name: str) -> str:
        parts = []
        if self.lower is not None:
            parts.append(f"{name} {'>' if self.lower_strict else '>='} {self.lower:g}")
        if self.upper is not None:
            parts.append(f"{name} <= {self.upper:g}")
        if self.integer:
            parts.append(f"{name} integer")
        return " and ".join(parts) or "finite"

    def check(self, name: str, value) -> float:
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"parameter {name}={value!r} is not a number") from None
        ok = math.isfinite(v)
        if self.lower is not None:
            ok &= v > self.lower if self.lower_strict else v >= self.lower
        if self.upper is not None:
            ok &= v <= self.upper
        if self.integer:
            ok &= v == int(v)
        if not ok:
            raise ParameterError(f"parameter {name}={value!r} violates {self.constraint(name)}")
        return v


@dataclass(frozen=True)
class KnownPoint:
    label: str
    point: tuple[float, ...]
    kind: str  # "contact", "normally_hyperbolic", "equilibrium"
    order: int | None = None
    slow_generic: bool | None = None
    source: str = "published"
    note: str = ""


@dataclass(frozen=True)
class KnownAnswers:
    """Closed-form answers a model is expected to reproduce.

    ``curve`` parametrises the contact set by a scalar ``s`` over
    ``curve_range``; ``fold_coefficient(s)`` is the second chain value along it.
    """

    points: tuple[KnownPoint, ...] = ()
    curve_description: str = ""
    curve: Callable[[float], np.ndarray] | None = None
    curve_range: tuple[float, float] | None = None
    fold_coefficient: Callable[[float], float] | None = None
    third_order: Mapping[str, float] = field(default_factory=dict)
    C0: Mapping[str, np.ndarray] = field(default_factory=dict)

    def contact_points(self):
        return [p for p in self.points if p.kind == "contact"]

    def by_label(self, label: str) -> KnownPoint:
        for p in self.points:
            if p.label == label:
                return p
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class FactorizedModel:
    name: str
    provider: DerivativeProvider
    G: Callable[[np.ndarray, float], np.ndarray]
    eps: float
    params: Mapping[str, float]
    domain: np.ndarray
    variables: tuple[str, ...]
    known: KnownAnswers = field(default_factory=KnownAnswers)
    plot_domain: np.ndarray | None = None
    face: str | None = None
    description: str = ""

    @property
    def n(self) -> int:
        return self.provider.n

    @property
    def m(self) -> int:
        return self.provider.m

    @property
    def k(self) -> int:
        return self.n - self.m

    def f(self, z) -> np.ndarray:
        return self.provider.eval_f(np.asarray(z, dtype=float))

    def N(self, z) -> np.ndarray:
        return self.provider.eval_N(np.asarray(z, dtype=float))

    def with_eps(self, eps: float) -> "FactorizedModel":
        ParamSpec(0.0, lower=0.0).check("eps", eps)
        return replace(self, eps=float(eps))


def eval_layer(model: FactorizedModel, z) -> np.ndarray:
    """Layer field ``N(z) f(z)``."""
    z = np.asarray(z, dtype=float)
    return model.N(z) @ model.f(z)


def eval_full(model: FactorizedModel, z, eps: float | None = None) -> np.ndarray:
    """Full field ``N(z) f(z) + eps G(z, eps)``."""
    eps = model.eps if eps is None else float(eps)
    z = np.asarray(z, dtype=float)
    out = eval_layer(model, z)
    if eps != 0.0:
        out = out + eps * np.asarray(model.G(z, eps), dtype=float)
    return out


# ---------------------------------------------------------------------------
# zoo definitions
# ---------------------------------------------------------------------------



@lru_cache(maxsize=None)
def _planar_def():
    x, y = sp.symbols("x y")
    return SymbolicFactorization((x, y), (y + x**2 - 1,), ((x - 2,), (sp.Integer(1),)), (0, 0))


@lru_cache(maxsize=None)
def _cusp_def():
    x, y, z = sp.symbols("x y z")
    return SymbolicFactorization(
        (x, y, z), (x + y * z + z**3,), ((0,), (0,), (1,)), (1, 0, 0)
    )


@lru_cache(maxsize=None)
def _ac_def(c: int):
    zs = sp.symbols(f"z1:{c + 1}")
    x = sp.Symbol("x")
    g = x ** (c + 1) + zs[0] + sum(zs[i] * x**i for i in range(1, c))
    N = tuple((0,) for _ in range(c)) + ((1,),)
    return SymbolicFactorization((*zs, x), (g,), N, (0,) * (c + 1))


@lru_cache(maxsize=None)
def _three_component_def():
    x, y, z = sp.symbols("x y z")
    a1, a2, a3 = sp.symbols("alpha1 alpha2 alpha3")
    N = ((a1 * (1 / (1 + z**2) - x),), (a2 * x - 1,), (a3 * (y - z),))
    G = (a1 * (1 / (1 + z**2) - x), a2 * x, a3 * (y - z))
    return SymbolicFactorization((x, y, z), (y,), N, G, params=(a1, a2, a3))


def _mitotic_full_field(X, M, C, e):
    Fe = lambda u: (e + 1 - u) * (e + u)  # noqa: E731
    seven_tenths = sp.Rational(7, 10)
    return (
        (M * (1 - X) * (e + X) - seven_tenths * X * (e + 1 - X)) * Fe(M),
        (6 * C / (1 + 2 * C) * (1 - M) * (e + M) - sp.Rational(3, 2) * M * (e + 1 - M)) * Fe(X),
        sp.Rational(1, 4) * (1 - X - C) * Fe(X) * Fe(M),
    )


@lru_cache(maxsize=None)
def _mitotic_def():
    X, M, C = sp.symbols("X M C")
    e = sp.Symbol("eps")
    F0 = X * M * (1 - X) * (1 - M)
    N = (
        (M - sp.Rational(7, 10),),
        (6 * C / (1 + 2 * C) - sp.Rational(3, 2),),
        (sp.Rational(1, 4) * (1 - X - C),),
    )
    full = _mitotic_full_field(X, M, C, e)
    G = tuple(sp.factor(sp.cancel(sp.expand(hf - ni[0] * F0) / e)) for hf, ni in zip(full, N))
    return SymbolicFactorization((X, M, C), (F0,), N, G)


MITOTIC_FACES = ("X=0", "X=1", "M=0", "M=1")


def _box(*intervals):
    return np.array(intervals, dtype=float)


def _planar(params):
    s2 = math.sqrt(2.0)
    pts = []
    for sign, label in ((-1, "P-"), (1, "P+")):
        xc = 0.5 * (2 + sign * s2)
        pts.append(KnownPoint(label, (xc, 1 - xc * xc), "contact", 1, True, "published",
                              "x = (2 +- sqrt 2)/2 on y = 1 - x^2"))
    pts.append(KnownPoint("geometric_fold", (0.0, 1.0), "normally_hyperbolic", source="published",
                          note="eigenvalue 2x(x-2)+1 = 1 at x = 0"))
    known = KnownAnswers(
        points=tuple(pts),
        curve_description="two isolated contact points on y = 1 - x^2",
        fold_coefficient=lambda xc: 4.0 * (xc - 2.0) * (xc - 1.0),
    )
    return dict(definition=_planar_def(), values=(), variables=("x", "y"),
                domain=_box((-3, 3), (-3, 3)), known=known, eps=0.0,
                description="planar parabola z' = (x-2, 1)^T (y + x^2 - 1)")


def _cusp(params):
    known = KnownAnswers(
        points=(KnownPoint("origin", (0.0, 0.0, 0.0), "contact", 2, True, "published"),),
        curve_description="parabola y = -3 z^2 on x + y z + z^3 = 0",
        curve=lambda s: np.array([2 * s**3, -3 * s**2, s]),
        curve_range=(-1.0, 1.0),
        fold_coefficient=lambda s: 6.0 * s,
        third_order={"origin": 6.0},
        C0={"origin": np.array([[1.0, 0, 0], [0, 1.0, 0]])},
    )
    return dict(definition=_cusp_def(), values=(), variables=("x", "y", "z"),
                domain=_box((-1, 1), (-1, 1), (-1, 1)), known=known, eps=0.0,
                description="cusp normal form z' = (0,0,1)^T (x + y z + z^3), drift G = (1,0,0)")


def _ac(params):
    c = int(params["c"])
    C0 = np.zeros((c, c + 1))
    for j in range(c):
        C0[j, j] = math.factorial(j)
    known = KnownAnswers(
        points=(KnownPoint("origin", (0.0,) * (c + 1), "contact", c, True, "derived",
                           "versal A_c family"),),
        curve_description=f"A_{c} point at the origin",
        third_order={"origin": 6.0 if c == 2 else 0.0},
        C0={"origin": C0},
    )
    return dict(definition=_ac_def(c), values=(),
                variables=tuple(f"z{i}" for i in range(1, c + 1)) + ("x",),
                domain=np.tile([-1.0, 1.0], (c + 1, 1)), known=known, eps=0.0,
                description=f"A_{c} family x^{c + 1} + z_{c} x^{c - 1} + ... + z_2 x + z_1 with N = e_n")


def _three_component(params):
    a1, a2, a3 = params["alpha1"], params["alpha2"], params["alpha3"]
    zk = math.sqrt(a2 - 1.0)
    third = 2 * a1 * a3 * (a2 - 1) / a2
    known = KnownAnswers(
        points=(
            KnownPoint("K", (1 / a2, 0.0, zk), "contact", 2, True, "published", "contact cusp"),
            KnownPoint("K-", (1 / a2, 0.0, -zk), "contact", 2, True, "published", "unphysical contact point"),
            KnownPoint("F(z=0)", (1 / a2, 0.0, 0.0), "contact", 1, True, "derived", "fold on F"),
            KnownPoint("q", (1 / a2, zk, zk), "equilibrium", source="published",
                       note="saddle-focus zero of N"),
        ),
        curve_description="line x = 1/alpha2, y = 0",
        curve=lambda s: np.array([1 / a2, 0.0, s]),
        curve_range=(-2.0, 2.0),
        fold_coefficient=lambda s: a1 * (a2 - (1 + s * s)) / (1 + s * s),
        third_order={"K": third, "K-": third},
        C0={"K": np.array([[0.0, 1.0, 0.0], [a2, 0.0, 0.0]])},
    )
    return dict(definition=_three_component_def(), values=(a1, a2, a3), variables=("x", "y", "z"),
                domain=_box((0, 2), (-0.5, 2), (0, 2)), known=known, eps=params["eps"],
                description="three-component negative feedback oscillator")


_MITOTIC_THIRD = 63.0 / 1600.0


def _mitotic(params, face):
    if face not in MITOTIC_FACES:
        raise ParameterError(f"face must be one of {', '.join(MITOTIC_FACES)}, got {face!r}")
    if face in ("X=0", "X=1"):
        xf = 0.0 if face == "X=0" else 1.0
        K = (xf, 0.7, 0.5)
        curve = lambda s, xf=xf: np.array([xf, 0.7, s])  # noqa: E731
        desc = f"line X = {xf:g}, M = 7/10"
        sign = 1.0 if xf == 0.0 else -1.0
        fold = lambda s, sign=sign: sign * 63 / 200 * (2 * s - 1) / (2 * s + 1)  # noqa: E731
        C0 = sign * np.array([[0.21, 0, 0], [0, 0.21, 0]])
        third = _MITOTIC_THIRD
    else:
        mf = 0.0 if face == "M=0" else 1.0
        K = (0.5, mf, 0.5)
        curve = lambda s, mf=mf: np.array([s, mf, 0.5])  # noqa: E731
        desc = f"line M = {mf:g}, C = 1/2"
        sign = 1.0 if mf == 0.0 else -1.0
        fold = lambda s, sign=sign: sign * 3 / 16 * s * (s - 1) * (2 * s - 1)  # noqa: E731
        C0 = sign * np.array([[0, 0.25, 0], [0, 0, 0.375]])
        third = 21 / 320 if mf == 0 else 9 / 320
    known = KnownAnswers(
        points=(KnownPoint("K", K, "contact", 2, True, "published", f"contact cusp on face {face}"),),
        curve_description=desc,
        curve=curve,
        curve_range=(0.0, 1.0),
        fold_coefficient=fold,
        third_order={"K": third},
        C0={"K": C0},
    )
    return dict(definition=_mitotic_def(), values=(), variables=("X", "M", "C"),
                domain=_box((0, 1), (0, 1), (0, 1)), known=known, eps=params["eps"],
                plot_domain=_box((-0.2, 1.2), (-0.2, 1.2), (-0.2, 1.2)),
                description=f"mitotic oscillator, face-local factorization on {face}")


_REGISTRY = {
    "planar_parabola": (_planar, {"eps": ParamSpec(0.0, lower=0.0)}),
    "cusp_normal_form": (_cusp, {"eps": ParamSpec(0.0, lower=0.0)}),
    "ac_family": (_ac, {"c": ParamSpec(2, lower=1, upper=5, integer=True, description="contact order"),
                        "eps": ParamSpec(0.0, lower=0.0)}),
    "three_component": (_three_component, {
        "alpha1": ParamSpec(0.2, lower=0.0, lower_strict=True),
        "alpha2": ParamSpec(2.0, lower=1.0, lower_strict=True),
        "alpha3": ParamSpec(0.2, lower=0.0, lower_strict=True),
        "eps": ParamSpec(0.0005, lower=0.0),
    }),
    "mitotic": (_mitotic, {"eps": ParamSpec(0.0021, lower=0.0)}),
}


def model_names() -> list[str]:
    return list(_REGISTRY)


def parameter_specs(name: str) -> dict[str, ParamSpec]:
    name, _ = _split_name(name)
    return dict(_REGISTRY[name][1])


def _split_name(name: str):
    m = re.fullmatch(r"ac_family\((\d+)\)", name)
    if m:
        return "ac_family", {"c": int(m.group(1))}
    if name not in _REGISTRY:
        raise UnknownModelError(f"unknown model {name!r}; available: {', '.join(_REGISTRY)}")
    return name, {}


def load_model(name: str, overrides: Mapping[str, float] | None = None, *, face: str | None = None,
               fd: FDConfig | None = None, validate: bool = False) -> FactorizedModel:
    """Build a zoo model with validated parameter overrides.

    ``name`` may be ``"ac_family(c)"``. ``face`` selects the face-local
    factorization of the mitotic model (default ``"X=0"``).
    """
    base, implied = _split_name(name)
    builder, specs = _REGISTRY[base]
    given = {**implied, **dict(overrides or {})}
    unknown = set(given) - set(specs)
    if unknown:
        raise ParameterError(f"unknown parameter(s) for {base}: {', '.join(sorted(unknown))}")
    params = {k: spec.check(k, given.get(k, spec.default)) for k, spec in specs.items()}
    if base == "mitotic":
        face = face or "X=0"
        parts = builder(params, face)
    else:
        if face is not None:
            raise ParameterError(f"model {base} has no faces")
        parts = builder(params)
    d: SymbolicFactorization = parts["definition"]
    display = f"ac_family({int(params['c'])})" if base == "ac_family" else base
    model = FactorizedModel(
        name=display,
        provider=d.provider(parts["values"], fd=fd),
        G=d.perturbation(parts["values"]),
        eps=parts["eps"],
        params=params,
        domain=parts["domain"],
        variables=parts["variables"],
        known=parts["known"],
        plot_domain=parts.get("plot_domain"),
        face=face,
        description=parts["description"],
    )
    if validate:
        check_model(model)
    return model


def zoo() -> list[FactorizedModel]:
    """The five built-in models with default parameters."""
    return [
        load_model("planar_parabola"),
        load_model("cusp_normal_form"),
        load_model("ac_family"),
        load_model("three_component"),
        load_model("mitotic"),
    ]


def check_model(model: FactorizedModel, samples: int = 5, seed: int = 0) -> None:
    """Check that ``f = 0`` is reachable in the domain and ``N`` has full column rank there."""
    from .geomflow import project_to_S
    from .errors import ProjectionError

    rng = np.random.default_rng(seed)
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    found = 0
    for _ in range(10 * samples):
        try:
            z = project_to_S(model, lo + (hi - lo) * rng.random(model.n))
        except ProjectionError:
            continue
        if numerical_rank(model.N(z)) == model.m:
            found += 1
        if found >= samples:
            return
    raise ParameterError(f"model {model.name}: could not find {samples} regular points of f = 0 in the domain")


# ---------------------------------------------------------------------------
# model transforms
# ---------------------------------------------------------------------------


def conjugate_affine(model: FactorizedModel, A, b) -> FactorizedModel:
    """Pull the model back along ``phi(w) = A w + b``.

    The new factors are ``f o phi`` and ``A^{-1} (N o phi)``, so the layer
    field is conjugated by ``phi``. Analytic tensors follow by the chain rule
    and known points are mapped by ``phi^{-1}``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    Ainv = np.linalg.inv(A)
    p = model.provider
    phi = lambda w: A @ np.asarray(w, dtype=float) + b  # noqa: E731

    def opt(cb, fun):
        return None if cb is None else fun

    q = DerivativeProvider(
        f=lambda w: p.f(phi(w)),
        N=lambda w: Ainv @ p.eval_N(phi(w)),
        n=p.n,
        m=p.m,
        df=opt(p.df, lambda w: p.df(phi(w)) @ A),
        d2f=opt(p.d2f, lambda w: np.einsum("ijk,ja,kb->iab", p.d2f(phi(w)), A, A)),
        d3f=opt(p.d3f, lambda w: np.einsum("ijkl,ja,kb,lc->iabc", p.d3f(phi(w)), A, A, A)),
        dN=opt(p.dN, lambda w: np.einsum("pi,ija,jb->pba", Ainv, p.dN(phi(w)), A)),
        d2N=opt(p.d2N, lambda w: np.einsum("pi,ijka,jb,kc->pbca", Ainv, p.d2N(phi(w)), A, A)),
        fd=p.fd,
    )
    corners = np.array(np.meshgrid(*model.domain, indexing="ij")).reshape(model.n, -1).T
    pulled = (Ainv @ (corners - b).T).T
    domain = np.column_stack([pulled.min(axis=0), pulled.max(axis=0)])
    pts = tuple(replace(kp, point=tuple(Ainv @ (np.asarray(kp.point) - b))) for kp in model.known.points)
    known = replace(model.known, points=pts, curve=None, fold_coefficient=None, C0={})
    return replace(
        model,
        name=f"{model.name}|affine",
        provider=q,
        G=lambda w, eps: Ainv @ model.G(phi(w), eps),
        domain=domain,
        known=known,
        plot_domain=None,
    )


def rescale_model(model: FactorizedModel, s: float) -> FactorizedModel:
    """Replace ``f`` by ``s f`` and ``N`` by ``N / s``; the layer field is unchanged."""
    if not s > 0:
        raise ValueError("scale must be positive")
    p = model.provider

    def opt(cb, k):
        return None if cb is None else (lambda z: k * np.asarray(cb(z)))

    q = DerivativeProvider(
        f=lambda z: s * np.asarray(p.f(z)), N=lambda z: np.asarray(p.N(z)) / s, n=p.n, m=p.m,
        df=opt(p.df, s), d2f=opt(p.d2f, s), d3f=opt(p.d3f, s),
        dN=opt(p.dN, 1 / s), d2N=opt(p.d2N, 1 / s), fd=p.fd,
    )
    return replace(model, name=f"{model.name}|scaled", provider=q)


# ---------------------------------------------------------------------------
# user model files
# ---------------------------------------------------------------------------


def load_model_file(path, overrides: Mapping[str, float] | None = None) -> FactorizedModel:
    """Load a user model from a JSON definition.

    Expected keys: ``name``, ``variables`` (list of n names), ``k``, ``params``
    (name -> ``{"value", "min", "max"}``), ``f`` (list of n-k expressions),
    ``N`` (n rows of n-k expressions), optional ``G`` (n expressions in the
    variables, parameters and ``eps``), ``eps`` and ``domain`` (n pairs).
    """
    spec = json.loads(Path(path).read_text())
    return model_from_dict(spec, overrides)


def model_from_dict(spec: Mapping, overrides: Mapping[str, float] | None = None) -> FactorizedModel:
    try:
        var_names = list(spec["variables"])
        f_txt = list(spec["f"])
        N_txt = [list(row) for row in spec["N"]]
    except KeyError as exc:
        raise ParameterError(f"model definition is missing key {exc}") from None
    n = len(var_names)
    k = int(spec.get("k", n - len(f_txt)))
    if n - k != len(f_txt):
        raise ParameterError(f"expected {n - k} components of f, got {len(f_txt)}")
    param_defs = dict(spec.get("params", {}))
    specs = {"eps": ParamSpec(float(spec.get("eps", 0.0)), lower=0.0)}
    for pname, pdef in param_defs.items():
        if not isinstance(pdef, Mapping):
            pdef = {"value": pdef}
        specs[pname] = ParamSpec(float(pdef["value"]), lower=pdef.get("min"), upper=pdef.get("max"))
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(specs)
    if unknown:
        raise ParameterError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
    values = {k_: s.check(k_, overrides.get(k_, s.default)) for k_, s in specs.items()}

    reserved = {"eps", "exp", "ln", "log", "sqrt"}
    names = var_names + list(param_defs)
    if reserved & set(names) or len(set(names)) != len(names):
        raise ParameterError("variable and parameter names must be distinct and not reserved")
    syms = {nm: sp.Symbol(nm) for nm in names}
    syms["eps"] = sp.Symbol("eps")
    parse = lambda t: parse_expression(str(t), syms)  # noqa: E731
    definition = SymbolicFactorization(
        variables=tuple(syms[v] for v in var_names),
        f=tuple(parse(t) for t in f_txt),
        N=tuple(tuple(parse(t) for t in row) for row in N_txt),
        G=tuple(parse(t) for t in spec.get("G", ["0"] * n)),
        params=tuple(syms[p] for p in param_defs),
        eps=syms["eps"],
    )
    domain = np.asarray(spec.get("domain", [[-1.0, 1.0]] * n), dtype=float)
    pvals = [values[p] for p in param_defs]
    return FactorizedModel(
        name=str(spec.get("name", "user_model")),
        provider=definition.provider(pvals),
        G=definition.perturbation(pvals),
        eps=values["eps"],
        params=values,
        domain=domain,
        variables=tuple(var_names),
        description=str(spec.get("description", "")),
    )
