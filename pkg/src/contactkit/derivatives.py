"""Derivative tensors of ``f`` and ``N`` and the directional chains built on them.

A :class:`DerivativeProvider` bundles the two factor maps of a layer field
``h(z) = N(z) f(z)`` with optional analytic derivative callbacks. Missing
tensors are filled in by central differences.

Tensor layouts (axis 0 is always the output):

=========  ====================  ===========================================
tensor     shape                 entry
=========  ====================  ===========================================
``Df``     ``(m, n)``            ``df_i/dz_j``
``D2f``    ``(m, n, n)``         ``d2 f_i/dz_j dz_k``
``D3f``    ``(m, n, n, n)``      ``d3 f_i/dz_j dz_k dz_l``
``DN``     ``(n, n, m)``         ``dN_ia/dz_j`` stored at ``[i, j, a]``
``D2N``    ``(n, n, n, m)``      ``d2 N_ia/dz_j dz_k`` stored at ``[i, j, k, a]``
=========  ====================  ===========================================

so ``DN(v, r)`` is the derivative of ``N r`` in direction ``v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError
from .tensorkit import I, MultilinearMap, contract

__all__ = [
    "ChainValues",
    "DerivativeProvider",
    "FDConfig",
    "ValidationReport",
    "chain_function",
    "chain_gradients",
    "chain_values",
    "d2N",
    "dN",
    "hessian_f",
    "jacobian_f",
    "third_f",
    "validate_provider",
]

EPS = np.finfo(float).eps
MAX_CHAIN_ORDER = 6


@dataclass(frozen=True)
class FDConfig:
    """Central-difference step control.

    The step for a derivative reached through ``depth`` nested central
    differences is ``base_step ** (3 / (depth + 2))``, i.e. ``eps^(1/3)``
    for a first derivative and ``eps^(1/(d+2))`` in general; the same step
    is used on every nesting level. Per coordinate the step is multiplied by
    ``max(1, |z_i| * scale_i)``.
    """

    base_step: float = EPS ** (1.0 / 3.0)
    characteristic_scale: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (np.isfinite(self.base_step) and 0 < self.base_step < 1):
            raise ValueError("base_step must lie in (0, 1)")
        if self.characteristic_scale is not None and any(
            not (np.isfinite(s) and s > 0) for s in self.characteristic_scale
        ):
            raise ValueError("characteristic scales must be positive and finite")

    def step(self, depth: int = 1) -> float:
        return self.base_step ** (3.0 / (depth + 2.0))

    def coordinate_steps(self, z: np.ndarray, depth: int = 1) -> np.ndarray:
        scale = np.ones_like(z) if self.characteristic_scale is None else np.asarray(self.characteristic_scale)
        return self.step(depth) * np.maximum(1.0, np.abs(z) * scale)


@dataclass(frozen=True)
class DerivativeProvider:
    """Factor maps ``f: R^n -> R^m`` and ``N: R^n -> R^(n x m)`` plus derivatives."""

    f: Callable[[np.ndarray], np.ndarray]
    N: Callable[[np.ndarray], np.ndarray]
    n: int
    m: int
    df: Callable | None = None
    d2f: Callable | None = None
    d3f: Callable | None = None
    dN: Callable | None = None
    d2N: Callable | None = None
    fd: FDConfig = field(default_factory=FDConfig)

    def __post_init__(self):
        if not 1 <= self.m < self.n:
            raise ValueError(f"need 1 <= m < n, got m={self.m}, n={self.n}")

    @property
    def has_analytic(self) -> bool:
        return all(t is not None for t in (self.df, self.d2f, self.d3f, self.dN, self.d2N))

    def without_analytic(self) -> "DerivativeProvider":
        return DerivativeProvider(self.f, self.N, self.n, self.m, fd=self.fd)

    def eval_f(self, z) -> np.ndarray:
        return _checked(np.atleast_1d(np.asarray(self.f(z), dtype=float)), "f", z)

    def eval_N(self, z) -> np.ndarray:
        return _checked(np.asarray(self.N(z), dtype=float).reshape(self.n, self.m), "N", z)


def _checked(value: np.ndarray, what: str, z) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{what} is not finite at z={np.asarray(z).tolist()}")
    return value


def _point(z) -> np.ndarray:
    z = np.asarray(z, dtype=float).reshape(-1)
    if not np.all(np.isfinite(z)):
        raise EvaluationError(f"non-finite point {z.tolist()}")
    return z


def _fd_gradient(fun, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Central differences of an array-valued map; new axis appended last."""
    cols = []
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h[i]
        cols.append((np.asarray(fun(z + e)) - np.asarray(fun(z - e))) / (2.0 * h[i]))
    return np.stack(cols, axis=-1)


def _analytic(p: DerivativeProvider, name: str, z, shape) -> np.ndarray:
    val = np.asarray(getattr(p, name)(z), dtype=float).reshape(shape)
    return _checked(val, name, z)


def jacobian_f(p: DerivativeProvider, z) -> np.ndarray:
    z = _point(z)
    if p.df is not None:
        return _analytic(p, "df", z, (p.m, p.n))
    return _fd_gradient(p.eval_f, z, p.fd.coordinate_steps(z, 1))


def _jacobian_fd_only(p, z, h):
    return _fd_gradient(p.eval_f, z, h)


def hessian_f(p: DerivativeProvider, z) -> MultilinearMap:
    z = _point(z)
    if p.d2f is not None:
        return MultilinearMap(_analytic(p, "d2f", z, (p.m, p.n, p.n)))
    if p.df is not None:
        h = p.fd.coordinate_steps(z, 1)
        H = _fd_gradient(lambda y: jacobian_f(p, y), z, h)
    else:
        h = p.fd.coordinate_steps(z, 2)
        H = _fd_gradient(lambda y: _jacobian_fd_only(p, y, h), z, h)
    return MultilinearMap(H).symmetrized()


def third_f(p: DerivativeProvider, z) -> MultilinearMap:
    z = _point(z)
    if p.d3f is not None:
        return MultilinearMap(_analytic(p, "d3f", z, (p.m, p.n, p.n, p.n)))
    if p.d2f is not None:
        h = p.fd.coordinate_steps(z, 1)
        T = _fd_gradient(lambda y: hessian_f(p, y).entries, z, h)
    elif p.df is not None:
        h = p.fd.coordinate_steps(z, 2)
        T = _fd_gradient(lambda y: _fd_gradient(lambda x: jacobian_f(p, x), y, h), z, h)
    else:
        h = p.fd.coordinate_steps(z, 3)
        T = _fd_gradient(
            lambda y: _fd_gradient(lambda x: _jacobian_fd_only(p, x, h), y, h), z, h
        )
    return MultilinearMap(T).symmetrized()


def dN(p: DerivativeProvider, z) -> MultilinearMap:
    z = _point(z)
    if p.dN is not None:
        return MultilinearMap(_analytic(p, "dN", z, (p.n, p.n, p.m)))
    G = _fd_gradient(p.eval_N, z, p.fd.coordinate_steps(z, 1))  # (n, m, n)
    return MultilinearMap(np.transpose(G, (0, 2, 1)))


def d2N(p: DerivativeProvider, z) -> MultilinearMap:
    z = _point(z)
    if p.d2N is not None:
        return MultilinearMap(_analytic(p, "d2N", z, (p.n, p.n, p.n, p.m)))
    if p.dN is not None:
        h = p.fd.coordinate_steps(z, 1)
        G = _fd_gradient(lambda y: dN(p, y).entries, z, h)  # (n, n, m, n)
        T = np.transpose(G, (0, 1, 3, 2))
    else:
        h = p.fd.coordinate_steps(z, 2)
        G = _fd_gradient(lambda y: _fd_gradient(p.eval_N, y, h), z, h)  # (n, m, n, n)
        T = np.transpose(G, (0, 2, 3, 1))
    T = 0.5 * (T + np.transpose(T, (0, 2, 1, 3)))
    return MultilinearMap(T)


# ---------------------------------------------------------------------------
# directional chains g_0 = f, g_{j+1} = D g_j . N r  (r frozen)
# ---------------------------------------------------------------------------


def _closed_form_chain(p: DerivativeProvider, r: np.ndarray, j: int):
    """Expanded chain values for ``j <= 3`` from analytic tensors."""

    def g(z):
        z = _point(z)
        if j == 0:
            return p.eval_f(z)
        Df = jacobian_f(p, z)
        w = p.eval_N(z) @ r
        if j == 1:
            return Df @ w
        D2f = hessian_f(p, z)
        DN = dN(p, z)
        dNw = contract(DN, [(1, w), (2, r)])  # DN(Nr, r)
        if j == 2:
            return D2f(w, w) + Df @ dNw
        D3f = third_f(p, z)
        D2N = d2N(p, z)
        return (
            D3f(w, w, w)
            + 3.0 * D2f(w, dNw)
            + Df @ (contract(D2N, [(1, w), (2, w), (3, r)]) + contract(DN, [(1, dNw), (2, r)]))
        )

    return g


def chain_function(p: DerivativeProvider, r, j: int, method: str = "auto", extra_depth: int = 0):
    """Return ``z -> g_j(z)`` for the chain along ``w(z) = N(z) r``.

    ``method="auto"`` uses the closed forms for ``j <= 3`` when every
    analytic tensor is available and directional central differences on top
    of them otherwise; ``method="fd"`` builds the whole chain from ``f`` by
    nested directional differences. ``extra_depth`` enlarges the step when
    the caller differentiates the result once more.
    """
    r = np.asarray(r, dtype=float)
    if j < 0 or j > MAX_CHAIN_ORDER + 1:
        raise ValueError(f"chain order must lie in [0, {MAX_CHAIN_ORDER + 1}]")
    if method not in ("auto", "fd"):
        raise ValueError(f"unknown chain method {method!r}")
    if method == "auto" and p.has_analytic:
        base_j = min(j, 3)
        base = _closed_form_chain(p, r, base_j)
    else:
        base_j = 0
        base = p.eval_f
    depth = j - base_j
    if depth == 0:
        return base
    h = p.fd.step(depth + extra_depth)

    def lift(g):
        def g_next(z):
            z = _point(z)
            w = p.eval_N(z) @ r
            wn = np.max(np.abs(w))
            if wn == 0.0:
                return np.zeros(p.m)
            t = h * max(1.0, np.max(np.abs(z))) / wn
            return (g(z + t * w) - g(z - t * w)) / (2.0 * t)

        return g_next

    g = base
    for _ in range(depth):
        g = lift(g)
    return g


@dataclass(frozen=True)
class ChainValues:
    basepoint: np.ndarray
    r: np.ndarray
    l: np.ndarray
    values: tuple[np.ndarray, ...]
    methods: tuple[str, ...]

    @property
    def projected(self) -> np.ndarray:
        return np.array([float(self.l @ g) for g in self.values])

    @property
    def full_norms(self) -> np.ndarray:
        return np.array([float(np.linalg.norm(g)) for g in self.values])

    @property
    def j_max(self) -> int:
        return len(self.values) - 1


def chain_values(p: DerivativeProvider, z0, r, l, j_max: int = 4, method: str = "auto") -> ChainValues:
    z0 = _point(z0)
    r = np.asarray(r, dtype=float).reshape(p.m)
    l = np.asarray(l, dtype=float).reshape(p.m)
    if not np.any(r) or not np.any(l):
        raise ValueError("r and l must be nonzero")
    if not 0 <= j_max <= MAX_CHAIN_ORDER:
        raise ValueError(f"j_max must lie in [0, {MAX_CHAIN_ORDER}]")
    values, methods = [], []
    for j in range(j_max + 1):
        g = chain_function(p, r, j, method)
        values.append(np.asarray(g(z0), dtype=float).reshape(p.m))
        analytic = method == "auto" and p.has_analytic and j <= 3
        methods.append("exact" if j == 0 else ("closed_form" if analytic else "fd"))
    return ChainValues(z0, r, l, tuple(values), tuple(methods))


def chain_gradients(p: DerivativeProvider, z0, r, l, c: int) -> np.ndarray:
    """``c x n`` matrix whose row ``j`` is the gradient of ``z -> l . g_j(z)``.

    Rows 0 and 1 use ``l Df`` and ``l (D2f(Nr, I) + Df DN(I, r))``; higher rows
    difference the scalar chain.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    z0 = _point(z0)
    r = np.asarray(r, dtype=float).reshape(p.m)
    l = np.asarray(l, dtype=float).reshape(p.m)
    Df = jacobian_f(p, z0)
    rows = [l @ Df]
    if c >= 2:
        w = p.eval_N(z0) @ r
        M1 = contract(hessian_f(p, z0), [(1, w), (2, I)]) + Df @ contract(dN(p, z0), [(1, I), (2, r)])
        rows.append(l @ M1)
    for j in range(2, c):
        chain_depth = max(0, j - 3) if p.has_analytic else j
        g = chain_function(p, r, j, extra_depth=1)
        h = p.fd.coordinate_steps(z0, chain_depth + 1)
        rows.append(_fd_gradient(lambda z: l @ g(z), z0, h))
    return np.vstack(rows)


# ---------------------------------------------------------------------------
# analytic vs finite-difference cross-check
# ---------------------------------------------------------------------------

ORDER_TOLERANCES = {1: 1e-5, 2: 1e-5, 3: 1e-3}


@dataclass
class ValidationReport:
    discrepancies: dict[str, float]
    tolerances: dict[str, float]
    points_checked: int

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.discrepancies.items() if v > self.tolerances[k]]

    @property
    def passed(self) -> bool:
        return not self.failures


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))


def validate_provider(p: DerivativeProvider, sample_points) -> ValidationReport:
    """Compare each analytic tensor with a central difference of the one below it.

    Discrepancies are ``max|analytic - fd| / max(1, max|analytic|)`` over all
    sample points; orders 1-2 must stay below 1e-5 and order 3 below 1e-3.
    """
    fd_only = p.without_analytic()
    checks = {
        "Df": (p.df, 1, lambda z: jacobian_f(fd_only, z), lambda z: jacobian_f(p, z)),
        "D2f": (p.d2f, 2,
                lambda z: _fd_gradient(lambda y: jacobian_f(p, y), z, p.fd.coordinate_steps(z, 1)),
                lambda z: hessian_f(p, z).entries),
        "D3f": (p.d3f, 3,
                lambda z: _fd_gradient(lambda y: hessian_f(p, y).entries, z, p.fd.coordinate_steps(z, 1)),
                lambda z: third_f(p, z).entries),
        "DN": (p.dN, 1, lambda z: dN(fd_only, z).entries, lambda z: dN(p, z).entries),
        "D2N": (p.d2N, 2,
                lambda z: np.transpose(
                    _fd_gradient(lambda y: dN(p, y).entries, z, p.fd.coordinate_steps(z, 1)), (0, 1, 3, 2)),
                lambda z: d2N(p, z).entries),
    }
    disc, tols = {}, {}
    pts = [np.asarray(z, dtype=float) for z in sample_points]
    for name, (cb, order, fd_fun, an_fun) in checks.items():
        if cb is None:
            continue
        tols[name] = ORDER_TOLERANCES[order]
        disc[name] = max((_rel(an_fun(z), fd_fun(z)) for z in pts), default=0.0)
    return ValidationReport(disc, tols, len(pts))
