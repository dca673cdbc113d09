"""Pointwise classification of the critical manifold: hyperbolic points, contact order, folds, cusps.

All zero/nonzero decisions go through :meth:`Tolerances.is_zero`, which
compares ``|value|`` with ``zero_abs + zero_rel * scale``. The scale is
``||Df|| * ||N r||`` at the point, a quantity that is unchanged when ``f`` is
multiplied by a constant and ``N`` divided by it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import derivatives as dv
from .derivatives import ChainValues
from .errors import DegenerateError, ProjectionError
from .geomflow.newton import NewtonConfig, project_to_S
from .models import FactorizedModel
from .tensorkit import RankTolerance, SpectrumResult, adjugate, eigenvalues, numerical_rank

__all__ = [
    "Classification",
    "ContactDiagnostics",
    "CuspReport",
    "FoldReport",
    "GenericityReport",
    "Tolerances",
    "classify",
    "contact_order",
    "cusp_test",
    "fold_test",
    "nontrivial_spectrum",
    "nullvectors",
    "on_critical_manifold",
    "slow_generic_test",
]

NOT_ON_S = "not_on_critical_manifold"
HYPERBOLIC = "normally_hyperbolic"
CONTACT = "contact"
DEGENERATE = "degenerate"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Tolerances:
    zero_abs: float = 1e-8
    zero_rel: float = 1e-6
    rank: RankTolerance = field(default_factory=RankTolerance)
    manifold_dist: float = 1e-9
    max_order: int = 4

    def __post_init__(self):
        if min(self.zero_abs, self.zero_rel, self.manifold_dist) <= 0:
            raise ValueError("tolerances must be positive")
        if not 1 <= self.max_order <= dv.MAX_CHAIN_ORDER - 1:
            raise ValueError(f"max_order must lie in [1, {dv.MAX_CHAIN_ORDER - 1}]")

    def threshold(self, scale: float) -> float:
        return self.zero_abs + self.zero_rel * scale

    def is_zero(self, value: float, scale: float) -> bool:
        return abs(value) <= self.threshold(scale)


@dataclass(frozen=True)
class Classification:
    kind: str
    order: int | None = None
    slow_generic: bool | None = None
    C0_rank: int | None = None
    rank_deficiency: int | None = None
    reason: str = ""
    flags: tuple[str, ...] = ()

    @property
    def is_fold(self) -> bool:
        return self.kind == CONTACT and self.order == 1 and bool(self.slow_generic)

    @property
    def is_cusp(self) -> bool:
        return self.kind == CONTACT and self.order == 2 and bool(self.slow_generic)

    @property
    def label(self) -> str:
        if self.kind != CONTACT:
            return self.kind
        if self.is_fold:
            return "fold"
        if self.is_cusp:
            return "cusp"
        return f"contact_order_{self.order}" + ("" if self.slow_generic else "_nongeneric")

    def same_verdict(self, other: "Classification") -> bool:
        return (self.kind, self.order, self.slow_generic, self.C0_rank) == (
            other.kind, other.order, other.slow_generic, other.C0_rank)


@dataclass
class ContactDiagnostics:
    z: np.ndarray
    seed: np.ndarray
    f_value: np.ndarray
    classification: Classification
    projection_displacement: float = 0.0
    DfN: np.ndarray | None = None
    spectrum: SpectrumResult | None = None
    submersion_rank: int | None = None
    l: np.ndarray | None = None
    r: np.ndarray | None = None
    chain: ChainValues | None = None
    full_vector_chain_norms: np.ndarray | None = None
    C0: np.ndarray | None = None
    C0_rank: int | None = None
    fold_coefficient: float | None = None
    cusp_coefficient: float | None = None
    scale: float | None = None


@dataclass
class FoldReport:
    is_fold: bool
    coefficient: float
    submersion_rank: int


@dataclass
class CuspReport:
    is_cusp: bool
    fold_coefficient: float
    third_order_coefficient: float
    C0: np.ndarray
    C0_rank: int
    submersion_rank: int


@dataclass
class GenericityReport:
    is_slow_generic: bool
    C0: np.ndarray
    C0_rank: int
    reason: str = ""


def _tol(tol):
    return tol if tol is not None else Tolerances()


def _dfn(model, z):
    return dv.jacobian_f(model.provider, z) @ model.N(z)


def on_critical_manifold(model: FactorizedModel, z, tol: Tolerances | None = None) -> tuple[bool, float]:
    """``||f(z)||_inf <= manifold_dist * max(1, ||Df(z)||)``; returns the flag and residual."""
    tol = _tol(tol)
    z = np.asarray(z, dtype=float)
    res = float(np.max(np.abs(model.f(z))))
    scale = max(1.0, float(np.max(np.abs(dv.jacobian_f(model.provider, z)))))
    return res <= tol.manifold_dist * scale, res


def nontrivial_spectrum(model: FactorizedModel, z) -> SpectrumResult:
    return eigenvalues(_dfn(model, np.asarray(z, dtype=float)))


def _unit(v):
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    return v


def nullvectors(model: FactorizedModel, z, tol: Tolerances | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Left and right nullvectors of ``Df N`` from the adjugate.

    ``r`` is the largest column and ``l`` the largest row of ``adj(Df N)``,
    both unit length with first nonzero entry positive.

    Raises
    ------
    DegenerateError
        If the rank of ``Df N`` is at most ``m - 2`` (the adjugate vanishes).
    """
    tol = _tol(tol)
    z = np.asarray(z, dtype=float)
    if model.m == 1:
        return np.ones(1), np.ones(1)
    A = _dfn(model, z)
    rk = _rank_dfn(model, z, A, tol)
    if rk <= model.m - 2:
        raise DegenerateError(f"rank(Df N) = {rk} <= m - 2; adjugate vanishes", model.m - rk)
    adj = adjugate(A)
    r = _unit(adj[:, np.argmax(np.linalg.norm(adj, axis=0))])
    l = _unit(adj[np.argmax(np.linalg.norm(adj, axis=1)), :])
    return l, r


def _scale(model, z, r):
    Df = dv.jacobian_f(model.provider, z)
    return float(np.linalg.norm(Df, 2) * np.linalg.norm(model.N(z) @ r))


def _rank_dfn(model, z, A, tol):
    thr = tol.threshold(float(np.linalg.norm(dv.jacobian_f(model.provider, z), 2) * np.linalg.norm(model.N(z), 2)))
    return numerical_rank(A, RankTolerance(absolute=thr, relative=tol.rank.relative))


def contact_order(model: FactorizedModel, z, tol: Tolerances | None = None, max_order: int | None = None,
                  lr: tuple[np.ndarray, np.ndarray] | None = None):
    """Smallest ``c`` with ``l g_j = 0`` for ``j <= c`` and ``l g_{c+1} != 0``.

    Returns ``(c, chain, flags)``; ``c`` is ``None`` when every projected
    value up to ``max_order + 1`` vanishes. The flag
    ``"full_vector_disagrees"`` marks points where the unprojected chain
    vectors give a different order.
    """
    tol = _tol(tol)
    max_order = max_order or tol.max_order
    z = np.asarray(z, dtype=float)
    l, r = lr if lr is not None else nullvectors(model, z, tol)
    chain = dv.chain_values(model.provider, z, r, l, j_max=max_order + 1)
    scale = _scale(model, z, r)
    c_proj = _first_nonzero(chain.projected, scale, tol)
    c_full = _first_nonzero(chain.full_norms, scale, tol)
    flags = ()
    if c_proj != c_full:
        flags = ("full_vector_disagrees",)
    return c_proj, chain, flags


def _first_nonzero(values, scale, tol):
    for j in range(1, len(values)):
        if not tol.is_zero(values[j], scale):
            return j - 1 if j >= 2 else 0
    return None


def fold_test(model: FactorizedModel, z, tol: Tolerances | None = None) -> FoldReport:
    """Submersion rank and ``l (D2f(Nr,Nr) + Df DN(Nr,r))`` at a contact point."""
    tol = _tol(tol)
    z = np.asarray(z, dtype=float)
    l, r = nullvectors(model, z, tol)
    g2 = dv.chain_values(model.provider, z, r, l, j_max=2).projected[2]
    srank = numerical_rank(dv.jacobian_f(model.provider, z), tol.rank)
    ok = srank == model.m and not tol.is_zero(g2, _scale(model, z, r))
    return FoldReport(ok, float(g2), srank)


def cusp_test(model: FactorizedModel, z, tol: Tolerances | None = None) -> CuspReport:
    tol = _tol(tol)
    z = np.asarray(z, dtype=float)
    l, r = nullvectors(model, z, tol)
    proj = dv.chain_values(model.provider, z, r, l, j_max=3).projected
    scale = _scale(model, z, r)
    C0 = dv.chain_gradients(model.provider, z, r, l, 2)
    C0_rank = numerical_rank(C0, tol.rank)
    srank = numerical_rank(dv.jacobian_f(model.provider, z), tol.rank)
    ok = (srank == model.m and tol.is_zero(proj[2], scale) and not tol.is_zero(proj[3], scale)
          and C0_rank == 2)
    return CuspReport(ok, float(proj[2]), float(proj[3]), C0, C0_rank, srank)


def slow_generic_test(model: FactorizedModel, z, c: int, tol: Tolerances | None = None,
                      lr: tuple[np.ndarray, np.ndarray] | None = None) -> GenericityReport:
    """Rank ``c`` of the chain-gradient matrix ``C0`` plus the order-``c`` chain conditions."""
    tol = _tol(tol)
    z = np.asarray(z, dtype=float)
    l, r = lr if lr is not None else nullvectors(model, z, tol)
    C0 = dv.chain_gradients(model.provider, z, r, l, c)
    C0_rank = numerical_rank(C0, tol.rank)
    if model.k < c:
        return GenericityReport(False, C0, C0_rank, f"needs at least {c} slow variables, have k = {model.k}")
    if numerical_rank(dv.jacobian_f(model.provider, z), tol.rank) != model.m:
        return GenericityReport(False, C0, C0_rank, "Df is not a submersion")
    proj = dv.chain_values(model.provider, z, r, l, j_max=c + 1).projected
    scale = _scale(model, z, r)
    if not all(tol.is_zero(v, scale) for v in proj[: c + 1]) or tol.is_zero(proj[c + 1], scale):
        return GenericityReport(False, C0, C0_rank, f"chain conditions for order {c} fail")
    if C0_rank != c:
        return GenericityReport(False, C0, C0_rank, f"rank C0 = {C0_rank} < {c}")
    return GenericityReport(True, C0, C0_rank)


def classify(model: FactorizedModel, z, tol: Tolerances | None = None, project: bool = False,
             newton: NewtonConfig | None = None) -> ContactDiagnostics:
    """Run the full pipeline at one point and keep every intermediate quantity.

    Points within ``manifold_dist`` of ``S`` are first projected onto it; with
    ``project=True`` any seed is projected.
    """
    tol = _tol(tol)
    seed = np.array(z, dtype=float)
    z = seed.copy()
    on_S, res = on_critical_manifold(model, z, tol)
    if (on_S and res > 0.0) or (project and not on_S):
        try:
            z = project_to_S(model, z, newton)
        except ProjectionError as exc:
            if not on_S:
                return ContactDiagnostics(z, seed, model.f(z), Classification(
                    NOT_ON_S, reason=f"projection failed: {exc}"))
        on_S, res = on_critical_manifold(model, z, tol)
    diag = ContactDiagnostics(z, seed, model.f(z), Classification(NOT_ON_S),
                              projection_displacement=float(np.linalg.norm(z - seed)))
    if not on_S:
        diag.classification = Classification(NOT_ON_S, reason=f"|f| = {res:.3e}")
        return diag

    p = model.provider
    Df = dv.jacobian_f(p, z)
    A = Df @ model.N(z)
    diag.DfN = A
    diag.spectrum = eigenvalues(A)
    diag.submersion_rank = numerical_rank(Df, tol.rank)
    eig_scale = float(np.linalg.norm(Df, 2) * np.linalg.norm(model.N(z), 2))
    near_zero = int(np.count_nonzero(np.abs(diag.spectrum.eigenvalues) <= tol.threshold(eig_scale)))
    if near_zero == 0:
        diag.classification = Classification(HYPERBOLIC)
        return diag

    rk = _rank_dfn(model, z, A, tol)
    if rk <= model.m - 2:
        diag.classification = Classification(DEGENERATE, rank_deficiency=model.m - rk,
                                             reason="rank(Df N) <= m - 2")
        return diag
    if rk == model.m:
        diag.classification = Classification(INCONCLUSIVE, reason="near-zero eigenvalue but Df N has full rank")
        return diag

    l, r = nullvectors(model, z, tol)
    diag.l, diag.r = l, r
    c, chain, flags = contact_order(model, z, tol, lr=(l, r))
    diag.chain = chain
    diag.full_vector_chain_norms = chain.full_norms
    diag.scale = _scale(model, z, r)
    proj = chain.projected
    diag.fold_coefficient = float(proj[2])
    diag.cusp_coefficient = float(proj[3]) if len(proj) > 3 else None
    if diag.submersion_rank != model.m:
        flags = flags + ("submersion_failure",)

    if c is None or c == 0:
        n_rows = 2 if model.k >= 2 else 1
        diag.C0 = dv.chain_gradients(p, z, r, l, n_rows)
        diag.C0_rank = numerical_rank(diag.C0, tol.rank)
        reason = ("no nonzero chain value up to order "
                  f"{tol.max_order + 1}") if c is None else "first chain value does not vanish"
        diag.classification = Classification(INCONCLUSIVE, C0_rank=diag.C0_rank, reason=reason, flags=flags)
        return diag

    gen = slow_generic_test(model, z, c, tol, lr=(l, r))
    diag.C0, diag.C0_rank = gen.C0, gen.C0_rank
    diag.classification = Classification(CONTACT, order=c, slow_generic=gen.is_slow_generic,
                                         C0_rank=gen.C0_rank, reason=gen.reason, flags=flags)
    return diag
