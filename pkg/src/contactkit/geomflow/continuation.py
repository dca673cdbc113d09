"""Pseudo-arclength continuation of the contact curve ``{f = 0, det(Df N) = 0}``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import SearchError
from ..models import FactorizedModel
from .newton import NewtonConfig, augmented_jacobian, augmented_residual, gauss_newton

__all__ = [
    "Branch",
    "BranchEvent",
    "BranchPoint",
    "ContinuationConfig",
    "continue_contact_curve",
    "curve_tangent",
]


@dataclass(frozen=True)
class ContinuationConfig:
    """Step sizes are multiples of the largest side of ``model.domain``."""

    initial_step: float = 0.01
    min_step: float = 1e-6
    max_step: float = 0.1
    grow: float = 1.3
    grow_after: int = 3
    max_points: int = 2000
    domain_slack: float = 0.05
    locate_tol: float = 1e-10
    bidirectional: bool = True
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self):
        if not 0 < self.min_step <= self.initial_step <= self.max_step:
            raise ValueError("need 0 < min_step <= initial_step <= max_step")
        if self.grow <= 1 or self.grow_after < 1 or self.max_points < 2:
            raise ValueError("invalid step growth or point budget")


@dataclass
class BranchPoint:
    z: np.ndarray
    s: float
    tangent: np.ndarray
    label: str
    order: int | None
    fold_coefficient: float | None
    cusp_coefficient: float | None


@dataclass
class BranchEvent:
    """A verdict change between neighbouring points, located in arclength."""

    z: np.ndarray
    s: float
    before: str
    after: str
    label: str
    fold_coefficient: float | None
    cusp_coefficient: float | None


@dataclass
class Branch:
    points: list[BranchPoint]
    step_sizes: list[float]
    termination: tuple[str, ...]
    events: list[BranchEvent]

    @property
    def states(self) -> np.ndarray:
        return np.array([p.z for p in self.points])

    @property
    def arclength(self) -> np.ndarray:
        return np.array([p.s for p in self.points])

    def cusps(self) -> list[BranchEvent]:
        return [e for e in self.events if e.label == "cusp"]


def curve_tangent(model: FactorizedModel, z, orient=None) -> np.ndarray:
    """Unit null vector of the augmented Jacobian, oriented along ``orient``."""
    J = augmented_jacobian(model, z)
    _, sv, Vt = np.linalg.svd(J)
    t = Vt[-1]
    if orient is not None:
        if float(np.dot(t, orient)) < 0:
            t = -t
    else:
        nz = np.flatnonzero(np.abs(t) > 1e-12)
        if nz.size and t[nz[0]] < 0:
            t = -t
    return t


def _summary(model, z, tol):
    from ..classifier import classify

    d = classify(model, z, tol)
    return d.classification.label, d.classification.order, d.fold_coefficient, d.cusp_coefficient


def _correct(model, z_pred, t, cfg):
    def F(z):
        return np.concatenate([augmented_residual(model, z), [np.dot(t, z - z_pred)]])

    def J(z):
        return np.vstack([augmented_jacobian(model, z), t])

    return gauss_newton(F, J, z_pred, cfg)


def _inside(model, z, slack):
    lo, hi = model.domain[:, 0], model.domain[:, 1]
    pad = slack * (hi - lo)
    return bool(np.all(z >= lo - pad) and np.all(z <= hi + pad))


def _trace(model, z0, t0, cfg, scale, tol, sign):
    """One direction from ``z0``; returns points (excluding ``z0``), steps and reason."""
    h = cfg.initial_step * scale
    hmin, hmax = cfg.min_step * scale, cfg.max_step * scale
    z, t, s = z0, t0, 0.0
    pts, steps = [], []
    streak = 0
    while True:
        if len(pts) + 1 >= cfg.max_points:
            return pts, steps, "max points"
        z_pred = z + h * t
        res = _correct(model, z_pred, t, cfg.newton)
        ok = res.converged and np.linalg.norm(res.x - z) <= 2.0 * h
        if not ok:
            h *= 0.5
            streak = 0
            if h < hmin:
                return pts, steps, "step failure"
            continue
        zn = res.x
        if not _inside(model, zn, cfg.domain_slack):
            return pts, steps, "domain exit"
        tn = curve_tangent(model, zn, orient=zn - z)
        ds = float(np.linalg.norm(zn - z))
        s += ds
        label, order, fc, cc = _summary(model, zn, tol)
        pts.append(BranchPoint(zn, sign * s, tn, label, order, fc, cc))
        steps.append(h)
        if len(pts) > 3 and np.linalg.norm(zn - z0) < h and np.dot(zn - z, z0 - z) > 0:
            return pts, steps, "closed loop"
        z, t = zn, tn
        streak += 1
        if streak >= cfg.grow_after:
            h = min(h * cfg.grow, hmax)
            streak = 0


def _point_between(model, a: BranchPoint, b: BranchPoint, theta, cfg):
    d = b.z - a.z
    chord = d / np.linalg.norm(d)
    res = _correct(model, a.z + theta * d, chord, cfg.newton)
    if not res.converged:
        raise SearchError("corrector failed while locating a verdict change")
    return res.x


def _locate(model, a: BranchPoint, b: BranchPoint, cfg, tol):
    """Locate the verdict change between ``a`` and ``b`` to ``cfg.locate_tol`` in arclength."""
    from ..classifier import classify

    length = float(np.linalg.norm(b.z - a.z))
    xtol = max(cfg.locate_tol / max(length, 1e-300), 1e-15)
    fa, fb = a.fold_coefficient, b.fold_coefficient

    def fold(theta):
        return classify(model, _point_between(model, a, b, theta, cfg), tol).fold_coefficient

    if fa is not None and fb is not None and fa * fb < 0:
        theta = brentq(fold, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps)
    elif fa == 0.0 or fb == 0.0:
        theta = 0.0 if fa == 0.0 else 1.0
    else:
        lo, hi = 0.0, 1.0
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            lab = classify(model, _point_between(model, a, b, mid, cfg), tol).classification.label
            if lab == a.label:
                lo = mid
            else:
                hi = mid
        theta = hi
    z = _point_between(model, a, b, theta, cfg) if 0.0 < theta < 1.0 else (a.z if theta == 0 else b.z)
    d = classify(model, z, tol)
    s = a.s + theta * (b.s - a.s)
    return BranchEvent(z, s, a.label, b.label, d.classification.label, d.fold_coefficient, d.cusp_coefficient)


def continue_contact_curve(model: FactorizedModel, z0, cfg: ContinuationConfig | None = None,
                           direction=None, tol=None) -> Branch:
    """Trace the contact curve through ``z0`` and flag verdict changes along it.

    ``direction`` orients the forward part of the branch; with
    ``cfg.bidirectional`` the backward part is traced too and stored with
    negative arclength. Points are returned in increasing arclength.

    Raises
    ------
    SearchError
        If ``k != 2`` or ``z0`` does not satisfy the augmented system.
    """
    cfg = cfg or ContinuationConfig()
    if model.k != 2:
        raise SearchError(f"continuation supports contact curves only (k = 2), got k = {model.k}")
    z0 = np.asarray(z0, dtype=float)
    if np.max(np.abs(augmented_residual(model, z0))) > cfg.newton.residual_tol * 1e3:
        raise SearchError("initial point is not on the contact set")
    scale = float(np.max(model.domain[:, 1] - model.domain[:, 0]))
    t0 = curve_tangent(model, z0, orient=direction)
    label, order, fc, cc = _summary(model, z0, tol)
    start = BranchPoint(z0, 0.0, t0, label, order, fc, cc)

    fwd, fsteps, freason = _trace(model, z0, t0, cfg, scale, tol, 1.0)
    if cfg.bidirectional:
        bwd, bsteps, breason = _trace(model, z0, -t0, cfg, scale, tol, -1.0)
        for p in bwd:
            p.tangent = -p.tangent
        pts = bwd[::-1] + [start] + fwd
        steps = bsteps[::-1] + fsteps
        reasons = (breason, freason)
    else:
        pts, steps, reasons = [start] + fwd, fsteps, (freason,)

    return Branch(pts, steps, reasons, _events(model, pts, cfg, tol))


def _sign_change(a, b):
    fa, fb = a.fold_coefficient, b.fold_coefficient
    return fa is not None and fb is not None and fa * fb < 0


def _events(model, pts, cfg, tol):
    # A point that itself carries a different verdict from both neighbours is
    # reported as is; otherwise changes between neighbours are located.
    events, i = [], 0
    while i < len(pts) - 1:
        a, b = pts[i], pts[i + 1]
        nxt = pts[i + 2] if i + 2 < len(pts) else None
        if b.label != a.label and nxt is not None and nxt.label == a.label:
            events.append(BranchEvent(b.z, b.s, a.label, nxt.label, b.label, b.fold_coefficient,
                                      b.cusp_coefficient))
            i += 2
            continue
        if a.label != b.label or _sign_change(a, b):
            events.append(_locate(model, a, b, cfg, tol))
        i += 1
    return events
