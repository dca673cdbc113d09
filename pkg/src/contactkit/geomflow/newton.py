"""Gauss-Newton solvers: projection onto S, contact-point search, equilibria of N."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import root

from .. import derivatives as dv
from ..errors import ProjectionError, SearchError
from ..models import FactorizedModel, eval_full
from ..tensorkit import SpectrumResult, adjugate, determinant, eigenvalues

__all__ = [
    "NewtonConfig",
    "NewtonResult",
    "full_equilibrium",
    "augmented_jacobian",
    "augmented_residual",
    "desingularized_equilibria",
    "det_gradient",
    "find_contact_point",
    "gauss_newton",
    "project_to_S",
]


@dataclass(frozen=True)
class NewtonConfig:
    max_iters: int = 50
    step_tol: float = 1e-12
    residual_tol: float = 1e-12
    min_damping: float = 2.0**-20

    def __post_init__(self):
        if self.max_iters < 1 or min(self.step_tol, self.residual_tol, self.min_damping) <= 0:
            raise ValueError("Newton tolerances must be positive")


@dataclass
class NewtonResult:
    x: np.ndarray
    residual: float
    iterations: int
    converged: bool
    message: str = ""


def gauss_newton(F, J, x0, cfg: NewtonConfig | None = None) -> NewtonResult:
    """Damped Gauss-Newton with minimum-norm (pseudo-inverse) steps.

    Works for square, under- and overdetermined systems; the step is halved
    until the residual norm decreases, down to ``cfg.min_damping``.
    """
    cfg = cfg or NewtonConfig()
    x = np.array(x0, dtype=float)
    r = np.atleast_1d(F(x))
    res = float(np.max(np.abs(r)))
    for it in range(cfg.max_iters + 1):
        if res <= cfg.residual_tol:
            return NewtonResult(x, res, it, True)
        if it == cfg.max_iters:
            break
        dx = np.linalg.lstsq(np.atleast_2d(J(x)), -r, rcond=None)[0]
        t = 1.0
        while True:
            xn = x + t * dx
            rn = np.atleast_1d(F(xn))
            resn = float(np.max(np.abs(rn)))
            if np.isfinite(resn) and resn < res:
                break
            t *= 0.5
            if t < cfg.min_damping:
                return NewtonResult(x, res, it, False, "line search failed")
        step = float(np.max(np.abs(t * dx)))
        x, r, res = xn, rn, resn
        if step <= cfg.step_tol * (1.0 + float(np.max(np.abs(x)))):
            return NewtonResult(x, res, it + 1, res <= cfg.residual_tol, "step below tolerance")
    return NewtonResult(x, res, cfg.max_iters, False, "iteration limit")


def project_to_S(model: FactorizedModel, z_seed, cfg: NewtonConfig | None = None) -> np.ndarray:
    """Gauss-Newton foot point on ``f = 0`` close to the seed."""
    p = model.provider
    res = gauss_newton(p.eval_f, lambda z: dv.jacobian_f(p, z), z_seed, cfg)
    if not res.converged:
        raise ProjectionError(
            f"projection onto S failed ({res.message}); residual {res.residual:.3e}",
            point=res.x, residual=res.residual,
        )
    return res.x


def _dfn(p, z):
    return dv.jacobian_f(p, z) @ p.eval_N(z)


def det_gradient(model: FactorizedModel, z) -> np.ndarray:
    """Gradient of ``det(Df N)`` via ``d det = tr(adj(Df N) d(Df N))``."""
    p = model.provider
    z = np.asarray(z, dtype=float)
    if not p.has_analytic:
        h = p.fd.coordinate_steps(z, 1)
        return dv._fd_gradient(lambda y: np.array(determinant(_dfn(p, y))), z, h)
    Df = dv.jacobian_f(p, z)
    Nz = p.eval_N(z)
    D2f = dv.hessian_f(p, z).entries
    DN = dv.dN(p, z).entries
    dDfN = np.einsum("ajk,jb->abk", D2f, Nz) + np.einsum("aj,jkb->abk", Df, DN)
    return np.einsum("ba,abk->k", adjugate(Df @ Nz), dDfN)


def augmented_residual(model: FactorizedModel, z) -> np.ndarray:
    """``(f(z), det(Df N)(z))``; its zero set is the contact set candidate."""
    p = model.provider
    return np.concatenate([p.eval_f(z), [determinant(_dfn(p, z))]])


def augmented_jacobian(model: FactorizedModel, z) -> np.ndarray:
    return np.vstack([dv.jacobian_f(model.provider, z), det_gradient(model, z)])


def find_contact_point(model: FactorizedModel, z_seed, cfg: NewtonConfig | None = None,
                       fixed: dict[int, float] | None = None) -> np.ndarray:
    """Solve ``f = 0, det(Df N) = 0`` from a seed.

    ``fixed`` pins coordinates (index -> value) by adding equations, which
    selects one point on a contact curve.
    """
    if model.m + 1 > model.n:
        raise SearchError("augmented contact system has more equations than unknowns")
    fixed = dict(fixed or {})
    idx = np.array(sorted(fixed), dtype=int)
    vals = np.array([fixed[i] for i in idx], dtype=float)

    def F(z):
        return np.concatenate([augmented_residual(model, z), z[idx] - vals])

    def J(z):
        E = np.zeros((idx.size, model.n))
        E[np.arange(idx.size), idx] = 1.0
        return np.vstack([augmented_jacobian(model, z), E])

    res = gauss_newton(F, J, z_seed, cfg)
    if not res.converged:
        raise SearchError(f"contact point search failed ({res.message}); residual {res.residual:.3e}")
    return res.x


def desingularized_equilibria(model: FactorizedModel, seed, cfg: NewtonConfig | None = None
                              ) -> tuple[np.ndarray, SpectrumResult]:
    """Zero of ``N`` (codimension one only) and the spectrum of ``DN`` there."""
    if model.m != 1:
        raise SearchError("desingularized layer flow needs m = 1")
    p = model.provider
    res = gauss_newton(lambda z: p.eval_N(z)[:, 0], lambda z: dv.dN(p, z).entries[:, :, 0], seed, cfg)
    if not res.converged:
        raise SearchError(f"no zero of N found ({res.message}); residual {res.residual:.3e}")
    return res.x, eigenvalues(dv.dN(p, res.x).entries[:, :, 0])


def full_equilibrium(model: FactorizedModel, seed, eps: float | None = None) -> tuple[np.ndarray, float]:
    """Equilibrium of the full field ``N f + eps G`` near ``seed``.

    Returns the point and its distance from ``seed``; for eps > 0 a zero of
    ``N`` generally moves by O(eps).
    """
    seed = np.asarray(seed, dtype=float)
    sol = root(lambda z: eval_full(model, z, eps), seed, method="hybr", options={"xtol": 1e-13})
    resid = float(np.max(np.abs(eval_full(model, sol.x, eps))))
    if not sol.success or resid > 1e-10:
        raise SearchError(f"no full-system equilibrium near seed ({sol.message}); residual {resid:.3e}")
    return sol.x, float(np.linalg.norm(sol.x - seed))
