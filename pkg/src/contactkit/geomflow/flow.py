"""Integration of the full slow-fast field and of the desingularized layer flow."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .. import derivatives as dv
from ..errors import IntegrationError, SearchError
from ..models import FactorizedModel, eval_full
from ..tensorkit import determinant

__all__ = ["IntegratorConfig", "Trajectory", "TrajectoryEvent", "fiber_family", "integrate_full"]


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-8
    atol: float = 1e-10
    max_step: float = np.inf
    events: bool = True

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.max_step <= 0:
            raise ValueError("integrator tolerances must be positive")


@dataclass
class TrajectoryEvent:
    kind: str  # "f=0" (component index appended) or "det=0"
    t: float
    z: np.ndarray


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray
    stats: dict = field(default_factory=dict)
    events: list[TrajectoryEvent] = field(default_factory=list)
    dense: object = None

    @property
    def step_sizes(self) -> np.ndarray:
        return np.diff(self.t)

    def __call__(self, t):
        if self.dense is None:
            raise ValueError("trajectory has no dense output")
        return self.dense(t)


def _event_functions(model: FactorizedModel):
    p = model.provider
    funs, kinds = [], []
    for i in range(model.m):
        funs.append(lambda t, z, i=i: float(p.eval_f(z)[i]))
        kinds.append("f=0" if model.m == 1 else f"f{i}=0")
    funs.append(lambda t, z: determinant(dv.jacobian_f(p, z) @ p.eval_N(z)))
    kinds.append("det=0")
    return funs, kinds


def _solve(rhs, z0, t_span, cfg, model, what):
    funs, kinds = _event_functions(model) if cfg.events else ([], [])
    sol = solve_ivp(rhs, t_span, z0, method="RK45", rtol=cfg.rtol, atol=cfg.atol,
                    max_step=cfg.max_step, dense_output=True, events=funs or None)
    states = sol.y.T
    events = []
    if funs and sol.t_events is not None:
        for kind, ts, ys in zip(kinds, sol.t_events, sol.y_events):
            events.extend(TrajectoryEvent(kind, float(te), np.asarray(ye)) for te, ye in zip(ts, ys))
        events.sort(key=lambda e: e.t if t_span[1] >= t_span[0] else -e.t)
    stats = {"nfev": int(sol.nfev), "steps": int(sol.t.size - 1), "status": int(sol.status),
             "message": str(sol.message)}
    traj = Trajectory(sol.t, states, stats, events, sol.sol)
    if sol.status < 0 or not np.all(np.isfinite(states)):
        raise IntegrationError(f"{what} failed at t = {sol.t[-1]:.6g}: {sol.message}", traj)
    return traj


def integrate_full(model: FactorizedModel, z0, t_span, cfg: IntegratorConfig | None = None,
                   eps: float | None = None) -> Trajectory:
    """Integrate ``z' = N f + eps G`` with an adaptive 5(4) Runge-Kutta pair.

    Crossings of ``f = 0`` and ``det(Df N) = 0`` are located on the dense
    output and logged in ``events``.

    Raises
    ------
    IntegrationError
        On step-size underflow or non-finite states; the partial trajectory is
        attached.
    """
    cfg = cfg or IntegratorConfig()
    z0 = np.asarray(z0, dtype=float)
    if not np.all(np.isfinite(z0)):
        raise ValueError("initial state must be finite")
    eps = model.eps if eps is None else float(eps)
    return _solve(lambda t, z: eval_full(model, z, eps), z0, tuple(map(float, t_span)), cfg, model,
                  "integration")


def _join(back: Trajectory, fwd: Trajectory) -> Trajectory:
    t = np.concatenate([back.t[::-1], fwd.t[1:]])
    states = np.vstack([back.states[::-1], fwd.states[1:]])
    stats = {"backward": back.stats, "forward": fwd.stats}
    events = sorted(back.events + fwd.events, key=lambda e: e.t)

    def dense(tt):
        tt = np.asarray(tt, dtype=float)
        out = np.where(tt < 0, back.dense(np.minimum(tt, 0.0)), fwd.dense(np.maximum(tt, 0.0)))
        return out

    return Trajectory(t, states, stats, events, dense)


def fiber_family(model: FactorizedModel, seeds, t_span=(-2.0, 2.0), cfg: IntegratorConfig | None = None
                 ) -> list[Trajectory]:
    """Trajectories of ``z' = N(z)`` through each seed, backward to ``t_span[0]`` and forward to ``t_span[1]``.

    Each seed sits at ``t = 0``. Needs ``m = 1``.
    """
    if model.m != 1:
        raise SearchError("fibers of the desingularized layer flow need m = 1")
    cfg = cfg or IntegratorConfig()
    t0, t1 = map(float, t_span)
    if not t0 <= 0.0 <= t1:
        raise ValueError("t_span must contain 0")

    def rhs(t, z):
        return model.N(z)[:, 0]

    out = []
    for seed in np.atleast_2d(np.asarray(seeds, dtype=float)):
        fwd = _solve(rhs, seed, (0.0, t1), cfg, model, "fiber integration") if t1 > 0 else None
        back = _solve(rhs, seed, (0.0, t0), cfg, model, "fiber integration") if t0 < 0 else None
        if back is None:
            out.append(fwd)
        elif fwd is None:
            out.append(Trajectory(back.t[::-1], back.states[::-1], back.stats, back.events[::-1], back.dense))
        else:
            out.append(_join(back, fwd))
    return out
