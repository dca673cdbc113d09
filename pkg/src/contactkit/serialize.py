"""JSON and CSV encodings of diagnostics, branches and trajectories.

Floats are written with 17 significant digits so every value round-trips
exactly; formatting never depends on the locale.
"""
from __future__ import annotations

import json
import math
from typing import Iterable, Sequence, TextIO

import numpy as np

SCHEMA = "contact-kit/1"

__all__ = [
    "SCHEMA",
    "branch_rows",
    "diagnostics_to_dict",
    "dump_json",
    "fmt",
    "grid_header",
    "grid_row",
    "trajectory_rows",
    "write_csv",
]


def fmt(v) -> str:
    """CSV cell text; floats at full double precision."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dump_json(obj, stream: TextIO) -> None:
    """Write ``obj`` with the schema tag first; non-finite floats become ``null``."""
    payload = {"schema": SCHEMA, **_clean(obj)}
    json.dump(payload, stream, indent=2, allow_nan=False)
    stream.write("\n")


def write_csv(header: Sequence[str], rows: Iterable[Sequence], stream: TextIO) -> None:
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(fmt(v) for v in row) + "\n")


def _tolerances_dict(tol) -> dict:
    return {
        "zero_abs": tol.zero_abs,
        "zero_rel": tol.zero_rel,
        "manifold_dist": tol.manifold_dist,
        "rank_absolute": tol.rank.absolute,
        "rank_relative": tol.rank.relative,
        "max_order": tol.max_order,
    }


def diagnostics_to_dict(diag, model, tol) -> dict:
    """The documented diagnostics record for one classified point."""
    cls = diag.classification
    out = {
        "model": model.name,
        "face": model.face,
        "parameters": dict(model.params),
        "variables": list(model.variables),
        "point": diag.seed,
        "projected_point": diag.z,
        "projection_displacement": diag.projection_displacement,
        "f_value": diag.f_value,
        "verdict": {
            "kind": cls.kind,
            "label": cls.label,
            "order": cls.order,
            "slow_generic": cls.slow_generic,
            "rank_deficiency": cls.rank_deficiency,
            "reason": cls.reason,
            "flags": list(cls.flags),
        },
        "eigenvalues": None,
        "submersion_rank": diag.submersion_rank,
        "l": diag.l,
        "r": diag.r,
        "chain": None,
        "fold_coefficient": diag.fold_coefficient,
        "cusp_coefficient": diag.cusp_coefficient,
        "C0": None,
        "tolerances": _tolerances_dict(tol),
    }
    if diag.spectrum is not None:
        out["eigenvalues"] = [[float(e.real), float(e.imag)] for e in diag.spectrum.eigenvalues]
    if diag.chain is not None:
        out["chain"] = [
            {"order": j, "l_projected": float(p), "full_norm": float(q), "method": m}
            for j, (p, q, m) in enumerate(zip(diag.chain.projected, diag.chain.full_norms, diag.chain.methods))
        ]
    if diag.C0 is not None:
        out["C0"] = {"rows": diag.C0, "rank": diag.C0_rank}
    return out


def grid_header(variables: Sequence[str]) -> list[str]:
    return (["index"] + list(variables) + [f"projected_{v}" for v in variables]
            + ["verdict", "order", "slow_generic", "fold_coefficient", "cusp_coefficient", "C0_rank", "flags"])


def grid_row(index: int, diag) -> list:
    c = diag.classification
    return ([index] + list(diag.seed) + list(diag.z)
            + [c.label, c.order, c.slow_generic, diag.fold_coefficient, diag.cusp_coefficient, diag.C0_rank,
               "|".join(c.flags)])


def branch_rows(branch, variables: Sequence[str]):
    """Header and rows for a branch; located verdict changes are ``event`` rows."""
    header = (["row_type", "arclength"] + list(variables)
              + ["verdict", "order", "fold_coefficient", "cusp_coefficient", "event"])
    rows = []
    for p in branch.points:
        rows.append((p.s, 0, ["point", p.s] + list(p.z)
                     + [p.label, p.order, p.fold_coefficient, p.cusp_coefficient, ""]))
    for e in branch.events:
        rows.append((e.s, 1, ["event", e.s] + list(e.z)
                     + [e.label, None, e.fold_coefficient, e.cusp_coefficient, f"{e.before}->{e.after}"]))
    rows.sort(key=lambda r: (r[0], r[1]))
    return header, [r[2] for r in rows]


def trajectory_rows(trajectories, variables: Sequence[str], with_id: bool = True):
    header = (["fiber"] if with_id else []) + ["t"] + list(variables)
    rows = []
    for i, tr in enumerate(trajectories):
        for t, z in zip(tr.t, tr.states):
            rows.append(([i] if with_id else []) + [t] + list(z))
    return header, rows
