"""Report assembly and deterministic serialization ("hyperkin-report/1")."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__
from ..kinematics import tensor_norm
from .runner import GridResult, stretching_route_residual
from .scenario_io import scenario_to_dict

SCHEMA = "hyperkin-report/1"
NORM_POLICY = ("verdicts use grid sup-norms of g-norms; affine iff sup|grad D| / (1 + sup|D|) < tol_affine, "
               "isometric iff sup|D| < tol_iso; route residuals are max|a - b| / (1 + max(|a|, |b|)) per point")


class ReportIOError(OSError):
    pass


def _sup(arrays) -> float:
    vals = [float(np.max(a)) for a in arrays if np.size(a)]
    return max(vals) if vals else 0.0


def build_report(res: GridResult) -> dict[str, Any]:
    points = []
    pair_sups: dict[str, list] = {}
    route_sups: dict[str, list] = {}
    sym_sups: dict[str, list] = {}
    d_route = []
    for b in res.batches:
        fr, kin, rec = b.frame, b.kin, b.record
        g, gi = fr.g.value, fr.g_inv.value
        s_eigs = np.sort(np.abs(np.linalg.eigvals(fr.S.value).real), axis=-1)
        dres = stretching_route_residual(b)
        d_route.append(dres)
        maxres = rec.max_route_residual()
        route_norms = {k: tensor_norm(v, "udd", g, gi) for k, v in rec.routes.items()}
        for k, v in rec.residuals.items():
            pair_sups.setdefault(k, []).append(v)
        for k, v in route_norms.items():
            route_sups.setdefault(k, []).append(v)
        for k, v in rec.symmetry.items():
            sym_sups.setdefault(k, []).append(v)
        for p in range(b.size):
            points.append({
                "index": [int(i) for i in b.index[p]],
                "u": [float(x) for x in b.X[p]],
                "t": b.t,
                "g": g[p].tolist(),
                "christoffel": fr.christoffel.value[p].tolist(),
                "shape_eigen_abs": s_eigs[p].tolist(),
                "v_n": float(rec.v_n[p]),
                "v_par_norm": float(rec.v_par_norm[p]),
                "D": kin.D.value[p].tolist(),
                "D_norm": float(rec.D_norm[p]),
                "grad_D_norm": float(rec.grad_D_norm[p]),
                "dconn": {k: v[p].tolist() for k, v in rec.routes.items()},
                "dconn_norm": {k: float(v[p]) for k, v in route_norms.items()},
                "residuals": {k: float(v[p]) for k, v in rec.residuals.items()},
                "max_route_residual": float(maxres[p]),
                "stretching_route_residual": float(dres[p]),
            })
    points.sort(key=lambda r: (r["t"], r["index"]))
    aggregates = {
        "n_points": len(points),
        "n_skipped": len(res.skipped),
        "sup_route_residual": _sup(pair_sups[k] for k in pair_sups) if pair_sups else 0.0,
        "sup_route_residual_by_pair": {k: _sup(v) for k, v in pair_sups.items()},
        "sup_dconn_by_route": {k: _sup(v) for k, v in route_sups.items()},
        "sup_symmetry_by_route": {k: _sup(v) for k, v in sym_sups.items()},
        "sup_stretching_route_residual": _sup(d_route),
        "sup_grad_D": res.verdict.sup_grad_D,
        "sup_D": res.verdict.sup_D,
        "sup_dconn": res.verdict.sup_dconn,
        "routes_agree": bool(not pair_sups or _sup(pair_sups[k] for k in pair_sups) < res.options.tol_route),
    }
    return {
        "schema": SCHEMA,
        "generator": f"hyperkin {__version__}",
        "scenario": scenario_to_dict(res.scenario),
        "tolerances": res.options.tolerances(),
        "fd_validate": res.options.fd_validate,
        "norm_policy": NORM_POLICY,
        "points": points,
        "skipped": [{"index": list(s.index), "u": list(s.X), "t": s.t, "reason": s.reason} for s in res.skipped],
        "aggregates": aggregates,
        "verdict": res.verdict.as_dict(),
    }


# serialization ---------------------------------------------------------------------
def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    s = "%.17g" % x
    if s == "-0":
        s = "0"
    return s


def _encode(obj: Any, out: list[str], indent: int, level: int) -> None:
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + pad if indent else ","
    colon = ": " if indent else ":"
    if obj is None:
        out.append("null")
    elif isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + pad)
        for k, key in enumerate(sorted(obj, key=str)):
            if k:
                out.append(sep)
            out.append(json.dumps(str(key), ensure_ascii=False) + colon)
            _encode(obj[key], out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = obj.tolist() if isinstance(obj, np.ndarray) else obj
        if not items:
            out.append("[]")
            return
        if all(isinstance(x, (int, float, bool)) or x is None for x in items):
            out.append("[")
            for k, x in enumerate(items):
                if k:
                    out.append(", " if indent else ",")
                _encode(x, out, indent, level + 1)
            out.append("]")
            return
        out.append("[" + pad)
        for k, x in enumerate(items):
            if k:
                out.append(sep)
            _encode(x, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 1) -> str:
    """JSON with sorted keys and "%.17g" floats (round-trips bit-exactly)."""
    out: list[str] = []
    _encode(obj, out, indent, 0)
    return "".join(out) + "\n"


CSV_COLUMNS = ["t", "index", "u", "v_n", "v_par_norm", "D_norm", "grad_D_norm", "dconn_norm",
               "max_route_residual", "stretching_route_residual",
               "sup_grad_D", "sup_D", "sup_route_residual", "affine", "isometric"]


def csv_summary(report: dict[str, Any]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    agg, verdict = report["aggregates"], report["verdict"]
    for p in report["points"]:
        w.writerow([
            _fmt_float(p["t"]),
            " ".join(str(i) for i in p["index"]),
            " ".join(_fmt_float(x) for x in p["u"]),
            _fmt_float(p["v_n"]),
            _fmt_float(p["v_par_norm"]),
            _fmt_float(p["D_norm"]),
            _fmt_float(p["grad_D_norm"]),
            _fmt_float(p["dconn_norm"]["definition"]),
            _fmt_float(p["max_route_residual"]),
            _fmt_float(p["stretching_route_residual"]),
            _fmt_float(agg["sup_grad_D"]),
            _fmt_float(agg["sup_D"]),
            _fmt_float(agg["sup_route_residual"]),
            str(verdict["affine"]).lower(),
            str(verdict["isometric"]).lower(),
        ])
    return buf.getvalue()


def render(report: dict[str, Any], fmt: str) -> str:
    if fmt == "json":
        return dumps(report)
    if fmt == "csv-summary":
        return csv_summary(report)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_report(report: dict[str, Any], fmt: str, path: str | Path) -> None:
    text = render(report, fmt)
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as e:
        raise ReportIOError(f"cannot write report to {path}: {e.strerror or e}") from None
