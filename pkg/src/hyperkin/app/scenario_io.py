"""Scenario files ("hyperkin-scenario/1", YAML)."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from ..ambient import AmbientSpec, euclidean
from ..expr import ExprError, compile_expr, eval_float, to_string
from ..surface import MotionSpec
from .scenarios import BUILTIN_AMBIENTS, SHRINK, GridSpec, Scenario, DEFAULT_COUNT

SCHEMA = "hyperkin-scenario/1"
_KEYS = {"schema", "name", "description", "coords", "components", "ambient", "domain",
         "exclusions", "tol_excl", "grid"}


class ScenarioError(ValueError):
    """Invalid scenario file; ``field`` names the offending entry when known."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


def _number(x: Any, field: str) -> float:
    if isinstance(x, bool):
        raise ScenarioError("expected a number", field)
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(eval_float(compile_expr(x, (), field), {}))
        except ExprError as e:
            raise ScenarioError(str(e), field) from None
    raise ScenarioError("expected a number or constant expression", field)


def _list(x: Any, field: str) -> list:
    if not isinstance(x, list):
        raise ScenarioError("expected a list", field)
    return x


def _ambient(doc: Any, n: int) -> AmbientSpec:
    if doc is None or doc == "euclidean":
        return euclidean(n)
    if isinstance(doc, str):
        if doc not in BUILTIN_AMBIENTS:
            raise ScenarioError(f"unknown ambient {doc!r} (known: euclidean, {', '.join(BUILTIN_AMBIENTS)})", "ambient")
        amb = BUILTIN_AMBIENTS[doc]()
    elif isinstance(doc, dict):
        rows = _list(doc.get("metric"), "ambient.metric")
        if any(not isinstance(r, list) for r in rows):
            raise ScenarioError("metric must be a list of rows", "ambient.metric")
        try:
            amb = AmbientSpec.from_strings([[str(e) for e in r] for r in rows], str(doc.get("name", "custom")))
        except (ExprError, ValueError) as e:
            raise ScenarioError(str(e), "ambient.metric") from None
    else:
        raise ScenarioError("expected 'euclidean', a built-in name, or {metric: [[...]]}", "ambient")
    if amb.dim != n:
        raise ScenarioError(f"dimension mismatch: ambient has dimension {amb.dim}, surface needs m+1 = {n}", "ambient")
    return amb


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    unknown = sorted(set(doc) - _KEYS)
    if unknown:
        raise ScenarioError(f"unknown key(s): {', '.join(map(str, unknown))}", unknown[0])
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"expected {SCHEMA!r}, got {doc.get('schema')!r}", "schema")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ScenarioError("missing scenario name", "name")
    coords = [str(c) for c in _list(doc.get("coords"), "coords")]
    m = len(coords)
    if not 1 <= m <= 3:
        raise ScenarioError(f"need 1..3 coordinates, got {m}", "coords")
    comps = _list(doc.get("components"), "components")
    if len(comps) != m + 1:
        raise ScenarioError(f"need {m + 1} components for m = {m}, got {len(comps)}", "components")
    ambient = _ambient(doc.get("ambient"), m + 1)
    dom = _list(doc.get("domain"), "domain")
    if len(dom) != m:
        raise ScenarioError(f"need one interval per coordinate ({m}), got {len(dom)}", "domain")
    domain = []
    for i, iv in enumerate(dom):
        f = f"domain[{i}]"
        iv = _list(iv, f)
        if len(iv) != 2:
            raise ScenarioError("interval must be [lo, hi]", f)
        lo, hi = _number(iv[0], f), _number(iv[1], f)
        if not lo < hi:
            raise ScenarioError(f"empty interval [{lo}, {hi}]", f)
        domain.append((lo, hi))
    excl = [str(e) for e in _list(doc.get("exclusions", []), "exclusions")]
    tol_excl = _number(doc.get("tol_excl", 1e-3), "tol_excl")

    allowed = tuple(coords) + ("t",)
    for a, c in enumerate(comps):
        try:
            compile_expr(str(c), allowed, f"components[{a}]")
        except ExprError as e:
            raise ScenarioError(str(e), f"components[{a}]") from None
    for k, e in enumerate(excl):
        try:
            compile_expr(e, allowed, f"exclusions[{k}]")
        except ExprError as err:
            raise ScenarioError(str(err), f"exclusions[{k}]") from None
    try:
        motion = MotionSpec.from_strings(coords, [str(c) for c in comps], ambient, domain, excl, tol_excl)
    except ValueError as e:
        raise ScenarioError(str(e), "coords") from None

    gdoc = doc.get("grid", {}) or {}
    if not isinstance(gdoc, dict):
        raise ScenarioError("expected a mapping", "grid")
    counts = gdoc.get("counts", [DEFAULT_COUNT] * m)
    if isinstance(counts, int):
        counts = [counts] * m
    counts = _list(counts, "grid.counts")
    if len(counts) != m or any(not isinstance(c, int) or isinstance(c, bool) or c < 1 for c in counts):
        raise ScenarioError(f"need {m} positive integer counts", "grid.counts")
    t0 = _number(gdoc.get("t0", 1.0), "grid.t0")
    probes = tuple(_number(p, "grid.tau_probes") for p in _list(gdoc.get("tau_probes", []), "grid.tau_probes"))
    shrink = _number(gdoc.get("shrink", SHRINK), "grid.shrink")
    try:
        grid = GridSpec(tuple(counts), t0, probes, shrink)
    except ValueError as e:
        raise ScenarioError(str(e), "grid") from None
    return Scenario(name, motion, grid, str(doc.get("description", "")))


def scenario_to_dict(s: Scenario) -> dict:
    amb = s.motion.ambient
    return {
        "schema": SCHEMA,
        "name": s.name,
        "description": s.description,
        "coords": list(s.motion.coords),
        "components": s.motion.component_strings(),
        "ambient": "euclidean" if amb.euclidean else {"name": amb.name, "metric": amb.as_strings()},
        "domain": [list(iv) for iv in s.motion.domain],
        "exclusions": [to_string(e) for e in s.motion.exclusions],
        "tol_excl": s.motion.tol_excl,
        "grid": {"counts": list(s.grid.counts), "t0": s.grid.t0, "tau_probes": list(s.grid.tau_probes),
                 "shrink": s.grid.shrink},
    }


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ScenarioError(f"cannot read {path}: {e.strerror or e}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: parse error{where}: {e.problem or e}") from None
    except yaml.YAMLError as e:
        raise ScenarioError(f"{path}: parse error: {e}") from None
    return scenario_from_dict(doc)


def dump_scenario(s: Scenario, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(s), sort_keys=False), encoding="utf-8")
