"""Grid evaluation: surface -> kinematics -> variation at every grid point."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..ambient import AmbientError
from ..expr import ExprError
from ..jets import JetDomainError
from ..kinematics import KinFrame, cauchy_green_rate, kin_frame
from ..surface import TOL_SING, DegenerateFrameError, GeomFrame, geom_frame
from ..variation import (
    TOL_AFFINE,
    TOL_CLASS,
    TOL_ISO,
    TOL_ROUTE,
    EmptyGridError,
    VariationRecord,
    Verdict,
    classify,
    variation_record,
)
from .scenarios import Scenario

log = logging.getLogger(__name__)

POINT_ERRORS = (DegenerateFrameError, AmbientError, JetDomainError, ZeroDivisionError,
                FloatingPointError, np.linalg.LinAlgError, ExprError)


@dataclass(frozen=True)
class RunOptions:
    tol_affine: float = TOL_AFFINE
    tol_iso: float = TOL_ISO
    tol_route: float = TOL_ROUTE
    tol_class: float = TOL_CLASS
    tol_sing: float = TOL_SING
    fd_validate: bool = False

    def tolerances(self) -> dict[str, float]:
        return {"affine": self.tol_affine, "isometric": self.tol_iso, "route": self.tol_route,
                "class": self.tol_class, "sing": self.tol_sing}


@dataclass
class Batch:
    """Successfully evaluated points at one time level."""

    t: float
    index: np.ndarray  # (P, m) grid indices
    X: np.ndarray
    frame: GeomFrame
    kin: KinFrame
    record: VariationRecord
    cg_rate: np.ndarray
    cg_rate_fd: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.X)


@dataclass
class Skipped:
    index: tuple[int, ...]
    X: tuple[float, ...]
    t: float
    reason: str


@dataclass
class GridResult:
    scenario: Scenario
    options: RunOptions
    batches: list[Batch]
    skipped: list[Skipped]
    verdict: Verdict

    @property
    def n_points(self) -> int:
        return sum(b.size for b in self.batches)


def grid_points(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """(indices, points) in row-major grid order."""
    axes = scenario.grid.axes(scenario.motion.domain)
    idx = np.array(list(itertools.product(*(range(len(a)) for a in axes))), dtype=int)
    X = np.stack([axes[k][idx[:, k]] for k in range(len(axes))], axis=-1)
    return idx, X


def _evaluate(scenario: Scenario, X: np.ndarray, t: float, opts: RunOptions):
    with np.errstate(divide="raise", invalid="raise", over="raise"):
        fr = geom_frame(scenario.motion, X, t, opts.tol_sing)
        kin = kin_frame(fr)
        rec = variation_record(fr, kin, fd=opts.fd_validate, tol_class=opts.tol_class)
    for name, arr in [("metric", fr.g.value), ("shape operator", fr.S.value), ("stretching", kin.D.value)] + \
            [(f"route {k}", v) for k, v in rec.routes.items()]:
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError(f"non-finite {name}")
    cg = cauchy_green_rate(scenario.motion, X, t)
    cg_fd = cauchy_green_rate(scenario.motion, X, t, fd=True) if opts.fd_validate else None
    return fr, kin, rec, cg, cg_fd


def _reason(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def run_grid(scenario: Scenario, options: RunOptions | None = None) -> GridResult:
    opts = options or RunOptions()
    idx, X = grid_points(scenario)
    batches: list[Batch] = []
    skipped: list[Skipped] = []
    for t in scenario.grid.times:
        excl = scenario.motion.excluded(X, t)
        for i in np.flatnonzero(excl):
            skipped.append(Skipped(tuple(int(k) for k in idx[i]), tuple(map(float, X[i])), float(t),
                                   f"excluded: |predicate| < {scenario.motion.tol_excl:g}"))
        keep = np.flatnonzero(~excl)
        if keep.size == 0:
            continue
        try:
            out = _evaluate(scenario, X[keep], t, opts)
        except POINT_ERRORS as exc:
            log.debug("batch at t=%g failed (%s); evaluating point by point", t, exc)
            good = []
            for i in keep:
                try:
                    _evaluate(scenario, X[i:i + 1], t, opts)
                    good.append(i)
                except POINT_ERRORS as e:
                    skipped.append(Skipped(tuple(int(k) for k in idx[i]), tuple(map(float, X[i])), float(t), _reason(e)))
            keep = np.array(good, dtype=int)
            if keep.size == 0:
                continue
            out = _evaluate(scenario, X[keep], t, opts)
        fr, kin, rec, cg, cg_fd = out
        batches.append(Batch(float(t), idx[keep], X[keep], fr, kin, rec, cg, cg_fd))
    if not batches:
        raise EmptyGridError(f"scenario {scenario.name!r}: every grid point was excluded or degenerate")
    skipped.sort(key=lambda s: (s.t, s.index))
    verdict = classify([b.record for b in batches], opts.tol_affine, opts.tol_iso, opts.tol_class)
    return GridResult(scenario, opts, batches, skipped, verdict)


def relative_diff(a: np.ndarray, b: np.ndarray, ndim: int) -> np.ndarray:
    """Pointwise max |a - b| / (1 + max(|a|, |b|)) over the trailing ``ndim`` axes."""
    axes = tuple(range(-ndim, 0))
    scale = 1.0 + np.maximum(np.max(np.abs(a), axis=axes), np.max(np.abs(b), axis=axes))
    return np.max(np.abs(a - b), axis=axes) / scale


def stretching_route_residual(b: Batch) -> np.ndarray:
    """Worst pairwise relative disagreement of the metric, kinematic and Cauchy-Green routes."""
    routes = [b.kin.D.value, b.kin.D_kin.value, b.cg_rate]
    if b.cg_rate_fd is not None:
        routes.append(b.cg_rate_fd)
    return np.max([relative_diff(p, q, 2) for p, q in itertools.combinations(routes, 2)], axis=0)
