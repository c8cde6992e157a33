"""The invariant suite behind ``verify``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kinematics as K
from .. import surface as S
from ..surface import cov_deriv
from .runner import Batch, GridResult, relative_diff, stretching_route_residual


@dataclass(frozen=True)
class Invariant:
    name: str
    value: float
    tol: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value)) and self.value <= self.tol

    def line(self) -> str:
        status = "ok  " if self.passed else "FAIL"
        extra = f"  ({self.note})" if self.note else ""
        return f"{status} {self.name:<34} {self.value:10.3e}  tol {self.tol:.1e}{extra}"


def _amax(a) -> float:
    a = np.abs(np.asarray(a))
    return float(a.max()) if a.size else 0.0


def _rel(a, b, ndim) -> float:
    return _amax(relative_diff(np.asarray(a), np.asarray(b), ndim))


def _ambient_identities(b: Batch) -> tuple[float, float]:
    rf = b.frame.ambient.riemann_flat.value
    scale = 1.0 + _amax(rf)
    anti = max(_amax(rf + np.swapaxes(rf, -4, -3)), _amax(rf + np.swapaxes(rf, -2, -1)))
    # first Bianchi: R(X,Y)Z + R(Y,Z)X + R(Z,X)Y = 0 ; rf[e, b, c, d] <-> W^e Z^b X^c Y^d
    bianchi = rf + np.einsum("...ebcd->...ecdb", rf) + np.einsum("...ebcd->...edbc", rf)
    return anti / scale, _amax(bianchi) / scale


def _batch_values(b: Batch, fd_normal: bool) -> dict[str, float]:
    fr, kin, rec = b.frame, b.kin, b.record
    g = fr.g.value
    nn, nF = S.normal_residuals(fr)
    Sg = np.einsum("...ki,...kj->...ij", fr.S.value, g)
    III = fr.III.value
    gDf = cov_deriv(kin.D_flat, fr.christoffel, "dd").value
    lowered_gD = np.einsum("...ia,...kaj->...kij", g, kin.grad_D.value)
    anti, bianchi = _ambient_identities(b)
    gam = fr.christoffel.value
    out = {
        "normal unit length": _amax(nn),
        "normal orthogonality": _amax(nF),
        "B symmetric": _amax(fr.B.value - np.swapaxes(fr.B.value, -1, -2)),
        "S g-symmetric": _amax(Sg - np.swapaxes(Sg, -1, -2)),
        "III symmetric": _amax(III - np.swapaxes(III, -1, -2)),
        "Christoffel symmetry": _amax(gam - np.swapaxes(gam, -1, -2)),
        "Weingarten sign convention": _amax(S.weingarten_residual(fr)),
        "Gauss equation": _amax(S.gauss_residual(fr)),
        "Codazzi equation": _amax(S.codazzi_residual(fr)),
        "ambient pair antisymmetry": anti,
        "ambient first Bianchi": bianchi,
        "metric compatibility": _amax(S.metric_compat_residual(fr)),
        "flat/sharp commute (S)": _amax(S.flat_sharp_commutation_residual(fr)),
        "flat/sharp commute (D)": _amax(lowered_gD - gDf),
        "velocity split": _amax(K.split_residual(fr, kin)),
        "stretching routes agree": _amax(stretching_route_residual(b)),
        "D g-symmetric": _amax(K.g_symmetry_residual(fr, kin.D.value)),
        "delta g = 2 D_flat (kinematic)": _rel(kin.delta_g.value, 2 * np.einsum("...ki,...kj->...ij", g, kin.D_kin.value), 2),
        "velocity gradient consistency": _amax(K.velocity_gradient_residual(fr, kin)),
        "W antisymmetry": _amax(K.antisymmetry_residual(fr, kin)),
        "delta n vs normal transport": _rel(kin.W_n, K.normal_transport(fr, kin.v), 1),
        "connection routes agree": _amax(rec.max_route_residual()),
        "connection symmetry": max(_amax(v) for v in rec.symmetry.values()),
        "Lie derivative: chart vs bracket": _amax(rec.lie - rec.lie_bracket),
    }
    if fd_normal:
        out["delta n vs FD normal transport"] = _rel(kin.W_n, K.normal_transport_fd(fr.spec, b.X, b.t), 1)
    return out


TOLERANCES = {
    "normal unit length": 1e-10,
    "normal orthogonality": 1e-10,
    "B symmetric": 1e-10,
    "S g-symmetric": 1e-10,
    "III symmetric": 1e-10,
    "Christoffel symmetry": 1e-14,
    "Weingarten sign convention": 1e-9,
    "Gauss equation": 1e-8,
    "Codazzi equation": 1e-8,
    "ambient pair antisymmetry": 1e-9,
    "ambient first Bianchi": 1e-9,
    "metric compatibility": 1e-10,
    "flat/sharp commute (S)": 1e-9,
    "flat/sharp commute (D)": 1e-9,
    "velocity split": 1e-10,
    "stretching routes agree": 1e-8,
    "D g-symmetric": 1e-9,
    "delta g = 2 D_flat (kinematic)": 1e-9,
    "velocity gradient consistency": 1e-8,
    "W antisymmetry": 1e-8,
    "delta n vs normal transport": 1e-7,
    "delta n vs FD normal transport": 1e-7,
    "connection symmetry": 1e-8,
    "Lie derivative: chart vs bracket": 1e-9,
    "tangential reduction": 1e-8,
    "criterion equivalence": 0.5,
}


def verify(res: GridResult, fd_normal: bool = True) -> list[Invariant]:
    """Evaluate every invariant over the grid (sup over points)."""
    sups: dict[str, float] = {}
    for b in res.batches:
        for k, v in _batch_values(b, fd_normal).items():
            sups[k] = max(sups.get(k, 0.0), v)
    tol = dict(TOLERANCES)
    tol["connection routes agree"] = res.options.tol_route
    out = [Invariant(k, v, tol[k]) for k, v in sups.items()]

    v = res.verdict
    if v.tangential:
        red = max(_rel(b.record.routes["definition"], b.record.lie, 3) for b in res.batches)
        out.append(Invariant("tangential reduction", red, tol["tangential reduction"], "delta nabla = Lie derivative"))
    # the connection variation vanishes exactly when the stretching is parallel
    thr = res.options.tol_affine
    by_dconn = v.sup_dconn < thr
    by_gradD = v.sup_grad_D < thr
    out.append(Invariant("criterion equivalence", float(by_dconn != by_gradD), tol["criterion equivalence"],
                         f"sup|dconn| < {thr:g}: {by_dconn}, sup|grad D| < {thr:g}: {by_gradD}"))
    return out
