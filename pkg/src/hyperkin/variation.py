"""Variation of the Levi-Civita connection and the affine/isometric classifier.

Every route returns plain arrays ``dconn[..., k, i, j]`` = (delta nabla)^k_{ij},
i.e. the chart components of delta-nabla(e_i, e_j).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .jets import Jet
from .kinematics import KinFrame, fd_time_derivative, tensor_norm, FD_STEP
from .surface import TIME, GeomFrame, MotionSpec, cov_deriv, geom_frame

TOL_AFFINE = 1e-6
TOL_ISO = 1e-8
TOL_ROUTE = 1e-7
TOL_CLASS = 1e-9

ROUTES = ("definition", "projection", "stretch", "geometric")
REDUCED = ("normal", "normal_expanded", "euclidean_normal", "parallel")


class MisuseError(ValueError):
    """A reduced formula was requested for a motion outside its hypotheses."""


class EmptyGridError(ValueError):
    pass


# general routes ----------------------------------------------------------------
def delta_connection_definition(fr: GeomFrame) -> np.ndarray:
    """Exact t-partial of the Christoffel symbols of the time-dependent metric."""
    return fr.christoffel.d(TIME).value


def delta_connection_definition_fd(spec: MotionSpec, X: np.ndarray, t, h: float = FD_STEP) -> np.ndarray:
    """Central finite difference of the Christoffel symbols in time."""
    return fd_time_derivative(lambda tau: geom_frame(spec, X, tau).christoffel.value, t, h)


def _raise_first(L: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    return np.einsum("...kl,...lij->...kij", g_inv, L)


def _christoffel_combination(T: np.ndarray) -> np.ndarray:
    """L[l, i, j] = T[i, j, l] + T[j, i, l] - T[l, i, j] for T[k, a, b] = (nabla_k h)_ab."""
    return np.einsum("...ijl->...lij", T) + np.einsum("...jil->...lij", T) - T


def delta_connection_stretch(fr: GeomFrame, D: Jet) -> np.ndarray:
    """delta nabla^k_ij = g^kl [(nabla_i D)_jl + (nabla_j D)_il - (nabla_l D)_ij] with D lowered."""
    D_flat = jets.einsum("...ki,...kj->...ij", fr.g, D)
    gDf = cov_deriv(D_flat, fr.christoffel, "dd").value
    return _raise_first(_christoffel_combination(gDf), fr.g_inv.value)


def _rbar_term(fr: GeomFrame, X: np.ndarray) -> np.ndarray:
    """P Rbar(X, F e_i) F e_j as chart components [p, i, j]."""
    F = fr.F.value
    R = fr.ambient.riemann.value
    amb = np.einsum("...abcd,...c,...di,...bj->...aij", R, X, F, F)
    return _project_values(fr, amb)


def _project_values(fr: GeomFrame, W: np.ndarray) -> np.ndarray:
    """Project ambient vectors stored on the first tensor axis (``W[..., a, *rest]``)."""
    Fl = np.einsum("...ab,...bj->...aj", fr.ambient.metric.value, fr.F.value)
    rest = W.ndim - fr.F.value.ndim + 1
    letters = "bcd"[:rest]
    c = np.einsum(f"...a{letters},...aq->...q{letters}", W, Fl)
    return np.einsum(f"...pq,...q{letters}->...p{letters}", fr.g_inv.value, c)


def delta_connection_projection(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    """-P G nabla_u w + P nabla-bar_{Ju} G w - B(u,w) P W n + P Rbar(v, Ju) w."""
    gam = fr.christoffel.value
    G = kin.G
    PG = _project_values(fr, G.value)  # [p, k]
    t1 = -np.einsum("...pk,...kij->...pij", PG, gam)
    dG = G.grad(range(fr.m), axis=-2).value  # [a, i, j] = d_i G^a_j
    corr = np.einsum("...abc,...bi,...cj->...aij", fr.ambient.christoffel.value, fr.F.value, G.value)
    t2 = _project_values(fr, dG + corr)
    PWn = -(np.einsum("...ij,...j->...i", fr.S.value, kin.v_par.value) + kin.grad_vn.value)
    t3 = -np.einsum("...ij,...p->...pij", fr.B.value, PWn)
    t4 = _rbar_term(fr, kin.v.value)
    return t1 + t2 + t3 + t4


def lie_derivative_connection(X: Jet, gamma: Jet) -> np.ndarray:
    """(L_X Gamma)^k_ij in chart form."""
    m = gamma.shape[-1]
    dX = X.grad(range(m), axis=-1)  # [k, l] = d_l X^k
    ddX = dX.grad(range(m), axis=-1).value  # [k, i, j]
    dXv = dX.value
    dgam = gamma.grad(range(m), axis=-4).value  # [l, k, i, j]
    gam = gamma.value
    Xv = X.value
    return (ddX
            + np.einsum("...l,...lkij->...kij", Xv, dgam)
            - np.einsum("...kl,...lij->...kij", dXv, gam)
            + np.einsum("...li,...klj->...kij", dXv, gam)
            + np.einsum("...lj,...kil->...kij", dXv, gam))


def _bracket(X: Jet, Y: Jet, m: int) -> Jet:
    """[X, Y]^k = X^l d_l Y^k - Y^l d_l X^k."""
    return (jets.einsum("...l,...kl->...k", X, Y.grad(range(m), axis=-1))
            - jets.einsum("...l,...kl->...k", Y, X.grad(range(m), axis=-1)))


def _nabla(Xf: Jet, Yf: Jet, gamma: Jet, m: int) -> Jet:
    """nabla_X Y with components X^i (d_i Y^k + Gamma^k_il Y^l)."""
    dY = Yf.grad(range(m), axis=-1)  # [k, i]
    return jets.einsum("...i,...ki->...k", Xf, dY + jets.einsum("...kil,...l->...ki", gamma, Yf))


def lie_derivative_bracket(X: Jet, gamma: Jet) -> np.ndarray:
    """[X, nabla_{e_i} e_j] - nabla_{[X, e_i]} e_j - nabla_{e_i} [X, e_j] on coordinate fields."""
    m = gamma.shape[-1]
    batch = X.shape[:-1]
    vars = X.vars
    out = np.zeros(batch + (m, m, m))
    e = [Jet.const(vars, np.broadcast_to(np.eye(m)[i], batch + (m,))) for i in range(m)]
    for i, j in itertools.product(range(m), repeat=2):
        nij = gamma[..., :, i, j]
        t1 = _bracket(X, nij, m)
        t2 = _nabla(_bracket(X, e[i], m), e[j], gamma, m)
        t3 = _nabla(e[i], _bracket(X, e[j], m), gamma, m)
        out[..., :, i, j] = (t1 - t2 - t3).value
    return out


def delta_connection_geometric(fr: GeomFrame, kin: KinFrame, lie: np.ndarray | None = None) -> np.ndarray:
    """-v_n (nabla_u S) w - {w(v_n) S u + u(v_n) S w} + B(u,w) grad v_n + v_n P Rbar(n, Ju) w + (L nabla)(u,w)."""
    vn = kin.v_n.value
    dvn = kin.v_n.grad(range(fr.m), axis=-1).value
    S = fr.S.value
    gS = fr.grad_S.value  # [i, p, j]
    t1 = -vn[..., None, None, None] * np.einsum("...ipj->...pij", gS)
    t2 = -(np.einsum("...j,...pi->...pij", dvn, S) + np.einsum("...i,...pj->...pij", dvn, S))
    t3 = np.einsum("...ij,...p->...pij", fr.B.value, kin.grad_vn.value)
    t4 = vn[..., None, None, None] * _rbar_term(fr, fr.normal.value)
    if lie is None:
        lie = lie_derivative_connection(kin.v_par, fr.christoffel)
    return t1 + t2 + t3 + t4 + lie


# reduced forms for normal motions ----------------------------------------------
def delta_connection_normal(fr: GeomFrame, kin: KinFrame, tol: float = TOL_CLASS) -> dict[str, np.ndarray]:
    """All reduced forms valid for a normal motion.

    ``normal``           -(nabla_u v_n B)(w,z) - (nabla_w v_n B)(u,z) + (nabla_z v_n B)(u,w)
    ``normal_expanded``  the same with v_n nabla B and dv_n B separated
    ``euclidean_normal`` Codazzi-rearranged form (Euclidean ambient only)
    ``parallel``         -v_n (nabla_u S) w (Euclidean ambient, spatially constant v_n only)
    """
    vpar = tensor_norm(kin.v_par.value, "u", fr.g.value, fr.g_inv.value)
    if np.max(vpar, initial=0.0) >= tol:
        raise MisuseError(f"motion is not normal (max |v_par| = {np.max(vpar):.3g} >= {tol:g})")
    g_inv = fr.g_inv.value
    vnB = fr.B * kin.v_n.expand_dims(-1).expand_dims(-1)
    T = cov_deriv(vnB, fr.christoffel, "dd").value  # [k, a, b] = nabla_k (v_n B)_ab
    out = {"normal": _raise_first(-_christoffel_combination(T), g_inv)}

    vn = kin.v_n.value[..., None, None, None]
    dvn = kin.v_n.grad(range(fr.m), axis=-1).value
    B = fr.B.value
    gB = fr.grad_B.value
    dvB = np.einsum("...k,...ab->...kab", dvn, B)
    out["normal_expanded"] = _raise_first(-vn * _christoffel_combination(gB) - _christoffel_combination(dvB), g_inv)

    if fr.ambient.euclidean:
        # Codazzi symmetry of nabla B collapses the three nabla B terms to one
        lower = -vn * np.einsum("...ijl->...lij", gB) - _christoffel_combination(dvB)
        out["euclidean_normal"] = _raise_first(lower, g_inv)
        gvn = tensor_norm(kin.grad_vn.value, "u", fr.g.value, g_inv)
        if np.max(gvn, initial=0.0) < tol:
            out["parallel"] = -vn * np.einsum("...ipj->...pij", fr.grad_S.value)
    return out


# records & verdict ----------------------------------------------------------------
def residual(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pointwise max |a - b| / (1 + max(|a|, |b|))."""
    axes = tuple(range(-3, 0))
    scale = 1.0 + np.maximum(np.max(np.abs(a), axis=axes), np.max(np.abs(b), axis=axes))
    return np.max(np.abs(a - b), axis=axes) / scale


@dataclass
class VariationRecord:
    """Per-point connection variations (batched over points)."""

    routes: dict[str, np.ndarray]
    lie: np.ndarray
    lie_bracket: np.ndarray
    grad_D: np.ndarray
    grad_D_norm: np.ndarray
    D_norm: np.ndarray
    dconn_norm: np.ndarray
    lie_norm: np.ndarray
    v_n: np.ndarray
    v_par_norm: np.ndarray
    grad_vn_norm: np.ndarray
    residuals: dict[str, np.ndarray] = field(default_factory=dict)
    symmetry: dict[str, np.ndarray] = field(default_factory=dict)

    def max_route_residual(self) -> np.ndarray:
        if not self.residuals:
            return np.zeros_like(self.v_n)
        return np.max(np.stack(list(self.residuals.values())), axis=0)


def variation_record(fr: GeomFrame, kin: KinFrame, fd: bool = False, tol_class: float = TOL_CLASS) -> VariationRecord:
    g, g_inv = fr.g.value, fr.g_inv.value
    lie = lie_derivative_connection(kin.v_par, fr.christoffel)
    routes = {
        "definition": delta_connection_definition(fr),
        "projection": delta_connection_projection(fr, kin),
        "stretch": delta_connection_stretch(fr, kin.D_kin),
        "geometric": delta_connection_geometric(fr, kin, lie),
    }
    if fd:
        routes["definition_fd"] = delta_connection_definition_fd(fr.spec, fr.X, fr.t)
    vpar_norm = tensor_norm(kin.v_par.value, "u", g, g_inv)
    if np.max(vpar_norm, initial=0.0) < tol_class:
        routes.update(delta_connection_normal(fr, kin, tol_class))
    names = list(routes)
    res = {f"{a}~{b}": residual(routes[a], routes[b]) for a, b in itertools.combinations(names, 2)}
    sym = {k: np.max(np.abs(r - np.swapaxes(r, -1, -2)), axis=(-3, -2, -1)) for k, r in routes.items()}
    gD = kin.grad_D.value
    return VariationRecord(
        routes=routes,
        lie=lie,
        lie_bracket=lie_derivative_bracket(kin.v_par, fr.christoffel),
        grad_D=gD,
        grad_D_norm=tensor_norm(gD, "dud", g, g_inv),
        D_norm=tensor_norm(kin.D.value, "ud", g, g_inv),
        dconn_norm=tensor_norm(routes["definition"], "udd", g, g_inv),
        lie_norm=tensor_norm(lie, "udd", g, g_inv),
        v_n=kin.v_n.value,
        v_par_norm=vpar_norm,
        grad_vn_norm=tensor_norm(kin.grad_vn.value, "u", g, g_inv),
        residuals=res,
        symmetry=sym,
    )


@dataclass
class Verdict:
    affine: bool
    isometric: bool
    sup_grad_D: float
    sup_D: float
    sup_dconn: float
    affine_measure: float
    tangential: bool
    normal: bool
    parallel_normal: bool
    sup_lie: float | None
    tolerances: dict[str, float]

    def line(self) -> str:
        cls = [k for k in ("tangential", "normal", "parallel_normal") if getattr(self, k)]
        return (f"affine={str(self.affine).lower()} isometric={str(self.isometric).lower()} "
                f"sup|gradD|={self.sup_grad_D:.3e} sup|D|={self.sup_D:.3e} sup|dconn|={self.sup_dconn:.3e} "
                f"class={','.join(cls) or 'general'}")

    def as_dict(self) -> dict:
        return {
            "affine": self.affine,
            "isometric": self.isometric,
            "sup_grad_D": self.sup_grad_D,
            "sup_D": self.sup_D,
            "sup_dconn": self.sup_dconn,
            "affine_measure": self.affine_measure,
            "tangential": self.tangential,
            "normal": self.normal,
            "parallel_normal": self.parallel_normal,
            "sup_lie": self.sup_lie,
            "tolerances": dict(self.tolerances),
        }


def classify(records: list[VariationRecord], tol_affine: float = TOL_AFFINE, tol_iso: float = TOL_ISO,
             tol_class: float = TOL_CLASS) -> Verdict:
    """Grid sup-norm verdict from one or more batched records."""
    records = [r for r in records if r.v_n.size]
    if not records:
        raise EmptyGridError("no evaluated points to classify")

    def sup(attr):
        return float(max(np.max(getattr(r, attr)) for r in records))

    sgD, sD = sup("grad_D_norm"), sup("D_norm")
    measure = sgD / (1.0 + sD)
    max_vn = float(max(np.max(np.abs(r.v_n)) for r in records))
    tangential = max_vn < tol_class
    normal = sup("v_par_norm") < tol_class
    parallel = normal and sup("grad_vn_norm") < tol_class
    return Verdict(
        affine=measure < tol_affine,
        isometric=sD < tol_iso,
        sup_grad_D=sgD,
        sup_D=sD,
        sup_dconn=sup("dconn_norm"),
        affine_measure=measure,
        tangential=tangential,
        normal=normal,
        parallel_normal=parallel,
        sup_lie=sup("lie_norm") if tangential else None,
        tolerances={"affine": tol_affine, "isometric": tol_iso, "class": tol_class},
    )
