"""Motion-dependent quantities: velocity, velocity gradient, stretching, rotation rate.

Layouts follow :mod:`hyperkin.surface`.  In addition

* ``G[..., a, i]``      velocity gradient, ``G e_i = nabla-bar_{F e_i} v``
* ``D[..., i, j]``      stretching as a (1,1) tensor ``D^i_j``; ``D_flat`` its lowered form
* ``grad_D[..., k, i, j] = (nabla_k D)^i_j``

Time derivatives are exact t-partials of the (u, t) jets.  The ``*_fd`` helpers
give central finite differences in time (one Richardson step) as an
independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .ambient import ambient_metric_at, metric_values
from .jets import Jet, VariableSet
from .surface import (
    TIME,
    GeomFrame,
    MotionSpec,
    _ein,
    cov_deriv,
    deformation_gradient,
    geom_frame,
    motion_jets,
)

FD_STEP = 1e-4


@dataclass
class KinFrame:
    """Kinematic record at the points of a :class:`GeomFrame` (jets over (u, t))."""

    v: Jet
    v_par: Jet
    v_n: Jet
    grad_vn: Jet  # chart vector (d v_n)^sharp
    G: Jet
    D: Jet
    D_flat: Jet
    delta_g: Jet
    D_kin: Jet
    grad_v_par: Jet  # (nabla v_par)^i_j
    grad_D: Jet
    W_F: np.ndarray  # [a, i] = (W F e_i)^a
    W_n: np.ndarray  # (W n)^a, also delta n

    @property
    def delta_n(self) -> np.ndarray:
        return self.W_n


# velocity ----------------------------------------------------------------------
def velocity(fr: GeomFrame) -> Jet:
    """v^a = d_t phi^a."""
    return fr.position.d(TIME)


def velocity_split(v: Jet, fr: GeomFrame) -> tuple[Jet, Jet]:
    """(v_par, v_n) with v = F v_par + v_n n."""
    v_n = jets.einsum("...a,...a->...", fr.normal_lower, v)
    v_par = fr.project(v)
    return v_par, v_n


def split_residual(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    rec = np.einsum("...ai,...i->...a", fr.F.value, kin.v_par.value) + kin.v_n.value[..., None] * fr.normal.value
    return np.max(np.abs(rec - kin.v.value), axis=-1)


def velocity_gradient(fr: GeomFrame, v: Jet) -> Jet:
    """G^a_i = d_i v^a + Gammabar^a_bc F^b_i v^c."""
    dv = v.grad(range(fr.m), axis=-1)
    t = jets.einsum("...abc,...bi->...aic", fr.ambient.christoffel, fr.F)
    return dv + jets.einsum("...aic,...c->...ai", t, v)


def velocity_gradient_residual(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    """d_t F e_i + Gammabar(v, F e_i) against G e_i."""
    dF = fr.F.d(TIME).value
    corr = np.einsum("...abc,...b,...ci->...ai", fr.ambient.christoffel.value, kin.v.value, fr.F.value)
    return np.max(np.abs(dF + corr - kin.G.value), axis=(-2, -1))


# stretching --------------------------------------------------------------------
def tau_metric(spec: MotionSpec, X: np.ndarray, tau) -> np.ndarray:
    """Components of g_t(tau) in the material chart: the induced metric at time tau."""
    pos = motion_jets(spec, X, tau)
    F = deformation_gradient(pos, spec.m).value
    gbar = metric_values(spec.ambient, pos.value)
    return np.einsum("...ai,...ab,...bj->...ij", F, gbar, F)


def stretching_metric_route(fr: GeomFrame) -> tuple[Jet, Jet, Jet]:
    """(D, D_flat, delta_g) from the exact t-partial of the metric jets."""
    delta_g = fr.g.d(TIME)
    D_flat = 0.5 * delta_g
    D = jets.einsum("...ik,...kj->...ij", fr.g_inv, D_flat)
    return D, D_flat, delta_g


def adjoint(A, g, g_inv):
    """g-adjoint of a (1,1) tensor: A* = g^-1 A^T g."""
    t = _ein("...lk,...lj->...kj", A, g)
    return _ein("...ik,...kj->...ij", g_inv, t)


def stretching_kinematic_route(fr: GeomFrame, v_par: Jet, v_n: Jet) -> tuple[Jet, Jet]:
    """D = sym_g(nabla v_par) - v_n S; also returns nabla v_par as (1,1)."""
    cd = cov_deriv(v_par, fr.christoffel, "u")  # [j, i] = (nabla_j v)^i
    M = cd.mT
    D = 0.5 * (M + adjoint(M, fr.g, fr.g_inv)) - fr.S * v_n.expand_dims(-1).expand_dims(-1)
    return D, M


def cauchy_green_rate(spec: MotionSpec, X: np.ndarray, t, fd: bool = False, h: float = FD_STEP) -> np.ndarray:
    """1/2 d/dtau [g(t)^-1 g_t(tau)] at tau = t.

    With ``fd=True`` the tau-derivative is a central difference of separately
    evaluated metrics (Richardson once); otherwise it is the exact jet partial.
    """
    X = np.asarray(X, float)
    pos = motion_jets(spec, X, t)
    F = deformation_gradient(pos, spec.m)
    g0 = np.einsum("...ai,...ab,...bj->...ij", F.value, metric_values(spec.ambient, pos.value), F.value)
    g0_inv = np.linalg.inv(g0)
    if fd:
        rate = fd_time_derivative(lambda tau: tau_metric(spec, X, tau), t, h)
    else:
        gbar = _ambient_metric_jets(spec, pos)
        C = jets.einsum("...ai,...aj->...ij", F, jets.einsum("...ab,...bj->...aj", gbar, F))
        rate = C.d(TIME).value
    return 0.5 * g0_inv @ rate


def _ambient_metric_jets(spec: MotionSpec, pos: Jet) -> Jet:
    """Ambient metric along the motion as (u, t) jets, without the connection."""
    n = spec.n
    if spec.ambient.euclidean:
        return Jet.const(pos.vars, np.broadcast_to(np.eye(n), pos.shape[:-1] + (n, n)))
    xs = jets.seed(VariableSet(spec.ambient.coords), [pos.value[..., a] for a in range(n)])
    gx = ambient_metric_at(spec.ambient, xs)
    return jets.compose(gx, [pos[..., a] for a in range(n)], 2)


# rotation rate ------------------------------------------------------------------
def rotation_rate_action(fr: GeomFrame, G: Jet, D: Jet, v_par: Jet, grad_vn: Jet) -> tuple[np.ndarray, np.ndarray]:
    """(W F e_i, W n): W F e_i = G e_i - F D e_i, W n = -F (S v_par + grad v_n)."""
    F = fr.F.value
    WF = G.value - F @ D.value
    w = np.einsum("...ij,...j->...i", fr.S.value, v_par.value) + grad_vn.value
    Wn = -np.einsum("...ai,...i->...a", F, w)
    return WF, Wn


def adapted_frame(fr: GeomFrame) -> np.ndarray:
    """Columns F e_1..F e_m, n."""
    return np.concatenate([fr.F.value, fr.normal.value[..., None]], axis=-1)


def rotation_rate_matrix(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    """Ambient matrix of W, assembled from its action on the adapted frame."""
    E = adapted_frame(fr)
    WE = np.concatenate([kin.W_F, kin.W_n[..., None]], axis=-1)
    return WE @ np.linalg.inv(E)


def antisymmetry_residual(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    """max |gbar(W a, b) + gbar(a, W b)| over the adapted frame."""
    E = adapted_frame(fr)
    WE = np.concatenate([kin.W_F, kin.W_n[..., None]], axis=-1)
    A = np.einsum("...ap,...ab,...bq->...pq", WE, fr.ambient.metric.value, E)
    return np.max(np.abs(A + np.swapaxes(A, -1, -2)), axis=(-2, -1))


# normal variation ----------------------------------------------------------------
def delta_normal(fr: GeomFrame, kin: KinFrame) -> np.ndarray:
    return kin.W_n


def normal_transport(fr: GeomFrame, v: Jet) -> np.ndarray:
    """d_t n + Gammabar(v, n) from the jets of the moving normal."""
    dn = fr.normal.d(TIME).value
    corr = np.einsum("...abc,...b,...c->...a", fr.ambient.christoffel.value, v.value, fr.normal.value)
    return dn + corr


def normal_transport_fd(spec: MotionSpec, X: np.ndarray, t, h: float = FD_STEP) -> np.ndarray:
    """Finite-difference version of :func:`normal_transport`."""
    fr = geom_frame(spec, X, t)
    dn = fd_time_derivative(lambda tau: geom_frame(spec, X, tau).normal.value, t, h)
    v = fr.position.d(TIME).value
    corr = np.einsum("...abc,...b,...c->...a", fr.ambient.christoffel.value, v, fr.normal.value)
    return dn + corr


def fd_time_derivative(f: Callable[[float], np.ndarray], t, h: float = FD_STEP) -> np.ndarray:
    """Central difference with one Richardson extrapolation step."""
    t = np.asarray(t, float)
    d1 = (f(t + h) - f(t - h)) / (2 * h)
    d2 = (f(t + 2 * h) - f(t - 2 * h)) / (4 * h)
    return (4 * d1 - d2) / 3


# assembly ----------------------------------------------------------------------
def kin_frame(fr: GeomFrame) -> KinFrame:
    v = velocity(fr)
    v_par, v_n = velocity_split(v, fr)
    grad_vn = jets.einsum("...ij,...j->...i", fr.g_inv, v_n.grad(range(fr.m), axis=-1))
    G = velocity_gradient(fr, v)
    D, D_flat, delta_g = stretching_metric_route(fr)
    D_kin, M = stretching_kinematic_route(fr, v_par, v_n)
    gD = cov_deriv(D, fr.christoffel, "ud")
    WF, Wn = rotation_rate_action(fr, G, D, v_par, grad_vn)
    return KinFrame(v, v_par, v_n, grad_vn, G, D, D_flat, delta_g, D_kin, M, gD, WF, Wn)


def g_symmetry_residual(fr: GeomFrame, D: np.ndarray) -> np.ndarray:
    """max |g(D e_i, e_j) - g(e_i, D e_j)|."""
    L = np.einsum("...ki,...kj->...ij", D, fr.g.value)
    return np.max(np.abs(L - np.swapaxes(L, -1, -2)), axis=(-2, -1))


# norms ---------------------------------------------------------------------------
def tensor_norm(T: np.ndarray, kinds: str, g: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """Pointwise g-norm of a chart tensor with index kinds 'u'/'d' (trailing axes)."""
    r = len(kinds)
    letters = "abcdefgh"[:r]
    dual = T
    for p, kind in enumerate(kinds):
        M = g if kind == "u" else g_inv
        src = letters[:p] + "z" + letters[p + 1:]
        dual = np.einsum(f"...{letters[p]}z,...{src}->...{letters}", M, dual)
    val = np.einsum(f"...{letters},...{letters}->...", T, dual)
    return np.sqrt(np.maximum(val, 0.0))
