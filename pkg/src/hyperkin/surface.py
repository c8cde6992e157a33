"""Instantaneous geometry of a moving hypersurface at material points X and time t.

Chart conventions (``B`` is the batch of grid points, ``n = m + 1``):

* ``F[..., a, i]``          deformation gradient, column i is d phi / d u^i
* ``g[..., i, j]``          induced metric; ``ginv`` its inverse
* ``normal[..., a]``        unit normal from the metric-weighted generalized cross product
* ``B[..., i, j]``          second fundamental form, ``S[..., i, j] = S^i_j``
* ``christoffel[..., k, i, j] = Gamma^k_{ij}``
* ``riemann[..., a, b, c, d]`` same layout as :mod:`hyperkin.ambient`
* covariant derivatives put the derivative index first: ``grad_S[..., k, i, j] = (nabla_k S)^i_j``

The material chart is used as the chart of every instantaneous surface, so the
same coordinates label points at all times.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import jets
from .ambient import (
    AmbientFrame,
    AmbientSpec,
    ambient_frame,
    christoffels_from_metric,
    pullback,
    riemann_from_christoffels,
)
from .expr import Expr, compile_expr, eval_float, eval_jet, to_string
from .jets import Jet, VariableSet

TOL_SING = 1e-10
TIME = "t"


class DegenerateFrameError(ValueError):
    pass


@dataclass(frozen=True)
class MotionSpec:
    coords: tuple[str, ...]
    components: tuple[Expr, ...]
    ambient: AmbientSpec
    domain: tuple[tuple[float, float], ...]
    exclusions: tuple[Expr, ...] = ()
    tol_excl: float = 1e-3

    def __post_init__(self):
        m = len(self.coords)
        if not 1 <= m <= 3:
            raise ValueError(f"surface dimension must be 1..3, got {m}")
        if TIME in self.coords:
            raise ValueError(f"{TIME!r} is reserved for time")
        if len(self.components) != m + 1:
            raise ValueError(f"need {m + 1} motion components for a {m}-dimensional surface, got {len(self.components)}")
        if self.ambient.dim != m + 1:
            raise ValueError(f"ambient dimension {self.ambient.dim} does not match m+1 = {m + 1}")
        if len(self.domain) != m:
            raise ValueError(f"domain needs one interval per coordinate ({m})")
        for (lo, hi), c in zip(self.domain, self.coords):
            if not lo < hi:
                raise ValueError(f"empty domain interval for {c}: [{lo}, {hi}]")

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def n(self) -> int:
        return len(self.coords) + 1

    @property
    def variables(self) -> VariableSet:
        return VariableSet(self.coords + (TIME,))

    @classmethod
    def from_strings(cls, coords, components, ambient, domain, exclusions=(), tol_excl=1e-3) -> "MotionSpec":
        coords = tuple(coords)
        allowed = coords + (TIME,)
        comps = tuple(compile_expr(str(c), allowed, f"motion component {a + 1}") for a, c in enumerate(components))
        excl = tuple(compile_expr(str(e), allowed, f"exclusion {k + 1}") for k, e in enumerate(exclusions))
        dom = tuple((float(lo), float(hi)) for lo, hi in domain)
        return cls(coords, comps, ambient, dom, excl, float(tol_excl))

    def component_strings(self) -> list[str]:
        return [to_string(c) for c in self.components]

    def excluded(self, X: np.ndarray, t) -> np.ndarray:
        """Boolean mask of points where some exclusion predicate is within ``tol_excl`` of 0."""
        X = np.atleast_2d(np.asarray(X, float))
        env = {c: X[:, i] for i, c in enumerate(self.coords)}
        env[TIME] = np.broadcast_to(np.asarray(t, float), X.shape[:1])
        mask = np.zeros(X.shape[0], bool)
        for e in self.exclusions:
            with np.errstate(all="ignore"):
                val = np.broadcast_to(eval_float(e, env), X.shape[:1])
            mask |= ~np.isfinite(val) | (np.abs(val) < self.tol_excl)
        return mask

    def position(self, X: np.ndarray, t) -> np.ndarray:
        """Plain positions phi(X, t), shape ``(*batch, n)``."""
        X = np.asarray(X, float)
        env = {c: X[..., i] for i, c in enumerate(self.coords)}
        env[TIME] = np.asarray(t, float)
        shape = np.broadcast_shapes(X.shape[:-1], np.shape(t))
        return np.stack([np.broadcast_to(eval_float(e, env), shape) for e in self.components], axis=-1)


# construction of the basic jets ------------------------------------------------
def motion_jets(spec: MotionSpec, X: np.ndarray, t) -> Jet:
    """phi as jets over (u^1..u^m, t); shape ``(*batch, n)``."""
    X = np.asarray(X, float)
    if X.shape[-1] != spec.m:
        raise ValueError(f"material points need {spec.m} coordinates")
    batch = X.shape[:-1]
    tt = np.broadcast_to(np.asarray(t, float), batch)
    seeds = jets.seed(spec.variables, [X[..., i] for i in range(spec.m)] + [tt])
    env = dict(zip(spec.variables.names, seeds))
    return jets.stack([eval_jet(e, env, spec.variables).broadcast_to(batch) for e in spec.components], axis=-1)


def deformation_gradient(position: Jet, m: int) -> Jet:
    """F[..., a, i] = d_i phi^a."""
    return position.grad(range(m), axis=-1)


def induced_metric(F: Jet, gbar: Jet, tol_sing: float = TOL_SING) -> tuple[Jet, Jet, np.ndarray]:
    """g_ij = gbar_ab F^a_i F^b_j, its inverse, and det g (values)."""
    gF = jets.einsum("...ab,...bj->...aj", gbar, F)
    g = jets.einsum("...ai,...aj->...ij", F, gF)
    det = np.linalg.det(g.value)
    if np.any(~np.isfinite(det)) or np.any(det <= tol_sing):
        raise DegenerateFrameError(f"degenerate frame: det g = {np.min(det):.3g} <= {tol_sing}")
    return g, jets.inv(g), det


def _levi_civita(n: int):
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        yield perm, (-1) ** inversions


def unit_normal(F: Jet, gbar: Jet, gbar_inv: Jet) -> tuple[Jet, Jet]:
    """Unit normal (upper and lower index) from the generalized cross product of F's columns.

    n_a is proportional to eps_{a b_1..b_m} F^{b_1}_1 ... F^{b_m}_m; the positive factor
    sqrt(det gbar) drops out under normalization.
    """
    n = F.shape[-2]
    m = F.shape[-1]
    comps = [None] * n
    for perm, sign in _levi_civita(n):
        term = F[..., perm[1], 0]
        for i in range(1, m):
            term = term * F[..., perm[i + 1], i]
        term = term if sign > 0 else -term
        comps[perm[0]] = term if comps[perm[0]] is None else comps[perm[0]] + term
    lower = jets.stack(comps, axis=-1)
    upper = jets.einsum("...ab,...b->...a", gbar_inv, lower)
    norm2 = jets.einsum("...a,...a->...", upper, lower)
    if np.any(norm2.value <= 1e-300):
        raise DegenerateFrameError("zero generalized cross product")
    inv_norm = 1 / jets.sqrt(norm2)
    upper = upper * inv_norm.expand_dims(-1)
    lower = lower * inv_norm.expand_dims(-1)
    return upper, lower


def project_tangent(W, F, g_inv, gbar):
    """Chart components of the tangential projection: w^i = g^{ij} gbar_ab W^a F^b_j."""
    Fl = _ein("...ab,...bj->...aj", gbar, F)
    c = _ein("...a,...aj->...j", W, Fl)
    return _ein("...ij,...j->...i", g_inv, c)


def _ein(sub, a, b):
    if isinstance(a, Jet) or isinstance(b, Jet):
        return jets.einsum(sub, a, b)
    return np.einsum(sub, a, b)


def second_fundamental_form(position: Jet, F: Jet, normal_lower: Jet, gamma_bar: Jet, m: int) -> Jet:
    """B_ij = gbar(n, d_i d_j phi + Gammabar(F_i, F_j))."""
    hess = F.grad(range(m), axis=-1)  # [a, i, j]
    acc = hess + _gamma_ff(gamma_bar, F)
    return jets.einsum("...b,...bij->...ij", normal_lower, acc)


def _gamma_ff(gamma_bar: Jet, F: Jet) -> Jet:
    t = jets.einsum("...bcd,...ci->...bid", gamma_bar, F)
    return jets.einsum("...bid,...dj->...bij", t, F)


def shape_operator(B: Jet, g_inv: Jet) -> Jet:
    return jets.einsum("...ik,...kj->...ij", g_inv, B)


def third_fundamental_form(B: Jet, S: Jet) -> Jet:
    return jets.einsum("...ik,...kj->...ij", B, S)


def christoffels(g: Jet, g_inv: Jet, m: int) -> Jet:
    if g.order < 1:
        raise DegenerateFrameError("metric jets need one derivative order of headroom")
    return christoffels_from_metric(g, g_inv, range(m))


def riemann(gamma: Jet, m: int) -> Jet:
    return riemann_from_christoffels(gamma, range(m))


_LETTERS = "abcdefgh"


def cov_deriv(T: Jet, gamma: Jet, kinds: str) -> Jet:
    """Covariant derivative of a chart tensor; ``kinds`` gives 'u'/'d' per tensor index.

    The result carries the derivative index first: ``out[..., k, *T-indices]``.
    """
    r = len(kinds)
    m = gamma.shape[-1]
    out = T.grad(range(m), axis=-(r + 1))
    idx = _LETTERS[:r]
    for p, kind in enumerate(kinds):
        summed = idx[:p] + "y" + idx[p + 1:]
        if kind == "u":
            out = out + jets.einsum(f"...{idx[p]}zy,...{summed}->...z{idx}", gamma, T)
        elif kind == "d":
            out = out - jets.einsum(f"...yz{idx[p]},...{summed}->...z{idx}", gamma, T)
        else:
            raise ValueError(f"index kind must be 'u' or 'd', got {kind!r}")
    return out


def cov_deriv_plain(T: np.ndarray, dT: np.ndarray, gamma: np.ndarray, kinds: str) -> np.ndarray:
    """Same as :func:`cov_deriv` for plain arrays with partials ``dT[..., k, *T]`` supplied."""
    r = len(kinds)
    idx = _LETTERS[:r]
    out = dT.copy()
    for p, kind in enumerate(kinds):
        summed = idx[:p] + "y" + idx[p + 1:]
        if kind == "u":
            out = out + np.einsum(f"...{idx[p]}zy,...{summed}->...z{idx}", gamma, T)
        else:
            out = out - np.einsum(f"...yz{idx[p]},...{summed}->...z{idx}", gamma, T)
    return out


def flat(T, g):
    """Lower the first index of a chart tensor (vector or (1,1)) with g."""
    rank = T.ndim - (g.ndim - 2)
    rest = "b" * (rank - 1)
    return _ein(f"...ia,...a{rest}->...i{rest}", g, T)


def sharp(xi, g_inv):
    """Raise the first index of a chart tensor (covector or (0,2)) with g^{-1}."""
    return flat(xi, g_inv)


@dataclass
class GeomFrame:
    """Pointwise (batched) geometric record.  All fields are jets over (u, t)."""

    spec: MotionSpec
    X: np.ndarray
    t: np.ndarray
    position: Jet
    F: Jet
    ambient: AmbientFrame
    g: Jet
    g_inv: Jet
    det_g: np.ndarray
    normal: Jet
    normal_lower: Jet
    B: Jet
    S: Jet
    III: Jet
    christoffel: Jet
    riemann: Jet
    grad_S: Jet
    grad_B: Jet

    @property
    def m(self) -> int:
        return self.spec.m

    def project(self, W):
        return project_tangent(W, self.F, self.g_inv, self.ambient.metric)

    def push(self, w):
        """J w: chart vector -> ambient components."""
        return _ein("...ai,...i->...a", self.F, w)


def geom_frame(spec: MotionSpec, X: np.ndarray, t, tol_sing: float = TOL_SING) -> GeomFrame:
    X = np.asarray(X, float)
    m = spec.m
    pos = motion_jets(spec, X, t)
    amb_x = ambient_frame(spec.ambient, pos.value)
    amb = pullback(amb_x, pos)
    F = deformation_gradient(pos, m)
    g, g_inv, det = induced_metric(F, amb.metric, tol_sing)
    nu, nl = unit_normal(F, amb.metric, amb.metric_inv)
    B = second_fundamental_form(pos, F, nl, amb.christoffel, m)
    S = shape_operator(B, g_inv)
    III = third_fundamental_form(B, S)
    gam = christoffels(g, g_inv, m)
    R = riemann(gam, m)
    gS = cov_deriv(S, gam, "ud")
    gB = cov_deriv(B, gam, "dd")
    tt = np.broadcast_to(np.asarray(t, float), X.shape[:-1])
    return GeomFrame(spec, X, tt, pos, F, amb, g, g_inv, det, nu, nl, B, S, III, gam, R, gS, gB)


# structure equations -------------------------------------------------------------
def codazzi_residual(fr: GeomFrame) -> np.ndarray:
    """(nabla_u B)(v, w) - (nabla_v B)(u, w) - Rbar_flat(Ju, Jv, Jw, n) on coordinate fields.

    Returned as ``res[..., i, j, k]`` for u = e_i, v = e_j, w = e_k.
    """
    gB = fr.grad_B.value  # [i, j, k] = (nabla_i B)_jk
    lhs = gB - np.swapaxes(gB, -3, -2)
    rhs = _rbar_flat_tttn(fr)
    return lhs - rhs


def _rbar_flat_tttn(fr: GeomFrame) -> np.ndarray:
    # Rbar_flat(X, Y, Z, W) := gbar(Rbar(X, Y) Z, W) = rflat[e, b, c, d] W^e Z^b X^c Y^d
    rf = fr.ambient.riemann_flat.value
    F = fr.F.value
    n = fr.normal.value
    return np.einsum("...ebcd,...ci,...dj,...bk,...e->...ijk", rf, F, F, F, n)


def gauss_residual(fr: GeomFrame) -> np.ndarray:
    """P Rbar(Ju, Jv) Jw - [R(u, v) w + g(Su, w) Sv - g(Sv, w) Su].

    Returned as ``res[..., a, i, j, k]`` (component a) for u = e_i, v = e_j, w = e_k.
    """
    F = fr.F.value
    rb = fr.ambient.riemann.value
    amb = np.einsum("...abcd,...ci,...dj,...bk->...aijk", rb, F, F, F)
    proj = np.einsum("...ab,...bcjk->...acjk", fr.g_inv.value,
                     np.einsum("...ea,...ed,...dijk->...aijk", F, fr.ambient.metric.value, amb))
    R = fr.riemann.value  # R(e_i, e_j) e_k = R[a, k, i, j]
    Rijk = np.einsum("...akij->...aijk", R)
    S = fr.S.value
    B = fr.B.value  # g(S e_i, e_k) = B[i, k]
    Sv = S  # S e_j = S[:, j]
    rhs = Rijk + np.einsum("...ik,...aj->...aijk", B, Sv) - np.einsum("...jk,...ai->...aijk", B, S)
    return proj - rhs


def weingarten_residual(fr: GeomFrame) -> np.ndarray:
    """B_ij + gbar(d_i n + Gammabar(F_i, n), F_j): checks S u = -P nabla_Ju n."""
    m = fr.m
    dn = fr.normal.grad(range(m), axis=-1).value  # [a, i]
    cov = dn + np.einsum("...abc,...bi,...c->...ai", fr.ambient.christoffel.value, fr.F.value, fr.normal.value)
    val = np.einsum("...ai,...ab,...bj->...ij", cov, fr.ambient.metric.value, fr.F.value)
    return fr.B.value + val


def normal_residuals(fr: GeomFrame) -> tuple[np.ndarray, np.ndarray]:
    """gbar(n, n) - 1 and gbar(n, F e_i)."""
    gb = fr.ambient.metric.value
    n = fr.normal.value
    nn = np.einsum("...a,...ab,...b->...", n, gb, n) - 1.0
    nF = np.einsum("...a,...ab,...bi->...i", n, gb, fr.F.value)
    return nn, nF


def metric_compat_residual(fr: GeomFrame) -> np.ndarray:
    """nabla g (should vanish)."""
    return cov_deriv(fr.g, fr.christoffel, "dd").value


def flat_sharp_commutation_residual(fr: GeomFrame) -> np.ndarray:
    """(nabla S)^flat - nabla B."""
    lowered = np.einsum("...ia,...kaj->...kij", fr.g.value, fr.grad_S.value)
    return lowered - fr.grad_B.value


def sectional_curvature(fr: GeomFrame) -> np.ndarray:
    """Sectional curvature of the coordinate plane (e_1, e_2); surfaces only."""
    if fr.m < 2:
        raise ValueError("sectional curvature needs m >= 2")
    R = fr.riemann.value
    g = fr.g.value
    Rflat = np.einsum("...ae,...ebcd->...abcd", g, R)
    # <R(e1, e2) e2, e1> = Rflat[0, 1, 0, 1]
    num = Rflat[..., 0, 1, 0, 1]
    return num / (g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] ** 2)
