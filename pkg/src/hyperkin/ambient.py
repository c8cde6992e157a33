"""Ambient Riemannian geometry in one chart, evaluated on jets.

Christoffel symbols are stored as ``gamma[..., a, b, c]`` for the symbol
``Gamma^a_{bc}``.  Curvature is stored as ``riem[..., a, b, c, d]`` with

    (R(X, Y) Z)^a = riem[a, b, c, d] X^c Y^d Z^b,
    R(X, Y) Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,

and ``riem_flat[a, b, c, d] = g_ae riem[e, b, c, d]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jets
from .expr import Expr, compile_expr, eval_float, eval_jet, to_string
from .jets import Jet, VariableSet


class AmbientError(ValueError):
    pass


@dataclass(frozen=True)
class AmbientSpec:
    """Euclidean space (``entries is None``) or a metric given by expressions in x1..xn."""

    dim: int
    entries: tuple[tuple[Expr, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise AmbientError("ambient dimension must be positive")
        if self.entries is not None:
            if len(self.entries) != self.dim or any(len(r) != self.dim for r in self.entries):
                raise AmbientError(f"metric must be {self.dim}x{self.dim}")

    @property
    def euclidean(self) -> bool:
        return self.entries is None

    @property
    def coords(self) -> tuple[str, ...]:
        return coord_names(self.dim)

    @classmethod
    def from_strings(cls, rows: Sequence[Sequence[str]], name: str = "") -> "AmbientSpec":
        n = len(rows)
        allowed = coord_names(n)
        entries = tuple(
            tuple(compile_expr(str(s), allowed, f"metric entry ({a + 1},{b + 1})") for b, s in enumerate(r))
            for a, r in enumerate(rows)
        )
        return cls(n, entries, name)

    def as_strings(self) -> list[list[str]] | None:
        if self.entries is None:
            return None
        return [[to_string(e) for e in r] for r in self.entries]


def coord_names(n: int) -> tuple[str, ...]:
    return tuple(f"x{a + 1}" for a in range(n))


def euclidean(n: int) -> AmbientSpec:
    return AmbientSpec(n, None, "euclidean")


def poincare_half_plane() -> AmbientSpec:
    return AmbientSpec.from_strings([["1/x2^2", "0"], ["0", "1/x2^2"]], "poincare-half-plane")


def stereographic_sphere() -> AmbientSpec:
    f = "4/(1 + x1^2 + x2^2)^2"
    return AmbientSpec.from_strings([[f, "0"], ["0", f]], "stereographic-sphere")


def hyperbolic_half_space() -> AmbientSpec:
    f = "1/x3^2"
    return AmbientSpec.from_strings([[f, "0", "0"], ["0", f, "0"], ["0", "0", f]], "hyperbolic-half-space")


def warped_space() -> AmbientSpec:
    """A non-constant-curvature metric on R^3, positive-definite everywhere."""
    return AmbientSpec.from_strings(
        [
            ["1 + 0.25*x3^2", "0.1*x1*x2", "0"],
            ["0.1*x1*x2", "1 + 0.25*x1^2", "0"],
            ["0", "0", "exp(0.3*x1)"],
        ],
        "warped",
    )


# evaluation --------------------------------------------------------------------
def ambient_metric_at(spec: AmbientSpec, x: Sequence[Jet]) -> Jet:
    """Metric components as jets (shape ``(*batch, n, n)``) at the ambient jets ``x``."""
    if len(x) != spec.dim:
        raise AmbientError(f"expected {spec.dim} ambient coordinates, got {len(x)}")
    vars = x[0].vars
    shape = np.broadcast_shapes(*(xi.shape for xi in x))
    if spec.euclidean:
        g = Jet.const(vars, np.broadcast_to(np.eye(spec.dim), shape + (spec.dim, spec.dim)))
    else:
        env = dict(zip(spec.coords, x))
        g = jets.stack(
            [jets.stack([eval_jet(e, env, vars).broadcast_to(shape) for e in row], axis=-1)
             for row in spec.entries],
            axis=-2,
        )
        asym = np.max(np.abs(g.value - np.swapaxes(g.value, -1, -2)), initial=0.0)
        if asym > 1e-12:
            raise AmbientError(f"ambient metric is not symmetric (max asymmetry {asym:.3g})")
    check_positive_definite(g.value, "ambient metric")
    return g


def check_positive_definite(m: np.ndarray, what: str):
    if not np.all(np.isfinite(m)):
        raise AmbientError(f"{what} is not finite")
    ev = np.linalg.eigvalsh(0.5 * (m + np.swapaxes(m, -1, -2)))
    if np.any(ev <= 0):
        raise AmbientError(f"{what} is not positive-definite (min eigenvalue {ev.min():.3g})")


def christoffels_from_metric(g: Jet, ginv: Jet, var_idx: Sequence[int]) -> Jet:
    """Gamma^a_{bc} = 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc) over the chart variables ``var_idx``."""
    dg = g.grad(var_idx, axis=-3)  # dg[e, i, j] = d_e g_ij
    lower = 0.5 * (jets.permute(dg, "bdc->dbc") + jets.permute(dg, "cdb->dbc") - dg)
    return jets.einsum("...ad,...dbc->...abc", ginv, lower)


def ambient_christoffels(g: Jet, ginv: Jet | None = None) -> Jet:
    """Levi-Civita symbols of an ambient metric given as jets over x1..xn."""
    if g.order < 1:
        raise AmbientError("metric jets need one derivative order of headroom")
    if ginv is None:
        ginv = jets.inv(g)
    n = g.shape[-1]
    return christoffels_from_metric(g, ginv, range(n))


def riemann_from_christoffels(gamma: Jet, var_idx: Sequence[int]) -> Jet:
    """R^a_{bcd} = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb."""
    dgam = gamma.grad(var_idx, axis=-4)  # dgam[c, a, d, b] = d_c Gamma^a_db
    quad = jets.einsum("...ace,...edb->...abcd", gamma, gamma)
    return (jets.permute(dgam, "cadb->abcd") - jets.permute(dgam, "dacb->abcd")
            + quad - quad.swapaxes(-2, -1))


def ambient_curvature(gamma: Jet, g: Jet) -> tuple[Jet, Jet]:
    if gamma.order < 1:
        raise AmbientError("metric jets need two derivative orders of headroom for curvature")
    n = gamma.shape[-1]
    riem = riemann_from_christoffels(gamma, range(n))
    flat = jets.einsum("...ae,...ebcd->...abcd", g, riem)
    return riem, flat


@dataclass
class AmbientFrame:
    """Ambient quantities as jets over x1..xn (or pulled back to surface variables)."""

    metric: Jet
    metric_inv: Jet
    christoffel: Jet
    riemann: Jet
    riemann_flat: Jet
    euclidean: bool = False


def ambient_frame(spec: AmbientSpec, x0: np.ndarray) -> AmbientFrame:
    """Ambient frame as x-jets expanded about the points ``x0`` (shape ``(*batch, n)``)."""
    x0 = np.asarray(x0, dtype=float)
    n = spec.dim
    if x0.shape[-1] != n:
        raise AmbientError(f"point has {x0.shape[-1]} coordinates, ambient has {n}")
    vars = VariableSet(spec.coords)
    xs = jets.seed(vars, [x0[..., a] for a in range(n)])
    g = ambient_metric_at(spec, xs)
    batch = x0.shape[:-1]
    if spec.euclidean:
        zero3 = Jet.zeros(vars, batch + (n, n, n))
        zero4 = Jet.zeros(vars, batch + (n, n, n, n))
        return AmbientFrame(g, g, zero3, zero4, zero4, True)
    ginv = jets.inv(g)
    gamma = ambient_christoffels(g, ginv)
    riem, flat = ambient_curvature(gamma, g)
    return AmbientFrame(g, ginv, gamma, riem, flat, False)


def pullback(frame: AmbientFrame, position: Jet) -> AmbientFrame:
    """Compose an x-jet frame with surface jets ``position`` (shape ``(*batch, n)``)."""
    n = position.shape[-1]
    inner = [position[..., a] for a in range(n)]
    uv = position.vars
    if frame.euclidean:
        batch = position.shape[:-1]
        g = Jet.const(uv, np.broadcast_to(np.eye(n), batch + (n, n)))
        return AmbientFrame(g, g, Jet.zeros(uv, batch + (n,) * 3), Jet.zeros(uv, batch + (n,) * 4),
                            Jet.zeros(uv, batch + (n,) * 4), True)
    return AmbientFrame(
        jets.compose(frame.metric, inner, 2),
        jets.compose(frame.metric_inv, inner, 2),
        jets.compose(frame.christoffel, inner, 3),
        jets.compose(frame.riemann, inner, 4),
        jets.compose(frame.riemann_flat, inner, 4),
        False,
    )


def sectional_curvature(frame: AmbientFrame, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """K(X, Y) = Rflat(X, Y, X, Y)-style ratio using the storage layout above."""
    rf = frame.riemann_flat.value
    g = frame.metric.value
    # <R(X,Y)Y, X> = rf[a, b, c, d] X^a Y^b X^c Y^d
    num = np.einsum("...abcd,...a,...b,...c,...d->...", rf, X, Y, X, Y)
    gxx = np.einsum("...ab,...a,...b->...", g, X, X)
    gyy = np.einsum("...ab,...a,...b->...", g, Y, Y)
    gxy = np.einsum("...ab,...a,...b->...", g, X, Y)
    return num / (gxx * gyy - gxy**2)


def metric_values(spec: AmbientSpec, x: np.ndarray) -> np.ndarray:
    """Plain metric values at points ``x`` (no derivatives)."""
    x = np.asarray(x, float)
    if spec.euclidean:
        return np.broadcast_to(np.eye(spec.dim), x.shape[:-1] + (spec.dim, spec.dim)).copy()
    env = {name: x[..., a] for a, name in enumerate(spec.coords)}
    out = np.empty(x.shape[:-1] + (spec.dim, spec.dim))
    for a, row in enumerate(spec.entries):
        for b, e in enumerate(row):
            out[..., a, b] = eval_float(e, env)
    return out
