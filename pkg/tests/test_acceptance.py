"""Acceptance criteria 1-8: one PASS/FAIL line each, with runtimes.

The lines are echoed in the pytest terminal summary; ``python tests/test_acceptance.py``
prints them directly.
"""

import itertools
import re
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyperkin import jets  # noqa: E402
from hyperkin import kinematics as K  # noqa: E402
from hyperkin import surface as S  # noqa: E402
from hyperkin import variation as V  # noqa: E402
from hyperkin.app.runner import grid_points, relative_diff, run_grid, stretching_route_residual  # noqa: E402
from hyperkin.app.scenarios import builtin_scenarios, random_trig_motion, scenario_by_name  # noqa: E402
from hyperkin.expr import ExprError, compile_expr, eval_float, eval_jet, parse  # noqa: E402
from hyperkin.jets import VariableSet  # noqa: E402
from test_expr import CORPUS, ERRORS  # noqa: E402

LINES: list[str] = []
N_RANDOM = 20


def report(n: int, ok: bool, title: str, detail: str, seconds: float) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} -- {detail} [{seconds:.2f}s]"
    LINES.append(line)
    print(line)
    assert ok, line


_cache: dict = {}


def suite():
    """Built-in scenarios at their default grids plus the random trig-polynomial motions."""
    if "suite" not in _cache:
        scs = builtin_scenarios() + [random_trig_motion(s) for s in range(N_RANDOM)]
        _cache["suite"] = [(sc, run_grid(sc)) for sc in scs]
    return _cache["suite"]


def test_criterion_1_balloon():
    t0 = time.perf_counter()
    sc = scenario_by_name("balloon")
    res = run_grid(sc)
    errs = {"g": 0.0, "gamma": 0.0, "D": 0.0, "D_flat": 0.0, "routes": 0.0}
    for b in res.batches:
        v = b.X[:, 1]
        g = b.frame.g.value
        gam = b.frame.christoffel.value
        errs["g"] = max(errs["g"], np.abs(g[:, 0, 0] - np.sin(2 * v) ** 2).max(), np.abs(g[:, 1, 1] - 4).max(),
                        np.abs(g[:, 0, 1]).max())
        errs["gamma"] = max(errs["gamma"], np.abs(gam[:, 0, 0, 1] - 2 / np.tan(2 * v)).max(),
                            np.abs(gam[:, 1, 0, 0] + 0.25 * np.sin(4 * v)).max())
        errs["D"] = max(errs["D"], np.abs(b.kin.D.value - np.eye(2)).max())
        errs["D_flat"] = max(errs["D_flat"], np.abs(b.kin.D_flat.value - g).max())
        errs["routes"] = max(errs["routes"], b.record.max_route_residual().max())
    n = res.n_points + len(res.skipped)
    dt = time.perf_counter() - t0
    ok = (n == 17 * 17 and errs["g"] < 1e-12 and errs["gamma"] < 1e-10 and errs["D"] < 1e-10
          and errs["D_flat"] < 1e-10 and errs["routes"] < 1e-8
          and res.verdict.affine and not res.verdict.isometric and dt < 5)
    detail = (f"{res.n_points} pts, |g|={errs['g']:.1e} |Gamma|={errs['gamma']:.1e} |D-I|={errs['D']:.1e} "
              f"|Dflat-g|={errs['D_flat']:.1e} routes={errs['routes']:.1e} {res.verdict.line()}")
    report(1, ok, "balloon", detail, dt)


def test_criterion_2_cylinder():
    t0 = time.perf_counter()
    sc = scenario_by_name("cylinder-unroll")
    res = run_grid(sc)
    _, X = grid_points(sc)
    g_err = gam_err = 0.0
    for tau in (0.6, 0.9, 1.0, 1.3, 1.7):
        expect = np.diag([4.0, tau ** 2])
        g_err = max(g_err, np.abs(K.tau_metric(sc.motion, X, tau) - expect).max())
        fr = S.geom_frame(sc.motion, X, tau)
        g_err = max(g_err, np.abs(fr.g.value - expect).max())
        gam_err = max(gam_err, np.abs(fr.christoffel.value).max())
    dflat = max(np.abs(b.kin.D_flat.value - np.diag([0.0, 1.0])).max() for b in res.batches)
    dt = time.perf_counter() - t0
    ok = (g_err < 1e-12 and dflat < 1e-10 and gam_err < 1e-12 and res.verdict.affine
          and not res.verdict.isometric and dt < 5)
    detail = f"|g-diag(4,t^2)|={g_err:.1e} |Dflat-diag(0,1)|={dflat:.1e} |Gamma|={gam_err:.1e} {res.verdict.line()}"
    report(2, ok, "cylinder unrolling + elongation", detail, dt)


def test_criterion_3_parallel():
    t0 = time.perf_counter()
    sph = run_grid(scenario_by_name("parallel-sphere"))
    sph_sup = max(np.abs(r).max() for b in sph.batches for r in b.record.routes.values())
    ell = run_grid(scenario_by_name("parallel-ellipsoid"))
    ell_sup = ell.verdict.sup_dconn
    rel = max(V.residual(b.record.routes["parallel"], b.record.routes["definition"]).max() for b in ell.batches)
    dt = time.perf_counter() - t0
    ok = sph_sup < 1e-8 and ell_sup > 1e-3 and rel < 1e-7 and dt < 10
    detail = f"sphere sup|dconn|={sph_sup:.1e}; ellipsoid sup|dconn|={ell_sup:.3e}, parallel~definition={rel:.1e}"
    report(3, ok, "parallel motion", detail, dt)


def test_criterion_4_route_agreement():
    t0 = time.perf_counter()
    worst_conn = worst_D = 0.0
    where = ""
    for sc, res in suite():
        c = max(b.record.max_route_residual().max() for b in res.batches)
        d = max(stretching_route_residual(b).max() for b in res.batches)
        if c > worst_conn:
            worst_conn, where = c, sc.name
        worst_D = max(worst_D, d)
    dt = time.perf_counter() - t0
    ok = worst_conn < 1e-7 and worst_D < 1e-8
    detail = (f"{len(suite())} scenarios ({N_RANDOM} random): worst dconn pair {worst_conn:.1e} ({where}), "
              f"worst D route pair {worst_D:.1e}")
    report(4, ok, "route agreement", detail, dt)


def test_criterion_5_criterion_equivalence():
    t0 = time.perf_counter()
    mismatches = []
    for sc, res in suite():
        by_conn = res.verdict.sup_dconn < 1e-6
        by_grad = res.verdict.sup_grad_D < 1e-6
        if by_conn != by_grad or res.verdict.affine != by_grad:
            mismatches.append(sc.name)
    n_aff = sum(res.verdict.affine for _, res in suite())
    dt = time.perf_counter() - t0
    detail = f"{len(suite())} scenarios, {n_aff} affine, mismatches: {', '.join(mismatches) or 'none'}"
    report(5, not mismatches, "sup|dconn| vs sup|grad D| verdicts", detail, dt)


def test_criterion_6_structure_equations():
    t0 = time.perf_counter()
    gauss = codazzi = 0.0
    rbar = {}
    for sc, res in suite():
        for b in res.batches:
            gauss = max(gauss, np.abs(S.gauss_residual(b.frame)).max())
            codazzi = max(codazzi, np.abs(S.codazzi_residual(b.frame)).max())
            if not sc.motion.ambient.euclidean:
                rbar[sc.name] = max(rbar.get(sc.name, 0.0), np.abs(S._rbar_flat_tttn(b.frame)).max())
    dt = time.perf_counter() - t0
    ok = gauss < 1e-8 and codazzi < 1e-8
    curved = ", ".join(f"{k} |Rbar_flat(T,T,T,n)|={v:.2e}" for k, v in sorted(rbar.items()))
    detail = f"Gauss {gauss:.1e}, Codazzi {codazzi:.1e}; curved ambients: {curved}"
    report(6, ok, "structure equations", detail, dt)


def test_criterion_7_kinematics():
    t0 = time.perf_counter()
    exact = True
    dg = split = anti = dn = 0.0
    for sc, res in suite():
        for b in res.batches:
            fr, kin = b.frame, b.kin
            exact &= bool(np.array_equal(kin.delta_g.value, 2 * kin.D_flat.value))
            g = fr.g.value
            for other in (kin.D_kin.value, b.cg_rate):
                dg = max(dg, relative_diff(kin.delta_g.value, 2 * g @ other, 2).max())
            split = max(split, K.split_residual(fr, kin).max())
            anti = max(anti, K.antisymmetry_residual(fr, kin).max())
            dn = max(dn, np.abs(K.normal_transport_fd(sc.motion, b.X, b.t) - kin.delta_n).max())
    dt = time.perf_counter() - t0
    ok = exact and dg < 1e-9 and split < 1e-10 and anti < 1e-8 and dn < 1e-7
    detail = (f"dg=2Dflat exact={exact}, vs routes {dg:.1e}; split {split:.1e}; W antisym {anti:.1e}; "
              f"dn vs FD {dn:.1e}")
    report(7, ok, "kinematic identities", detail, dt)


# criterion 8 -----------------------------------------------------------------------
_STENCILS = {
    1: ([-1, 1], [-0.5, 0.5], 1),
    2: ([-1, 0, 1], [1.0, -2.0, 1.0], 2),
    3: ([-2, -1, 1, 2], [-0.5, 1.0, -1.0, 0.5], 3),
}
_STEPS = {1: 1e-3, 2: 1e-3, 3: 2.5e-3}  # h^4 truncation vs eps/h^3 roundoff


def _random_expr(rng, depth):
    r = rng.integers(0, 9) if depth else 0
    sub = lambda: _random_expr(rng, depth - 1)  # noqa: E731
    if r == 0:
        return str(rng.choice(["u", "v", "t", f"{rng.uniform(0.2, 2):.3f}"]))
    return [
        None,
        lambda: f"({sub()}) * ({sub()})",
        lambda: f"({sub()}) + ({sub()})",
        lambda: f"({sub()}) - {rng.uniform(0.1, 1):.2f}*({sub()})",
        lambda: f"sin({sub()})",
        lambda: f"cos({sub()})",
        lambda: f"exp(0.3*({sub()}))",
        lambda: f"({sub()}) / (2.5 + sin({sub()}))",
        lambda: rng.choice([f"sqrt(1 + ({sub()})^2)", f"log(2 + cos({sub()}))", f"({sub()})^3",
                            f"tan(0.3*sin({sub()}))"]),
    ][r]()


def _fd_partial(e, names, point, idx, h):
    mult = {v: list(idx).count(v) for v in set(idx)}

    def fd(h):
        axes = [(v, *_STENCILS[k]) for v, k in mult.items()]
        combos = list(itertools.product(*(range(len(ax[1])) for ax in axes)))
        P = np.tile(np.asarray(point, float), (len(combos), 1))
        W = np.ones(len(combos))
        for r, combo in enumerate(combos):
            for (v, offs, wts, pw), c in zip(axes, combo):
                P[r, v] += offs[c] * h
                W[r] *= wts[c] / h ** pw
        vals = np.broadcast_to(eval_float(e, {n: P[:, k] for k, n in enumerate(names)}), (len(combos),))
        return float(W @ vals)

    return (4 * fd(h) - fd(2 * h)) / 3


def test_criterion_8_ad_core():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    uvt = VariableSet(("u", "v", "t"))
    monos = [m for k in range(1, 4) for m in itertools.combinations_with_replacement(range(3), k)]
    worst = 0.0
    for _ in range(200):
        e = compile_expr(_random_expr(rng, 4), uvt.names)
        point = rng.uniform(-0.8, 0.8, 3)
        j = eval_jet(e, dict(zip(uvt.names, jets.seed(uvt, point))), uvt)
        for idx in monos:
            fd = _fd_partial(e, uvt.names, point, idx, _STEPS[len(idx)])
            worst = max(worst, abs(float(j.partial(idx)) - fd) / max(1.0, abs(fd)))
    parsed = sum(parse(src) == ast for src, ast in CORPUS)
    diagnosed = 0
    for src, exc, msg in ERRORS:
        try:
            parse(src)
        except exc as err:
            diagnosed += bool(re.search(msg, str(err))) and isinstance(err, ExprError)
    dt = time.perf_counter() - t0
    ok = worst < 1e-6 and parsed == len(CORPUS) and diagnosed == len(ERRORS) and len(CORPUS) + len(ERRORS) >= 30
    detail = (f"200 expressions x {len(monos)} partials, worst rel {worst:.1e}; corpus {parsed}/{len(CORPUS)} ASTs, "
              f"{diagnosed}/{len(ERRORS)} diagnostics")
    report(8, ok, "AD core and parser", detail, dt)


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
