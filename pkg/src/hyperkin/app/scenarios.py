"""Built-in scenario catalog and random trig-polynomial motions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..ambient import AmbientSpec, euclidean, hyperbolic_half_space, poincare_half_plane, stereographic_sphere, warped_space
from ..surface import MotionSpec

DEFAULT_COUNT = 17
SHRINK = 0.05

BUILTIN_AMBIENTS = {
    "poincare-half-plane": poincare_half_plane,
    "stereographic-sphere": stereographic_sphere,
    "hyperbolic-half-space": hyperbolic_half_space,
    "warped": warped_space,
}


@dataclass(frozen=True)
class GridSpec:
    counts: tuple[int, ...]
    t0: float = 1.0
    tau_probes: tuple[float, ...] = ()
    shrink: float = SHRINK

    def __post_init__(self):
        if any(int(c) < 1 for c in self.counts):
            raise ValueError("grid counts must be positive")
        if not 0 <= self.shrink < 0.5:
            raise ValueError("grid shrink must lie in [0, 0.5)")

    @property
    def times(self) -> tuple[float, ...]:
        return (self.t0,) + tuple(self.t0 + o for o in self.tau_probes)

    def axes(self, domain) -> list[np.ndarray]:
        out = []
        for (lo, hi), c in zip(domain, self.counts):
            pad = self.shrink * (hi - lo)
            a, b = lo + pad, hi - pad
            out.append(np.array([0.5 * (a + b)]) if c == 1 else np.linspace(a, b, int(c)))
        return out


@dataclass(frozen=True)
class Scenario:
    name: str
    motion: MotionSpec
    grid: GridSpec
    description: str = ""
    tags: tuple[str, ...] = field(default=())

    def with_grid(self, counts=None, t0=None) -> "Scenario":
        g = self.grid
        if counts is not None:
            counts = tuple(counts)
            if len(counts) == 1 and self.motion.m > 1:
                counts = counts * self.motion.m
            if len(counts) != self.motion.m:
                raise ValueError(f"grid needs {self.motion.m} counts, got {len(counts)}")
            g = GridSpec(counts, g.t0, g.tau_probes, g.shrink)
        if t0 is not None:
            g = GridSpec(g.counts, float(t0), g.tau_probes, g.shrink)
        return Scenario(self.name, self.motion, g, self.description, self.tags)


def _grid(m: int, t0: float = 1.0, count: int = DEFAULT_COUNT) -> GridSpec:
    return GridSpec((count,) * m, t0)


def _sphere(r: str = "1") -> list[str]:
    return [f"{r}*cos(u)*sin(v)", f"{r}*sin(u)*sin(v)", f"{r}*cos(v)"]


def _ellipsoid_parallel(a: float, b: float, c: float) -> list[str]:
    """j + (t - 1) n for the ellipsoid with semi-axes (a, b, c) and its outward unit normal."""
    j = [f"{a:g}*cos(u)*sin(v)", f"{b:g}*sin(u)*sin(v)", f"{c:g}*cos(v)"]
    nu = [f"cos(u)*sin(v)/{a:g}", f"sin(u)*sin(v)/{b:g}", f"cos(v)/{c:g}"]
    norm = f"sqrt(({nu[0]})^2 + ({nu[1]})^2 + ({nu[2]})^2)"
    return [f"{j[k]} + (t - 1)*({nu[k]})/{norm}" for k in range(3)]


def builtin_scenarios() -> list[Scenario]:
    two_pi, pi = 2 * np.pi, np.pi
    E3 = euclidean(3)
    out = [
        Scenario(
            "balloon",
            MotionSpec.from_strings(("u", "v"), ["t*cos(u)*sin(2*v)", "t*sin(u)*sin(2*v)", "2*t*sin(v)^2"],
                                    E3, [(0, two_pi), (0, pi / 2)], ["sin(2*v)"]),
            _grid(2),
            "Unit sphere about (0,0,1) expanding homothetically from the origin.",
            ("affine",),
        ),
        Scenario(
            "cylinder-unroll",
            MotionSpec.from_strings(("u", "v"), ["t*v", "t*sin(2*u/t)", "2*t*sin(u/t)^2"],
                                    E3, [(0, pi / 2), (0, 1)]),
            _grid(2),
            "Cylinder unrolling isometrically while elongating along its axis.",
            ("affine",),
        ),
        Scenario(
            "parallel-sphere",
            MotionSpec.from_strings(("u", "v"), _sphere("t"), E3, [(0, two_pi), (0, pi)], ["sin(v)"]),
            _grid(2),
            "Unit sphere moving parallel to itself along its normal.",
            ("affine", "parallel"),
        ),
        Scenario(
            "parallel-ellipsoid",
            MotionSpec.from_strings(("u", "v"), _ellipsoid_parallel(1.0, 1.0, 0.8), E3,
                                    [(0, two_pi), (0, pi)], ["sin(v)"]),
            _grid(2),
            "Ellipsoid (1, 1, 0.8) moving parallel to itself along its normal.",
            ("non-affine", "parallel"),
        ),
        Scenario(
            "rigid-translation",
            MotionSpec.from_strings(("u", "v"), ["u + 0.2*t", "v - 0.1*t", "0.3*sin(u)*cos(v) + 0.5*t"],
                                    E3, [(0, 2), (0, 2)]),
            _grid(2),
            "Graph surface translated rigidly.",
            ("affine", "isometric"),
        ),
        Scenario(
            "sphere-killing-rotation",
            MotionSpec.from_strings(("u", "v"), ["cos(u + 0.7*t)*sin(v)", "sin(u + 0.7*t)*sin(v)", "cos(v)"],
                                    E3, [(0, two_pi), (0, pi)], ["sin(v)"]),
            _grid(2),
            "Unit sphere rotating about its axis: a tangential Killing motion.",
            ("affine", "isometric", "tangential"),
        ),
        Scenario(
            "normal-motion-vn(u)",
            MotionSpec.from_strings(("u", "v"), _sphere("(1 + (t - 1)*(1 + 0.5*sin(u)))"), E3,
                                    [(0, two_pi), (0, pi)], ["sin(v)"]),
            _grid(2),
            "Unit sphere moving normally with speed 1 + 0.5 sin u.",
            ("non-affine", "normal"),
        ),
        Scenario(
            "hyperbolic-circle",
            MotionSpec.from_strings(("u",), ["(1.5 - 0.5*t)*cos(u)", "2 + (1.5 - 0.5*t)*sin(u)"],
                                    poincare_half_plane(), [(0, two_pi)]),
            _grid(1),
            "Euclidean circle shrinking in the Poincare half-plane.",
            ("non-affine", "curved-ambient"),
        ),
        Scenario(
            "warped-graph",
            MotionSpec.from_strings(("u", "v"),
                                    ["u + 0.1*t*v", "v + 0.2*sin(t*u)", "0.3*u*v + 0.2*t*cos(v) + 0.1*t^2*u"],
                                    warped_space(), [(0, 1), (0, 1)]),
            _grid(2),
            "General surface motion in a curved 3-dimensional ambient.",
            ("non-affine", "curved-ambient"),
        ),
    ]
    return out


def scenario_by_name(name: str) -> Scenario:
    for s in builtin_scenarios():
        if s.name == name:
            return s
    names = ", ".join(s.name for s in builtin_scenarios())
    raise KeyError(f"unknown scenario {name!r} (available: {names})")


# random motions ------------------------------------------------------------------
def _trig_term(rng: np.random.Generator, amp: float) -> str:
    a = rng.uniform(-amp, amp)
    k, l = rng.integers(0, 3, size=2)
    fu = rng.choice(["sin", "cos"])
    fv = rng.choice(["sin", "cos"])
    ft = rng.choice(["1", "t", "t^2", "sin(t)"])
    return f"{a:.6f}*{fu}({k}*u + 0.3)*{fv}({l}*v - 0.2)*{ft}"


def random_trig_motion(seed: int, terms: int = 3, amp: float = 0.08) -> Scenario:
    """A near-graph motion u -> (u, v, h) + trig-polynomial perturbations, immersed on [0,1]^2."""
    rng = np.random.default_rng(seed)
    comps = []
    for base in ("u", "v", "0"):
        extra = " + ".join(_trig_term(rng, amp if base != "0" else 3 * amp) for _ in range(terms))
        comps.append(f"{base} + {extra}")
    motion = MotionSpec.from_strings(("u", "v"), comps, euclidean(3), [(0, 1), (0, 1)])
    return Scenario(f"random-trig-{seed}", motion, GridSpec((5, 5), 1.0), "random trig-polynomial motion")
