"""Truncated multivariate Taylor jets (forward-mode differentiation to degree 3).

A :class:`Jet` stores, for every canonical multi-index ``alpha`` of total degree
at most 3, the partial derivative ``d^alpha f`` at the expansion point.  The
coefficient array has shape ``(K, *shape)`` where ``K`` is the number of
multi-indices and ``shape`` is an arbitrary trailing shape, so a single Jet
object can carry a whole grid of points and a tensor of components at once.

Each jet also tracks ``order``: the highest derivative order that is exact.
Differentiating a jet lowers it by one; ``partial`` refuses to report anything
above it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Iterable, Sequence

import numpy as np

DEGREE = 3
MAX_VARS = 8


class JetDomainError(ValueError):
    """Argument outside the domain of an elementary function."""


@dataclass(frozen=True)
class VariableSet:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not 1 <= len(names) <= MAX_VARS:
            raise ValueError(f"need 1..{MAX_VARS} variables, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError(f"variable names must be distinct: {names}")

    @property
    def count(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}; have {self.names}") from None

    def __len__(self):
        return len(self.names)


class _Tables:
    """Index bookkeeping for k variables at DEGREE."""

    def __init__(self, k: int):
        self.k = k
        idx: list[tuple[int, ...]] = []
        for d in range(DEGREE + 1):
            idx.extend(combinations_with_replacement(range(k), d))
        self.indices = idx
        self.pos = {a: p for p, a in enumerate(idx)}
        self.size = len(idx)
        self.degree = np.array([len(a) for a in idx])

        # Leibniz pairs, grouped by output index for reduceat.
        ai, bi, coef, starts = [], [], [], []
        for g, gamma in enumerate(idx):
            starts.append(len(ai))
            counts = np.bincount(gamma, minlength=k) if gamma else np.zeros(k, int)
            for alpha_counts in np.ndindex(*(c + 1 for c in counts)):
                alpha_counts = np.array(alpha_counts)
                beta_counts = counts - alpha_counts
                c = 1
                for n_, r_ in zip(counts, alpha_counts):
                    c *= math.comb(int(n_), int(r_))
                ai.append(self.pos[_from_counts(alpha_counts)])
                bi.append(self.pos[_from_counts(beta_counts)])
                coef.append(float(c))
        self.ai = np.array(ai)
        self.bi = np.array(bi)
        self.coef = np.array(coef)
        self.starts = np.array(starts)

        # the same pairs folded to unordered ones, so that a*b == b*a bit for bit
        ui, vi, ucoef, sym, ustarts = [], [], [], [], []
        for g in range(self.size):
            ustarts.append(len(ui))
            stop = starts[g + 1] if g + 1 < self.size else len(ai)
            for p in range(starts[g], stop):
                if ai[p] <= bi[p]:
                    ui.append(ai[p])
                    vi.append(bi[p])
                    ucoef.append(coef[p])
                    sym.append(ai[p] != bi[p])
        self.ui = np.array(ui)
        self.vi = np.array(vi)
        self.ucoef = np.array(ucoef)
        self.sym = np.array(sym)
        self.ustarts = np.array(ustarts)

        # derivative maps: out[alpha] = in[alpha + e_i] when it fits
        self.dsrc = np.zeros((k, self.size), dtype=int)
        self.dvalid = np.zeros((k, self.size), dtype=bool)
        for i in range(k):
            for p, a in enumerate(idx):
                if len(a) < DEGREE:
                    self.dsrc[i, p] = self.pos[tuple(sorted(a + (i,)))]
                    self.dvalid[i, p] = True

        # factorial weights alpha! for composition
        self.alpha_fact = np.array(
            [float(np.prod([math.factorial(int(c)) for c in np.bincount(a, minlength=k)])) if a else 1.0
             for a in idx]
        )


def _from_counts(counts) -> tuple[int, ...]:
    out: list[int] = []
    for i, c in enumerate(counts):
        out.extend([i] * int(c))
    return tuple(out)


@lru_cache(maxsize=None)
def tables(k: int) -> _Tables:
    return _Tables(k)


def canonical(vars: VariableSet, idx: Iterable[int | str]) -> tuple[int, ...]:
    """Sort a multi-index given as variable positions or names."""
    out = []
    for i in idx:
        if isinstance(i, str):
            i = vars.index(i)
        if not 0 <= i < vars.count:
            raise IndexError(f"variable index {i} out of range for {vars.names}")
        out.append(int(i))
    return tuple(sorted(out))


class Jet:
    """Array of degree-3 jets over a :class:`VariableSet`.

    ``coeffs[p]`` is the partial derivative for multi-index ``tables(k).indices[p]``
    (derivative-valued storage, not Taylor coefficients).
    """

    __slots__ = ("vars", "coeffs", "order")
    __array_priority__ = 100

    def __init__(self, vars: VariableSet, coeffs, order: int = DEGREE):
        self.vars = vars
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.order = order
        if self.coeffs.shape[0] != tables(vars.count).size:
            raise ValueError("coefficient array does not match variable set")

    # construction -----------------------------------------------------
    @classmethod
    def const(cls, vars: VariableSet, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((tables(vars.count).size,) + value.shape)
        c[0] = value
        return cls(vars, c)

    @classmethod
    def zeros(cls, vars: VariableSet, shape=()) -> "Jet":
        return cls(vars, np.zeros((tables(vars.count).size,) + tuple(shape)))

    # basic attributes -------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    def __repr__(self):
        return f"Jet(vars={self.vars.names}, shape={self.shape}, order={self.order}, value={self.value!r})"

    def partial(self, idx: Sequence[int | str] = ()) -> np.ndarray:
        """Partial derivative for multi-index ``idx`` (positions or names)."""
        key = canonical(self.vars, idx)
        if len(key) > DEGREE:
            raise IndexError(f"multi-index {idx} exceeds degree {DEGREE}")
        if len(key) > self.order:
            raise IndexError(f"multi-index {idx} exceeds exact order {self.order} of this jet")
        return self.coeffs[tables(self.vars.count).pos[key]]

    def d(self, var: int | str) -> "Jet":
        """Derivative jet with respect to one variable."""
        if isinstance(var, str):
            var = self.vars.index(var)
        if self.order < 1:
            raise IndexError("no derivative headroom left in jet")
        tb = tables(self.vars.count)
        c = self.coeffs[tb.dsrc[var]]
        c[~tb.dvalid[var]] = 0.0
        return Jet(self.vars, c, self.order - 1)

    def grad(self, vars: Sequence[int | str], axis: int = -1) -> "Jet":
        """Stack derivatives w.r.t. ``vars`` along a new tensor axis."""
        return stack([self.d(v) for v in vars], axis=axis)

    def without_value(self) -> "Jet":
        c = self.coeffs.copy()
        c[0] = 0.0
        return Jet(self.vars, c, self.order)

    def truncated(self, order: int) -> "Jet":
        return Jet(self.vars, self.coeffs, min(order, self.order))

    # array-like plumbing ----------------------------------------------
    def __getitem__(self, item) -> "Jet":
        if not isinstance(item, tuple):
            item = (item,)
        return Jet(self.vars, self.coeffs[(slice(None),) + item], self.order)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        axis = _shift_axes(axis, self.ndim)
        return Jet(self.vars, self.coeffs.sum(axis=axis), self.order)

    def moveaxis(self, src, dst) -> "Jet":
        src = _shift_axes(src, self.ndim)
        dst = _shift_axes(dst, self.ndim)
        return Jet(self.vars, np.moveaxis(self.coeffs, src, dst), self.order)

    def swapaxes(self, a: int, b: int) -> "Jet":
        a, b = _shift_axes(a, self.ndim), _shift_axes(b, self.ndim)
        return Jet(self.vars, np.swapaxes(self.coeffs, a, b), self.order)

    @property
    def mT(self) -> "Jet":
        return self.swapaxes(-1, -2)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.vars, self.coeffs.reshape((self.coeffs.shape[0],) + tuple(shape)), self.order)

    def expand_dims(self, axis) -> "Jet":
        return Jet(self.vars, np.expand_dims(self.coeffs, _shift_axes(axis, self.ndim + 1)), self.order)

    def broadcast_to(self, shape) -> "Jet":
        shape = tuple(shape)
        c = self.coeffs.reshape(self.coeffs.shape[:1] + (1,) * (len(shape) - self.ndim) + self.shape)
        c = np.broadcast_to(c, c.shape[:1] + shape)
        return Jet(self.vars, np.array(c), self.order)

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.vars != self.vars:
                raise ValueError(f"variable-set mismatch: {self.vars.names} vs {other.vars.names}")
            return other
        return Jet.const(self.vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        return Jet(self.vars, _bcast_add(self.coeffs, other.coeffs), min(self.order, other.order))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return Jet(self.vars, _bcast_add(self.coeffs, -other.coeffs), min(self.order, other.order))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return Jet(self.vars, -self.coeffs, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            a, b = _align(self.coeffs, np.asarray(other, dtype=float)[None])
            return Jet(self.vars, a * b, self.order)
        other = self._coerce(other)
        return Jet(self.vars, _leibniz(self.coeffs, other.coeffs, tables(self.vars.count)),
                   min(self.order, other.order))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0):
                raise ZeroDivisionError("division by zero constant")
            a, b = _align(self.coeffs, other[None])
            return Jet(self.vars, a / b, self.order)
        return self * reciprocal(self._coerce(other))

    def __rtruediv__(self, other):
        return self._coerce(other) * reciprocal(self)

    def __pow__(self, c):
        return power(self, c)

    def __matmul__(self, other):
        return einsum("...ij,...jk->...ik", self, other)

    def __rmatmul__(self, other):
        return einsum("...ij,...jk->...ik", other, self)


def _shift_axes(axis, ndim):
    if isinstance(axis, (tuple, list)):
        return tuple(_shift_axes(a, ndim) for a in axis)
    if axis < 0:
        axis += ndim
    if not 0 <= axis < ndim:
        raise np.exceptions.AxisError(axis, ndim)
    return axis + 1


def _align(a: np.ndarray, b: np.ndarray):
    # broadcast trailing shapes against each other, keeping axis 0 (coefficients)
    nd = max(a.ndim, b.ndim)
    a = a.reshape(a.shape[:1] + (1,) * (nd - a.ndim) + a.shape[1:])
    b = b.reshape(b.shape[:1] + (1,) * (nd - b.ndim) + b.shape[1:])
    return a, b


def _bcast_add(a, b):
    a, b = _align(a, b)
    return a + b


def _leibniz(a, b, tb: _Tables):
    a, b = _align(a, b)
    shape = (-1,) + (1,) * (max(a.ndim, b.ndim) - 1)
    prod = a[tb.ui] * b[tb.vi]
    swapped = a[tb.vi] * b[tb.ui]
    prod = np.where(tb.sym.reshape(shape), prod + swapped, prod)
    prod = prod * tb.ucoef.reshape(shape)
    return np.add.reduceat(prod, tb.ustarts, axis=0)


# construction helpers ----------------------------------------------------
def seed(vars: VariableSet, point) -> list[Jet]:
    """Independent-variable jets at ``point`` (one value or array per variable)."""
    if isinstance(vars, (list, tuple)):
        vars = VariableSet(tuple(vars))
    point = [np.asarray(p, dtype=float) for p in point]
    if len(point) != vars.count:
        raise ValueError(f"expected {vars.count} coordinates, got {len(point)}")
    out = []
    tb = tables(vars.count)
    for i, p in enumerate(point):
        if not np.all(np.isfinite(p)):
            raise ValueError(f"non-finite seed value for {vars.names[i]!r}")
        c = np.zeros((tb.size,) + p.shape)
        c[0] = p
        c[tb.pos[(i,)]] = 1.0
        out.append(Jet(vars, c))
    return out


def stack(jets: Sequence[Jet], axis: int = 0) -> Jet:
    jets = list(jets)
    if not jets:
        raise ValueError("nothing to stack")
    v = jets[0].vars
    for j in jets[1:]:
        if j.vars != v:
            raise ValueError("variable-set mismatch in stack")
    nd = jets[0].ndim + 1
    ax = _shift_axes(axis, nd)
    shape = np.broadcast_shapes(*(j.shape for j in jets))
    cs = [np.broadcast_to(j.coeffs, j.coeffs.shape[:1] + shape) for j in jets]
    return Jet(v, np.stack(cs, axis=ax), min(j.order for j in jets))


def asjet(vars: VariableSet, x) -> Jet:
    return x if isinstance(x, Jet) else Jet.const(vars, x)


# contractions ----------------------------------------------------------
def einsum(subscripts: str, a, b) -> Jet:
    """Two-operand einsum where either operand may be a Jet.

    Subscripts must use explicit ``->`` output and may use ``...``.
    """
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        raise TypeError("einsum needs at least one Jet operand")
    lhs, out = subscripts.replace(" ", "").split("->")
    sa, sb = lhs.split(",")
    if isinstance(a, Jet) and isinstance(b, Jet):
        if a.vars != b.vars:
            raise ValueError("variable-set mismatch in einsum")
        tb = tables(a.vars.count)
        prod = np.einsum(f"Z{sa},Z{sb}->Z{out}", a.coeffs[tb.ai], b.coeffs[tb.bi])
        prod *= tb.coef.reshape((-1,) + (1,) * (prod.ndim - 1))
        return Jet(a.vars, np.add.reduceat(prod, tb.starts, axis=0), min(a.order, b.order))
    if isinstance(a, Jet):
        return Jet(a.vars, np.einsum(f"Z{sa},{sb}->Z{out}", a.coeffs, np.asarray(b, float)), a.order)
    return Jet(b.vars, np.einsum(f"{sa},Z{sb}->Z{out}", np.asarray(a, float), b.coeffs), b.order)


def permute(a: Jet, spec: str) -> Jet:
    """Reorder the trailing tensor axes, e.g. ``permute(j, "cadb->abcd")``."""
    src, dst = spec.replace(" ", "").split("->")
    return Jet(a.vars, np.einsum(f"Z...{src}->Z...{dst}", a.coeffs), a.order)


def inv(a: Jet) -> Jet:
    """Matrix inverse over the last two axes via the nilpotent Neumann series."""
    a0inv = np.linalg.inv(a.value)
    h = a.without_value()
    m = -einsum("...ij,...jk->...ik", a0inv, h)
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    total = Jet.const(a.vars, eye)
    p = total
    for _ in range(DEGREE):
        p = p @ m
        total = total + p
    return einsum("...ij,...jk->...ik", total, a0inv).truncated(a.order)


def compose(outer: Jet, inner: Sequence[Jet], ndim_tail: int = 0) -> Jet:
    """Substitute jets ``inner`` (one per variable of ``outer``) into ``outer``.

    ``outer`` is expanded about ``inner``'s values.  ``inner[c]`` has the batch
    shape; ``outer`` has the batch shape followed by ``ndim_tail`` tensor axes.
    """
    tbo = tables(outer.vars.count)
    if len(inner) != outer.vars.count:
        raise ValueError("compose needs one inner jet per outer variable")
    h = [j.without_value() for j in inner]
    iv = inner[0].vars
    monos: list[Jet] = []
    for alpha in tbo.indices:
        if not alpha:
            monos.append(Jet.const(iv, np.ones(inner[0].shape)))
        else:
            prev = monos[tbo.pos[alpha[:-1]]]
            monos.append(prev * h[alpha[-1]])
    mono = stack(monos, axis=0)  # (Ko, *batch)
    weights = outer.coeffs / tbo.alpha_fact.reshape((-1,) + (1,) * outer.ndim)
    mono_c = mono.coeffs.reshape(mono.coeffs.shape + (1,) * ndim_tail)
    c = (mono_c * weights[None]).sum(axis=1)
    return Jet(iv, c, min(outer.order, min(j.order for j in inner)))


# elementary functions -----------------------------------------------------
def _taylor(a: Jet, derivs: Sequence[np.ndarray]) -> Jet:
    """f(a) from f, f', f'', f''' evaluated at a.value."""
    for dv in derivs:
        if not np.all(np.isfinite(dv)):
            raise JetDomainError("non-finite derivative in elementary function")
    h = a.without_value()
    out = Jet.const(a.vars, derivs[0])
    hk = None
    for k in range(1, DEGREE + 1):
        hk = h if hk is None else hk * h
        out = out + hk * (derivs[k] / math.factorial(k))
    return Jet(a.vars, out.coeffs, a.order)


def sin(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return _taylor(a, [s, c, -s, -c])


def cos(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    return _taylor(a, [c, -s, -c, s])


def tan(a: Jet) -> Jet:
    if np.any(np.abs(np.cos(a.value)) < 1e-300):
        raise JetDomainError("tan at a pole")
    t = np.tan(a.value)
    s = 1 + t * t
    return _taylor(a, [t, s, 2 * t * s, 2 * s * (1 + 3 * t * t)])


def exp(a: Jet) -> Jet:
    e = np.exp(a.value)
    return _taylor(a, [e, e, e, e])


def log(a: Jet) -> Jet:
    x = a.value
    if np.any(x <= 0):
        raise JetDomainError("log of non-positive value")
    return _taylor(a, [np.log(x), 1 / x, -1 / x**2, 2 / x**3])


def sqrt(a: Jet) -> Jet:
    x = a.value
    if np.any(x <= 0):
        raise JetDomainError("sqrt of non-positive value (derivatives undefined at 0)")
    s = np.sqrt(x)
    return _taylor(a, [s, 0.5 / s, -0.25 / s**3, 0.375 / s**5])


def reciprocal(a: Jet) -> Jet:
    x = a.value
    if np.any(x == 0):
        raise ZeroDivisionError("division by a jet with zero value")
    r = 1 / x
    return _taylor(a, [r, -r**2, 2 * r**3, -6 * r**4])


def power(a: Jet, c: float) -> Jet:
    c = float(c)
    x = a.value
    if c == int(c):
        n = int(c)
        if n == 0:
            return Jet.const(a.vars, np.ones(a.shape))
        if n < 0 and np.any(x == 0):
            raise ZeroDivisionError("negative power of a jet with zero value")
        if n > 0:
            # exact polynomial, avoids 0**negative in the derivative formula
            derivs = []
            for k in range(DEGREE + 1):
                if k > n:
                    derivs.append(np.zeros_like(x))
                else:
                    derivs.append(math.perm(n, k) * x ** (n - k))
            return _taylor(a, derivs)
    elif np.any(x <= 0):
        raise JetDomainError("non-integer power of non-positive value")
    f = [x**c, c * x ** (c - 1), c * (c - 1) * x ** (c - 2), c * (c - 1) * (c - 2) * x ** (c - 3)]
    return _taylor(a, f)


ELEMENTARY = {
    "sin": sin,
    "cos": cos,
    "tan": tan,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
}


def arith(op: str, a: Jet, b: Jet | None = None) -> Jet:
    """Dispatch by operator name: add, sub, mul, div, neg."""
    if op == "neg":
        return -a
    if b is None:
        raise ValueError(f"{op} needs two operands")
    if isinstance(a, Jet) and isinstance(b, Jet) and a.vars != b.vars:
        raise ValueError(f"variable-set mismatch: {a.vars.names} vs {b.vars.names}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operator {op!r}")


def elem(name: str, a: Jet, c: float | None = None) -> Jet:
    if name == "pow":
        return power(a, c)
    try:
        return ELEMENTARY[name](a)
    except KeyError:
        raise ValueError(f"unknown elementary function {name!r}") from None


def extract(a: Jet, idx: Sequence[int | str]) -> np.ndarray:
    return a.partial(idx)
