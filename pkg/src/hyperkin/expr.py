"""Expression language for motion components and ambient metric entries.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right-associative, exponent must fold to a constant
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Functions: sin cos tan exp log sqrt.  Constant: pi.  Angles are radians.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from . import jets
from .jets import Jet

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


class TokenizeError(ExprError):
    pass


class ParseError(ExprError):
    pass


class ValidationError(ExprError):
    pass


# tokens --------------------------------------------------------------------
@dataclass(frozen=True)
class Token:
    kind: str
    lexeme: str
    offset: int
    value: float | None = None


_PUNCT = {
    "+": "plus",
    "-": "minus",
    "*": "star",
    "/": "slash",
    "^": "caret",
    "(": "lparen",
    ")": "rparen",
    ",": "comma",
}
_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def tokenize(src: str) -> list[Token]:
    out: list[Token] = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _PUNCT:
            out.append(Token(_PUNCT[ch], ch, i))
            i += 1
            continue
        m = _NUMBER.match(src, i)
        if m:
            out.append(Token("number", m.group(), i, float(m.group())))
            i = m.end()
            continue
        m = _NAME.match(src, i)
        if m:
            out.append(Token("identifier", m.group(), i))
            i = m.end()
            continue
        raise TokenizeError(f"illegal character {ch!r}", i)
    return out


# AST -----------------------------------------------------------------------
@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: float


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Const, Neg, BinOp, Pow, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


# parser --------------------------------------------------------------------
class _Parser:
    def __init__(self, tokens: list[Token], src_len: int):
        self.toks = tokens
        self.i = 0
        self.end = src_len
        self.depth = 0

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            if self.depth:
                raise ParseError("unbalanced parenthesis: missing ')'", self.end)
            raise ParseError("unexpected end of expression", self.end)
        self.i += 1
        return tok

    def at(self, *kinds) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind in kinds

    def parse(self) -> Expr:
        if not self.toks:
            raise ParseError("empty expression", 0)
        e = self.expr()
        tok = self.peek()
        if tok is not None:
            if tok.kind == "rparen":
                raise ParseError("unbalanced parenthesis: unexpected ')'", tok.offset)
            raise ParseError(f"trailing token {tok.lexeme!r}", tok.offset)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at("plus", "minus"):
            op = self.take()
            e = BinOp("+" if op.kind == "plus" else "-", e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.at("star", "slash"):
            op = self.take()
            e = BinOp("*" if op.kind == "star" else "/", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.at("minus"):
            self.take()
            return Neg(self.unary())
        if self.at("plus"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at("caret"):
            caret = self.take()
            exponent = fold(self.unary())
            if not isinstance(exponent, Num):
                raise ParseError("exponent must be a constant", caret.offset)
            return Pow(base, exponent.value)
        return base

    def atom(self) -> Expr:
        tok = self.take()
        if tok.kind == "number":
            return Num(tok.value)
        if tok.kind == "identifier":
            if self.at("lparen"):
                if tok.lexeme not in FUNCTIONS:
                    raise ParseError(f"unknown function {tok.lexeme!r}", tok.offset)
                lp = self.take()
                self.depth += 1
                arg = self.expr()
                self.depth -= 1
                if self.at("comma"):
                    raise ParseError(f"function {tok.lexeme} takes one argument", self.peek().offset)
                if not self.at("rparen"):
                    raise ParseError("unbalanced parenthesis: missing ')'", lp.offset)
                self.take()
                return Call(tok.lexeme, arg)
            if tok.lexeme in FUNCTIONS:
                raise ParseError(f"function {tok.lexeme} needs an argument", tok.offset)
            if tok.lexeme in CONSTANTS:
                return Const(tok.lexeme)
            return Var(tok.lexeme)
        if tok.kind == "lparen":
            self.depth += 1
            e = self.expr()
            self.depth -= 1
            if not self.at("rparen"):
                raise ParseError("unbalanced parenthesis: missing ')'", tok.offset)
            self.take()
            return e
        if tok.kind == "rparen":
            raise ParseError("unbalanced parenthesis: unexpected ')'", tok.offset)
        raise ParseError(f"unexpected token {tok.lexeme!r}", tok.offset)


def parse(src: str | list[Token]) -> Expr:
    if isinstance(src, str):
        tokens, n = tokenize(src), len(src)
    else:
        tokens = src
        n = tokens[-1].offset + len(tokens[-1].lexeme) if tokens else 0
    return _Parser(tokens, n).parse()


# printing ------------------------------------------------------------------
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def to_string(e: Expr) -> str:
    """Canonical text; parsing the result gives back an equal AST."""
    return _show(e, 0)


def _show(e: Expr, ctx: int) -> str:
    # ctx: minimal precedence the surrounding context accepts without parentheses
    if isinstance(e, Num):
        s = _fmt_num(e.value)
        return s if e.value >= 0 else f"({s})"
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_show(e.arg, 0)})"
    if isinstance(e, Neg):
        s = "-" + _show(e.arg, 3)
        return s if ctx <= 3 else f"({s})"
    if isinstance(e, Pow):
        exp = _fmt_num(e.exponent)
        if e.exponent < 0:
            exp = f"({exp})"
        s = f"{_show(e.base, 5)}^{exp}"
        return s if ctx <= 4 else f"({s})"
    p = _PREC[e.op]
    # left-associative: right operand needs strictly higher precedence
    s = f"{_show(e.left, p)} {e.op} {_show(e.right, p + 1)}"
    return s if ctx <= p else f"({s})"


# analysis ------------------------------------------------------------------
def free_vars(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, (Num, Const)):
        return set()
    if isinstance(e, (Neg, Call)):
        return free_vars(e.arg)
    if isinstance(e, Pow):
        return free_vars(e.base)
    return free_vars(e.left) | free_vars(e.right)


def validate(e: Expr, allowed: Iterable[str], what: str = "expression") -> None:
    extra = sorted(free_vars(e) - set(allowed))
    if extra:
        raise ValidationError(f"{what} uses unknown variable(s) {', '.join(extra)}; allowed: {sorted(allowed)}")


_SCALAR = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


def fold(e: Expr) -> Expr:
    """Constant folding; variable-free subtrees become numbers."""
    if isinstance(e, (Num, Var)):
        return e
    if isinstance(e, Const):
        return Num(CONSTANTS[e.name])
    if isinstance(e, Neg):
        a = fold(e.arg)
        return Num(-a.value) if isinstance(a, Num) else Neg(a)
    if isinstance(e, Call):
        a = fold(e.arg)
        if isinstance(a, Num):
            try:
                return Num(_SCALAR[e.func](a.value))
            except (ValueError, OverflowError):
                return Call(e.func, a)
        return Call(e.func, a)
    if isinstance(e, Pow):
        b = fold(e.base)
        if isinstance(b, Num):
            try:
                r = b.value ** e.exponent
                if isinstance(r, float) and math.isfinite(r):
                    return Num(r)
            except (ZeroDivisionError, OverflowError):
                pass
        return Pow(b, e.exponent)
    left, right = fold(e.left), fold(e.right)
    if isinstance(left, Num) and isinstance(right, Num):
        if e.op == "/" and right.value == 0:
            return BinOp(e.op, left, right)
        return Num(_apply(e.op, left.value, right.value))
    return BinOp(e.op, left, right)


def _apply(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return a / b


# evaluation ----------------------------------------------------------------
def eval_jet(e: Expr, env: Mapping[str, Jet], vars: jets.VariableSet | None = None) -> Jet:
    """Evaluate to a Jet; every free variable must be bound in ``env``."""
    if vars is None:
        if not env:
            raise ValueError("need env jets or an explicit VariableSet to evaluate")
        vars = next(iter(env.values())).vars
    for j in env.values():
        if j.vars != vars:
            raise ValueError("environment jets do not share one VariableSet")
    return _ev(e, env, vars)


def _ev(e: Expr, env, vars) -> Jet:
    if isinstance(e, Num):
        return Jet.const(vars, e.value)
    if isinstance(e, Const):
        return Jet.const(vars, CONSTANTS[e.name])
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ValidationError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -_ev(e.arg, env, vars)
    if isinstance(e, Call):
        return jets.ELEMENTARY[e.func](_ev(e.arg, env, vars))
    if isinstance(e, Pow):
        return jets.power(_ev(e.base, env, vars), e.exponent)
    a, b = _ev(e.left, env, vars), _ev(e.right, env, vars)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return a / b


def eval_float(e: Expr, env: Mapping[str, float]):
    """Plain numeric evaluation (numpy-broadcasting) for oracles and sampling."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise ValidationError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -eval_float(e.arg, env)
    if isinstance(e, Call):
        return getattr(np, e.func)(eval_float(e.arg, env))
    if isinstance(e, Pow):
        return np.power(eval_float(e.base, env), e.exponent)
    return _apply(e.op, eval_float(e.left, env), eval_float(e.right, env))


def compile_expr(src: str, allowed: Iterable[str] | None = None, what: str = "expression") -> Expr:
    e = parse(src)
    if allowed is not None:
        validate(e, allowed, what)
    return e
