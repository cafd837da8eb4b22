"""Expression trees shared by guards, resets, and location predicates.

Variables come in three spellings: plain ``x``, dotted ``x'`` (the
derivative), and stepped ``x+`` / ``x'+`` (the value after an action).
Valuations key plain and dotted variables by their spelling, so ``Var.key``
is the lookup key used everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Mapping, Union

from .errors import EvaluationError, UnboundVariableError

Value = Union[float, bool]


def _node(cls):
    """Frozen dataclass whose hash is computed once.

    Terms are used as dictionary keys during exploration, and recomputing
    deep hashes on every lookup dominates run time otherwise.
    """
    cls = dataclass(frozen=True)(cls)
    structural = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_hash"]
        except KeyError:
            h = structural(self)
            self.__dict__["_hash"] = h
            return h

    cls.__hash__ = __hash__
    return cls


class Expr:
    """Base class of all expression nodes."""

    def __str__(self) -> str:
        return format_expr(self)


@_node
class Const(Expr):
    value: Union[Fraction, bool]

    # Fraction(1) == True in Python; keep numbers and booleans apart
    def __eq__(self, other):
        if not isinstance(other, Const):
            return NotImplemented
        return type(self.value) is type(other.value) and self.value == other.value

    def __hash__(self):
        return hash((type(self.value), self.value))


@_node
class Var(Expr):
    name: str
    dotted: bool = False
    stepped: bool = False

    @property
    def key(self) -> str:
        return self.name + ("'" if self.dotted else "") + ("+" if self.stepped else "")

    def unstepped(self) -> "Var":
        return Var(self.name, self.dotted, False)


@_node
class Neg(Expr):
    arg: Expr


@_node
class Not(Expr):
    arg: Expr


@_node
class BinOp(Expr):
    op: str  # one of + - * /
    left: Expr
    right: Expr


@_node
class Cmp(Expr):
    op: str  # one of = != < <= > >=
    left: Expr
    right: Expr


@_node
class And(Expr):
    left: Expr
    right: Expr


@_node
class Or(Expr):
    left: Expr
    right: Expr


@_node
class Call(Expr):
    func: str
    arg: Expr


TRUE = Const(True)
FALSE = Const(False)

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("=", "!=", "<", "<=", ">", ">=")
FUNCTIONS = ("exp",)

_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}


def num(value) -> Const:
    """Numeric constant from an int, str, Fraction or (exactly converted) float."""
    return Const(Fraction(value))


# --------------------------------------------------------------------------
# traversal helpers


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, (Neg, Not, Call)):
        return (e.arg,)
    return (e.left, e.right)


def walk(e: Expr) -> Iterator[Expr]:
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def variables(e: Expr) -> frozenset[Var]:
    return frozenset(n for n in walk(e) if isinstance(n, Var))


def has_stepped(e: Expr) -> bool:
    return any(isinstance(n, Var) and n.stepped for n in walk(e))


def map_vars(e: Expr, fn: Callable[[Var], Expr]) -> Expr:
    """Rebuild ``e`` with every variable replaced by ``fn(var)``."""
    if isinstance(e, Var):
        return fn(e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Neg):
        return Neg(map_vars(e.arg, fn))
    if isinstance(e, Not):
        return Not(map_vars(e.arg, fn))
    if isinstance(e, Call):
        return Call(e.func, map_vars(e.arg, fn))
    return type(e)(*_rebuild_binary(e, fn))


def _rebuild_binary(e, fn):
    if isinstance(e, (BinOp, Cmp)):
        return e.op, map_vars(e.left, fn), map_vars(e.right, fn)
    return map_vars(e.left, fn), map_vars(e.right, fn)


def substitute(e: Expr, mapping: Mapping[Var, Expr]) -> Expr:
    return map_vars(e, lambda v: mapping.get(v, v))


def step_vars(e: Expr) -> Expr:
    """Rename every variable to its stepped form (the ``e⁺`` of a predicate)."""
    return map_vars(e, lambda v: Var(v.name, v.dotted, True))


def conjuncts(e: Expr) -> list[Expr]:
    if isinstance(e, And):
        return conjuncts(e.left) + conjuncts(e.right)
    return [e]


def conj(*parts: Expr) -> Expr:
    """Left-nested conjunction; drops ``true`` and duplicates, absorbs ``false``."""
    flat: list[Expr] = []
    for p in parts:
        for c in conjuncts(p):
            if c == TRUE or c in flat:
                continue
            if c == FALSE:
                return FALSE
            flat.append(c)
    if not flat:
        return TRUE
    out = flat[0]
    for c in flat[1:]:
        out = And(out, c)
    return out


def disj(*parts: Expr) -> Expr:
    out = None
    for p in parts:
        out = p if out is None else Or(out, p)
    return FALSE if out is None else out


# --------------------------------------------------------------------------
# constant folding


def _const_num(e: Expr):
    if isinstance(e, Const) and not isinstance(e.value, bool):
        return e.value
    return None


def fold(e: Expr) -> Expr:
    """Fold constant subterms exactly (rational arithmetic, no ``exp``)."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = fold(e.arg)
        v = _const_num(a)
        return Const(-v) if v is not None else Neg(a)
    if isinstance(e, Not):
        a = fold(e.arg)
        if isinstance(a, Const) and isinstance(a.value, bool):
            return Const(not a.value)
        return Not(a)
    if isinstance(e, Call):
        a = fold(e.arg)
        if e.func == "exp" and _const_num(a) == 0:
            return Const(Fraction(1))
        return Call(e.func, a)
    left, right = fold(e.left), fold(e.right)
    if isinstance(e, BinOp):
        lv, rv = _const_num(left), _const_num(right)
        if lv is not None and rv is not None and not (e.op == "/" and rv == 0):
            return Const(_ARITH[e.op](lv, rv))
        return BinOp(e.op, left, right)
    if isinstance(e, Cmp):
        if isinstance(left, Const) and isinstance(right, Const):
            try:
                return Const(bool(_CMP[e.op](left.value, right.value)))
            except TypeError:
                return Cmp(e.op, left, right)
        if left == right and e.op in ("=", "<=", ">="):
            return TRUE
        return Cmp(e.op, left, right)
    if isinstance(e, And):
        return conj(left, right)
    # Or
    if TRUE in (left, right):
        return TRUE
    if left == FALSE:
        return right
    if right == FALSE:
        return left
    return Or(left, right)


# --------------------------------------------------------------------------
# linear forms


def linear_form(e: Expr) -> tuple[dict[Var, Fraction], Fraction] | None:
    """Write ``e`` as ``sum(c_i * v_i) + k`` with rational coefficients.

    Returns ``None`` when ``e`` is not affine (products of variables,
    ``exp`` of a variable, booleans, division by a variable).
    """
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return None
        return {}, e.value
    if isinstance(e, Var):
        return {e: Fraction(1)}, Fraction(0)
    if isinstance(e, Neg):
        inner = linear_form(e.arg)
        if inner is None:
            return None
        coeffs, k = inner
        return {v: -c for v, c in coeffs.items()}, -k
    if isinstance(e, BinOp):
        lf, rf = linear_form(e.left), linear_form(e.right)
        if lf is None or rf is None:
            return None
        (lc, lk), (rc, rk) = lf, rf
        if e.op in ("+", "-"):
            sign = 1 if e.op == "+" else -1
            coeffs = dict(lc)
            for v, c in rc.items():
                coeffs[v] = coeffs.get(v, Fraction(0)) + sign * c
            return {v: c for v, c in coeffs.items() if c != 0}, lk + sign * rk
        if e.op == "*":
            if not lc:
                return {v: lk * c for v, c in rc.items() if lk * c != 0}, lk * rk
            if not rc:
                return {v: rk * c for v, c in lc.items() if rk * c != 0}, lk * rk
            return None
        if e.op == "/":
            if rc or rk == 0:
                return None
            return {v: c / rk for v, c in lc.items()}, lk / rk
    if isinstance(e, Call) and e.func == "exp":
        inner = linear_form(e.arg)
        if inner is not None and not inner[0]:
            return None  # exp of a constant is irrational in general
    return None


# --------------------------------------------------------------------------
# evaluation


_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}

_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@lru_cache(maxsize=None)
def compile_expr(e: Expr) -> Callable[[Mapping[str, Value]], Value]:
    """Turn ``e`` into a closure over an environment mapping keys to values."""
    if isinstance(e, Const):
        value = e.value if isinstance(e.value, bool) else float(e.value)
        return lambda env: value
    if isinstance(e, Var):
        key = e.key

        def lookup(env):
            try:
                return env[key]
            except KeyError:
                raise UnboundVariableError(key) from None

        return lookup
    if isinstance(e, Neg):
        f = compile_expr(e.arg)
        return lambda env: -_number(f(env))
    if isinstance(e, Not):
        f = compile_expr(e.arg)
        return lambda env: not _boolean(f(env))
    if isinstance(e, Call):
        f = compile_expr(e.arg)
        if e.func == "exp":
            return lambda env: math.exp(_number(f(env)))
        raise EvaluationError(f"unknown function {e.func!r}")
    if isinstance(e, And):
        f, g = compile_expr(e.left), compile_expr(e.right)
        return lambda env: _boolean(f(env)) and _boolean(g(env))
    if isinstance(e, Or):
        f, g = compile_expr(e.left), compile_expr(e.right)
        return lambda env: _boolean(f(env)) or _boolean(g(env))
    f, g = compile_expr(e.left), compile_expr(e.right)
    if isinstance(e, Cmp):
        op = _CMP[e.op]
        if e.op in ("=", "!="):
            return lambda env: op(f(env), g(env))
        return lambda env: op(_number(f(env)), _number(g(env)))
    op = _ARITH[e.op]
    if e.op == "/":

        def divide(env):
            d = _number(g(env))
            if d == 0:
                raise EvaluationError("division by zero")
            return _number(f(env)) / d

        return divide
    return lambda env: op(_number(f(env)), _number(g(env)))


def _number(v):
    if isinstance(v, bool):
        raise EvaluationError("boolean used where a number is required")
    return v


def _boolean(v):
    if not isinstance(v, bool):
        raise EvaluationError("number used where a boolean is required")
    return v


def evaluate(e: Expr, env: Mapping[str, Value]) -> Value:
    return compile_expr(e)(env)


# --------------------------------------------------------------------------
# printing

_PREC_OR, _PREC_AND, _PREC_NOT, _PREC_CMP, _PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_ATOM = range(1, 9)


def _prec(e: Expr) -> int:
    if isinstance(e, Or):
        return _PREC_OR
    if isinstance(e, And):
        return _PREC_AND
    if isinstance(e, Not):
        return _PREC_NOT
    if isinstance(e, Cmp):
        return _PREC_CMP
    if isinstance(e, BinOp):
        return _PREC_ADD if e.op in ("+", "-") else _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    if isinstance(e, Const) and not isinstance(e.value, bool):
        if e.value < 0:
            return _PREC_NEG
    return _PREC_ATOM


def format_number(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d == 1:
        # terminating decimal: print it exactly
        digits = 0
        while (q * 10**digits).denominator != 1:
            digits += 1
        scaled = abs(q.numerator) * 10**digits // q.denominator
        text = str(scaled).rjust(digits + 1, "0")
        sign = "-" if q < 0 else ""
        return f"{sign}{text[:-digits]}.{text[-digits:]}"
    return f"({q.numerator}/{q.denominator})"


def format_expr(e: Expr) -> str:
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return format_number(e.value)
    if isinstance(e, Var):
        return e.key
    if isinstance(e, Neg):
        inner = e.arg
        text = format_expr(inner)
        if _prec(inner) < _PREC_ATOM or isinstance(inner, Const):
            text = f"({text})"
        return f"-{text}"
    if isinstance(e, Not):
        text = format_expr(e.arg)
        if _prec(e.arg) < _PREC_NOT:
            text = f"({text})"
        return f"not {text}"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    p = _prec(e)
    lt, rt = format_expr(e.left), format_expr(e.right)
    if isinstance(e, Cmp):
        if _prec(e.left) <= _PREC_CMP:
            lt = f"({lt})"
        if _prec(e.right) <= _PREC_CMP:
            rt = f"({rt})"
        return f"{lt} {e.op} {rt}"
    if _prec(e.left) < p:
        lt = f"({lt})"
    if _prec(e.right) <= p:
        rt = f"({rt})"
    op = e.op if isinstance(e, BinOp) else ("and" if isinstance(e, And) else "or")
    return f"{lt} {op} {rt}"
