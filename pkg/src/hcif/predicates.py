"""Valuations, satisfaction, reset solving and closed-form flows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional

from .errors import InconsistentDynamicsError, UnsupportedResetError
from .expr import (
    Cmp,
    Const,
    Expr,
    Value,
    Var,
    compile_expr,
    conjuncts,
    has_stepped,
    linear_form,
    variables,
)


class Valuation(Mapping[str, Value]):
    """Immutable assignment of values to plain and dotted variables.

    ``discrete`` names the variables whose value never changes during a delay
    and whose dotted value is pinned to 0.
    """

    __slots__ = ("_data", "_discrete", "_hash")

    def __init__(self, data: Mapping[str, Value], discrete: Iterable[str] = ()):
        self._data = dict(data)
        self._discrete = discrete if isinstance(discrete, frozenset) else frozenset(discrete)
        self._hash = None

    @classmethod
    def initial(cls, decls, values: Mapping[str, Value]) -> "Valuation":
        """Total valuation over ``decls``; missing entries default to 0.

        Constants take their declared value, discrete dotted values are 0.
        """
        data: dict[str, Value] = {}
        discrete = []
        known = {d.name for d in decls}
        for key in values:
            if key.rstrip("'") not in known:
                raise KeyError(f"value given for undeclared variable {key!r}")
        for d in decls:
            if d.kind == "constant":
                data[d.name] = float(d.value)
            else:
                v = values.get(d.name, 0.0)
                data[d.name] = v if isinstance(v, bool) else float(v)
            if d.kind == "continuous":
                data[d.name + "'"] = float(values.get(d.name + "'", 0.0))
            else:
                discrete.append(d.name)
                data[d.name + "'"] = 0.0
        return cls(data, discrete)

    @property
    def discrete(self) -> frozenset[str]:
        return self._discrete

    @property
    def raw(self) -> dict[str, Value]:
        return self._data

    def variables(self) -> list[str]:
        return [k for k in self._data if not k.endswith("'")]

    def __getitem__(self, key: str) -> Value:
        return self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._data.items()))
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Valuation):
            return self._data == other._data
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._data.items())
        return f"Valuation({inner})"

    def updated(self, changes: Mapping[str, Value]) -> "Valuation":
        data = dict(self._data)
        data.update(changes)
        return Valuation(data, self._discrete)

    def close_to(self, other: "Valuation", tol: float) -> bool:
        if self._data == other._data:
            return True
        if self._data.keys() != other._data.keys():
            return False
        for k, a in self._data.items():
            b = other._data[k]
            if isinstance(a, bool) or isinstance(b, bool):
                if a is not b:
                    return False
            elif abs(a - b) > tol:
                return False
        return True

    def quantized(self, tol: float) -> tuple:
        return tuple(
            sorted(
                (k, v if isinstance(v, bool) else round(v / tol))
                for k, v in self._data.items()
            )
        )


def satisfies(sigma: Mapping[str, Value], e: Expr) -> bool:
    """``sigma ⊨ e``. Raises ``UnboundVariableError`` for missing variables."""
    env = sigma.raw if isinstance(sigma, Valuation) else sigma
    result = compile_expr(e)(env)
    return result is True


def stepped(sigma: Mapping[str, Value]) -> dict[str, Value]:
    """Rename every key to its stepped spelling (``x`` to ``x+``)."""
    return {k + "+": v for k, v in sigma.items()}


# --------------------------------------------------------------------------
# resets


@dataclass(frozen=True)
class ResetPlan:
    """A reset split into functional assignments and pre-state conditions."""

    assignments: tuple[tuple[Var, Expr], ...]
    conditions: tuple[Expr, ...]
    contradictory: bool = False


def _as_assignment(c: Expr) -> Optional[tuple[Var, Expr]]:
    if not isinstance(c, Cmp) or c.op != "=":
        return None
    for target, rhs in ((c.left, c.right), (c.right, c.left)):
        if isinstance(target, Var) and target.stepped and not has_stepped(rhs):
            return target.unstepped(), rhs
    return None


def reset_plan(r: Expr) -> ResetPlan:
    """Classify the conjuncts of ``r``.

    Supported conjuncts are ``true``, ``false``, assignments ``x+ = e`` with
    ``e`` free of stepped variables, and conditions that mention no stepped
    variable at all (these constrain the pre-state only).
    """
    assignments = []
    conditions = []
    contradictory = False
    for c in conjuncts(r):
        if isinstance(c, Const) and isinstance(c.value, bool):
            contradictory |= not c.value
            continue
        a = _as_assignment(c)
        if a is not None:
            assignments.append(a)
        elif not has_stepped(c):
            conditions.append(c)
        else:
            raise UnsupportedResetError(f"unsupported reset form: {c}")
    return ResetPlan(tuple(assignments), tuple(conditions), contradictory)


def solve_reset(sigma: Valuation, r: Expr) -> tuple[Valuation, ...]:
    """All ``σ'`` with ``σ ∪ σ'⁺ ⊨ r``; unassigned variables keep their value."""
    plan = reset_plan(r)
    if plan.contradictory:
        return ()
    for c in plan.conditions:
        if not satisfies(sigma, c):
            return ()
    changes: dict[str, Value] = {}
    for target, rhs in plan.assignments:
        key = target.key
        if key not in sigma:
            raise UnsupportedResetError(f"reset assigns undeclared variable {key!r}")
        value = compile_expr(rhs)(sigma.raw)
        if not isinstance(value, bool):
            value = float(value)
        if key in changes and changes[key] != value:
            return ()
        if target.dotted and target.name in sigma.discrete and value != 0:
            return ()
        changes[key] = value
    return (sigma.updated(changes),)


def reset_assignments(r: Expr) -> dict[Var, Expr]:
    """First assignment per variable in a functional reset."""
    out: dict[Var, Expr] = {}
    for target, rhs in reset_plan(r).assignments:
        out.setdefault(target, rhs)
    return out


# --------------------------------------------------------------------------
# flows


@dataclass(frozen=True)
class Ode:
    """``x' = slope * x + offset``."""

    slope: Fraction
    offset: Fraction

    @cached_property
    def _floats(self) -> tuple[float, float]:
        return float(self.slope), float(self.offset)

    def value(self, x0: float, s: float) -> float:
        a, b = self._floats
        if a == 0:
            return x0 + b * s
        return -b / a + (x0 + b / a) * math.exp(a * s)

    def derivative(self, x: float) -> float:
        a, b = self._floats
        return a * x + b


@dataclass(frozen=True)
class FlowSpec:
    """Per-variable dynamics extracted from a tcp predicate.

    Continuous variables missing from ``odes`` are unconstrained (frozen).
    ``constraints`` are the remaining conjuncts, checked pointwise.
    """

    odes: tuple[tuple[str, Ode], ...]
    constraints: tuple[Expr, ...]

    def ode(self, name: str) -> Optional[Ode]:
        for n, o in self.odes:
            if n == name:
                return o
        return None


def _as_ode(c: Expr, continuous: frozenset[str]) -> Optional[tuple[str, Ode]]:
    if not isinstance(c, Cmp) or c.op != "=":
        return None
    for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
        if not (isinstance(lhs, Var) and lhs.dotted and not lhs.stepped):
            continue
        if lhs.name not in continuous:
            continue
        plain = Var(lhs.name)
        if variables(rhs) - {plain}:
            continue
        form = linear_form(rhs)
        if form is None:
            continue
        coeffs, k = form
        return lhs.name, Ode(coeffs.get(plain, Fraction(0)), k)
    return None


def flow_spec(tcp: Expr, continuous: Iterable[str]) -> FlowSpec:
    """Split ``tcp`` into scalar linear ODEs and pointwise constraints."""
    continuous = frozenset(continuous)
    odes: dict[str, Ode] = {}
    constraints = []
    for c in conjuncts(tcp):
        if c == Const(True):
            continue
        found = _as_ode(c, continuous)
        if found is None:
            constraints.append(c)
            continue
        name, ode = found
        if name in odes and odes[name] != ode:
            raise InconsistentDynamicsError(
                f"inconsistent dynamics for {name}: {odes[name]} and {ode}"
            )
        odes[name] = ode
    return FlowSpec(tuple(sorted(odes.items())), tuple(constraints))


def sample_count(t: float, delta: float) -> int:
    """Number of steps ``n`` with ``t = n * delta``; raises if not a multiple."""
    if t < 0:
        raise ValueError(f"negative duration {t}")
    if delta <= 0:
        raise ValueError(f"sample step must be positive, got {delta}")
    n = round(t / delta)
    if abs(n * delta - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError(f"duration {t} is not a multiple of the sample step {delta}")
    return n


def flow(sigma0: Valuation, tcp: Expr, t: float, delta: float) -> Optional[tuple[Valuation, ...]]:
    """Sampled trajectory from ``sigma0`` under ``tcp`` for duration ``t``.

    Returns ``None`` when a pointwise conjunct of ``tcp`` fails at one of the
    samples ``k * delta`` with ``k < n`` (the interval is half-open).
    """
    n = sample_count(t, delta)
    continuous = [k for k in sigma0.variables() if k not in sigma0.discrete]
    spec = flow_spec(tcp, continuous)
    return flow_with_spec(sigma0, spec, n, delta)


def flow_with_spec(
    sigma0: Valuation, spec: FlowSpec, n: int, delta: float
) -> Optional[tuple[Valuation, ...]]:
    samples, valid = flow_prefix(sigma0, spec, n, delta)
    return samples if valid >= n else None


def flow_prefix(
    sigma0: Valuation, spec: FlowSpec, n: int, delta: float
) -> tuple[tuple[Valuation, ...], int]:
    """Samples ``0..n`` of the trajectory and the number of leading valid samples.

    A delay of ``m <= n`` steps is allowed exactly when the second component is
    at least ``m``.  Sampling stops early at the first failing constraint.
    """
    checks = [compile_expr(c) for c in spec.constraints]
    continuous = [k for k in sigma0.variables() if k not in sigma0.discrete]
    dynamics = [(x, spec.ode(x)) for x in continuous]
    base = sigma0.raw
    samples = [sigma0]
    for k in range(n + 1):
        if k > 0:
            s = k * delta
            data = dict(base)
            for x, ode in dynamics:
                if ode is None:
                    data[x + "'"] = 0.0
                else:
                    value = ode.value(base[x], s)
                    data[x] = value
                    data[x + "'"] = ode.derivative(value)
            samples.append(Valuation(data, sigma0.discrete))
        if k < n:
            env = samples[k].raw
            if not all(check(env) is True for check in checks):
                return tuple(samples), k
    return tuple(samples), n
