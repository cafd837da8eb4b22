"""Transition relations of the hybrid transition system induced by a composition.

Every function takes a state ``(p, σ)`` and returns the successor set for one
kind of transition.  Rule applications can be observed with
:func:`record_rules`, which is how the test-suite checks that every rule
family is exercised.
"""

from __future__ import annotations

from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as cartesian
from typing import Callable, Iterator, Optional, Sequence, Union

from .expr import Expr, compile_expr, conj
from .model import Automaton, Composition, Edge, Location, Parallel, Postfix, pin
from .predicates import (
    Valuation,
    flow_spec,
    reset_assignments,
    flow_prefix,
    sample_count,
    satisfies,
    solve_reset,
)

RULES = (
    "action/atomic/enter-sub",
    "action/atomic/enter-flat",
    "action/atomic/inner",
    "time/atomic/sub",
    "time/atomic/leaf",
    "env/atomic/sub",
    "env/atomic/leaf",
    "action/postfix/enter-sub",
    "action/postfix/enter-flat",
    "action/postfix/inner",
    "time/postfix",
    "env/postfix",
    "action/parallel/sync",
    "action/parallel/interleave",
    "time/parallel",
    "env/parallel",
)

_recorders: list[Counter] = []


@contextmanager
def record_rules() -> Iterator[Counter]:
    """Count rule applications made inside the ``with`` block."""
    counter: Counter = Counter()
    _recorders.append(counter)
    try:
        yield counter
    finally:
        _recorders.remove(counter)


def _fire(rule: str) -> None:
    for c in _recorders:
        c[rule] += 1


# --------------------------------------------------------------------------
# labels


@dataclass(frozen=True)
class TrajectoryBundle:
    """Sampled variable, guard and termination trajectories over ``[0, t]``."""

    duration: float
    step: float
    rho: tuple[Valuation, ...]
    theta: tuple[frozenset[str], ...]
    omega: tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.rho) == len(self.theta) == len(self.omega)):
            raise ValueError("trajectory sample counts differ")

    @property
    def times(self) -> list[float]:
        return [k * self.step for k in range(len(self.rho))]


@dataclass(frozen=True)
class Action:
    name: str


@dataclass(frozen=True)
class Env:
    terminating: bool


@dataclass(frozen=True)
class Time:
    bundle: TrajectoryBundle


Label = Union[Action, Env, Time]


@dataclass(frozen=True)
class Transition:
    label: Label
    target: Composition
    valuation: Valuation

    @property
    def kind(self) -> str:
        return type(self.label).__name__.lower()


def _unique(items):
    return list(dict.fromkeys(items))


def _initial(alpha: Automaton, loc: Location, sigma: Valuation) -> bool:
    return satisfies(sigma, alpha.effective_init(loc.name))


# --------------------------------------------------------------------------
# environment transitions


def env_successors(p: Composition, sigma: Valuation) -> list[tuple[bool, Composition]]:
    """Initializations of ``p`` under ``σ`` with their termination flag.

    The valuation is unchanged by an environment transition.
    """
    out: list[tuple[bool, Composition]] = []
    if isinstance(p, Automaton):
        for loc in p.locations:
            if not _initial(p, loc, sigma):
                continue
            term = satisfies(sigma, loc.term)
            if loc.sub is None:
                _fire("env/atomic/leaf")
                out.append((term, pin(p, loc.name)))
            else:
                for b, q in env_successors(loc.sub, sigma):
                    _fire("env/atomic/sub")
                    out.append((term and b, Postfix(q, pin(p, loc.name))))
    elif isinstance(p, Postfix):
        term = satisfies(sigma, p.parent.location(p.parent.pinned).term)
        for b, q in env_successors(p.child, sigma):
            _fire("env/postfix")
            out.append((term and b, Postfix(q, p.parent)))
    else:
        rights = env_successors(p.right, sigma)
        for b0, left in env_successors(p.left, sigma):
            for b1, right in rights:
                _fire("env/parallel")
                out.append((b0 and b1, Parallel(left, p.sync, right)))
    return _unique(out)


def can_terminate(p: Composition, sigma: Valuation) -> bool:
    return any(b for b, _ in env_successors(p, sigma))


# --------------------------------------------------------------------------
# action transitions


def enabled_edges(alpha: Automaton, sigma: Valuation) -> list[tuple[Edge, Valuation]]:
    """Edges whose source is initial, whose guard holds, with the reset outcome."""
    out = []
    for loc in alpha.locations:
        if not _initial(alpha, loc, sigma):
            continue
        for edge in alpha.outgoing(loc.name):
            if not satisfies(sigma, edge.guard):
                continue
            for post in solve_reset(sigma, edge.reset):
                out.append((edge, post))
    return out


@lru_cache(maxsize=None)
def _written(reset: Expr) -> frozenset[str]:
    return frozenset(v.key for v in reset_assignments(reset))


def _enter(alpha: Automaton, edge: Edge, post: Valuation, family: str):
    written = _written(edge.reset)
    target = alpha.location(edge.target)
    if target.sub is None:
        _fire(f"action/{family}/enter-flat")
        yield edge.action, pin(alpha, target.name), post, written
        return
    for _, q in env_successors(target.sub, post):
        _fire(f"action/{family}/enter-sub")
        yield edge.action, Postfix(q, pin(alpha, target.name)), post, written


def _merge(sigma: Valuation, post0: Valuation, w0, post1: Valuation, w1) -> Optional[Valuation]:
    """Joint outcome of two synchronizing resets.

    A variable written by both sides must get the same value; a variable
    written by one side takes that value; the rest keep their value.
    """
    for k in w0 & w1:
        if post0[k] != post1[k]:
            return None
    if not w1 - w0:
        return post0
    if not w0 - w1:
        return post1
    changes = {k: post0[k] for k in w0}
    changes.update((k, post1[k]) for k in w1 - w0)
    return sigma.updated(changes)


def action_successors(p: Composition, sigma: Valuation) -> list[tuple[str, Composition, Valuation]]:
    return [(a, q, post) for a, q, post, _ in _action_moves(p, sigma)]


def _action_moves(p: Composition, sigma: Valuation) -> list[tuple[str, Composition, Valuation, frozenset]]:
    """Action steps with the set of variables their resets write."""
    out: list = []
    if isinstance(p, Automaton):
        for loc in p.locations:
            if not _initial(p, loc, sigma):
                continue
            # outer edges need a terminating substructure (if any)
            if loc.sub is None or can_terminate(loc.sub, sigma):
                for edge in p.outgoing(loc.name):
                    if not satisfies(sigma, edge.guard):
                        continue
                    for post in solve_reset(sigma, edge.reset):
                        out.extend(_enter(p, edge, post, "atomic"))
            if loc.sub is not None:
                here = pin(p, loc.name)
                for a, q, post, w in _action_moves(loc.sub, sigma):
                    _fire("action/atomic/inner")
                    out.append((a, Postfix(q, here), post, w))
    elif isinstance(p, Postfix):
        parent = p.parent
        for a, q, post, w in _action_moves(p.child, sigma):
            _fire("action/postfix/inner")
            out.append((a, Postfix(q, parent), post, w))
        if can_terminate(p.child, sigma):
            for edge, post in enabled_edges(parent, sigma):
                out.extend(_enter(parent, edge, post, "postfix"))
    else:
        sync = p.sync
        lefts = _action_moves(p.left, sigma)
        rights = _action_moves(p.right, sigma)
        for a, left, post, w in lefts:
            if a in sync:
                for b, right, post2, w2 in rights:
                    if b != a:
                        continue
                    joint = _merge(sigma, post, w, post2, w2)
                    if joint is not None:
                        _fire("action/parallel/sync")
                        out.append((a, Parallel(left, sync, right), joint, w | w2))
            else:
                for _, right in env_successors(p.right, sigma):
                    _fire("action/parallel/interleave")
                    out.append((a, Parallel(left, sync, right), post, w))
        for a, right, post, w in rights:
            if a in sync:
                continue
            for _, left in env_successors(p.left, sigma):
                _fire("action/parallel/interleave")
                out.append((a, Parallel(left, sync, right), post, w))
    return _unique(out)


# --------------------------------------------------------------------------
# time transitions
#
# A delay is derived in two passes.  The first pass resolves which location
# is active at every level (the same choices an environment transition
# makes) and collects the tcp predicates of all active levels.  The second
# pass computes one trajectory for the conjunction of those predicates and
# builds the guard and termination trajectories bottom-up.

Builder = Callable[[Sequence[dict]], tuple[list[frozenset], list[bool]]]


@dataclass(frozen=True)
class _Skeleton:
    target: Composition
    tcps: tuple[Expr, ...]
    build: Builder


def _guard_fns(alpha: Automaton, v: str):
    return [(e.action, compile_expr(e.guard)) for e in alpha.outgoing(v)]


def _leaf_builder(alpha: Automaton, loc: Location) -> Builder:
    guards = _guard_fns(alpha, loc.name)
    term = compile_expr(loc.term)

    def build(envs):
        _fire("time/atomic/leaf")
        theta = [frozenset(a for a, g in guards if g(env) is True) for env in envs]
        omega = [term(env) is True for env in envs]
        return theta, omega

    return build


def _nested_builder(alpha: Automaton, loc: Location, inner: Builder, rule: str) -> Builder:
    guards = _guard_fns(alpha, loc.name)
    term = compile_expr(loc.term)

    def build(envs):
        theta0, omega0 = inner(envs)
        _fire(rule)
        theta, omega = [], []
        for env, th0, om0 in zip(envs, theta0, omega0):
            if om0:
                th = th0 | {a for a, g in guards if g(env) is True}
            else:
                th = th0
            theta.append(frozenset(th))
            omega.append(om0 and term(env) is True)
        return theta, omega

    return build


def combine_theta(theta0: frozenset, theta1: frozenset, sync: frozenset) -> frozenset:
    """Enabled actions of a parallel composition at one time point."""
    return (theta0 & theta1) | (theta0 - sync) | (theta1 - sync)


def _parallel_builder(left: Builder, right: Builder, sync: frozenset) -> Builder:
    def build(envs):
        th0, om0 = left(envs)
        th1, om1 = right(envs)
        _fire("time/parallel")
        theta = [combine_theta(a, b, sync) for a, b in zip(th0, th1)]
        omega = [a and b for a, b in zip(om0, om1)]
        return theta, omega

    return build


def _skeletons(p: Composition, sigma: Valuation) -> list[_Skeleton]:
    out = []
    if isinstance(p, Automaton):
        for loc in p.locations:
            if not _initial(p, loc, sigma):
                continue
            here = pin(p, loc.name)
            if loc.sub is None:
                out.append(_Skeleton(here, (loc.tcp,), _leaf_builder(p, loc)))
                continue
            for inner in _skeletons(loc.sub, sigma):
                out.append(
                    _Skeleton(
                        Postfix(inner.target, here),
                        (loc.tcp,) + inner.tcps,
                        _nested_builder(p, loc, inner.build, "time/atomic/sub"),
                    )
                )
    elif isinstance(p, Postfix):
        parent = p.parent
        loc = parent.location(parent.pinned)
        for inner in _skeletons(p.child, sigma):
            out.append(
                _Skeleton(
                    Postfix(inner.target, parent),
                    (loc.tcp,) + inner.tcps,
                    _nested_builder(parent, loc, inner.build, "time/postfix"),
                )
            )
    else:
        rights = _skeletons(p.right, sigma)
        for l, r in cartesian(_skeletons(p.left, sigma), rights):
            out.append(
                _Skeleton(
                    Parallel(l.target, p.sync, r.target),
                    l.tcps + r.tcps,
                    _parallel_builder(l.build, r.build, p.sync),
                )
            )
    return out


def time_successors(
    p: Composition, sigma: Valuation, t: float, delta: float
) -> list[tuple[TrajectoryBundle, Composition, Valuation]]:
    """Delays of duration ``t`` sampled every ``delta``.

    All active levels share one trajectory; conflicting ODEs for the same
    variable raise ``InconsistentDynamicsError``.
    """
    return time_successors_menu(p, sigma, (t,), delta)


def time_successors_menu(
    p: Composition, sigma: Valuation, durations: Sequence[float], delta: float
) -> list[tuple[TrajectoryBundle, Composition, Valuation]]:
    """Delays for every duration in the menu, in menu order.

    Flows are closed-form from the start valuation, so the shorter delays
    are prefixes of the longest one and are sliced from it.
    """
    if not durations:
        return []
    counts = [sample_count(t, delta) for t in durations]
    longest = max(counts)
    continuous = [k for k in sigma.variables() if k not in sigma.discrete]
    per_duration: list[list] = [[] for _ in durations]
    for sk in _skeletons(p, sigma):
        spec = flow_spec(conj(*sk.tcps), continuous)
        rho, valid = flow_prefix(sigma, spec, longest, delta)
        usable = [i for i, n in enumerate(counts) if n <= valid]
        if not usable:
            continue
        horizon = max(counts[i] for i in usable)
        theta, omega = sk.build([s.raw for s in rho[: horizon + 1]])
        for i in usable:
            n = counts[i]
            bundle = TrajectoryBundle(
                durations[i], delta, rho[: n + 1], tuple(theta[: n + 1]), tuple(omega[: n + 1])
            )
            per_duration[i].append((bundle, sk.target, rho[n]))
    return [x for group in per_duration for x in _unique(group)]


# --------------------------------------------------------------------------


def successors(
    p: Composition, sigma: Valuation, durations: Sequence[float], delta: float
) -> list[Transition]:
    """Every transition from ``(p, σ)`` for the given menu of delays."""
    out = [Transition(Action(a), q, post) for a, q, post in action_successors(p, sigma)]
    out += [Transition(Env(b), q, sigma) for b, q in env_successors(p, sigma)]
    out += [
        Transition(Time(bundle), q, post)
        for bundle, q, post in time_successors_menu(p, sigma, durations, delta)
    ]
    return out
