"""Hierarchy elimination.

``flatten_depth2`` turns an automaton whose substructures are flat automata
into a single flat automaton over pairs ``(outer, inner)``; ``product``
collapses a parallel composition of flat automata; ``eliminate`` applies both
bottom-up to any well-founded composition.

Resets use frame semantics (unassigned variables keep their value), so the
condition that the target substructure's init holds *after* the reset is
encoded by substituting the reset's assignments into that init predicate.
The result is a pre-state condition that lives in the reset, which keeps the
edge guard (and hence the guard trajectory) identical to the hierarchical
model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ModelError
from .expr import FALSE, Expr, conj, fold, substitute
from .model import Automaton, Composition, Edge, Location, Parallel, Postfix, depth, is_flat
from .predicates import reset_plan


@dataclass(frozen=True)
class FlatLocation:
    outer: str
    inner: Optional[str] = None

    @property
    def name(self) -> str:
        return self.outer if self.inner is None else f"{self.outer}.{self.inner}"


def flat_locations(alpha: Automaton) -> list[FlatLocation]:
    out = []
    for loc in alpha.locations:
        if loc.sub is None:
            out.append(FlatLocation(loc.name))
        else:
            out.extend(FlatLocation(loc.name, w.name) for w in loc.sub.locations)
    return out


def post_condition(reset: Expr, pred: Expr) -> Expr:
    """Pre-state condition equivalent to ``pred`` holding after ``reset``."""
    mapping = {}
    for target, rhs in reset_plan(reset).assignments:
        mapping.setdefault(target, rhs)
    return fold(substitute(pred, mapping))


def _check_depth2(alpha: Automaton) -> None:
    for loc in alpha.locations:
        if loc.sub is not None and not is_flat(loc.sub):
            raise ModelError(f"not depth-2 atomic: substructure of {loc.name} is not a flat automaton")


def flatten_depth2(alpha: Automaton) -> Automaton:
    """Flat automaton over ``(v, w)`` pairs, bisimilar to ``alpha``."""
    if not isinstance(alpha, Automaton):
        raise ModelError("not depth-2 atomic: expected an automaton")
    _check_depth2(alpha)
    locations = []
    for loc in alpha.locations:
        init = alpha.effective_init(loc.name)
        if loc.sub is None:
            locations.append(Location(loc.name, init, loc.tcp, loc.term))
            continue
        sub = loc.sub
        for w in sub.locations:
            locations.append(
                Location(
                    FlatLocation(loc.name, w.name).name,
                    conj(init, sub.effective_init(w.name)),
                    conj(loc.tcp, w.tcp),
                    conj(loc.term, w.term),
                )
            )

    def inner_states(v: str):
        sub = alpha.location(v).sub
        if sub is None:
            return [(None, None)]
        return [(w.name, sub) for w in sub.locations]

    edges: list[Edge] = []
    # edges of the outer automaton, from every inner state to every entry
    for e in alpha.edges:
        for w0, sub0 in inner_states(e.source):
            guard = e.guard if w0 is None else conj(sub0.location(w0).term, e.guard)
            for w1, sub1 in inner_states(e.target):
                if w1 is None:
                    reset = e.reset
                else:
                    reset = conj(e.reset, post_condition(e.reset, sub1.effective_init(w1)))
                edges.append(
                    Edge(
                        FlatLocation(e.source, w0).name,
                        guard,
                        e.action,
                        reset,
                        FlatLocation(e.target, w1).name,
                    )
                )
    # edges inside substructures
    for loc in alpha.locations:
        if loc.sub is None:
            continue
        for e in loc.sub.edges:
            edges.append(
                Edge(
                    FlatLocation(loc.name, e.source).name,
                    e.guard,
                    e.action,
                    e.reset,
                    FlatLocation(loc.name, e.target).name,
                )
            )
    return Automaton(alpha.name, tuple(locations), _ordered(locations, edges))


def _ordered(locations, edges) -> tuple[Edge, ...]:
    order = {loc.name: i for i, loc in enumerate(locations)}
    unique = list(dict.fromkeys(edges))
    return tuple(sorted(unique, key=lambda e: order[e.source]))


def product_name(v: str, w: str) -> str:
    return f"{v}__{w}"


def product(alpha: Automaton, sync, beta: Automaton) -> Automaton:
    """Flat automaton for ``alpha ||_sync beta`` (both flat)."""
    if not (is_flat(alpha) and is_flat(beta)):
        raise ModelError("product expects flat automata")
    sync = frozenset(sync)
    locations = []
    for v in alpha.locations:
        for w in beta.locations:
            locations.append(
                Location(
                    product_name(v.name, w.name),
                    conj(alpha.effective_init(v.name), beta.effective_init(w.name)),
                    conj(v.tcp, w.tcp),
                    conj(v.term, w.term),
                )
            )
    names = [loc.name for loc in locations]
    if len(set(names)) != len(names):
        raise ModelError("product location names collide; rename locations")
    edges = []
    for e0 in alpha.edges:
        if e0.action in sync:
            for e1 in beta.edges:
                if e1.action != e0.action:
                    continue
                edges.append(
                    Edge(
                        product_name(e0.source, e1.source),
                        conj(e0.guard, e1.guard),
                        e0.action,
                        conj(e0.reset, e1.reset),
                        product_name(e0.target, e1.target),
                    )
                )
        else:
            for w in beta.locations:
                edges.append(
                    Edge(
                        product_name(e0.source, w.name),
                        e0.guard,
                        e0.action,
                        e0.reset,
                        product_name(e0.target, w.name),
                    )
                )
    for e1 in beta.edges:
        if e1.action in sync:
            continue
        for v in alpha.locations:
            edges.append(
                Edge(
                    product_name(v.name, e1.source),
                    e1.guard,
                    e1.action,
                    e1.reset,
                    product_name(v.name, e1.target),
                )
            )
    return Automaton(f"{alpha.name}_{beta.name}", tuple(locations), _ordered(locations, edges))


def prune(alpha: Automaton) -> Automaton:
    """Drop edges that can never fire without changing any guard trajectory.

    An edge whose guard is literally ``false`` is dropped.  An edge whose
    reset is literally ``false`` is dropped only when another kept edge has
    the same source, guard and action, so the set of enabled actions is
    unchanged.
    """
    kept = [e for e in alpha.edges if e.guard != FALSE]
    live = {(e.source, e.guard, e.action) for e in kept if e.reset != FALSE}
    out, seen_dead = [], set()
    for e in kept:
        if e.reset == FALSE:
            key = (e.source, e.guard, e.action)
            if key in live or key in seen_dead:
                continue
            seen_dead.add(key)
        out.append(e)
    return Automaton(alpha.name, alpha.locations, tuple(out), alpha.pinned)


def eliminate(p: Composition, prune_edges: bool = True) -> Automaton:
    """Flat automaton stateless-bisimilar to ``p``."""
    if isinstance(p, Postfix):
        raise ModelError("auxiliary operator in source model")
    if isinstance(p, Parallel):
        out = product(eliminate(p.left, prune_edges), p.sync, eliminate(p.right, prune_edges))
    else:
        if is_flat(p):
            return p
        locations = tuple(
            loc if loc.sub is None else Location(loc.name, loc.init, loc.tcp, loc.term, eliminate(loc.sub, prune_edges))
            for loc in p.locations
        )
        out = flatten_depth2(Automaton(p.name, locations, p.edges, p.pinned))
    return prune(out) if prune_edges else out


__all__ = [
    "FlatLocation",
    "depth",
    "eliminate",
    "flat_locations",
    "flatten_depth2",
    "post_condition",
    "product",
    "prune",
]
