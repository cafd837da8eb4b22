"""Seeded random models and mutations, used by the test-suite and benchmarks.

Generated models are depth 2: an outer automaton driving ``x`` with an affine
ODE, some of whose locations hold a flat substructure timed by a clock ``c``
with dyadic thresholds (so guard changes land exactly on sample points), and
a discrete counter ``n``.
"""

from __future__ import annotations

import random
from dataclasses import replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .expr import And, BinOp, Call, Cmp, Const, Expr, Neg, Not, Or, variables
from .model import Automaton, Edge, Model, Parallel
from .predicates import Valuation
from .sos import successors
from .syntax import load_text

ACTIONS = ("a", "b", "d", "e")
THRESHOLDS = ("1/4", "1/2", "3/4", "1")


def _outer_tcp(rng: random.Random) -> str:
    a = rng.choice(["0", "-1", "-1/2"])
    b = rng.choice(["1", "2", "-1"])
    if a == "0":
        return f"x' = {b}"
    return f"x' = {a} * x + {b}"


def _outer_guard(rng: random.Random) -> str:
    kind = rng.randrange(4)
    if kind == 0:
        return f"x < {rng.choice(['1', '2', '3'])}"
    if kind == 1:
        return f"x >= {rng.choice(['1/2', '1', '3/2'])}"
    if kind == 2:
        return f"n <= {rng.randint(1, 3)}"
    return "true"


def _outer_reset(rng: random.Random) -> str:
    return rng.choice(["true", "n+ = n + 1", f"x+ = {rng.choice(['0', '1', '2'])}"])


def _inner_guard(rng: random.Random) -> str:
    k = rng.choice(THRESHOLDS)
    return rng.choice([f"c >= {k}", f"c > {k}", f"n < {rng.randint(1, 3)}"])


def _sub_text(rng: random.Random, name: str, indent: str) -> list[str]:
    k = rng.randint(2, 3)
    lines = [f"{indent}sub automaton {name} {{"]
    for i in range(k):
        lines.append(f"{indent}  location W{i} {{")
        if i == 0:
            lines.append(f"{indent}    init c = 0")
        elif i == 1 and rng.random() < 0.3:
            lines.append(f"{indent}    init c = 0 and n = 1")
        lines.append(f"{indent}    tcp c' = 1")
        if i > 0:
            term = rng.choice(["true", "true", f"c >= {rng.choice(THRESHOLDS)}", "false"])
            if i == k - 1 and term == "false":
                term = "true"
            if term != "false":
                lines.append(f"{indent}    term {term}")
        for _ in range(rng.randint(1, 2) if i < k - 1 else rng.randint(0, 1)):
            target = rng.randrange(k) if i == k - 1 else rng.randrange(i + 1, k)
            reset = rng.choice(["true", "c+ = 0", "n+ = n + 1"])
            lines.append(
                f"{indent}    edge {_inner_guard(rng)} : {rng.choice(ACTIONS)} : {reset} -> W{target}"
            )
        lines.append(f"{indent}  }}")
    lines.append(f"{indent}}}")
    return lines


def random_model_text(seed: int) -> str:
    rng = random.Random(seed)
    m = rng.randint(2, 3)
    with_sub = set(rng.sample(range(m), rng.randint(1, m)))
    lines = ["cont x", "cont c", "disc n", "", "automaton A {"]
    for i in range(m):
        lines.append(f"  location L{i} {{")
        if i == 0:
            lines.append(f"    init x = {rng.choice(['0', '1'])} and n = 0")
        lines.append(f"    tcp {_outer_tcp(rng)}")
        if i in with_sub:
            lines.extend(_sub_text(rng, f"B{i}", "    "))
        for _ in range(rng.randint(1, 2)):
            target = rng.randrange(m)
            lines.append(
                f"    edge {_outer_guard(rng)} : {rng.choice(ACTIONS)} : {_outer_reset(rng)} -> L{target}"
            )
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_model(seed: int) -> Model:
    return load_text(random_model_text(seed))


def random_partner_text(seed: int) -> str:
    """A flat automaton over its own variables ``y`` and ``m``."""
    rng = random.Random(seed)
    k = rng.randint(1, 2)
    lines = ["cont y", "disc m", "", "automaton C {"]
    for i in range(k):
        lines.append(f"  location U{i} {{")
        if i == 0:
            lines.append("    init y = 0 and m = 0")
        lines.append(f"    tcp y' = {rng.choice(['1', '-y + 1'])}")
        for _ in range(rng.randint(1, 2)):
            guard = rng.choice(["true", f"y >= {rng.choice(THRESHOLDS)}", f"m <= {rng.randint(0, 2)}"])
            reset = rng.choice(["true", "m+ = m + 1", "y+ = 0"])
            lines.append(f"    edge {guard} : {rng.choice(ACTIONS)} : {reset} -> U{rng.randrange(k)}")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def random_partner(seed: int) -> Model:
    return load_text(random_partner_text(seed))


def random_sync(seed: int) -> frozenset[str]:
    rng = random.Random(seed)
    return frozenset(a for a in ACTIONS if rng.random() < 0.5)


def compose(left: Model, sync, right: Model) -> Model:
    names = {d.name for d in left.decls}
    clash = names & {d.name for d in right.decls}
    if clash:
        raise ValueError(f"variables declared on both sides: {sorted(clash)}")
    return Model(left.decls + right.decls, Parallel(left.comp, frozenset(sync), right.comp))


# --------------------------------------------------------------------------
# mutations of flat automata

_FLIP = {"<": "<=", "<=": "<", ">": ">=", ">=": ">"}


def _flip_first(e: Expr, exact: Optional[frozenset[str]] = None) -> Optional[Expr]:
    if isinstance(e, Cmp) and e.op in _FLIP:
        if exact is None or {v.name for v in variables(e)} <= exact:
            return replace(e, op=_FLIP[e.op])
    for field in ("left", "right", "arg"):
        child = getattr(e, field, None)
        if isinstance(child, Expr):
            new = _flip_first(child, exact)
            if new is not None:
                return replace(e, **{field: new})
    return None


def _bump_first_constant(e: Expr) -> Optional[Expr]:
    if isinstance(e, Const) and not isinstance(e.value, bool):
        return Const(e.value + Fraction(1, 2))
    if isinstance(e, (BinOp, Cmp, And, Or)):
        new = _bump_first_constant(e.left)
        if new is not None:
            return replace(e, left=new)
        new = _bump_first_constant(e.right)
        if new is not None:
            return replace(e, right=new)
    if isinstance(e, (Neg, Not, Call)):
        new = _bump_first_constant(e.arg)
        if new is not None:
            return replace(e, arg=new)
    return None


def _with_edge(alpha: Automaton, i: int, edge: Optional[Edge]) -> Automaton:
    edges = list(alpha.edges)
    if edge is None:
        del edges[i]
    else:
        edges[i] = edge
    return Automaton(alpha.name, alpha.locations, tuple(edges), alpha.pinned)


MUTATIONS = ("drop-edge", "flip-strictness", "alter-reset-constant")


def reached_locations(
    alpha: Automaton, sigma: Valuation, steps: int, durations: Sequence[float], delta: float
) -> set[str]:
    """Locations of a flat automaton active within ``steps`` transitions of ``sigma``."""
    seen = {(alpha, sigma)}
    frontier = [(alpha, sigma)]
    out = set()
    for _ in range(steps + 1):
        nxt = []
        for p, sg in frontier:
            if p.pinned is not None:
                out.add(p.pinned)
            for t in successors(p, sg, durations, delta):
                key = (t.target, t.valuation)
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
        frontier = nxt
    return out


def mutate(
    alpha: Automaton,
    seed: int,
    sources: Optional[Iterable[str]] = None,
    exact: Optional[Iterable[str]] = None,
) -> tuple[str, int, Automaton]:
    """Apply one seeded mutation; returns ``(kind, edge index, mutant)``.

    With ``sources`` only edges leaving those locations are mutated.  With
    ``exact`` a strictness flip only touches comparisons over those
    variables; a threshold crossed between samples makes ``<`` and ``<=``
    indistinguishable on the sampling grid.
    """
    rng = random.Random(seed)
    exact = None if exact is None else frozenset(exact)
    allowed = None if sources is None else set(sources)
    sites = [i for i, e in enumerate(alpha.edges) if allowed is None or e.source in allowed]
    options = {
        "drop-edge": sites,
        "flip-strictness": [i for i in sites if _flip_first(alpha.edges[i].guard, exact) is not None],
        "alter-reset-constant": [i for i in sites if _bump_first_constant(alpha.edges[i].reset) is not None],
    }
    kinds = [k for k in MUTATIONS if options[k]]
    if not kinds:
        raise ValueError("automaton has no edges to mutate")
    kind = rng.choice(kinds)
    i = rng.choice(options[kind])
    e = alpha.edges[i]
    if kind == "drop-edge":
        return kind, i, _with_edge(alpha, i, None)
    if kind == "flip-strictness":
        return kind, i, _with_edge(alpha, i, replace(e, guard=_flip_first(e.guard, exact)))
    return kind, i, _with_edge(alpha, i, replace(e, reset=_bump_first_constant(e.reset)))
