"""Syntax of hierarchical hybrid automata and their compositions."""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional, Union

from .errors import ModelError
from .expr import FALSE, TRUE, Cmp, Const, Expr, Var, conj, conjuncts, variables
from .predicates import reset_assignments

KINDS = ("discrete", "continuous", "constant")


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str
    value: Optional[Fraction] = None  # constants only

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown variable kind {self.kind!r}")


@dataclass(frozen=True)
class Edge:
    source: str
    guard: Expr
    action: str
    reset: Expr
    target: str


@dataclass(frozen=True)
class Location:
    name: str
    init: Expr = FALSE
    tcp: Expr = TRUE
    term: Expr = FALSE
    sub: Optional["Composition"] = None


def _cached_hash(cls):
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


@_cached_hash
@dataclass(frozen=True)
class Automaton:
    """Atomic hierarchical automaton ``(V, init, tcp, E, term, h)``.

    ``pinned`` records the active location: when set, location ``v`` is the
    only initial one regardless of the init predicates.
    """

    name: str
    locations: tuple[Location, ...]
    edges: tuple[Edge, ...] = ()
    pinned: Optional[str] = None

    @cached_property
    def _index(self) -> dict[str, Location]:
        return {loc.name: loc for loc in self.locations}

    @cached_property
    def _outgoing(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list[Edge]] = {loc.name: [] for loc in self.locations}
        for e in self.edges:
            out.setdefault(e.source, []).append(e)
        return {k: tuple(v) for k, v in out.items()}

    @property
    def location_names(self) -> tuple[str, ...]:
        return tuple(loc.name for loc in self.locations)

    def location(self, name: str) -> Location:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown location {name!r} in automaton {self.name}") from None

    def has_location(self, name: str) -> bool:
        return name in self._index

    def outgoing(self, name: str) -> tuple[Edge, ...]:
        return self._outgoing.get(name, ())

    @property
    def hierarchy(self) -> dict[str, "Composition"]:
        return {loc.name: loc.sub for loc in self.locations if loc.sub is not None}

    def effective_init(self, name: str) -> Expr:
        if self.pinned is not None:
            return TRUE if name == self.pinned else FALSE
        return self.location(name).init

    def unpinned(self) -> "Automaton":
        return replace(self, pinned=None) if self.pinned is not None else self


@_cached_hash
@dataclass(frozen=True)
class Postfix:
    """``child : parent`` where ``child`` is the active substructure of the
    parent's pinned location."""

    child: "Composition"
    parent: Automaton


@_cached_hash
@dataclass(frozen=True)
class Parallel:
    left: "Composition"
    sync: frozenset[str]
    right: "Composition"


Composition = Union[Automaton, Postfix, Parallel]


@dataclass(frozen=True)
class Model:
    """A parsed model file: declarations plus one composition."""

    decls: tuple[VarDecl, ...]
    comp: Composition

    @property
    def automata(self) -> dict[str, Automaton]:
        return {a.name: a for a in iter_automata(self.comp)}

    def decl(self, name: str) -> VarDecl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)


def iter_automata(p: Composition) -> Iterator[Automaton]:
    """Every automaton in ``p``, including those inside substructures."""
    if isinstance(p, Automaton):
        yield p
        for loc in p.locations:
            if loc.sub is not None:
                yield from iter_automata(loc.sub)
    elif isinstance(p, Postfix):
        yield from iter_automata(p.child)
        yield from iter_automata(p.parent)
    else:
        yield from iter_automata(p.left)
        yield from iter_automata(p.right)


def pin(alpha: Automaton, v: str) -> Automaton:
    """``α[v]``: the automaton whose only initial location is ``v``."""
    if not alpha.has_location(v):
        raise ModelError(f"unknown location {v!r} in automaton {alpha.name}")
    if alpha.pinned == v:
        return alpha
    return replace(alpha, pinned=v)


def depth(p: Composition) -> int:
    if isinstance(p, Automaton):
        return _atomic_depth(p)
    if isinstance(p, Parallel):
        return max(depth(p.left), depth(p.right))
    return max(depth(p.child) + 1, _atomic_depth(p.parent))


def _atomic_depth(alpha: Automaton) -> int:
    return 1 + max((depth(loc.sub) for loc in alpha.locations if loc.sub is not None), default=0)


def is_flat(p: Composition) -> bool:
    return isinstance(p, Automaton) and all(loc.sub is None for loc in p.locations)


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str = ""

    def __str__(self) -> str:
        return f"{self.where}: {self.message}" if self.where else self.message


def validate(model: Composition, decls) -> list[Diagnostic]:
    """Check the structural invariants; an empty list means well-formed."""
    diags: list[Diagnostic] = []
    seen: set[str] = set()
    for d in decls:
        if d.name in seen:
            diags.append(Diagnostic("duplicate-variable", f"variable {d.name} declared twice"))
        seen.add(d.name)
        if d.kind == "constant" and d.value is None:
            diags.append(Diagnostic("constant-without-value", f"constant {d.name} has no value"))
    kinds = {d.name: d.kind for d in decls}
    _validate_comp(model, kinds, "", diags)
    return diags


def _check_pred(e: Expr, kinds, where: str, what: str, diags, stepped_ok=False):
    for v in sorted(variables(e), key=lambda v: v.key):
        if v.name not in kinds:
            diags.append(Diagnostic("undeclared-variable", f"undeclared variable {v.key} in {what}", where))
        elif v.stepped and not stepped_ok:
            diags.append(Diagnostic("stepped-variable", f"stepped variable in {what}", where))


def _validate_comp(p: Composition, kinds, path: str, diags: list[Diagnostic]) -> None:
    if isinstance(p, Parallel):
        _validate_comp(p.left, kinds, path, diags)
        _validate_comp(p.right, kinds, path, diags)
        return
    if isinstance(p, Postfix):
        if p.parent.pinned is None:
            diags.append(
                Diagnostic("unpinned-postfix", "postfix parent must be pinned", path + p.parent.name)
            )
        _validate_comp(p.child, kinds, path, diags)
        _validate_comp(p.parent, kinds, path, diags)
        return
    alpha = p
    here = path + alpha.name
    names: set[str] = set()
    for loc in alpha.locations:
        where = f"{here}.{loc.name}"
        if loc.name in names:
            diags.append(Diagnostic("duplicate-location", f"location {loc.name} defined twice", here))
        names.add(loc.name)
        _check_pred(loc.init, kinds, where, "init predicate", diags)
        _check_pred(loc.tcp, kinds, where, "tcp predicate", diags)
        _check_pred(loc.term, kinds, where, "termination predicate", diags)
        if loc.sub is not None:
            _validate_comp(loc.sub, kinds, where + "/", diags)
    if not alpha.locations:
        diags.append(Diagnostic("no-locations", "automaton has no locations", here))
    if alpha.pinned is not None and alpha.pinned not in names:
        diags.append(Diagnostic("unknown-location", f"pinned at unknown location {alpha.pinned}", here))
    for i, e in enumerate(alpha.edges):
        where = f"{here} edge {e.source} -{e.action}-> {e.target}"
        for end in (e.source, e.target):
            if end not in names:
                diags.append(Diagnostic("unknown-location", f"edge refers to unknown location {end}", where))
        _check_pred(e.guard, kinds, where, "guard", diags)
        _check_pred(e.reset, kinds, where, "reset", diags, stepped_ok=True)
        for v in variables(e.reset):
            if v.stepped and kinds.get(v.name) == "constant":
                diags.append(Diagnostic("constant-assigned", f"reset assigns constant {v.name}", where))


# --------------------------------------------------------------------------
# entry-reset augmentation


def _constant_bindings(init: Expr) -> dict[Var, Expr]:
    out = {}
    for c in conjuncts(init):
        if isinstance(c, Cmp) and c.op == "=":
            for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
                if isinstance(lhs, Var) and not lhs.stepped and isinstance(rhs, Const):
                    out.setdefault(lhs, rhs)
    return out


def entry_bindings(p: Composition) -> dict[Var, Expr]:
    """Variable bindings ``x = k`` shared by every possible initial location.

    Locations whose init is literally ``false`` never start, so they are
    ignored; a variable is bound only when all remaining locations agree.
    """
    if isinstance(p, Parallel):
        out = dict(entry_bindings(p.left))
        for var, val in entry_bindings(p.right).items():
            if out.get(var, val) != val:
                out.pop(var)
            else:
                out[var] = val
        return out
    if isinstance(p, Postfix):
        return {}
    starts = [loc for loc in p.locations if p.effective_init(loc.name) != FALSE]
    if not starts:
        return {}
    common: Optional[dict[Var, Expr]] = None
    for loc in starts:
        here = _constant_bindings(p.effective_init(loc.name))
        if loc.sub is not None:
            for var, val in entry_bindings(loc.sub).items():
                here.setdefault(var, val)
        if common is None:
            common = here
        else:
            common = {k: v for k, v in common.items() if here.get(k) == v}
    return common or {}


def augment_entry_resets(p: Composition) -> Composition:
    """Add ``x+ = k`` to every edge entering a location whose substructure
    always starts with ``x = k``, unless the edge already assigns ``x``."""
    if isinstance(p, Parallel):
        return Parallel(augment_entry_resets(p.left), p.sync, augment_entry_resets(p.right))
    if isinstance(p, Postfix):
        return Postfix(augment_entry_resets(p.child), augment_entry_resets(p.parent))
    locations = tuple(
        replace(loc, sub=augment_entry_resets(loc.sub)) if loc.sub is not None else loc
        for loc in p.locations
    )
    binds = {loc.name: entry_bindings(loc.sub) for loc in p.locations if loc.sub is not None}
    edges = []
    for e in p.edges:
        extra = binds.get(e.target)
        if extra:
            assigned = set(reset_assignments(e.reset))
            added = [
                Cmp("=", Var(var.name, var.dotted, True), val)
                for var, val in extra.items()
                if var not in assigned
            ]
            if added:
                e = replace(e, reset=conj(e.reset, *added))
        edges.append(e)
    return replace(p, locations=locations, edges=tuple(edges))


def render_state(p: Composition) -> str:
    """Compact rendering of the active-location tree, e.g. ``Clock[Cold] : Thermostat[On]``."""
    if isinstance(p, Automaton):
        return p.name + (f"[{p.pinned}]" if p.pinned is not None else "")
    if isinstance(p, Postfix):
        return f"{_wrap(p.child)} : {render_state(p.parent)}"
    sync = ", ".join(sorted(p.sync))
    return f"({render_state(p.left)} ||{{{sync}}} {render_state(p.right)})"


def _wrap(p: Composition) -> str:
    text = render_state(p)
    return f"({text})" if isinstance(p, Postfix) else text


def fully_initialized(p: Composition) -> bool:
    """Every atomic node on the active spine is pinned."""
    if isinstance(p, Automaton):
        return p.pinned is not None
    if isinstance(p, Postfix):
        return p.parent.pinned is not None and fully_initialized(p.child)
    return fully_initialized(p.left) and fully_initialized(p.right)


__all__ = [
    "Automaton",
    "Composition",
    "Diagnostic",
    "Edge",
    "Location",
    "Model",
    "Parallel",
    "Postfix",
    "VarDecl",
    "augment_entry_resets",
    "depth",
    "entry_bindings",
    "fully_initialized",
    "is_flat",
    "iter_automata",
    "pin",
    "render_state",
    "validate",
]
