"""Bounded stateless-bisimulation checking.

The game is played from every configured initial valuation.  At a pair
``(p, q)`` under ``σ`` each side in turn challenges with every transition it
has (actions, environment transitions and one delay per menu duration); the
other side must answer with a transition carrying an equal label and an equal
target valuation, after which play continues from the two targets.  A pair is
accepted once every challenge has been answered down to the depth bound.

Valuations are compared with an absolute tolerance; guard and termination
trajectories are compared exactly at the sample points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .model import Automaton, Composition, Parallel, Postfix, pin
from .predicates import Valuation
from .sos import Action, Env, Label, Transition, successors

DEFAULT_DELTA = 2.0**-5
DEFAULT_DURATIONS = (0.125, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class GameConfig:
    depth: int = 6
    durations: tuple[float, ...] = DEFAULT_DURATIONS
    delta: float = DEFAULT_DELTA
    initial: tuple[Valuation, ...] = ()
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth bound must be positive")
        for t in self.durations:
            n = round(t / self.delta)
            if abs(n * self.delta - t) > 1e-12 * max(1.0, t):
                raise ValueError(f"duration {t} is not a multiple of delta {self.delta}")


@dataclass(frozen=True)
class Step:
    """One round of the game.

    ``challenger`` is ``"left"`` or ``"right"``; ``move`` is the challenger's
    transition and ``answer`` the responder's (``None`` when no transition
    with a matching label exists, which ends the trace).
    """

    challenger: str
    move: Transition
    answer: Optional[Transition]


@dataclass(frozen=True)
class EquivalentUpToBound:
    explored: int = 0

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Distinguished:
    initial: Valuation
    trace: tuple[Step, ...]
    reason: str

    def __bool__(self) -> bool:
        return False

    def describe(self) -> str:
        lines = [f"distinguished from {dict(self.initial)}: {self.reason}"]
        for i, step in enumerate(self.trace):
            answer = "unmatched" if step.answer is None else describe_label(step.answer.label)
            lines.append(f"  {i}: {step.challenger} {describe_label(step.move.label)} / {answer}")
        return "\n".join(lines)


Verdict = Union[EquivalentUpToBound, Distinguished]


def describe_label(label: Label) -> str:
    if isinstance(label, Action):
        return f"action {label.name}"
    if isinstance(label, Env):
        return f"env {str(label.terminating).lower()}"
    b = label.bundle
    return f"time {b.duration:g}"


def labels_match(a: Transition, b: Transition, tol: float) -> bool:
    """Same label (trajectories compared at samples) and close target valuations."""
    la, lb = a.label, b.label
    if type(la) is not type(lb):
        return False
    if isinstance(la, Action):
        if la.name != lb.name:
            return False
    elif isinstance(la, Env):
        if la.terminating != lb.terminating:
            return False
    else:
        ba, bb = la.bundle, lb.bundle
        if ba.duration != bb.duration or ba.theta != bb.theta or ba.omega != bb.omega:
            return False
        if len(ba.rho) != len(bb.rho):
            return False
        if not all(x.close_to(y, tol) for x, y in zip(ba.rho, bb.rho)):
            return False
    return a.valuation.close_to(b.valuation, tol)


def _signature(t: Transition):
    label = t.label
    if isinstance(label, Action):
        return ("action", label.name)
    if isinstance(label, Env):
        return ("env", label.terminating)
    b = label.bundle
    return ("time", b.duration, b.theta, b.omega)


class Game:
    """One bounded game between two compositions; reusable across valuations."""

    def __init__(self, left: Composition, right: Composition, cfg: GameConfig):
        self.left = left
        self.right = right
        self.cfg = cfg
        self._succ: dict = {}
        self.accepted: dict = {}  # (p, q, σ-key) -> depth verified
        self.refuted: dict = {}  # (p, q, σ-key) -> (depth, trace, reason)

    def successors(self, p: Composition, sigma: Valuation) -> list[Transition]:
        key = (p, sigma)
        out = self._succ.get(key)
        if out is None:
            out = successors(p, sigma, self.cfg.durations, self.cfg.delta)
            self._succ[key] = out
        return out

    def play(self) -> Verdict:
        for sigma in self.cfg.initial:
            failure = self._play(self.left, self.right, sigma, self.cfg.depth)
            if failure is not None:
                trace, reason = failure
                return Distinguished(sigma, tuple(trace), reason)
        return EquivalentUpToBound(len(self.accepted))

    def _play(self, p, q, sigma: Valuation, k: int):
        if k == 0:
            return None
        key = (p, q, sigma.quantized(self.cfg.tolerance))
        if self.accepted.get(key, 0) >= k:
            return None
        known = self.refuted.get(key)
        if known is not None and known[0] <= k:
            return known[1], known[2]
        tol = self.cfg.tolerance
        for side in ("left", "right"):
            mine, theirs = (p, q) if side == "left" else (q, p)
            answers: dict = {}
            for t in self.successors(theirs, sigma):
                answers.setdefault(_signature(t), []).append(t)
            for move in self.successors(mine, sigma):
                candidates = [t for t in answers.get(_signature(move), ()) if labels_match(move, t, tol)]
                if not candidates:
                    reason = f"{side} move {describe_label(move.label)} has no matching answer"
                    return self._refute(key, k, [Step(side, move, None)], reason)
                first_failure = None
                for answer in candidates:
                    if side == "left":
                        sub = self._play(move.target, answer.target, move.valuation, k - 1)
                    else:
                        sub = self._play(answer.target, move.target, move.valuation, k - 1)
                    if sub is None:
                        break
                    if first_failure is None:
                        first_failure = (answer, sub)
                else:
                    answer, (trace, reason) = first_failure
                    return self._refute(key, k, [Step(side, move, answer)] + list(trace), reason)
        self.accepted[key] = k
        return None

    def _refute(self, key, k, trace, reason):
        self.refuted[key] = (k, trace, reason)
        return trace, reason


def bounded_bisim(p: Composition, q: Composition, cfg: GameConfig) -> Verdict:
    """Play the bounded matching game from every initial valuation in ``cfg``."""
    return Game(p, q, cfg).play()


def replay(p: Composition, q: Composition, verdict: Distinguished, cfg: GameConfig) -> bool:
    """Re-execute a distinguishing trace and confirm it ends in an unmatched move."""
    left, right, sigma = p, q, verdict.initial
    tol = cfg.tolerance
    for i, step in enumerate(verdict.trace):
        mine, theirs = (left, right) if step.challenger == "left" else (right, left)
        moves = successors(mine, sigma, cfg.durations, cfg.delta)
        if step.move not in moves:
            return False
        answers = successors(theirs, sigma, cfg.durations, cfg.delta)
        last = i == len(verdict.trace) - 1
        if step.answer is None:
            return last and not any(labels_match(step.move, a, tol) for a in answers)
        if step.answer not in answers or not labels_match(step.move, step.answer, tol):
            return False
        if step.challenger == "left":
            left, right = step.move.target, step.answer.target
        else:
            left, right = step.answer.target, step.move.target
        sigma = step.move.valuation
    return False


# --------------------------------------------------------------------------
# congruence sampling


@dataclass(frozen=True)
class ParallelContext:
    """``[·] ||_S other`` (or ``other ||_S [·]`` when ``hole_left`` is false)."""

    other: Composition
    sync: frozenset[str] = frozenset()
    hole_left: bool = True

    def __call__(self, p: Composition) -> Composition:
        if self.hole_left:
            return Parallel(p, self.sync, self.other)
        return Parallel(self.other, self.sync, p)


@dataclass(frozen=True)
class PostfixContext:
    """``[·] : α[v]``: the hole is the active substructure of ``α``'s location ``v``."""

    parent: Automaton
    location: str

    def __call__(self, p: Composition) -> Composition:
        return Postfix(p, pin(self.parent, self.location))


class CongruencePreconditionError(Exception):
    def __init__(self, verdict: Distinguished):
        super().__init__("the two terms are not equivalent up to the bound:\n" + verdict.describe())
        self.verdict = verdict


def check_congruence_sample(
    p: Composition, q: Composition, contexts: Iterable, cfg: GameConfig
) -> list[Verdict]:
    """``bounded_bisim(C[p], C[q])`` for every context ``C``.

    Raises ``CongruencePreconditionError`` when ``p`` and ``q`` are already
    distinguished, since that is not a counterexample to congruence.
    """
    base = bounded_bisim(p, q, cfg)
    if isinstance(base, Distinguished):
        raise CongruencePreconditionError(base)
    return [bounded_bisim(c(p), c(q), cfg) for c in contexts]


def mirror(verdict: Verdict) -> Verdict:
    """The same verdict seen with the two sides swapped."""
    if isinstance(verdict, EquivalentUpToBound):
        return verdict
    flip = {"left": "right", "right": "left"}
    trace = tuple(Step(flip[s.challenger], s.move, s.answer) for s in verdict.trace)
    return Distinguished(verdict.initial, trace, verdict.reason.replace("left", "\0").replace("right", "left").replace("\0", "right"))


__all__: Sequence[str] = [
    "CongruencePreconditionError",
    "Distinguished",
    "EquivalentUpToBound",
    "Game",
    "GameConfig",
    "ParallelContext",
    "PostfixContext",
    "Step",
    "bounded_bisim",
    "check_congruence_sample",
    "labels_match",
    "mirror",
    "replay",
]
