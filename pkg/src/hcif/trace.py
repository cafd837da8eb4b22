"""Simulation traces and their JSON Lines encoding."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Mapping, Optional, Sequence

from .expr import Cmp, Const, Var, conjuncts
from .model import Composition, Model, iter_automata, render_state
from .predicates import Valuation
from .sos import Action, Env, Transition, successors


def initial_valuation(model: Model, overrides: Optional[Mapping[str, float]] = None) -> Valuation:
    """Starting valuation: ``x = k`` init conjuncts, then ``overrides``, else 0."""
    values: dict[str, float] = {}
    for alpha in iter_automata(model.comp):
        for loc in alpha.locations:
            for c in conjuncts(loc.init):
                if not (isinstance(c, Cmp) and c.op == "="):
                    continue
                for lhs, rhs in ((c.left, c.right), (c.right, c.left)):
                    if isinstance(lhs, Var) and not lhs.stepped and isinstance(rhs, Const):
                        if not isinstance(rhs.value, bool):
                            values.setdefault(lhs.key, float(rhs.value))
    constants = {d.name for d in model.decls if d.kind == "constant"}
    for k in constants:
        values.pop(k, None)
    values.update(overrides or {})
    return Valuation.initial(model.decls, values)


def read_sigma(path) -> dict[str, float]:
    """Valuation file: a JSON object, or ``name = number`` lines."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        return {str(k): float(v) for k, v in data.items()}
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        name, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{n}: expected 'name = value'")
        out[name.strip()] = float(value)
    return out


def valuation_json(sigma: Valuation) -> dict:
    return {k: sigma[k] for k in sigma}


def label_json(t: Transition) -> dict:
    label = t.label
    if isinstance(label, Action):
        return {"action": label.name}
    if isinstance(label, Env):
        return {"terminating": label.terminating}
    b = label.bundle
    return {
        "duration": b.duration,
        "delta": b.step,
        "samples": [
            {"s": s, "rho": valuation_json(r), "theta": sorted(th), "omega": om}
            for s, r, th, om in zip(b.times, b.rho, b.theta, b.omega)
        ],
    }


@dataclass(frozen=True)
class TraceRecord:
    step: int
    pre_state: Composition
    pre: Valuation
    transition: Transition

    @property
    def post_state(self) -> Composition:
        return self.transition.target

    @property
    def post(self) -> Valuation:
        return self.transition.valuation

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "kind": self.transition.kind,
            "label": label_json(self.transition),
            "pre": {"state": render_state(self.pre_state), "valuation": valuation_json(self.pre)},
            "post": {"state": render_state(self.post_state), "valuation": valuation_json(self.post)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))


Chooser = Callable[[Composition, Valuation, Sequence[Transition]], Optional[int]]


def uniform_chooser(seed: Optional[int]) -> Chooser:
    rng = random.Random(seed)

    def choose(p, sigma, options):
        return rng.randrange(len(options))

    return choose


def simulate(
    comp: Composition,
    sigma0: Valuation,
    steps: int,
    durations: Sequence[float],
    delta: float,
    choose: Chooser,
) -> Iterator[TraceRecord]:
    """Walk at most ``steps`` transitions; ``choose`` returns an index or ``None`` to stop."""
    p, sigma = comp, sigma0
    for k in range(steps):
        options = successors(p, sigma, durations, delta)
        if not options:
            return
        i = choose(p, sigma, options)
        if i is None:
            return
        t = options[i]
        yield TraceRecord(k, p, sigma, t)
        p, sigma = t.target, t.valuation


def describe_option(t: Transition) -> str:
    label = t.label
    if isinstance(label, Action):
        head = f"action {label.name}"
    elif isinstance(label, Env):
        head = f"env {str(label.terminating).lower()}"
    else:
        head = f"time {label.bundle.duration:g}"
    return f"{head} -> {render_state(t.target)} {valuation_json(t.valuation)}"
