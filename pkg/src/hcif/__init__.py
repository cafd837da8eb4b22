"""Executable semantics, flattening and bounded bisimulation for hierarchical hybrid automata."""

__version__ = "0.1.0"

from .bisim import (  # noqa: E402
    Distinguished,
    EquivalentUpToBound,
    GameConfig,
    bounded_bisim,
    check_congruence_sample,
    replay,
)
from .errors import (  # noqa: E402
    EvaluationError,
    HcifError,
    HcifSyntaxError,
    InconsistentDynamicsError,
    ModelError,
    UnboundVariableError,
    UnsupportedResetError,
)
from .flatten import eliminate, flatten_depth2, product  # noqa: E402
from .model import Automaton, Edge, Location, Model, Parallel, Postfix, VarDecl, pin, validate  # noqa: E402
from .predicates import Valuation, flow, satisfies, solve_reset  # noqa: E402
from .sos import action_successors, env_successors, successors, time_successors  # noqa: E402
from .syntax import format_model, load_model, load_text, parse  # noqa: E402

__all__ = [
    "Automaton",
    "Distinguished",
    "Edge",
    "EquivalentUpToBound",
    "EvaluationError",
    "GameConfig",
    "HcifError",
    "HcifSyntaxError",
    "InconsistentDynamicsError",
    "Location",
    "Model",
    "ModelError",
    "Parallel",
    "Postfix",
    "UnboundVariableError",
    "UnsupportedResetError",
    "Valuation",
    "VarDecl",
    "action_successors",
    "bounded_bisim",
    "check_congruence_sample",
    "eliminate",
    "env_successors",
    "flatten_depth2",
    "flow",
    "format_model",
    "load_model",
    "load_text",
    "parse",
    "pin",
    "product",
    "replay",
    "satisfies",
    "solve_reset",
    "successors",
    "time_successors",
    "validate",
]
