"""Command-line driver.

Exit status: 0 on success (and for ``bisim``, equivalent up to the bound),
1 on parse, validation or usage errors, 2 when ``bisim`` distinguishes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bisim import DEFAULT_DELTA, DEFAULT_DURATIONS, GameConfig, bounded_bisim
from .dot import to_dot
from .errors import HcifError, HcifSyntaxError
from .flatten import eliminate
from .model import Model, render_state
from .sos import time_successors
from .syntax import ValidationError, format_model, load_model
from .trace import describe_option, initial_valuation, read_sigma, simulate, uniform_chooser


class UsageError(Exception):
    pass


def default_delta() -> float:
    raw = os.environ.get("HCIF_DELTA")
    if raw is None:
        return DEFAULT_DELTA
    try:
        value = float(raw)
    except ValueError:
        raise UsageError(f"HCIF_DELTA is not a number: {raw!r}") from None
    if value <= 0:
        raise UsageError("HCIF_DELTA must be positive")
    return value


def _durations(text: Optional[str]) -> tuple[float, ...]:
    if text is None:
        return DEFAULT_DURATIONS
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad duration list: {text!r}") from None


def _load(path: str, args) -> Model:
    try:
        return load_model(path, augment=not args.no_augment)
    except (HcifSyntaxError, ValidationError) as e:
        e.path = path
        raise


def _sigma(model: Model, args):
    overrides = read_sigma(args.sigma) if args.sigma else None
    return initial_valuation(model, overrides)


def _delta(args) -> float:
    return args.delta if args.delta is not None else default_delta()


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    model = _load(args.file, args)
    delta = _delta(args)
    durations = _durations(args.durations)
    sigma = _sigma(model, args)
    out = sys.stdout
    if args.interactive:
        choose = _interactive_chooser(sys.stdin, sys.stderr)
    else:
        choose = uniform_chooser(args.seed)
    for record in simulate(model.comp, sigma, args.steps, durations, delta, choose):
        out.write(record.dumps() + "\n")
        out.flush()
    return 0


def _interactive_chooser(inp, err):
    def choose(p, sigma, options):
        err.write(f"state {render_state(p)}\n")
        for i, t in enumerate(options):
            err.write(f"  [{i}] {describe_option(t)}\n")
        while True:
            err.write("select index (q to quit): ")
            err.flush()
            line = inp.readline()
            if not line or line.strip().lower() in {"q", "quit"}:
                return None
            try:
                i = int(line)
            except ValueError:
                continue
            if 0 <= i < len(options):
                return i

    return choose


def cmd_flatten(args) -> int:
    model = _load(args.file, args)
    flat = eliminate(model.comp, prune_edges=not args.keep_dead_edges)
    text = format_model(Model(model.decls, flat))
    _write(args.output, text)
    return 0


def cmd_bisim(args) -> int:
    left = _load(args.left, args)
    right = _load(args.right, args)
    if {d.name for d in left.decls} != {d.name for d in right.decls}:
        raise UsageError("the two models declare different variables")
    sigma = _sigma(left, args)
    cfg = GameConfig(
        depth=args.depth,
        durations=_durations(args.durations),
        delta=_delta(args),
        initial=(sigma,),
    )
    verdict = bounded_bisim(left.comp, right.comp, cfg)
    if verdict:
        print(f"equivalent up to depth {cfg.depth} from {dict(sigma)}")
        return 0
    print(verdict.describe())
    return 2


def cmd_enabled_at(args) -> int:
    model = _load(args.file, args)
    delta = _delta(args)
    sigma = _sigma(model, args)
    delays = time_successors(model.comp, sigma, args.horizon, delta)
    if not delays:
        print("no delay of the requested length is possible", file=sys.stderr)
        return 1
    for i, (bundle, target, _) in enumerate(delays):
        state = render_state(target)
        for s, th, om in zip(bundle.times, bundle.theta, bundle.omega):
            record = {"config": i, "state": state, "s": s, "theta": sorted(th), "omega": om}
            print(json.dumps(record, separators=(",", ":")))
    if args.plot:
        from .plotting import plot_bundle

        plot_bundle(delays[0][0], args.plot, title=render_state(delays[0][1]))
    return 0


def cmd_export_dot(args) -> int:
    model = _load(args.file, args)
    _write(args.output, to_dot(model.comp, Path(args.file).stem))
    return 0


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hcif", description="Hierarchical hybrid automata toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--no-augment",
        action="store_true",
        help="do not add substructure init bindings to entering edges",
    )
    timing = argparse.ArgumentParser(add_help=False)
    timing.add_argument("--delta", type=float, help="sample step (default 2^-5 or $HCIF_DELTA)")
    valuation = argparse.ArgumentParser(add_help=False)
    valuation.add_argument("--sigma", metavar="FILE", help="initial valuation (JSON or name = value lines)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, timing, valuation], help="random or interactive run")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--durations", help="comma-separated delay menu")
    p.add_argument("--seed", type=int)
    p.add_argument("--interactive", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("flatten", parents=[common], help="eliminate hierarchy and parallelism")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--keep-dead-edges", action="store_true", help="keep edges that can never fire")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("bisim", parents=[common, timing, valuation], help="bounded bisimulation check")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--durations", help="comma-separated delay menu")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser(
        "enabled-at", parents=[common, timing, valuation], help="guard and termination trajectories"
    )
    p.add_argument("file")
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--plot", metavar="PNG", help="also write a figure of the trajectories")
    p.set_defaults(func=cmd_enabled_at)

    p = sub.add_parser("export-dot", parents=[common], help="Graphviz rendering")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_export_dot)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HcifSyntaxError as e:
        print(f"{e.path}:{e}", file=sys.stderr)
    except ValidationError as e:
        for d in e.diagnostics:
            print(f"{e.path}: {d}", file=sys.stderr)
    except (HcifError, UsageError, ValueError, KeyError, OSError) as e:
        print(f"hcif: {e}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
