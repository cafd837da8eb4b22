"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines are repeated in the terminal summary) or directly
with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import json
import math
import random
import sys
import tempfile
import time
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

from hcif.bisim import (  # noqa: E402
    GameConfig,
    ParallelContext,
    bounded_bisim,
    check_congruence_sample,
    replay,
)
from hcif.cli import main as cli_main  # noqa: E402
from hcif.expr import FALSE, TRUE  # noqa: E402
from hcif.flatten import eliminate  # noqa: E402
from hcif.gen import compose, mutate, random_model, random_partner, random_sync, reached_locations  # noqa: E402
from hcif.model import Automaton, Edge, Location, Parallel  # noqa: E402
from hcif.predicates import Valuation, flow  # noqa: E402
from hcif.sos import RULES, Action, record_rules, successors, time_successors  # noqa: E402
from hcif.syntax import format_model, load_text, parse, parse_expr  # noqa: E402
from hcif.trace import initial_valuation  # noqa: E402

from conftest import BUNDLED, load, model_path  # noqa: E402
from oracles import bisect_root, rk4  # noqa: E402

RESULTS: list[str] = []

DELTA = 2**-5
MENU = (0.125, 0.5, 1.0, 2.0)


def report(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


# 1 -------------------------------------------------------------------------


def test_criterion_01_flattening_regression():
    flat = eliminate(load("thermostat_hier").comp)
    names = flat.location_names
    got = [(str(e.guard), e.action, str(e.reset)) for e in flat.edges]
    want = [
        ("T < 20", "switch-on", "n+ = n + 1 and c+ = 0"),
        ("Delta <= c", "done", "true"),
        ("n <= 1000", "switch-off", "true"),
    ]
    reference = load("thermostat_flat").comp
    ok = set(names) == {"Off", "On.Cold", "On.Hot"} and len(flat.edges) == 3 and got == want
    ok = ok and flat == reference
    report(1, "flattening regression", ok, f"locations={list(names)} edges={len(flat.edges)}")


# 2 -------------------------------------------------------------------------


def test_criterion_02_elimination_oracle():
    start = time.perf_counter()
    hier = load("thermostat_hier")
    sigma = Valuation.initial(hier.decls, {"T": 25, "n": 0, "c": 0})
    cfg = GameConfig(depth=6, durations=MENU, delta=DELTA, initial=(sigma,))
    thermostat_ok = bool(bounded_bisim(hier.comp, eliminate(hier.comp), cfg))
    failures = []
    for seed in range(50):
        m = random_model(seed)
        cfg = GameConfig(depth=6, durations=MENU, delta=DELTA, initial=(initial_valuation(m),))
        if not bounded_bisim(m.comp, eliminate(m.comp), cfg):
            failures.append(seed)
    elapsed = time.perf_counter() - start
    ok = thermostat_ok and not failures and elapsed <= 300
    report(
        2,
        "elimination preserves bisimilarity",
        ok,
        f"thermostat={'equivalent' if thermostat_ok else 'distinguished'} "
        f"random={50 - len(failures)}/50 time={elapsed:.1f}s",
    )


# 3 -------------------------------------------------------------------------


def test_criterion_03_mutation_sensitivity():
    caught, kinds = 0, Counter()
    for i in range(20):
        m = random_model(1000 + i)
        flat = eliminate(m.comp)
        cfg = GameConfig(depth=6, durations=MENU, delta=DELTA, initial=(initial_valuation(m),))
        sites = reached_locations(flat, cfg.initial[0], cfg.depth - 1, cfg.durations, cfg.delta)
        kind, _, mutant = mutate(flat, i, sources=sites, exact={"c", "n"})
        kinds[kind] += 1
        verdict = bounded_bisim(m.comp, mutant, cfg)
        if not verdict and replay(m.comp, mutant, verdict, cfg):
            caught += 1
    summary = ", ".join(f"{k}={v}" for k, v in sorted(kinds.items()))
    report(3, "mutation sensitivity", caught >= 19, f"distinguished+replayed={caught}/20 ({summary})")


# 4 -------------------------------------------------------------------------


def test_criterion_04_eager_choice():
    m = load("example1")
    start = (m.comp, initial_valuation(m), ())
    seen, stack = set(), [start]
    histories, c_seen = set(), False
    while stack:
        p, sigma, history = stack.pop()
        if (p, sigma, history) in seen:
            continue
        seen.add((p, sigma, history))
        histories.add(history)
        for t in successors(p, sigma, MENU, DELTA):
            h = history
            if isinstance(t.label, Action):
                c_seen |= t.label.name == "c"
                h = history + (t.label.name,)
            stack.append((t.target, t.valuation, h))
    ok = not c_seen and histories == {(), ("a",), ("a", "b")}
    report(4, "eager choice", ok, f"states={len(seen)} action sequences={sorted(histories)}")


# 5 -------------------------------------------------------------------------


def test_criterion_05_enabled_actions_over_time():
    m = load("example2")
    [(bundle, _, _)] = time_successors(m.comp, initial_valuation(m), 2.0, DELTA)
    # x(s) = s, so the crossings are the roots of e^s = k
    low = bisect_root(lambda s: math.exp(s) - 2, 0.0, 2.0)
    high = bisect_root(lambda s: math.exp(s) - 4, 0.0, 2.0)
    exact = all(("b" in th) == (low < s < high) for s, th in zip(bundle.times, bundle.theta))
    a_always = all("a" in th for th in bundle.theta)
    b_times = [s for s, th in zip(bundle.times, bundle.theta) if "b" in th]
    near = abs(b_times[0] - low) <= DELTA and abs(b_times[-1] - high) <= DELTA
    report(
        5,
        "enabled actions over time",
        exact and a_always and near,
        f"b on [{b_times[0]:.5f}, {b_times[-1]:.5f}] vs (ln2={low:.5f}, ln4={high:.5f})",
    )


# 6 -------------------------------------------------------------------------


def test_criterion_06_flow_accuracy():
    rng = random.Random(2024)
    decls = load("thermostat").decls
    sigma = Valuation.initial(decls, {"T": 25})
    tcp = parse_expr("T' = -T + 15")
    worst = 0.0
    for _ in range(100):
        t = rng.uniform(0.0, 5.0)
        if t == 0.0:
            continue
        got = flow(sigma, tcp, t, t)[-1]["T"]
        ref = rk4(lambda T: -T + 15, 25.0, t, 1e-4)
        worst = max(worst, abs(got - ref) / abs(ref))
    report(6, "flow accuracy", worst <= 1e-6, f"max relative error={worst:.2e} over 100 points")


# 7 -------------------------------------------------------------------------


def test_criterion_07_congruence_sampling():
    preserved = 0
    for i in range(25):
        m = random_model(2000 + i)
        partner = random_partner(3000 + i)
        sync = random_sync(4000 + i)
        both = compose(m, sync, partner)
        cfg = GameConfig(depth=6, durations=MENU, delta=DELTA, initial=(initial_valuation(both),))
        ctx = ParallelContext(partner.comp, sync, hole_left=i % 2 == 0)
        # the pair is checked alone under the joint valuation first
        [verdict] = check_congruence_sample(m.comp, eliminate(m.comp), [ctx], cfg)
        preserved += bool(verdict)
    report(7, "congruence sampling", preserved == 25, f"preserved={preserved}/25")


# 8 -------------------------------------------------------------------------

OBSERVER = """
cont T
disc n
cont c
const Delta = 1
cont y

automaton Thermostat {
  location Off {
    init T = 25 and n = 0
    tcp T' = -T + 15
    edge T < 20 : switch-on : n+ = n + 1 -> On
  }
  location On {
    tcp T' = -T + 25
    sub automaton Clock {
      location Cold {
        init c = 0
        tcp c' = 1
        edge Delta <= c : done : true -> Hot
      }
      location Hot {
        term true
        edge true : again : c+ = 0 -> Cold
      }
    }
    edge n <= 1000 : switch-off : true -> Off
    edge n <= 1000 : reheat : c+ = 0 -> On
  }
}
||{switch-on}
automaton Observer {
  location Watch {
    init y = 0
    tcp y' = 1
    term true
    edge true : switch-on : true -> Watch
    edge true : tick : y+ = 0 -> Watch
  }
}
"""


def _explore(model, steps=8, width=60):
    frontier, seen = [(model.comp, initial_valuation(model))], set()
    for _ in range(steps):
        nxt = []
        for p, sigma in frontier:
            for t in successors(p, sigma, (0.5, 1.0), DELTA):
                key = (t.target, t.valuation)
                if key not in seen:
                    seen.add(key)
                    nxt.append(key)
        frontier = nxt[:width]


def test_criterion_08_rule_coverage():
    models = [load_text(OBSERVER), load("example1"), load("thermostat_hier")]
    models += [random_model(seed) for seed in range(5)]
    with record_rules() as fired:
        for m in models:
            _explore(m)
    missing = [r for r in RULES if fired[r] == 0]
    report(8, "rule coverage", not missing and len(RULES) == 16, f"fired={16 - len(missing)}/16 missing={missing}")


# 9 -------------------------------------------------------------------------


def _leaf(name, enabled, terminating, actions):
    edges = tuple(Edge("v", TRUE if a in enabled else FALSE, a, TRUE, "v") for a in actions)
    return Automaton(name, (Location("v", TRUE, TRUE, TRUE if terminating else FALSE),), edges)


def test_criterion_09_parallel_trajectory_laws():
    rng = random.Random(99)
    actions = ["a", "b", "c", "d", "e"]
    sigma = Valuation({})
    bad = 0
    for _ in range(1000):
        theta0 = {a for a in actions if rng.random() < 0.5}
        theta1 = {a for a in actions if rng.random() < 0.5}
        sync = frozenset(a for a in actions if rng.random() < 0.5)
        omega0, omega1 = rng.random() < 0.5, rng.random() < 0.5
        p = Parallel(_leaf("P", theta0, omega0, actions), sync, _leaf("Q", theta1, omega1, actions))
        [(bundle, _, _)] = time_successors(p, sigma, 0.0, DELTA)
        expected = {
            a
            for a in actions
            if (a in theta0 and a in theta1) or (a in theta0 and a not in sync) or (a in theta1 and a not in sync)
        }
        if bundle.theta[0] != expected or bundle.omega[0] != (omega0 and omega1):
            bad += 1
    report(9, "parallel trajectory laws", bad == 0, f"mismatches={bad}/1000")


# 10 ------------------------------------------------------------------------


def _cli(argv, capsys):
    code = cli_main([str(a) for a in argv])
    out, _ = capsys.readouterr()
    return code, out


def test_criterion_10_cli_contract(tmp_path, capsys):
    round_trip = all(parse(format_model(parse(p.read_text()))) == parse(p.read_text()) for p in BUNDLED)
    code_eq, _ = _cli(["bisim", model_path("thermostat_hier"), model_path("thermostat_flat")], capsys)
    mutant = tmp_path / "mutant.hcif"
    mutant.write_text(model_path("thermostat_flat").read_text().replace("n <= 1000", "n <= 0"))
    code_ne, _ = _cli(["bisim", model_path("thermostat_hier"), mutant], capsys)
    runs = [_cli(["simulate", model_path("thermostat_hier"), "--steps", "30", "--seed", "5"], capsys)[1] for _ in range(2)]
    records = [json.loads(line) for line in runs[0].splitlines()]
    chained = all(a["post"] == b["pre"] for a, b in zip(records, records[1:]))
    ok = round_trip and code_eq == 0 and code_ne == 2 and runs[0] == runs[1] and chained
    report(
        10,
        "CLI contract",
        ok,
        f"round-trip={len(BUNDLED)} models ok={round_trip} bisim exits=({code_eq}, {code_ne}) "
        f"deterministic={runs[0] == runs[1]} chained={chained}",
    )


class _Capture:
    """Stand-in for pytest's capsys when run as a script."""

    def __init__(self):
        self.buf = io.StringIO()

    def readouterr(self):
        out = self.buf.getvalue()
        self.buf.seek(0)
        self.buf.truncate()
        return out, ""


def run_all() -> int:
    failed = 0
    for name, check in sorted(globals().items()):
        if not name.startswith("test_criterion_"):
            continue
        try:
            if check is test_criterion_10_cli_contract:
                cap = _Capture()
                with tempfile.TemporaryDirectory() as tmp:
                    try:
                        with contextlib.redirect_stdout(cap.buf):
                            check(Path(tmp), cap)
                    finally:
                        print(RESULTS[-1])
            else:
                check()
        except AssertionError:
            failed += 1
    return failed


if __name__ == "__main__":
    sys.exit(1 if run_all() else 0)
