import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from hcif.errors import InconsistentDynamicsError, UnboundVariableError, UnsupportedResetError
from hcif.expr import TRUE
from hcif.model import VarDecl
from hcif.predicates import Valuation, flow, flow_spec, sample_count, satisfies, solve_reset, stepped
from hcif.syntax import parse_expr

from oracles import rk4

DECLS = (VarDecl("T", "continuous"), VarDecl("n", "discrete"), VarDecl("c", "continuous"))


def val(**values):
    return Valuation.initial(DECLS, values)


def test_satisfies_thermostat_conditions():
    assert satisfies(val(T=25), parse_expr("T = 25"))
    assert not satisfies(val(T=25), parse_expr("T < 20"))
    assert not satisfies(val(n=1001), parse_expr("n <= 1000"))


def test_satisfies_unbound_variable():
    with pytest.raises(UnboundVariableError, match="unbound variable"):
        satisfies(val(), parse_expr("z = 1"))


def test_stepped_renames_every_key():
    assert stepped({"T": 25}) == {"T+": 25}
    assert stepped({}) == {}
    assert stepped({"n": 0, "n'": 0}) == {"n+": 0, "n'+": 0}


def test_valuation_discrete_dotted_is_zero():
    s = val(T=3, n=4)
    assert s["n'"] == 0.0 and s["T'"] == 0.0
    with pytest.raises(KeyError):
        val(zz=1)


def test_solve_reset_functional_assignments():
    sigma = val(n=5, T=20)
    (post,) = solve_reset(sigma, parse_expr("n+ = n + 1"))
    assert post["n"] == 6 and post["T"] == 20
    assert solve_reset(sigma, TRUE) == (sigma,)


def test_solve_reset_two_variables():
    decls = (VarDecl("x", "discrete"), VarDecl("y", "discrete"))
    sigma = Valuation.initial(decls, {"x": 3})
    r = parse_expr("x+ = x and y+ = 2 * x")
    (post,) = solve_reset(sigma, r)
    assert post["x"] == 3 and post["y"] == 6
    # independent check: σ ∪ σ'+ ⊨ r
    assert satisfies({**sigma.raw, **stepped(post.raw)}, r)


def test_solve_reset_contradiction_and_unsupported():
    sigma = val(n=1)
    assert solve_reset(sigma, parse_expr("n+ = 1 and n+ = 2")) == ()
    assert solve_reset(sigma, parse_expr("n+ = 1 and n = 0")) == ()
    with pytest.raises(UnsupportedResetError, match="unsupported reset form"):
        solve_reset(sigma, parse_expr("n+ > 1"))
    with pytest.raises(UnsupportedResetError):
        solve_reset(sigma, parse_expr("n+ = 1 or T+ = 2"))


@settings(max_examples=200, deadline=None)
@given(
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.sampled_from(["n+ = n + 1", "T+ = 2 * T - n", "n+ = T and T+ = n", "true", "c+ = 0 and n+ = n"]),
)
def test_reset_outputs_satisfy_the_reset(n, t, text):
    sigma = val(n=n, T=t)
    r = parse_expr(text)
    for post in solve_reset(sigma, r):
        assert satisfies({**sigma.raw, **stepped(post.raw)}, r)


# -- flows ---------------------------------------------------------------------


def test_flow_thermostat_closed_form():
    rho = flow(val(T=25), parse_expr("T' = -T + 15"), 1.0, 2**-5)
    assert len(rho) == 33
    assert rho[0] == val(T=25)
    for k, r in enumerate(rho):
        s = k * 2**-5
        assert r["T"] == pytest.approx(15 + 10 * math.exp(-s), rel=1e-12)
    assert rho[-1]["T"] == pytest.approx(18.6788, abs=1e-4)
    # dotted values follow the ODE along the trajectory
    assert rho[-1]["T'"] == pytest.approx(-rho[-1]["T"] + 15, rel=1e-12)


def test_flow_zero_duration_is_single_sample():
    sigma = val(T=25)
    assert flow(sigma, parse_expr("T' = -T + 15 and T < 0"), 0.0, 2**-5) == (sigma,)


def test_flow_clock():
    rho = flow(val(c=0), parse_expr("c' = 1"), 2.0, 0.5)
    assert [r["c"] for r in rho] == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_flow_discrete_and_unconstrained_are_frozen():
    rho = flow(val(T=3, n=2, c=1), parse_expr("T' = 2"), 1.0, 0.25)
    assert all(r["n"] == 2 and r["n'"] == 0 for r in rho)
    assert all(r["c"] == 1 and r["c'"] == 0 for r in rho)


def test_flow_constraints_on_half_open_interval():
    # T reaches 17 exactly at s = 1; the last sample is not checked
    tcp = parse_expr("T' = 1 and T < 17")
    assert flow(val(T=16), tcp, 1.0, 0.25) is not None
    assert flow(val(T=16), tcp, 1.25, 0.25) is None


def test_flow_rejects_off_grid_durations():
    with pytest.raises(ValueError):
        flow(val(), TRUE, 0.3, 0.25)
    with pytest.raises(ValueError):
        sample_count(-1.0, 0.25)


def test_inconsistent_dynamics():
    with pytest.raises(InconsistentDynamicsError):
        flow_spec(parse_expr("T' = 1 and T' = 2"), ["T"])
    # the same equation twice is fine
    flow_spec(parse_expr("T' = 1 and 1 = T'"), ["T"])


@settings(max_examples=60, deadline=None)
@given(
    st.fractions(min_value=-2, max_value=2, max_denominator=4),
    st.fractions(min_value=-5, max_value=5, max_denominator=4),
    st.floats(min_value=-10, max_value=10),
    st.integers(min_value=1, max_value=40),
)
def test_flow_matches_rk4(a, b, x0, steps):
    decls = (VarDecl("x", "continuous"),)
    sigma = Valuation.initial(decls, {"x": x0})
    tcp = parse_expr(f"x' = ({a.numerator}/{a.denominator}) * x + ({b.numerator}/{b.denominator})")
    delta = 0.25
    rho = flow(sigma, tcp, steps * delta, delta)
    t = steps * delta
    expected = rk4(lambda x: float(a) * x + float(b), x0, t, 1e-3)
    got = rho[-1]["x"]
    assert abs(got - expected) <= 1e-6 * max(1.0, abs(expected))


def test_flow_at_arbitrary_times_agrees_with_rk4():
    # a single step of length t lands the last sample exactly on t
    rng = random.Random(7)
    tcp = parse_expr("T' = -T + 15")
    for _ in range(10):
        t = rng.uniform(0.01, 5)
        rho = flow(val(T=25), tcp, t, t)
        expected = rk4(lambda T: -T + 15, 25.0, t, 1e-4)
        assert abs(rho[-1]["T"] - expected) <= 1e-6 * abs(expected)
