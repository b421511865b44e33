import itertools
import random
from fractions import Fraction as F

import pytest

from fttc.axioms import (
    EnumerationBudgetExceeded,
    check_be,
    check_ef,
    check_eene,
    check_ete,
    check_ir,
    check_sd_efficiency,
    check_stepwise,
    dominating_assignment,
    envy_amount,
    endowment_advantage,
    find_manipulation,
    weak_orders,
)
from fttc.engine import ParameterSet, equal_policy, run_fttc
from fttc.house import DichotomousProblem, to_exchange_problem
from fttc.model import Dominance, Problem, WeakPreference, equal_division, parse_problem, sd_compare

from helpers import (
    INSTANCES,
    brute_dominates,
    dense,
    random_dichotomous,
    random_weak_order,
)


def load(name):
    return parse_problem((INSTANCES / name).read_bytes())


def test_example1_output_is_fair_and_efficient():
    problem = load("example1.json")
    p, _ = run_fttc(problem)
    for check in (check_ir, check_sd_efficiency, check_ef, check_eene, check_ete, check_be):
        assert check(problem, p).holds


def test_endowment_is_ir():
    problem = load("example1.json")
    omega = {i: problem.endowment_row(i) for i in problem.agents}
    assert check_ir(problem, omega)


def test_ir_failure_witness():
    problem = Problem.build(
        ["i", "j"], ["a", "b"], {"i": {"a": 1}, "j": {"b": 1}}, {"i": [["a"], ["b"]], "j": [["a"], ["b"]]}
    )
    rep = check_ir(problem, {"i": {"b": F(1)}, "j": {"a": F(1)}})
    assert not rep.holds and rep.witness == "i"


def test_intro_no_trade_is_dominated():
    problem = load("intro.json")
    keep = {i: problem.endowment_row(i) for i in problem.agents}
    rep = check_sd_efficiency(problem, keep)
    assert not rep.holds
    assert dense(problem, rep.witness) == {"i": {"a": 0, "b": 1}, "j": {"a": 1, "b": 0}}


def test_single_agent_top_class():
    problem = Problem.build(["x"], ["a", "b"], {"x": {"b": 1}}, {"x": [["a", "b"]]})
    assert check_sd_efficiency(problem, {"x": {"a": F(0), "b": F(1)}})


def grid_assignments(problem, d):
    cells = list(itertools.product(problem.agents, problem.objects))
    for values in itertools.product(range(d + 1), repeat=len(cells)):
        q = dict(zip(cells, values))
        if any(sum(q[(i, o)] for o in problem.objects) > d for i in problem.agents):
            continue
        if any(sum(q[(i, o)] for i in problem.agents) > problem.quota(o) * d for o in problem.objects):
            continue
        yield {i: {o: F(q[(i, o)], d) for o in problem.objects} for i in problem.agents}


@pytest.mark.parametrize("n, d, samples", [(2, 4, 120), (3, 2, 4)])
def test_sd_efficiency_matches_grid_search(n, d, samples):
    rng = random.Random(n * 100 + d)
    agents = [f"i{k}" for k in range(n)]
    objects = [f"o{k}" for k in range(n)]
    for _ in range(samples):
        prefs = {i: random_weak_order(rng, objects) for i in agents}
        problem = equal_division(agents, objects, prefs)
        p = rng.choice(list(grid_assignments(problem, d)))
        lp = dominating_assignment(problem, p)
        brute = brute_dominates(problem, p, d)
        assert (lp is None) == (brute is None)
        if lp is not None:
            verdicts = [sd_compare(lp[i], p[i], prefs[i]) for i in agents]
            assert all(v.weakly_dominates for v in verdicts)
            assert Dominance.STRICT in verdicts


def test_ete_and_ef_witnesses():
    problem = equal_division(["x", "y"], ["a", "b"], {"x": [["a"], ["b"]], "y": [["a"], ["b"]]})
    p = {"x": {"a": F(1), "b": F(0)}, "y": {"a": F(0), "b": F(1)}}
    assert check_ete(problem, p).witness == ("x", "y")
    assert check_ef(problem, p).witness == ("y", "x")
    assert check_eene(problem, p).witness == ("y", "x")
    half = {i: {"a": F(1, 2), "b": F(1, 2)} for i in "xy"}
    assert check_ete(problem, half) and check_ef(problem, half)


def test_be_hand_instance():
    # j owns the whole of a, i owns nothing
    problem = Problem.build(["i", "j"], ["a"], {"j": {"a": 1}}, {"i": [["a"]], "j": [["a"]]})
    keep = {"i": {"a": F(0)}, "j": {"a": F(1)}}
    assert envy_amount(problem, keep, "i", "j") == 1
    assert endowment_advantage(problem, "i", "j") == 1
    assert endowment_advantage(problem, "j", "i") == 0
    assert check_be(problem, keep)
    swapped = {"i": {"a": F(1)}, "j": {"a": F(0)}}
    rep = check_be(problem, swapped)
    assert not rep.holds and rep.witness == ("j", "i")


def test_stepwise_properties_of_shipped_policies():
    problem = load("example1.json")
    for policy in ("equal", "proportional", "leveling"):
        _, trace = run_fttc(problem, policy)
        for prop in ("stepwise-ete", "stepwise-eeet", "bounded-advantage"):
            assert check_stepwise(trace, prop, policy)


def test_adversarial_policy_breaks_stepwise_ete():
    problem = equal_division(["x", "y", "z"], ["a", "b", "c"], {i: [["a"], ["b"], ["c"]] for i in "xyz"})

    def favour_x(state):
        params = equal_policy(state)
        ratio = dict(params.ratio)
        for o in state.remaining:
            if any(state.endowments[i][o] == 0 for i in "xyz"):
                continue
            ratio[("x", o)] = F(1, 2)
            ratio[("y", o)] = F(1, 4)
            ratio[("z", o)] = F(1, 4)
        return ParameterSet(ratio, params.quota, params.division)

    _, trace = run_fttc(problem, favour_x)
    rep = check_stepwise(trace, "stepwise-ete")
    assert not rep.holds and rep.witness == (1, "x", "y")
    assert not check_stepwise(trace, "stepwise-eeet")


def test_weak_orders_count():
    # ordered Bell numbers
    assert [sum(1 for _ in weak_orders(range(k))) for k in range(5)] == [1, 1, 3, 13, 75]


def test_manipulation_guard_and_trivial_cases():
    single = Problem.build(["x"], ["a"], {"x": {"a": 1}}, {"x": [["a"]]})
    assert find_manipulation(single, "equal", "strong", "x") is None
    big = equal_division(list("12345"), list("abcde"), {i: [list("abcde")] for i in "12345"})
    with pytest.raises(EnumerationBudgetExceeded):
        find_manipulation(big, "equal", "weak", "1")


def dichotomous_reports(problem):
    """Every two-class report over the real objects, null kept unacceptable."""
    null = problem.objects[-1]
    real = [o for o in problem.objects if o != null]
    for r in range(1, len(real) + 1):
        for acc in itertools.combinations(real, r):
            rest = [o for o in real if o not in acc] + [null]
            yield WeakPreference.from_lists([list(acc), rest])


def test_no_strong_manipulation_on_dichotomous_instances():
    rng = random.Random(21)
    checked = 0
    while checked < 12:
        dp = random_dichotomous(rng, max_agents=5)
        if len(dp.agents) == len(dp.objects) or len(dp.objects) > 3:
            continue
        problem = to_exchange_problem(dp)
        for i in problem.agents:
            reports = list(dichotomous_reports(problem))
            assert find_manipulation(problem, "equal", "strong", i, reports=reports) is None
        checked += 1


def test_full_domain_misreport_can_manipulate_dichotomous_instance():
    # ranking o0 strictly above o1 lifts i1 from 1/2 to 2/3 acceptable mass
    dp = DichotomousProblem.build(
        {"i0": ["o0"], "i1": ["o0", "o1"], "i2": ["o0"], "i3": ["o1"]}, ["o0", "o1"]
    )
    problem = to_exchange_problem(dp)
    report, verdict = find_manipulation(problem, "equal", "strong", "i1")
    assert verdict is Dominance.STRICT
    assert report == WeakPreference.from_lists([["o0"], ["o1"], ["null"]])
    p, _ = run_fttc(problem.with_preference("i1", report))
    assert p["i1"]["o0"] + p["i1"]["o1"] == F(2, 3)
    dichotomous = list(dichotomous_reports(problem))
    assert find_manipulation(problem, "equal", "strong", "i1", reports=dichotomous) is None


def test_full_domain_finder_runs():
    problem = load("example1.json")
    for i in problem.agents:
        found = find_manipulation(problem, "equal", "weak", i)
        assert found is None or isinstance(found[1], Dominance)
