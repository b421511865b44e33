"""House allocation: eating view, dichotomous egalitarian solution, Random Priority."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Sequence, Tuple, Union

from .engine import (
    Policy,
    StepState,
    Trace,
    initial_state,
    labeling_stage,
    make_parameters,
    pointing_stage,
    resolve_policy,
)
from .lp import SingularSystem, solve_linear
from .model import ZERO, Assignment, Problem, WeakPreference

NULL_OBJECT = "null"


class ShapeError(ValueError):
    """The instance does not have the shape an operation requires."""


@dataclass(frozen=True)
class DichotomousProblem:
    agents: Tuple[str, ...]
    objects: Tuple[str, ...]
    acceptable: Mapping[str, FrozenSet[str]]

    @classmethod
    def build(cls, acceptable: Mapping[str, Sequence[str]], objects: Sequence[str] = None):
        agents = tuple(acceptable)
        if objects is None:
            objects = sorted(set().union(*map(set, acceptable.values())))
        return cls(agents, tuple(objects), {i: frozenset(c) for i, c in acceptable.items()})

    @classmethod
    def from_problem(cls, problem: Problem) -> "DichotomousProblem":
        """Read a problem whose preferences have at most two classes;
        the first class is the acceptable set."""
        acc = {}
        for i in problem.agents:
            classes = problem.preferences[i].classes
            if len(classes) > 2:
                raise ShapeError(f"agent {i}: {len(classes)} preference classes, expected two")
            acc[i] = classes[0] if classes else frozenset()
        return cls(problem.agents, problem.objects, acc)

    def violations(self) -> List[str]:
        issues = []
        if gamma_set(self.agents, self.objects, self) != frozenset(self.objects):
            issues.append("some object is acceptable to nobody")
        objs = list(self.objects)
        for r in range(1, len(objs) + 1):
            for sub in itertools.combinations(objs, r):
                wanting = [i for i in self.agents if self.acceptable[i] & set(sub)]
                if len(wanting) <= len(sub):
                    issues.append(f"no shortage on {sorted(sub)}: {len(wanting)} agents")
        return issues


def gamma_set(agents, objects, problem: DichotomousProblem) -> FrozenSet[str]:
    """Objects among ``objects`` acceptable to at least one of ``agents``."""
    acc = frozenset().union(*(problem.acceptable[i] for i in agents)) if agents else frozenset()
    return acc & frozenset(objects)


@dataclass(frozen=True)
class Bottleneck:
    agents: FrozenSet[str]
    objects: FrozenSet[str]
    welfare: Fraction


def egalitarian_solution(
    problem: DichotomousProblem,
) -> Tuple[List[Bottleneck], Dict[str, Fraction]]:
    """Bottleneck sequence by exhaustive subset search, and the welfare profile.

    At each stage the minimising set of largest cardinality is the union of
    all minimisers.
    """
    issues = problem.violations()
    if issues:
        raise ShapeError("; ".join(issues))
    left = [i for i in problem.agents]
    pool = frozenset(problem.objects)
    seq: List[Bottleneck] = []
    while left:
        best, members = None, set()
        for r in range(1, len(left) + 1):
            for ys in itertools.combinations(left, r):
                ratio = Fraction(len(gamma_set(ys, pool, problem)), len(ys))
                if best is None or ratio < best:
                    best, members = ratio, set(ys)
                elif ratio == best:
                    members |= set(ys)
        group = frozenset(members)
        taken = gamma_set(group, pool, problem)
        seq.append(Bottleneck(group, taken, best))
        left = [i for i in left if i not in group]
        pool = pool - taken
    welfare = {i: b.welfare for b in seq for i in b.agents}
    return seq, welfare


def null_name(objects: Sequence[str]) -> str:
    name = NULL_OBJECT
    while name in objects:
        name = "_" + name
    return name


def to_exchange_problem(problem: DichotomousProblem) -> Problem:
    """House allocation with a null object padding supply to |I| units.

    Every agent owns 1/|I| of each real object and (|I|-|O|)/|I| of the null
    object.  Preferences stay dichotomous: acceptable objects form the top
    class, the null object joins the unacceptable ones.
    """
    n, m = len(problem.agents), len(problem.objects)
    if m > n:
        raise ShapeError("more objects than agents")
    null = null_name(problem.objects)
    objects = problem.objects + ((null,) if n > m else ())
    share = Fraction(1, n)
    omega = {i: {o: share for o in problem.objects} for i in problem.agents}
    if n > m:
        for i in problem.agents:
            omega[i][null] = Fraction(n - m, n)
    prefs = {}
    for i in problem.agents:
        acc = [o for o in objects if o in problem.acceptable[i]]
        rest = [o for o in objects if o not in problem.acceptable[i]]
        classes = [c for c in (acc, rest) if c]
        prefs[i] = WeakPreference.from_lists(classes)
    return Problem.build(problem.agents, objects, omega, prefs)


def welfare_of(problem: DichotomousProblem, p: Assignment) -> Dict[str, Fraction]:
    return {
        i: sum((p[i].get(o, ZERO) for o in problem.acceptable[i]), ZERO) for i in problem.agents
    }


def shrink_events(trace: Trace, objects: Sequence[str]) -> List[Tuple[int, FrozenSet[str]]]:
    """Steps after which some of ``objects`` leave the available set for good,
    with the objects that leave."""
    avail = trace.availability()
    keep = frozenset(objects)
    out = []
    for k in range(len(trace)):
        gone = (avail[k] - avail[k + 1]) & keep
        if gone:
            out.append((trace.steps[k].state.step, gone))
    return out


# -- Random Priority -------------------------------------------------------


def maximum_matchings(problem: DichotomousProblem) -> List[Dict[str, str]]:
    """All maximum-cardinality matchings of agents to acceptable objects."""
    agents = list(problem.agents)
    found: List[Dict[str, str]] = []
    best = 0

    def extend(k: int, used: set, current: Dict[str, str]):
        nonlocal best
        # prune: even matching everyone left cannot reach the best size
        if len(current) + min(len(agents) - k, len(problem.objects) - len(used)) < best:
            return
        if k == len(agents):
            if len(current) > best:
                best = len(current)
                found.clear()
            found.append(dict(current))
            return
        i = agents[k]
        for o in problem.objects:
            if o in problem.acceptable[i] and o not in used:
                current[i] = o
                used.add(o)
                extend(k + 1, used, current)
                used.discard(o)
                del current[i]
        extend(k + 1, used, current)

    extend(0, set(), {})
    return [m for m in found if len(m) == best]


def run_rp(problem: DichotomousProblem, max_agents: int = 8) -> Assignment:
    """Exact expected Random Priority assignment.

    Starts from all maximum matchings; along each ordering every agent keeps
    the matchings that match it, if any.  Survivors are averaged uniformly,
    then orderings are averaged uniformly.
    """
    if len(problem.agents) > max_agents:
        raise ShapeError(f"{len(problem.agents)} agents exceed the enumeration guard {max_agents}")
    matchings = maximum_matchings(problem)
    total = {i: {o: ZERO for o in problem.objects} for i in problem.agents}
    orders = math.factorial(len(problem.agents))
    for order in itertools.permutations(problem.agents):
        pool = matchings
        for i in order:
            mine = [m for m in pool if i in m]
            if mine:
                pool = mine
        weight = Fraction(1, orders * len(pool))
        for m in pool:
            for i, o in m.items():
                total[i][o] += weight
    return total


# -- simultaneous eating ---------------------------------------------------------


@dataclass
class EatingSchedule:
    breakpoints: List[Fraction] = field(default_factory=list)
    rates: List[Dict[str, Fraction]] = field(default_factory=list)


def _house_shape(problem: Problem) -> None:
    n = len(problem.agents)
    if len(problem.objects) != n:
        raise ShapeError("house allocation needs as many objects as agents")
    share = Fraction(1, n)
    for i in problem.agents:
        for o in problem.objects:
            if problem.omega(i, o) != share:
                raise ShapeError(f"agent {i} does not own 1/{n} of {o}")


def eating_rates(state: StepState, params) -> Dict[str, Fraction]:
    """Solve s_i = 1 + sum over i's labeled objects o of lambda_io times the
    total rate at which o is being eaten."""
    agents = sorted(state.active, key=state.problem.agents.index)
    index = {i: k for k, i in enumerate(agents)}
    n = len(agents)
    a = [[Fraction(int(r == c)) for c in range(n)] for r in range(n)]
    for i in agents:
        for o in state.labels.get(i, ()):
            lam = params.ratio.get((i, o), ZERO)
            for j in agents:
                g = params.division.get((j, o), ZERO)
                if g:
                    a[index[i]][index[j]] -= lam * g
    try:
        s = solve_linear(a, [Fraction(1)] * n)
    except SingularSystem:
        raise AssertionError("eating-rate system is singular") from None
    return dict(zip(agents, s))


def run_eating(
    problem: Problem, policy: Union[str, Policy] = "equal", with_schedule: bool = False
):
    """Continuous-time eating view of a stepwise equal-endowment policy.

    Everyone eats favourite available objects at base rate one; an agent
    whose labeled consumption is being eaten speeds up by the rate at which
    it disappears.  Time advances from breakpoint to breakpoint, where a
    remaining object or a labeled stock runs out.
    """
    _house_shape(problem)
    policy_fn = resolve_policy(policy)
    state = initial_state(problem)
    omega = {i: dict(r) for i, r in state.endowments.items()}
    p = {i: dict(r) for i, r in state.assignment.items()}
    remaining = set(state.remaining)
    t = ZERO
    schedule = EatingSchedule()
    n = len(problem.agents)
    while remaining:
        st = pointing_stage(
            labeling_stage(StepState(problem, 0, frozenset(remaining), omega, p))
        )
        params = make_parameters(policy_fn, st)
        for o in remaining:
            for i in problem.agents:
                assert params.ratio.get((i, o), ZERO) == Fraction(1, n), "ratios must be equal"
        rates = eating_rates(st, params)
        eaten = {o: ZERO for o in st.available}
        for (j, o), g in params.division.items():
            eaten[o] += g * rates[j]
        horizon = []
        for o in remaining:
            if eaten[o]:
                supply = sum((omega[i][o] for i in problem.agents), ZERO)
                horizon.append(supply / eaten[o])
        for i, objs in st.labels.items():
            for o in objs:
                if eaten[o]:
                    horizon.append(p[i][o] / (params.ratio[(i, o)] * eaten[o]))
        dt = min(horizon)
        for (i, o), lam in params.ratio.items():
            if o in remaining:
                omega[i][o] -= lam * eaten[o] * dt
            else:
                p[i][o] -= lam * eaten[o] * dt
        for (j, o), g in params.division.items():
            p[j][o] += g * rates[j] * dt
        t += dt
        schedule.breakpoints.append(t)
        schedule.rates.append(rates)
        remaining = {o for o in remaining if sum((omega[i][o] for i in problem.agents), ZERO) > 0}
    assert t == 1, f"eating ended at {t}"
    return (p, schedule) if with_schedule else p
