"""Fractional top trading cycle on the full preference domain.

Each step runs three stages.  Labeling lets agents re-offer consumed shares
of exhausted objects that are tied with something still on the market;
pointing has every active agent point at its favourite available objects;
trading solves the step's balanced-trade system and updates endowments and
consumptions.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from .model import ZERO, Assignment, Problem
from .solver import TradeSolution, TradingGraph, max_balanced_solution

DEFAULT_STEP_BUDGET = 10_000


class FTTCError(RuntimeError):
    pass


class StepBudgetExceeded(FTTCError):
    def __init__(self, budget: int, trace: "Trace"):
        super().__init__(f"no termination within {budget} steps")
        self.budget = budget
        self.trace = trace


class NoProgress(FTTCError):
    def __init__(self, step: int, trace: "Trace"):
        super().__init__(f"step {step} traded nothing and nothing became unavailable")
        self.step = step
        self.trace = trace


class ParameterError(FTTCError):
    pass


@dataclass(frozen=True)
class StepState:
    """Market state entering step ``step`` (quantities indexed ``d-1``).

    The labeling and pointing fields stay empty until the matching stage
    has run on this state.
    """

    problem: Problem
    step: int
    remaining: FrozenSet[str]
    endowments: Mapping[str, Mapping[str, Fraction]]
    assignment: Mapping[str, Mapping[str, Fraction]]
    labels: Mapping[str, FrozenSet[str]] = field(default_factory=dict)
    label_rounds: Tuple[FrozenSet[str], ...] = ()
    label_layers: Tuple[FrozenSet[str], ...] = ()
    active: FrozenSet[str] = frozenset()
    pointing: Mapping[str, FrozenSet[str]] = field(default_factory=dict)
    pointing_rounds: Tuple[FrozenSet[str], ...] = ()

    @property
    def labeled(self) -> FrozenSet[str]:
        return frozenset().union(*self.label_layers) if self.label_layers else frozenset()

    @property
    def available(self) -> FrozenSet[str]:
        return self.remaining | self.labeled

    def holding(self, agent: str) -> Fraction:
        return sum(self.endowments[agent].values(), ZERO)


def initial_state(problem: Problem) -> StepState:
    omega = {i: dict(problem.endowment_row(i)) for i in problem.agents}
    p = {i: {o: ZERO for o in problem.objects} for i in problem.agents}
    remaining = frozenset(o for o in problem.objects if problem.quota(o) > 0)
    return StepState(problem, 1, remaining, omega, p)


# -- labeling and pointing -------------------------------------------------


def labeling_stage(state: StepState) -> StepState:
    problem = state.problem
    prefs = problem.preferences
    covered = set(state.remaining)
    frontier = frozenset(state.remaining)
    done: set = set()
    labels: Dict[str, FrozenSet[str]] = {}
    rounds: List[FrozenSet[str]] = []
    layers: List[FrozenSet[str]] = []
    while frontier:
        found: Dict[str, FrozenSet[str]] = {}
        for i in problem.agents:
            if i in done:
                continue
            pref = prefs[i]
            ranks = {pref.rank(o) for o in frontier}
            objs = frozenset(
                o
                for o in problem.objects
                if o not in covered and state.assignment[i][o] > 0 and pref.rank(o) in ranks
            )
            if objs:
                found[i] = objs
        if not found:
            break
        layer = frozenset().union(*found.values())
        labels.update(found)
        rounds.append(frozenset(found))
        layers.append(layer)
        done |= set(found)
        covered |= layer
        frontier = layer
    return replace(state, labels=labels, label_rounds=tuple(rounds), label_layers=tuple(layers))


def pointing_stage(state: StepState) -> StepState:
    problem = state.problem
    available = state.available
    active = frozenset(
        i for i in problem.agents if i in state.labels or state.holding(i) > 0
    )
    tiers = (state.remaining,) + state.label_layers
    pointing: Dict[str, FrozenSet[str]] = {}
    rounds: List[set] = [set() for _ in tiers]
    for i in problem.agents:
        if i not in active:
            continue
        fav = problem.preferences[i].favorites(available)
        for k, tier in enumerate(tiers):
            hit = fav & tier
            if hit:
                pointing[i] = hit
                rounds[k].add(i)
                break
        else:
            raise FTTCError(f"active agent {i} has nothing to point at")
    while rounds and not rounds[-1]:
        rounds.pop()
    return replace(
        state,
        active=active,
        pointing=pointing,
        pointing_rounds=tuple(frozenset(r) for r in rounds),
    )


# -- parameters --------------------------------------------------------------


@dataclass(frozen=True)
class ParameterSet:
    ratio: Mapping[Tuple[str, str], Fraction]  # lambda, over available objects
    quota: Mapping[Tuple[str, str], Fraction]  # beta, over remaining objects
    division: Mapping[Tuple[str, str], Fraction]  # gamma, over pointed objects


Policy = Callable[[StepState], ParameterSet]


def _labeled_ratio_and_division(state: StepState):
    ratio: Dict[Tuple[str, str], Fraction] = {}
    for o in state.labeled:
        labelers = [i for i in state.problem.agents if o in state.labels.get(i, ())]
        for i in labelers:
            ratio[(i, o)] = Fraction(1, len(labelers))
    division = {}
    for i, targets in state.pointing.items():
        for o in targets:
            division[(i, o)] = Fraction(1, len(targets))
    return ratio, division


def _owners(state: StepState, o: str) -> List[str]:
    return [i for i in state.problem.agents if state.endowments[i][o] > 0]


def equal_policy(state: StepState) -> ParameterSet:
    ratio, division = _labeled_ratio_and_division(state)
    quota = {}
    for o in state.remaining:
        owners = _owners(state, o)
        for i in owners:
            ratio[(i, o)] = Fraction(1, len(owners))
            quota[(i, o)] = state.endowments[i][o]
    return ParameterSet(ratio, quota, division)


def proportional_policy(state: StepState) -> ParameterSet:
    ratio, division = _labeled_ratio_and_division(state)
    quota = {}
    for o in state.remaining:
        owners = _owners(state, o)
        total = sum((state.endowments[i][o] for i in owners), ZERO)
        for i in owners:
            ratio[(i, o)] = state.endowments[i][o] / total
            quota[(i, o)] = state.endowments[i][o]
    return ParameterSet(ratio, quota, division)


def leveling_policy(state: StepState) -> ParameterSet:
    """Only the largest holders of an object trade it, and only down to the
    next holding level (zero if everyone holding it holds the same)."""
    ratio, division = _labeled_ratio_and_division(state)
    quota = {}
    for o in state.remaining:
        holdings = {i: state.endowments[i][o] for i in _owners(state, o)}
        top = max(holdings.values())
        below = [v for v in holdings.values() if v < top]
        gap = top - (max(below) if below else ZERO)
        leaders = [i for i, v in holdings.items() if v == top]
        for i in holdings:
            if holdings[i] == top:
                ratio[(i, o)] = Fraction(1, len(leaders))
                quota[(i, o)] = gap
            else:
                quota[(i, o)] = ZERO
    return ParameterSet(ratio, quota, division)


POLICIES: Dict[str, Policy] = {
    "equal": equal_policy,
    "proportional": proportional_policy,
    "leveling": leveling_policy,
}


def resolve_policy(policy: Union[str, Policy]) -> Policy:
    if callable(policy):
        return policy
    try:
        return POLICIES[policy]
    except KeyError:
        raise ValueError(f"unknown policy {policy!r}; choose from {sorted(POLICIES)}") from None


def parameter_violations(state: StepState, params: ParameterSet) -> List[str]:
    issues = []
    agents = state.active
    for o in state.available:
        col = {i: params.ratio.get((i, o), ZERO) for i in state.problem.agents}
        if sum(col.values(), ZERO) != 1:
            issues.append(f"ratio column of {o} does not sum to 1")
        for i, lam in col.items():
            if lam < 0:
                issues.append(f"negative ratio ({i}, {o})")
            elif lam > 0:
                if i not in agents:
                    issues.append(f"ratio on inactive agent {i} for {o}")
                elif o in state.remaining and state.endowments[i][o] <= 0:
                    issues.append(f"ratio ({i}, {o}) on a zero holding")
                elif o not in state.remaining and o not in state.labels.get(i, ()):
                    issues.append(f"ratio ({i}, {o}) on an unlabeled consumption")
    for (i, o), lam in params.ratio.items():
        if lam and o not in state.available:
            issues.append(f"ratio ({i}, {o}) on an unavailable object")
    for o in state.remaining:
        for i in agents:
            b = params.quota.get((i, o), ZERO)
            if not ZERO <= b <= state.endowments[i][o]:
                issues.append(f"quota ({i}, {o}) outside [0, endowment]")
    for i in agents:
        row = {o: params.division.get((i, o), ZERO) for o in state.available}
        if sum(row.values(), ZERO) != 1:
            issues.append(f"division row of {i} does not sum to 1")
        for o, g in row.items():
            if g < 0 or (g > 0 and o not in state.pointing[i]):
                issues.append(f"division ({i}, {o}) outside the pointed set")
    return issues


def make_parameters(policy: Union[str, Policy], state: StepState) -> ParameterSet:
    params = resolve_policy(policy)(state)
    issues = parameter_violations(state, params)
    if issues:
        raise ParameterError("; ".join(issues))
    return params


# -- trading -------------------------------------------------------------------


def build_trading_graph(state: StepState, params: ParameterSet) -> TradingGraph:
    agents = tuple(i for i in state.problem.agents if i in state.active)
    objects = tuple(o for o in state.problem.objects if o in state.available)
    supply = {(i, o): v for (i, o), v in params.ratio.items() if v and o in state.available}
    demand = {(i, o): v for (i, o), v in params.division.items() if v}
    graph = TradingGraph(agents, objects, demand, supply, state.labeled)
    graph.check()
    return graph


def build_caps(state: StepState, params: ParameterSet) -> Dict[Tuple[str, str], Fraction]:
    caps = {}
    for (i, o), lam in params.ratio.items():
        if not lam:
            continue
        if o in state.remaining:
            caps[(i, o)] = params.quota.get((i, o), ZERO)
        else:
            caps[(i, o)] = state.assignment[i][o]
    return caps


def trading_stage(
    state: StepState, params: ParameterSet, solution: Optional[TradeSolution] = None
) -> StepState:
    """Apply one step's trades and return the state entering the next step."""
    if solution is None:
        graph = build_trading_graph(state, params)
        solution = max_balanced_solution(graph, build_caps(state, params))
    problem = state.problem
    omega = {i: dict(row) for i, row in state.endowments.items()}
    p = {i: dict(row) for i, row in state.assignment.items()}
    xo = solution.object_volume
    for (i, o), lam in params.ratio.items():
        if not lam:
            continue
        if o in state.remaining:
            omega[i][o] -= lam * xo[o]
        elif o in state.labels.get(i, ()):
            p[i][o] -= lam * xo[o]
    for (i, o), g in params.division.items():
        if g:
            p[i][o] += g * solution.agent_volume[i]
    for i in problem.agents:
        for o in problem.objects:
            if omega[i][o] < 0 or p[i][o] < 0:
                raise FTTCError(f"step {state.step}: negative share for ({i}, {o})")
    remaining = frozenset(
        o for o in state.remaining if sum((omega[i][o] for i in problem.agents), ZERO) > 0
    )
    return StepState(problem, state.step + 1, remaining, omega, p)


# -- the mechanism ---------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    state: StepState  # after labeling and pointing
    params: ParameterSet
    solution: TradeSolution
    exhausted: FrozenSet[str]


@dataclass
class Trace:
    steps: List[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def availability(self) -> List[FrozenSet[str]]:
        """Available sets entering each step, then the empty final set."""
        return [r.state.available for r in self.steps] + [frozenset()]


def default_step_budget() -> int:
    raw = os.environ.get("FTTC_STEP_BUDGET")
    return int(raw) if raw else DEFAULT_STEP_BUDGET


def run_fttc(
    problem: Problem,
    policy: Union[str, Policy] = "equal",
    step_budget: Optional[int] = None,
) -> Tuple[Assignment, Trace]:
    budget = default_step_budget() if step_budget is None else step_budget
    policy_fn = resolve_policy(policy)
    trace = Trace()
    state = initial_state(problem)
    while state.remaining:
        if len(trace) >= budget:
            raise StepBudgetExceeded(budget, trace)
        state = pointing_stage(labeling_stage(state))
        params = make_parameters(policy_fn, state)
        graph = build_trading_graph(state, params)
        solution = max_balanced_solution(graph, build_caps(state, params))
        nxt = trading_stage(state, params, solution)
        trace.steps.append(StepRecord(state, params, solution, state.remaining - nxt.remaining))
        if solution.is_zero():
            raise NoProgress(state.step, trace)
        state = nxt
    return {i: dict(row) for i, row in state.assignment.items()}, trace


def replay(problem: Problem, trace: Trace) -> Assignment:
    """Re-apply the recorded trades from scratch."""
    state = initial_state(problem)
    for rec in trace.steps:
        staged = replace(
            rec.state,
            endowments=state.endowments,
            assignment=state.assignment,
            remaining=state.remaining,
        )
        state = trading_stage(staged, rec.params, rec.solution)
    return {i: dict(row) for i, row in state.assignment.items()}
