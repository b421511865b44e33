"""Exact checks of the efficiency and fairness axioms.

Every failing report carries a witness that can be re-checked by hand:
an agent, an ordered pair of agents, a step index or a dominating
assignment.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Iterator, List, Optional, Tuple, Union

from .engine import Policy, Trace, run_fttc
from .lp import maximize
from .model import (
    ZERO,
    Assignment,
    Dominance,
    Problem,
    WeakPreference,
    cumulative_profile,
    full_assignment,
    sd_compare,
)


@dataclass(frozen=True)
class AxiomReport:
    axiom: str
    holds: bool
    witness: Any = None
    detail: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _row(p, i):
    return p.get(i, {})


def check_ir(problem: Problem, p: Assignment) -> AxiomReport:
    for i in problem.agents:
        omega = problem.endowment_row(i)
        verdict = sd_compare(_row(p, i), omega, problem.preferences[i])
        if not verdict.weakly_dominates:
            return AxiomReport("ir", False, i, f"agent {i} prefers its endowment")
        if sum(_row(p, i).values(), ZERO) != sum(omega.values(), ZERO):
            return AxiomReport("ir", False, i, f"agent {i} total differs from its endowment")
    return AxiomReport("ir", True)


def dominating_assignment(problem: Problem, p: Assignment) -> Optional[Assignment]:
    """An assignment strictly sd-dominating ``p`` for the agents, or None.

    Solves an exact LP over alternative assignments q: every cumulative share
    of q must be at least that of p, q must be feasible, and the total
    cumulative gain is maximised.  ``p`` is sd-efficient iff the optimum
    gain is zero.
    """
    agents, objects = problem.agents, problem.objects
    m = len(objects)
    col = {(i, o): a * m + b for a, i in enumerate(agents) for b, o in enumerate(objects)}
    nvar = len(col)
    a_ub, b_ub = [], []
    objective = [ZERO] * nvar
    base = ZERO
    for i in agents:
        pref = problem.preferences[i]
        current = cumulative_profile(_row(p, i), pref)
        prefix: List[str] = []
        for cls_, level in zip(pref.classes, current):
            prefix.extend(cls_)
            row = [ZERO] * nvar
            for o in prefix:
                row[col[(i, o)]] = Fraction(-1)
                objective[col[(i, o)]] += 1
            a_ub.append(row)
            b_ub.append(-level)
            base += level
        row = [ZERO] * nvar
        for o in objects:
            row[col[(i, o)]] = Fraction(1)
        a_ub.append(row)
        b_ub.append(Fraction(1))
    for o in objects:
        row = [ZERO] * nvar
        for i in agents:
            row[col[(i, o)]] = Fraction(1)
        a_ub.append(row)
        b_ub.append(problem.quota(o))
    res = maximize(objective, a_ub, b_ub)
    if res.status != "optimal":
        # p itself is feasible and the objective is bounded by the supply
        raise ArithmeticError(f"dominance program is {res.status}")
    if res.value == base:
        return None
    return {i: {o: res.x[col[(i, o)]] for o in objects} for i in agents}


def check_sd_efficiency(problem: Problem, p: Assignment) -> AxiomReport:
    witness = dominating_assignment(problem, p)
    if witness is None:
        return AxiomReport("sd-efficiency", True)
    return AxiomReport("sd-efficiency", False, witness, "found a strictly dominating assignment")


def _mutual(problem, p, i, j) -> Optional[str]:
    if not sd_compare(_row(p, i), _row(p, j), problem.preferences[i]).weakly_dominates:
        return i
    if not sd_compare(_row(p, j), _row(p, i), problem.preferences[j]).weakly_dominates:
        return j
    return None


def _same_endowment(problem, i, j) -> bool:
    return problem.endowment_row(i) == problem.endowment_row(j)


def check_ete(problem: Problem, p: Assignment) -> AxiomReport:
    dense = full_assignment(problem, p)
    for i, j in itertools.combinations(problem.agents, 2):
        if (
            _same_endowment(problem, i, j)
            and problem.preferences[i] == problem.preferences[j]
            and dense[i] != dense[j]
        ):
            return AxiomReport("ete", False, (i, j), f"equals {i}, {j} get different lotteries")
    return AxiomReport("ete", True)


def check_eene(problem: Problem, p: Assignment) -> AxiomReport:
    for i, j in itertools.combinations(problem.agents, 2):
        if _same_endowment(problem, i, j):
            envious = _mutual(problem, p, i, j)
            if envious is not None:
                other = j if envious == i else i
                return AxiomReport("eene", False, (envious, other), f"{envious} envies {other}")
    return AxiomReport("eene", True)


def check_ef(problem: Problem, p: Assignment) -> AxiomReport:
    for i, j in itertools.combinations(problem.agents, 2):
        envious = _mutual(problem, p, i, j)
        if envious is not None:
            other = j if envious == i else i
            return AxiomReport("ef", False, (envious, other), f"{envious} envies {other}")
    return AxiomReport("ef", True)


def envy_amount(problem: Problem, p: Assignment, i: str, j: str) -> Fraction:
    """Largest cumulative shortfall of i's lottery against j's, in i's eyes."""
    pref = problem.preferences[i]
    mine = cumulative_profile(_row(p, i), pref)
    theirs = cumulative_profile(_row(p, j), pref)
    return max(t - m for t, m in zip(theirs, mine))


def endowment_advantage(problem: Problem, i: str, j: str) -> Fraction:
    """Total amount by which j's endowments exceed i's, object by object."""
    return sum(
        (max(problem.omega(j, o) - problem.omega(i, o), ZERO) for o in problem.objects), ZERO
    )


def check_be(problem: Problem, p: Assignment) -> AxiomReport:
    for i, j in itertools.permutations(problem.agents, 2):
        envy = envy_amount(problem, p, i, j)
        bound = endowment_advantage(problem, i, j)
        if envy > bound:
            return AxiomReport("be", False, (i, j), f"envy {envy} of {i} for {j} exceeds {bound}")
    return AxiomReport("be", True)


# -- stepwise parameter properties -------------------------------------------


def _ratio(params, i, o) -> Fraction:
    return params.ratio.get((i, o), ZERO)


def _after(trace: Trace, k: int, i: str, o: str) -> Fraction:
    """Endowment of (i, o) after step k."""
    rec = trace.steps[k]
    lam = _ratio(rec.params, i, o)
    return rec.state.endowments[i][o] - lam * rec.solution.object_volume.get(o, ZERO)


def check_stepwise(trace: Trace, prop: str, policy: Union[str, Policy, None] = None) -> AxiomReport:
    """Verify a per-step parameter property on every recorded step.

    ``prop`` is ``"stepwise-ete"``, ``"stepwise-eeet"`` or
    ``"bounded-advantage"``.  The witness is ``(step, i, j)`` or
    ``(step, i, j, object)``.  ``policy`` is only echoed in the report.
    """
    if prop not in ("stepwise-ete", "stepwise-eeet", "bounded-advantage"):
        raise ValueError(f"unknown stepwise property {prop!r}")
    detail = f"policy {policy}" if isinstance(policy, str) else ""
    for k, rec in enumerate(trace.steps):
        st, params = rec.state, rec.params
        agents = st.problem.agents
        for i, j in itertools.permutations(agents, 2):
            same = st.endowments[i] == st.endowments[j]
            if prop == "stepwise-ete":
                if (
                    same
                    and st.labels.get(i, frozenset()) == st.labels.get(j, frozenset())
                    and st.pointing.get(i) == st.pointing.get(j)
                    and any(_ratio(params, i, o) != _ratio(params, j, o) for o in st.available)
                ):
                    return AxiomReport(prop, False, (st.step, i, j), detail)
            elif prop == "stepwise-eeet":
                if same and any(
                    _ratio(params, i, o) != _ratio(params, j, o) for o in st.remaining
                ):
                    return AxiomReport(prop, False, (st.step, i, j), detail)
            else:
                for o in st.remaining:
                    if st.endowments[i][o] >= st.endowments[j][o] and (
                        _ratio(params, i, o) < _ratio(params, j, o)
                        or _after(trace, k, i, o) < _after(trace, k, j, o)
                    ):
                        return AxiomReport(prop, False, (st.step, i, j, o), detail)
    return AxiomReport(prop, True, detail=detail)


# -- manipulation --------------------------------------------------------------


def weak_orders(objects) -> Iterator[WeakPreference]:
    """Every weak order over ``objects`` (ordered set partitions)."""
    objects = list(objects)
    if not objects:
        yield WeakPreference(())
        return
    n = len(objects)
    for mask in range(1, 1 << n):
        first = frozenset(objects[b] for b in range(n) if mask >> b & 1)
        rest = [o for o in objects if o not in first]
        for tail in weak_orders(rest):
            yield WeakPreference((first,) + tail.classes)


class EnumerationBudgetExceeded(RuntimeError):
    pass


def find_manipulation(
    problem: Problem,
    policy: Union[str, Policy],
    mode: str,
    agent: str,
    max_objects: int = 4,
    reports: Optional[Iterable[WeakPreference]] = None,
) -> Optional[Tuple[WeakPreference, Dominance]]:
    """Search misreports of ``agent`` for a weak or strong manipulation.

    By default every weak order over the objects is tried; ``reports``
    restricts the search to a smaller domain (dichotomous reports, say).
    Returns ``(misreport, verdict)`` where the verdict compares the
    misreport outcome against the truthful one under the true preference.
    """
    if mode not in ("weak", "strong"):
        raise ValueError("mode must be 'weak' or 'strong'")
    if len(problem.objects) > max_objects:
        raise EnumerationBudgetExceeded(
            f"{len(problem.objects)} objects exceed the enumeration guard of {max_objects}"
        )
    truth = problem.preferences[agent]
    honest, _ = run_fttc(problem, policy)
    for report in weak_orders(problem.objects) if reports is None else reports:
        if report == truth:
            continue
        outcome, _ = run_fttc(problem.with_preference(agent, report), policy)
        gain = sd_compare(outcome[agent], honest[agent], truth)
        if mode == "strong" and gain is Dominance.STRICT:
            return report, gain
        if mode == "weak" and not sd_compare(honest[agent], outcome[agent], truth).weakly_dominates:
            return report, gain
    return None


AXIOMS = {
    "ir": check_ir,
    "sd-efficiency": check_sd_efficiency,
    "ete": check_ete,
    "eene": check_eene,
    "ef": check_ef,
    "be": check_be,
}
