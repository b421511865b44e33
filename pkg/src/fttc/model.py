"""Domain types for fractional endowment exchange problems.

Every quantity is an exact :class:`fractions.Fraction`.  Assignments and
lotteries are plain dictionaries (``agent -> object -> share`` and
``object -> share``); a missing entry means zero.
"""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

Lottery = Mapping[str, Fraction]
Assignment = Dict[str, Dict[str, Fraction]]

ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_RE = re.compile(r"-?\d+(/\d+)?\Z")


class ProblemFormatError(ValueError):
    """Raised when a problem file cannot be parsed."""


def parse_rational(value) -> Fraction:
    """Parse a canonical ``"num/den"`` string or a bare integer.

    Non-canonical spellings such as ``"2/4"``, ``"3/1"`` or ``"01"`` are
    rejected so that serialisation round-trips byte for byte.
    """
    if isinstance(value, bool):
        raise ProblemFormatError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if not isinstance(value, str) or not _RATIONAL_RE.match(value):
        raise ProblemFormatError(f"not a rational: {value!r}")
    try:
        frac = Fraction(value)
    except ZeroDivisionError:
        raise ProblemFormatError(f"zero denominator: {value!r}") from None
    if format_rational(frac) != value:
        raise ProblemFormatError(f"non-canonical rational: {value!r}")
    return frac


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class WeakPreference:
    """A weak order over objects, given as indifference classes best first."""

    classes: Tuple[frozenset, ...]

    @classmethod
    def from_lists(cls, classes: Iterable[Iterable[str]]) -> "WeakPreference":
        return cls(tuple(frozenset(c) for c in classes))

    @classmethod
    def strict(cls, order: Iterable[str]) -> "WeakPreference":
        return cls(tuple(frozenset([o]) for o in order))

    def rank(self, obj: str) -> int:
        for k, cls_ in enumerate(self.classes):
            if obj in cls_:
                return k
        raise KeyError(f"unknown object {obj!r}")

    def indifferent(self, a: str, b: str) -> bool:
        return self.rank(a) == self.rank(b)

    def prefers(self, a: str, b: str) -> bool:
        """Strict preference of ``a`` over ``b``."""
        return self.rank(a) < self.rank(b)

    def favorites(self, among: Iterable[str]) -> frozenset:
        among = list(among)
        if not among:
            return frozenset()
        best = min(self.rank(o) for o in among)
        return frozenset(o for o in among if self.rank(o) == best)

    def objects(self) -> frozenset:
        return frozenset().union(*self.classes) if self.classes else frozenset()

    def as_lists(self, order: Sequence[str] | None = None) -> List[List[str]]:
        key = {o: k for k, o in enumerate(order)} if order is not None else None
        return [sorted(c, key=key.get if key else None) for c in self.classes]

    def is_strict(self) -> bool:
        return all(len(c) == 1 for c in self.classes)


@dataclass(frozen=True)
class Problem:
    agents: Tuple[str, ...]
    objects: Tuple[str, ...]
    endowments: Mapping[str, Mapping[str, Fraction]]
    preferences: Mapping[str, WeakPreference]

    @classmethod
    def build(cls, agents, objects, endowments, preferences) -> "Problem":
        """Normalise loose inputs: fills missing endowments with zero and
        accepts preferences as lists of classes."""
        agents = tuple(agents)
        objects = tuple(objects)
        omega = {
            i: {o: Fraction(endowments.get(i, {}).get(o, 0)) for o in objects}
            for i in agents
        }
        prefs = {
            i: p if isinstance(p, WeakPreference) else WeakPreference.from_lists(p)
            for i, p in preferences.items()
        }
        return cls(agents, objects, omega, prefs)

    def omega(self, agent: str, obj: str) -> Fraction:
        return self.endowments.get(agent, {}).get(obj, ZERO)

    def quota(self, obj: str) -> Fraction:
        return sum((self.omega(i, obj) for i in self.agents), ZERO)

    def with_preference(self, agent: str, pref: WeakPreference) -> "Problem":
        prefs = dict(self.preferences)
        prefs[agent] = pref
        return Problem(self.agents, self.objects, self.endowments, prefs)

    def endowment_row(self, agent: str) -> Dict[str, Fraction]:
        return {o: self.omega(agent, o) for o in self.objects}


def equal_division(agents, objects, preferences) -> Problem:
    """House allocation as an exchange problem: everyone owns 1/|I| of each object."""
    share = Fraction(1, len(agents))
    omega = {i: {o: share for o in objects} for i in agents}
    return Problem.build(agents, objects, omega, preferences)


def validate_problem(problem: Problem) -> List[str]:
    """Return every violated problem invariant; an empty list means valid."""
    issues: List[str] = []
    if len(set(problem.agents)) != len(problem.agents):
        issues.append("duplicate agent names")
    if len(set(problem.objects)) != len(problem.objects):
        issues.append("duplicate object names")
    objects = set(problem.objects)
    for i in problem.agents:
        row = problem.endowments.get(i, {})
        for o, v in row.items():
            if o not in objects:
                issues.append(f"agent {i}: endowment of unknown object {o}")
            elif not ZERO <= v <= ONE:
                issues.append(f"agent {i}: endowment of {o} outside [0,1]: {v}")
        total = sum(row.values(), ZERO)
        if total > 1:
            issues.append(f"agent {i}: row sum > 1 ({total})")
        pref = problem.preferences.get(i)
        if pref is None:
            issues.append(f"agent {i}: missing preference")
            continue
        seen: set = set()
        for cls_ in pref.classes:
            if not cls_:
                issues.append(f"agent {i}: empty indifference class")
            if seen & cls_:
                issues.append(f"agent {i}: object listed twice in preference")
            seen |= cls_
        if seen != objects:
            missing = sorted(objects - seen)
            extra = sorted(seen - objects)
            if missing:
                issues.append(f"agent {i}: preference omits {missing}")
            if extra:
                issues.append(f"agent {i}: preference names unknown {extra}")
    for a in problem.preferences:
        if a not in problem.agents:
            issues.append(f"preference for unknown agent {a}")
    for o in problem.objects:
        q = problem.quota(o)
        if q.denominator != 1:
            issues.append(f"object {o}: total endowment {q} is not an integer")
        elif q == 0:
            issues.append(f"object {o}: total endowment is zero")
    return issues


# -- stochastic dominance -------------------------------------------------


class Dominance(enum.Enum):
    """Verdict of ``sd_compare(l1, l2)``: how ``l1`` stands against ``l2``.

    ``WEAK`` is weak dominance that is neither sd-equivalence nor strict;
    with cumulative shares it is unreachable, but the member keeps the
    verdict set closed under future refinements of the comparison.
    """

    EQUAL = "equal"
    WEAK = "weak"
    STRICT = "strict"
    INCOMPARABLE = "incomparable"

    @property
    def weakly_dominates(self) -> bool:
        return self is not Dominance.INCOMPARABLE


def cumulative_share(lottery: Lottery, pref: WeakPreference, obj: str) -> Fraction:
    """Total share on objects weakly preferred to ``obj``."""
    k = pref.rank(obj)
    return sum(
        (lottery.get(o, ZERO) for cls_ in pref.classes[: k + 1] for o in cls_), ZERO
    )


def cumulative_profile(lottery: Lottery, pref: WeakPreference) -> List[Fraction]:
    """Cumulative shares at every class boundary, best class first."""
    out, acc = [], ZERO
    for cls_ in pref.classes:
        acc += sum((lottery.get(o, ZERO) for o in cls_), ZERO)
        out.append(acc)
    return out


def sd_compare(l1: Lottery, l2: Lottery, pref: WeakPreference) -> Dominance:
    c1 = cumulative_profile(l1, pref)
    c2 = cumulative_profile(l2, pref)
    if c1 == c2:
        return Dominance.EQUAL
    if all(a >= b for a, b in zip(c1, c2)):
        return Dominance.STRICT
    return Dominance.INCOMPARABLE


# -- serialisation --------------------------------------------------------


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ProblemFormatError(msg)


def problem_from_dict(data: Mapping) -> Problem:
    _expect(isinstance(data, Mapping), "problem must be a JSON object")
    for key in ("agents", "objects", "preferences"):
        _expect(key in data, f"missing key {key!r}")
    agents = data["agents"]
    objects = data["objects"]
    _expect(
        isinstance(agents, list) and all(isinstance(a, str) for a in agents),
        "agents must be a list of names",
    )
    _expect(
        isinstance(objects, list) and all(isinstance(o, str) for o in objects),
        "objects must be a list of names",
    )
    known_agents, known_objects = set(agents), set(objects)
    raw_omega = data.get("endowments", {})
    _expect(isinstance(raw_omega, Mapping), "endowments must be an object")
    omega: Dict[str, Dict[str, Fraction]] = {}
    for i, row in raw_omega.items():
        _expect(i in known_agents, f"endowment for unknown agent {i!r}")
        _expect(isinstance(row, Mapping), f"endowments of {i!r} must be an object")
        for o, v in row.items():
            _expect(o in known_objects, f"endowment of unknown object {o!r}")
            omega.setdefault(i, {})[o] = parse_rational(v)
    raw_prefs = data["preferences"]
    _expect(isinstance(raw_prefs, Mapping), "preferences must be an object")
    prefs = {}
    for i, classes in raw_prefs.items():
        _expect(i in known_agents, f"preference for unknown agent {i!r}")
        _expect(
            isinstance(classes, list) and all(isinstance(c, list) for c in classes),
            f"preference of {i!r} must be a list of lists",
        )
        for c in classes:
            for o in c:
                _expect(o in known_objects, f"unknown object {o!r} in preference of {i!r}")
        prefs[i] = WeakPreference.from_lists(classes)
    return Problem.build(agents, objects, omega, prefs)


def parse_problem(text) -> Problem:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"malformed JSON: {exc}") from None
    return problem_from_dict(data)


def problem_to_dict(problem: Problem) -> dict:
    omega = {}
    for i in problem.agents:
        row = {o: format_rational(v) for o, v in problem.endowments[i].items() if v}
        if row:
            omega[i] = row
    return {
        "agents": list(problem.agents),
        "objects": list(problem.objects),
        "endowments": omega,
        "preferences": {
            i: problem.preferences[i].as_lists(problem.objects) for i in problem.agents
        },
    }


def serialize_problem(problem: Problem) -> bytes:
    return json.dumps(problem_to_dict(problem), indent=2, sort_keys=True).encode() + b"\n"


def assignment_to_dict(p: Mapping[str, Mapping[str, Fraction]]) -> dict:
    return {i: {o: format_rational(v) for o, v in row.items() if v} for i, row in p.items()}


def assignment_from_dict(data: Mapping, problem: Problem | None = None) -> Assignment:
    _expect(isinstance(data, Mapping), "assignment must be a JSON object")
    out: Assignment = {}
    for i, row in data.items():
        _expect(isinstance(row, Mapping), f"assignment row of {i!r} must be an object")
        out[i] = {o: parse_rational(v) for o, v in row.items()}
    if problem is not None:
        for i in out:
            _expect(i in problem.agents, f"assignment for unknown agent {i!r}")
            for o in out[i]:
                _expect(o in problem.objects, f"unknown object {o!r} in assignment")
        return full_assignment(problem, out)
    return out


def full_assignment(problem: Problem, p: Mapping[str, Mapping[str, Fraction]]) -> Assignment:
    """Dense copy of ``p`` over every agent and object."""
    return {
        i: {o: Fraction(p.get(i, {}).get(o, 0)) for o in problem.objects}
        for i in problem.agents
    }


def assignment_violations(problem: Problem, p: Mapping[str, Mapping[str, Fraction]]) -> List[str]:
    """Row/column feasibility of an assignment."""
    issues = []
    for i in problem.agents:
        row = p.get(i, {})
        if any(v < 0 for v in row.values()):
            issues.append(f"agent {i}: negative share")
        if sum(row.values(), ZERO) > 1:
            issues.append(f"agent {i}: row sum > 1")
    for o in problem.objects:
        if sum((p.get(i, {}).get(o, ZERO) for i in problem.agents), ZERO) > problem.quota(o):
            issues.append(f"object {o}: over-assigned")
    return issues
