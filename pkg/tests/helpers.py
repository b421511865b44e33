"""Seeded instance generators and independent oracles shared by the tests."""
from __future__ import annotations

import itertools
import random
from fractions import Fraction
from pathlib import Path

from fttc.house import DichotomousProblem
from fttc.model import Problem, WeakPreference, equal_division
from fttc.solver import TradingGraph

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def random_weak_order(rng: random.Random, objects, p_tie: float = 0.4) -> WeakPreference:
    objs = list(objects)
    rng.shuffle(objs)
    classes = [[objs[0]]]
    for o in objs[1:]:
        if rng.random() < p_tie:
            classes[-1].append(o)
        else:
            classes.append([o])
    return WeakPreference.from_lists(classes)


def random_distribution(rng: random.Random, keys, max_weight: int = 4) -> dict:
    weights = [rng.randint(1, max_weight) for _ in keys]
    total = sum(weights)
    return {k: Fraction(w, total) for k, w in zip(keys, weights)}


def random_endowments(rng: random.Random, agents, objects) -> dict:
    """Convex combination of partial deterministic assignments of the object
    units: rows stay <= 1 and every quota is a positive integer."""
    n = len(agents)
    quotas = {o: 1 for o in objects}
    spare = n - len(objects)
    for o in objects:
        if spare > 0 and rng.random() < 0.3:
            quotas[o] += 1
            spare -= 1
    units = [o for o in objects for _ in range(quotas[o])]
    layers = rng.randint(1, 4)
    weights = random_distribution(rng, range(layers))
    omega = {i: {o: Fraction(0) for o in objects} for i in agents}
    for k in range(layers):
        holders = rng.sample(list(agents), len(units))
        for o, i in zip(units, holders):
            omega[i][o] += weights[k]
    return omega


def random_fee(rng: random.Random, max_agents: int = 5, max_objects: int = 5) -> Problem:
    n = rng.randint(1, max_agents)
    m = rng.randint(1, min(n, max_objects))
    agents = [f"i{k}" for k in range(n)]
    objects = [f"o{k}" for k in range(m)]
    omega = random_endowments(rng, agents, objects)
    prefs = {i: random_weak_order(rng, objects) for i in agents}
    return Problem.build(agents, objects, omega, prefs)


def random_house(rng: random.Random, max_agents: int = 5, p_tie: float = 0.4) -> Problem:
    n = rng.randint(1, max_agents)
    agents = [f"i{k}" for k in range(n)]
    objects = [f"o{k}" for k in range(n)]
    prefs = {i: random_weak_order(rng, objects, p_tie) for i in agents}
    return equal_division(agents, objects, prefs)


def random_equal_endowment_pairs(rng: random.Random, max_agents: int = 5) -> Problem:
    """Random exchange problem where agents come in equal-endowment twins."""
    base = random_fee(rng, max_agents=max(1, max_agents // 2), max_objects=max_agents)
    agents, omega, prefs = [], {}, {}
    scale = Fraction(1, 2)
    for i in base.agents:
        for suffix in ("a", "b"):
            name = i + suffix
            agents.append(name)
            omega[name] = {o: base.omega(i, o) * scale for o in base.objects}
            prefs[name] = random_weak_order(rng, base.objects)
    # halving each twin's share keeps quotas integral and rows <= 1
    return Problem.build(agents, base.objects, omega, prefs)


def random_dichotomous(rng: random.Random, max_agents: int = 7, p_accept: float = 0.4):
    while True:
        n = rng.randint(2, max_agents)
        m = rng.randint(1, n - 1)
        objects = [f"o{k}" for k in range(m)]
        acc = {}
        for k in range(n):
            c = [o for o in objects if rng.random() < p_accept]
            acc[f"i{k}"] = c or [rng.choice(objects)]
        dp = DichotomousProblem.build(acc, objects)
        if not dp.violations():
            return dp


def random_graph(rng: random.Random, max_agents: int = 6, max_objects: int = 6):
    n = rng.randint(1, max_agents)
    m = rng.randint(1, max_objects)
    agents = [f"i{k}" for k in range(n)]
    objects = [f"o{k}" for k in range(m)]
    demand, supply = {}, {}
    for i in agents:
        targets = rng.sample(objects, rng.randint(1, min(3, m)))
        for o, w in random_distribution(rng, targets).items():
            demand[(i, o)] = w
    for o in objects:
        owners = rng.sample(agents, rng.randint(1, min(3, n)))
        for i, w in random_distribution(rng, owners).items():
            supply[(i, o)] = w
    labeled = frozenset(o for o in objects if rng.random() < 0.3)
    caps = {}
    for key in supply:
        caps[key] = Fraction(0) if rng.random() < 0.05 else Fraction(rng.randint(1, 12), rng.randint(1, 12))
    return TradingGraph(tuple(agents), tuple(objects), demand, supply, labeled), caps


# -- independent oracles ------------------------------------------------------------


def classic_ps(problem: Problem) -> dict:
    """Probabilistic serial: everyone eats its best remaining object at unit speed."""
    supply = {o: problem.quota(o) for o in problem.objects}
    order = {i: [next(iter(c)) for c in problem.preferences[i].classes] for i in problem.agents}
    p = {i: {o: Fraction(0) for o in problem.objects} for i in problem.agents}
    t = Fraction(0)
    while t < 1:
        target = {i: next(o for o in order[i] if supply[o] > 0) for i in problem.agents}
        crowd = {o: sum(1 for v in target.values() if v == o) for o in set(target.values())}
        dt = min([supply[o] / k for o, k in crowd.items()] + [1 - t])
        for i, o in target.items():
            p[i][o] += dt
        for o, k in crowd.items():
            supply[o] -= k * dt
        t += dt
    return p


def brute_dominates(problem: Problem, p: dict, denominator: int):
    """Search every assignment on the 1/denominator grid for one that
    strictly sd-dominates ``p``; return it or None."""
    agents, objects = problem.agents, problem.objects
    d = denominator
    cells = list(itertools.product(agents, objects))
    quota = {o: problem.quota(o) * d for o in objects}

    def cums(q, i):
        out, acc = [], 0
        for cls_ in problem.preferences[i].classes:
            acc += sum(q[(i, o)] for o in cls_)
            out.append(acc)
        return out

    base = {(i, o): p[i][o] * d for i, o in cells}
    base_c = {i: cums(base, i) for i in agents}
    for values in itertools.product(range(d + 1), repeat=len(cells)):
        q = dict(zip(cells, values))
        if any(sum(q[(i, o)] for o in objects) > d for i in agents):
            continue
        if any(sum(q[(i, o)] for i in agents) > quota[o] for o in objects):
            continue
        strict = False
        for i in agents:
            c = cums(q, i)
            if any(a < b for a, b in zip(c, base_c[i])):
                break
            strict = strict or c != base_c[i]
        else:
            if strict:
                return {i: {o: Fraction(q[(i, o)], d) for o in objects} for i in agents}
    return None


def fraction_rows(table: dict) -> dict:
    """Parse a {'agent': {'obj': 'num/den'}} literal into Fractions."""
    return {i: {o: Fraction(v) for o, v in row.items()} for i, row in table.items()}


def dense(problem: Problem, sparse: dict) -> dict:
    return {i: {o: Fraction(sparse.get(i, {}).get(o, 0)) for o in problem.objects} for i in problem.agents}
