"""Maximum solution of one step's balanced-trade system.

Agents point at objects (demand weights) and objects point back at the
agents who may hand them over (supply weights).  Both weight families are
probability distributions, so the coefficient matrix is column-stochastic
and its nonnegative fixed points are the invariant measures of a Markov
chain on the bipartite graph.  Those measures live on the closed classes
and can be scaled class by class; the maximum solution scales each class
as far as the caps allow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Tuple

import networkx as nx

from .lp import maximize, solve_linear

ZERO = Fraction(0)

Node = Tuple[str, str]  # ("agent", name) or ("object", name)


def agent_node(name: str) -> Node:
    return ("agent", name)


def object_node(name: str) -> Node:
    return ("object", name)


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class TradingGraph:
    agents: Tuple[str, ...]
    objects: Tuple[str, ...]
    demand: Mapping[Tuple[str, str], Fraction]  # (agent, object) -> gamma
    supply: Mapping[Tuple[str, str], Fraction]  # (agent, object) -> lambda
    labeled: FrozenSet[str] = frozenset()

    def nodes(self) -> List[Node]:
        return [agent_node(i) for i in self.agents] + [object_node(o) for o in self.objects]

    def out_edges(self) -> Dict[Node, Dict[Node, Fraction]]:
        out: Dict[Node, Dict[Node, Fraction]] = {n: {} for n in self.nodes()}
        for (i, o), w in self.demand.items():
            if w:
                out[agent_node(i)][object_node(o)] = w
        for (i, o), w in self.supply.items():
            if w:
                out[object_node(o)][agent_node(i)] = w
        return out

    def check(self) -> None:
        """Raise :class:`GraphError` unless every node's outgoing weights sum to one."""
        agents, objects = set(self.agents), set(self.objects)
        for (i, o), w in list(self.demand.items()) + list(self.supply.items()):
            if i not in agents or o not in objects:
                raise GraphError(f"edge ({i}, {o}) touches an unknown node")
            if w < 0:
                raise GraphError(f"negative weight on ({i}, {o})")
        for node, edges in self.out_edges().items():
            total = sum(edges.values(), ZERO)
            if total != 1:
                raise GraphError(f"outgoing weights of {node} sum to {total}")

    def coefficient_matrix(self) -> Tuple[List[Node], List[List[Fraction]]]:
        """Rows/columns indexed by nodes; entry [a][b] is the weight of edge b -> a."""
        nodes = self.nodes()
        index = {n: k for k, n in enumerate(nodes)}
        mat = [[ZERO] * len(nodes) for _ in nodes]
        for src, edges in self.out_edges().items():
            for dst, w in edges.items():
                mat[index[dst]][index[src]] = w
        return nodes, mat


CapSet = Mapping[Tuple[str, str], Fraction]


@dataclass
class TradeSolution:
    agent_volume: Dict[str, Fraction]
    object_volume: Dict[str, Fraction]
    consumption_loss: Dict[str, Fraction] = field(default_factory=dict)
    net_consumption: Dict[str, Fraction] = field(default_factory=dict)

    def volume(self, node: Node) -> Fraction:
        kind, name = node
        return (self.agent_volume if kind == "agent" else self.object_volume)[name]

    def is_zero(self) -> bool:
        return not any(self.agent_volume.values()) and not any(self.object_volume.values())


def _finish(graph: TradingGraph, x: Mapping[Node, Fraction]) -> TradeSolution:
    agents = {i: x[agent_node(i)] for i in graph.agents}
    objects = {o: x[object_node(o)] for o in graph.objects}
    loss = {i: ZERO for i in graph.agents}
    net = {i: ZERO for i in graph.agents}
    for (i, o), lam in graph.supply.items():
        bucket = loss if o in graph.labeled else net
        bucket[i] += lam * objects[o]
    return TradeSolution(agents, objects, loss, net)


def closed_classes(graph: TradingGraph) -> List[FrozenSet[Node]]:
    """Closed communicating classes, ordered by their first node."""
    g = nx.DiGraph()
    nodes = graph.nodes()
    g.add_nodes_from(nodes)
    for src, edges in graph.out_edges().items():
        g.add_edges_from((src, dst) for dst in edges)
    order = {n: k for k, n in enumerate(nodes)}
    classes = [frozenset(c) for c in nx.attracting_components(g)]
    return sorted(classes, key=lambda c: min(order[n] for n in c))


def stationary_weights(graph: TradingGraph, cls: FrozenSet[Node]) -> Dict[Node, Fraction]:
    """Invariant measure of a closed class, normalised to total mass one."""
    order = [n for n in graph.nodes() if n in cls]
    index = {n: k for k, n in enumerate(order)}
    size = len(order)
    out = graph.out_edges()
    # (I - M) x = 0 with the first equation replaced by sum(x) = 1
    a = [[ZERO] * size for _ in range(size)]
    for k in range(size):
        a[k][k] = Fraction(1)
    for src in order:
        for dst, w in out[src].items():
            a[index[dst]][index[src]] -= w
    a[0] = [Fraction(1)] * size
    b = [Fraction(1)] + [ZERO] * (size - 1)
    sol = solve_linear(a, b)
    return dict(zip(order, sol))


def max_balanced_solution(graph: TradingGraph, caps: CapSet) -> TradeSolution:
    x: Dict[Node, Fraction] = {n: ZERO for n in graph.nodes()}
    for cls in closed_classes(graph):
        pi = stationary_weights(graph, cls)
        scale = None
        for (i, o), lam in graph.supply.items():
            node = object_node(o)
            if lam and node in cls:
                bound = caps.get((i, o), ZERO) / (lam * pi[node])
                scale = bound if scale is None else min(scale, bound)
        if scale is None:
            raise GraphError("closed class without a capped supply edge")
        for n in cls:
            x[n] = scale * pi[n]
    return _finish(graph, x)


def oracle_solution(graph: TradingGraph, caps: CapSet) -> TradeSolution:
    """Same problem as :func:`max_balanced_solution`, solved as an exact LP.

    Maximises the total volume subject to the fixed-point equations and the
    caps.  Every closed class carries a capped supply edge, so the program
    is bounded.
    """
    nodes, mat = graph.coefficient_matrix()
    n = len(nodes)
    index = {nd: k for k, nd in enumerate(nodes)}
    a_eq = [[(1 if r == c else 0) - mat[r][c] for c in range(n)] for r in range(n)]
    b_eq = [0] * n
    a_ub, b_ub = [], []
    for (i, o), lam in graph.supply.items():
        if lam:
            row = [ZERO] * n
            row[index[object_node(o)]] = lam
            a_ub.append(row)
            b_ub.append(caps.get((i, o), ZERO))
    res = maximize([1] * n, a_ub, b_ub, a_eq, b_eq)
    if res.status != "optimal":
        raise GraphError(f"oracle LP is {res.status}")
    return _finish(graph, dict(zip(nodes, res.x)))


def fixed_point_residual(graph: TradingGraph, sol: TradeSolution) -> List[Fraction]:
    nodes, mat = graph.coefficient_matrix()
    x = [sol.volume(nd) for nd in nodes]
    return [sum((m * v for m, v in zip(row, x)), ZERO) - x[r] for r, row in enumerate(mat)]


def binding_caps(graph: TradingGraph, caps: CapSet, sol: TradeSolution) -> List[Tuple[str, str]]:
    return [
        (i, o)
        for (i, o), lam in graph.supply.items()
        if lam and lam * sol.object_volume[o] == caps.get((i, o), ZERO)
    ]
