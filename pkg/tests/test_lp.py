import random
from fractions import Fraction as F

import pytest

from fttc.lp import SingularSystem, maximize, solve_linear


def test_solve_linear():
    assert solve_linear([[2, 1], [1, 3]], [3, 5]) == [F(4, 5), F(7, 5)]
    with pytest.raises(SingularSystem):
        solve_linear([[1, 2], [2, 4]], [1, 2])


def test_small_lp():
    # max x + y, x + 2y <= 4, 3x + y <= 6
    res = maximize([1, 1], [[1, 2], [3, 1]], [4, 6])
    assert res.status == "optimal"
    assert res.x == [F(8, 5), F(6, 5)] and res.value == F(14, 5)


def test_equality_and_negative_rhs():
    # max x, x + y = 1, -x <= -1/2 is x >= 1/2
    res = maximize([1, 0], [[-1, 0]], [F(-1, 2)], [[1, 1]], [1])
    assert res.value == 1


def test_infeasible_and_unbounded():
    assert maximize([1], [[1]], [1], [[1]], [2]).status == "infeasible"
    assert maximize([1, 0], [[0, 1]], [1]).status == "unbounded"


def test_random_two_variable_programs_against_vertices():
    rng = random.Random(7)
    for _ in range(200):
        rows = [[F(rng.randint(1, 5)), F(rng.randint(1, 5))] for _ in range(3)]
        rhs = [F(rng.randint(1, 9)) for _ in range(3)]
        c = [F(rng.randint(0, 4)), F(rng.randint(0, 4))]
        # enumerate every vertex of the polygon x, y >= 0
        lines = rows + [[F(1), F(0)], [F(0), F(1)]]
        vals = rhs + [F(0), F(0)]
        best = None
        for a in range(5):
            for b in range(a + 1, 5):
                try:
                    pt = solve_linear([lines[a], lines[b]], [vals[a], vals[b]])
                except SingularSystem:
                    continue
                if min(pt) < 0 or any(r[0] * pt[0] + r[1] * pt[1] > v for r, v in zip(rows, rhs)):
                    continue
                v = c[0] * pt[0] + c[1] * pt[1]
                best = v if best is None else max(best, v)
        assert maximize(c, rows, rhs).value == best
