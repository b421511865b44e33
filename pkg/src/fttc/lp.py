"""Exact rational linear algebra: a two-phase simplex and Gaussian elimination.

Both work over :class:`fractions.Fraction` and never round.  The simplex
uses Bland's rule, so it terminates on degenerate problems too.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence

ZERO = Fraction(0)


class SingularSystem(ArithmeticError):
    pass


def solve_linear(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> List[Fraction]:
    """Solve the square system ``a x = b`` exactly."""
    n = len(a)
    m = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise SingularSystem(f"singular at column {col}")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        prow = [v * inv for v in m[col]]
        m[col] = prow
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [v - f * pv for v, pv in zip(m[r], prow)]
    return [m[r][n] for r in range(n)]


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[List[Fraction]] = None
    value: Optional[Fraction] = None


def _pivot(rows, rhs, basis, r, c):
    prow = rows[r]
    inv = 1 / prow[c]
    nz = [(j, v * inv) for j, v in enumerate(prow) if v != 0]
    newrow = [ZERO] * len(prow)
    for j, v in nz:
        newrow[j] = v
    rows[r] = newrow
    rhs[r] *= inv
    for k, row in enumerate(rows):
        if k == r:
            continue
        f = row[c]
        if f == 0:
            continue
        for j, v in nz:
            row[j] -= f * v
        rhs[k] -= f * rhs[r]
    basis[r] = c


def _optimize(rows, rhs, basis, cost, allowed):
    """Maximise ``cost . x`` from a feasible basis; Bland's rule."""
    while True:
        cb = [cost[b] for b in basis]
        enter = None
        for j in allowed:
            if j in basis:
                continue
            reduced = cost[j] - sum((cb[i] * rows[i][j] for i in range(len(rows)) if rows[i][j]), ZERO)
            if reduced > 0:
                enter = j
                break
        if enter is None:
            return "optimal"
        best = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = rhs[i] / row[enter]
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return "unbounded"
        _pivot(rows, rhs, basis, best[1], enter)


def maximize(
    c: Sequence,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
) -> LPResult:
    """Maximise ``c x`` subject to ``a_ub x <= b_ub``, ``a_eq x = b_eq``, ``x >= 0``."""
    n = len(c)
    cons = [([Fraction(v) for v in row], Fraction(b), "<=") for row, b in zip(a_ub, b_ub)]
    cons += [([Fraction(v) for v in row], Fraction(b), "=") for row, b in zip(a_eq, b_eq)]
    # normalise to nonnegative right-hand sides
    norm = []
    for row, b, sense in cons:
        if b < 0:
            row, b = [-v for v in row], -b
            sense = {"<=": ">=", "=": "="}[sense]
        norm.append((row, b, sense))
    n_slack = sum(1 for _, _, s in norm if s != "=")
    n_art = sum(1 for _, _, s in norm if s != "<=")
    width = n + n_slack + n_art
    rows, rhs, basis = [], [], []
    s_col, a_col = n, n + n_slack
    for row, b, sense in norm:
        full = row + [ZERO] * (width - n)
        if sense == "<=":
            full[s_col] = Fraction(1)
            basis.append(s_col)
            s_col += 1
        elif sense == ">=":
            full[s_col] = Fraction(-1)
            s_col += 1
            full[a_col] = Fraction(1)
            basis.append(a_col)
            a_col += 1
        else:
            full[a_col] = Fraction(1)
            basis.append(a_col)
            a_col += 1
        rows.append(full)
        rhs.append(b)
    artificial = range(n + n_slack, width)
    if n_art:
        phase1 = [ZERO] * (n + n_slack) + [Fraction(-1)] * n_art
        _optimize(rows, rhs, basis, phase1, range(width))
        if any(rhs[i] != 0 for i, b in enumerate(basis) if b in artificial):
            return LPResult("infeasible")
        # drive zero-valued artificials out of the basis
        for i, b in enumerate(list(basis)):
            if b in artificial:
                col = next((j for j in range(n + n_slack) if rows[i][j] != 0), None)
                if col is not None:
                    _pivot(rows, rhs, basis, i, col)
        keep = [i for i, b in enumerate(basis) if b not in artificial]
        rows = [rows[i] for i in keep]
        rhs = [rhs[i] for i in keep]
        basis = [basis[i] for i in keep]
    cost = [Fraction(v) for v in c] + [ZERO] * (width - n)
    status = _optimize(rows, rhs, basis, cost, range(n + n_slack))
    if status != "optimal":
        return LPResult(status)
    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = rhs[i]
    return LPResult("optimal", x, sum((Fraction(ci) * xi for ci, xi in zip(c, x)), ZERO))
