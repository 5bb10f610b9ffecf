"""Exact rational linear algebra on sparse vectors, backed by sympy's DomainMatrix over QQ."""

from __future__ import annotations

from fractions import Fraction
from typing import List, Mapping, Optional, Sequence

from sympy import QQ
from sympy.polys.matrices import DomainMatrix


def _q(c):
    return QQ(c.numerator, c.denominator) if isinstance(c, Fraction) else QQ(c)


def _f(c) -> Fraction:
    return Fraction(int(c.numerator), int(c.denominator))


def matrix(columns: Sequence[Mapping], rows: Sequence) -> DomainMatrix:
    """Matrix whose j-th column is the sparse vector columns[j] in the given row basis."""
    idx = {r: i for i, r in enumerate(rows)}
    data = [[QQ(0)] * len(columns) for _ in rows]
    for j, col in enumerate(columns):
        for r, c in col.items():
            if c:
                data[idx[r]][j] = _q(c)
    return DomainMatrix(data, (len(rows), len(columns)), QQ)


def rank(columns: Sequence[Mapping], rows: Sequence) -> int:
    if not columns or not rows:
        return 0
    return matrix(columns, rows).rank()


def nullspace(columns: Sequence[Mapping], rows: Sequence) -> List[List[Fraction]]:
    """Basis of {c : sum_j c_j columns[j] = 0}, as coefficient lists."""
    n = len(columns)
    if n == 0:
        return []
    if not rows:
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    ns = matrix(columns, rows).nullspace()
    return [[_f(x) for x in row] for row in ns.to_list()] if ns.shape[0] else []


def solve_in_span(columns: Sequence[Mapping], target: Mapping, rows: Sequence) -> Optional[List[Fraction]]:
    """Some c with sum_j c_j columns[j] == target, or None."""
    n = len(columns)
    if not any(target.values()):
        return [Fraction(0)] * n
    if n == 0:
        return None
    aug = matrix(list(columns) + [target], rows)
    rref, pivots = aug.rref()
    if n in pivots:
        return None
    sol = [Fraction(0)] * n
    rr = rref.to_list()
    for i, p in enumerate(pivots):
        sol[p] = _f(rr[i][n])
    return sol


def pivot_columns(columns: Sequence[Mapping], rows: Sequence) -> List[int]:
    if not columns or not rows:
        return []
    return list(matrix(columns, rows).rref()[1])


def complement_labels(span: Sequence[Mapping], rows: Sequence) -> List:
    """Standard basis labels completing ``span`` to a basis of the row space.

    Deterministic in basis order: the span vectors come first and the unit
    vectors that become pivots of the echelon form are the complement.
    """
    units = [{r: Fraction(1)} for r in rows]
    piv = pivot_columns(list(span) + units, rows)
    k = len(span)
    return [rows[p - k] for p in piv if p >= k]


def coordinates(basis: Sequence[Mapping], rows: Sequence) -> dict:
    """For a basis of the row space, the coordinates of each unit vector: {row: [c_j]}."""
    n = len(basis)
    if n != len(rows):
        raise ValueError("not a basis: wrong number of vectors")
    if n == 0:
        return {}
    inv = matrix(basis, rows).inv().to_list()
    return {r: [_f(inv[j][i]) for j in range(n)] for i, r in enumerate(rows)}
