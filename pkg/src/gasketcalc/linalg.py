"""Exact linear algebra over Fraction.

All systems in this package are small (a few dozen unknowns at most), so
plain Gaussian elimination on lists of Fractions is both fast enough and
guarantees exactness.  Rectangular systems are supported: `solve_exact`
requires a consistent system with a unique solution and raises otherwise.
"""
from __future__ import annotations

from fractions import Fraction

from .errors import VerificationError

Matrix = list[list[Fraction]]
Vector = list[Fraction]


def solve_exact(rows: Matrix, rhs: Vector) -> Vector:
    """Solve rows @ x = rhs exactly.

    Accepts more equations than unknowns; the system must be consistent and
    of full column rank, otherwise VerificationError is raised.
    """
    m = len(rows)
    if m == 0:
        return []
    n = len(rows[0])
    if len(rhs) != m:
        raise ValueError("rhs length does not match row count")
    aug = [list(row) + [rhs[i]] for i, row in enumerate(rows)]

    pivot_rows: list[int] = []
    row_at = 0
    for col in range(n):
        pivot = next((r for r in range(row_at, m) if aug[r][col] != 0), None)
        if pivot is None:
            raise VerificationError(f"singular system: no pivot in column {col}")
        aug[row_at], aug[pivot] = aug[pivot], aug[row_at]
        prow = aug[row_at]
        inv = 1 / prow[col]
        for j in range(col, n + 1):
            prow[j] *= inv
        for r in range(m):
            if r != row_at and aug[r][col] != 0:
                f = aug[r][col]
                arow = aug[r]
                for j in range(col, n + 1):
                    arow[j] -= f * prow[j]
        pivot_rows.append(row_at)
        row_at += 1

    for r in range(row_at, m):
        if aug[r][n] != 0:
            raise VerificationError("inconsistent system: nonzero residual row")
    return [aug[i][n] for i in pivot_rows]


def nullspace_is_trivial(rows: Matrix, n_cols: int) -> bool:
    """Return True iff rows @ x = 0 forces x = 0 (full column rank)."""
    m = len(rows)
    work = [list(row) for row in rows]
    rank = 0
    for col in range(n_cols):
        pivot = next((r for r in range(rank, m) if work[r][col] != 0), None)
        if pivot is None:
            return False
        work[rank], work[pivot] = work[pivot], work[rank]
        prow = work[rank]
        inv = 1 / prow[col]
        for j in range(col, n_cols):
            prow[j] *= inv
        for r in range(m):
            if r != rank and work[r][col] != 0:
                f = work[r][col]
                for j in range(col, n_cols):
                    work[r][j] -= f * prow[j]
        rank += 1
    return True


def det_exact(matrix: Matrix) -> Fraction:
    """Determinant by fraction-free-enough elimination (exact, small matrices)."""
    n = len(matrix)
    work = [list(row) for row in matrix]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        det *= work[col][col]
        inv = 1 / work[col][col]
        for r in range(col + 1, n):
            if work[r][col] != 0:
                f = work[r][col] * inv
                for j in range(col, n):
                    work[r][j] -= f * work[col][j]
    return det


def mat_vec(rows: Matrix, x: Vector) -> Vector:
    return [sum((row[j] * x[j] for j in range(len(x))), Fraction(0)) for row in rows]
