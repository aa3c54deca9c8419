"""
Exact arithmetic over F_5: index/point conversion, rank, symmetrization,
null spaces and subspace enumeration.

Everything here is integer arithmetic mod 5; no floating point.
"""
import itertools
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from src.models import GroupConfig, GroupPoint, HALF, INV, LinearForm, P, SymMatrix


def index_to_point(i: int, cfg: GroupConfig) -> GroupPoint:
    """Base-5 digits of i, coordinate 0 least significant."""
    i = cfg.check_index(i)
    return GroupPoint(tuple(int(v) for v in cfg.points[i]))


def point_to_index(p: GroupPoint, cfg: GroupConfig) -> int:
    if p.n != cfg.n:
        raise ValueError(f"point {p} has {p.n} coordinates, group has n = {cfg.n}")
    return int(sum(c * P ** j for j, c in enumerate(p.coords)))


def _as_rows(vectors) -> np.ndarray:
    rows = []
    for v in vectors:
        if isinstance(v, LinearForm):
            rows.append(v.r)
        elif isinstance(v, GroupPoint):
            rows.append(v.coords)
        else:
            rows.append(tuple(int(c) for c in v))
    if not rows:
        return np.zeros((0, 0), dtype=np.int64)
    return np.array(rows, dtype=np.int64) % P


def row_reduce(matrix) -> Tuple[np.ndarray, List[int]]:
    """
    Reduced row echelon form over F_5.

    Returns:
        (nonzero rows of the RREF, pivot columns)
    """
    a = np.array(matrix, dtype=np.int64) % P
    if a.ndim != 2:
        raise ValueError("row_reduce expects a 2-D array")
    m, ncols = a.shape
    pivots = []
    row = 0
    for col in range(ncols):
        if row >= m:
            break
        nonzero = np.nonzero(a[row:, col])[0]
        if nonzero.size == 0:
            continue
        pivot = row + int(nonzero[0])
        if pivot != row:
            a[[row, pivot]] = a[[pivot, row]]
        a[row] = (a[row] * INV[a[row, col]]) % P
        for other in range(m):
            if other != row and a[other, col]:
                a[other] = (a[other] - a[other, col] * a[row]) % P
        pivots.append(col)
        row += 1
    return a[:row], pivots


def mat_rank(matrix) -> int:
    """Rank over F_5 by exact Gaussian elimination."""
    a = np.asarray(matrix if not isinstance(matrix, SymMatrix) else matrix.array, dtype=np.int64)
    if a.size == 0:
        return 0
    return len(row_reduce(a)[1])


def symmetrize(matrix) -> SymMatrix:
    """Symmetric part (M + M^T)/2, computed as 3(M + M^T) mod 5."""
    a = np.asarray(matrix if not isinstance(matrix, SymMatrix) else matrix.array, dtype=np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"symmetrize expects a square matrix, got shape {a.shape}")
    return SymMatrix.from_array(HALF * (a + a.T))


def null_space(vectors: Sequence, cfg: GroupConfig) -> List[GroupPoint]:
    """Basis of {x : r^T x = 0 for every r in vectors}."""
    rows = _as_rows(vectors)
    if rows.shape[0] == 0:
        rows = np.zeros((0, cfg.n), dtype=np.int64)
    if rows.shape[1] != cfg.n:
        raise ValueError(f"vectors have length {rows.shape[1]}, group has n = {cfg.n}")
    reduced, pivots = row_reduce(rows) if rows.shape[0] else (rows, [])
    free = [c for c in range(cfg.n) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(cfg.n, dtype=np.int64)
        x[f] = 1
        for i, pc in enumerate(pivots):
            x[pc] = (-reduced[i, f]) % P
        basis.append(GroupPoint(tuple(int(v) for v in x)))
    return basis


def row_basis(vectors: Sequence) -> List[int]:
    """
    Greedy independent subset, in input order.

    Returns:
        positions (into vectors) of the kept vectors
    """
    kept: List[int] = []
    kept_rows: List[Tuple[int, ...]] = []
    rank = 0
    for pos, row in enumerate(_as_rows(vectors)):
        trial = kept_rows + [tuple(int(v) for v in row)]
        new_rank = mat_rank(np.array(trial, dtype=np.int64))
        if new_rank > rank:
            kept.append(pos)
            kept_rows = trial
            rank = new_rank
    return kept


def span_points(basis: Sequence, cfg: GroupConfig) -> np.ndarray:
    """Sorted indices of every point in the span of basis."""
    rows = _as_rows(basis)
    if rows.shape[0] == 0:
        return np.zeros(1, dtype=np.int64)
    coeffs = np.array(list(itertools.product(range(P), repeat=rows.shape[0])), dtype=np.int64)
    return np.unique(cfg.index_of(coeffs @ rows))


def row_space_basis(matrix) -> List[LinearForm]:
    """Nonzero rows of the RREF, a basis of the row space (= ker(U)^perp for symmetric U)."""
    a = np.asarray(matrix if not isinstance(matrix, SymMatrix) else matrix.array, dtype=np.int64)
    reduced, _ = row_reduce(a)
    return [LinearForm(tuple(int(v) for v in row)) for row in reduced]


def lex_key(i: int, cfg: GroupConfig) -> Tuple[int, ...]:
    """Lexicographic key of an index: its coordinate tuple."""
    return tuple(int(v) for v in cfg.points[i])


def lex_argmin(indices: Iterable[int], cfg: GroupConfig) -> int:
    return min(indices, key=lambda i: lex_key(int(i), cfg))
