"""
Tests for exact F_5 arithmetic: indexing, rank, symmetrization and null spaces.
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from src.field import (
    index_to_point, mat_rank, null_space, point_to_index, row_basis, row_space_basis, span_points, symmetrize,
)
from src.models import GroupConfig, GroupPoint, LinearForm, SymMatrix


def test_index_to_point_little_endian():
    """Coordinate 0 is the least significant base-5 digit."""
    assert index_to_point(7, GroupConfig(2)) == GroupPoint((2, 1))
    assert index_to_point(124, GroupConfig(3)) == GroupPoint((4, 4, 4))
    assert index_to_point(0, GroupConfig(0)) == GroupPoint(())


def test_point_to_index_inverts_index_to_point():
    cfg = GroupConfig(3)
    assert all(point_to_index(index_to_point(i, cfg), cfg) == i for i in range(cfg.N))


def test_index_out_of_range():
    with pytest.raises(IndexError):
        index_to_point(25, GroupConfig(2))


def test_point_rejects_non_residues():
    with pytest.raises(ValueError):
        GroupPoint((5, 0))
    assert GroupPoint.reduce((5, -1)) == GroupPoint((0, 4))


def test_mat_rank():
    assert mat_rank([[1, 2], [2, 4]]) == 1
    assert mat_rank(SymMatrix.identity(3)) == 3
    assert mat_rank(np.zeros((3, 3), dtype=int)) == 0
    assert mat_rank([[1, 1], [4, 1]]) == 2
    assert mat_rank([[1, 4], [4, 1]]) == 1


def test_symmetrize():
    """(M + M^T)/2 with 1/2 = 3 in F_5."""
    assert symmetrize([[0, 1], [0, 0]]) == SymMatrix(((0, 3), (3, 0)))
    assert symmetrize(SymMatrix.identity(2)) == SymMatrix.identity(2)


def test_symmetrize_rejects_non_square():
    with pytest.raises(ValueError):
        symmetrize([[1, 2, 3]])


def test_sym_matrix_must_be_symmetric():
    with pytest.raises(ValueError):
        SymMatrix(((0, 1), (0, 0)))


def test_null_space():
    cfg = GroupConfig(2)
    assert len(null_space([], cfg)) == 2
    assert null_space([(1, 0)], cfg) == [GroupPoint((0, 1))]
    assert null_space([(1, 1), (1, 2)], cfg) == []


def test_null_space_is_annihilated():
    cfg = GroupConfig(3)
    rows = [LinearForm((1, 2, 3)), LinearForm((2, 4, 1))]
    basis = null_space(rows, cfg)
    assert len(basis) == 3 - mat_rank([r.r for r in rows])
    for v in basis:
        for r in rows:
            assert int(r.as_array() @ v.as_array()) % 5 == 0


def test_row_basis_keeps_first_independent_vectors():
    assert row_basis([(1, 0), (2, 0), (0, 1), (1, 1)]) == [0, 2]
    assert row_basis([(0, 0)]) == []


def test_span_points():
    cfg = GroupConfig(2)
    assert list(span_points([(1, 0)], cfg)) == [0, 1, 2, 3, 4]
    assert list(span_points([], cfg)) == [0]
    assert len(span_points([(1, 0), (0, 1)], cfg)) == 25


def test_row_space_basis():
    diag = SymMatrix(((1, 0, 0), (0, 0, 0), (0, 0, 0)))
    assert row_space_basis(diag) == [LinearForm((1, 0, 0))]
    assert row_space_basis(SymMatrix.zero(2)) == []


def test_rank_is_transpose_invariant():
    rng = np.random.default_rng(5)
    for shape in [(3, 3), (2, 4), (4, 2), (1, 3)]:
        for _ in range(20):
            M = rng.integers(0, 5, size=shape)
            assert mat_rank(M) == mat_rank(M.T)
    # rank 1 over F_5 though rank 2 over the rationals
    assert mat_rank([[1, 2], [3, 1]]) == mat_rank([[1, 3], [2, 1]]) == 1
