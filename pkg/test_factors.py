"""
Tests for quadratic factors: atoms, conditional expectation, rank and the atom-counting lemmas.
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import itertools

import numpy as np
import pytest

from src.data import random_function
from src.errors import ConfigMismatchError, DimensionTooLargeError
from src.factors import (
    QuadraticFactor, ap4_atom_probability, ap_constraints_hold, atom_of, atom_statistics, atoms,
    conditional_expectation, configspace_function, energy, factor_from_dict, factor_rank, haar_on_subspace, join,
    pythagoras_gap, rank_reduce, refines,
)
from src.field import mat_rank
from src.fourier import DenseFunction
from src.models import Atom, GroupConfig, GroupPoint, GrowthFn, LinearForm, SymMatrix
from src.progressions import balanced
from src.quadratic import make_phase, quad_phase_fn

E1 = LinearForm((1, 0))
E2 = LinearForm((0, 1))
DIAG = SymMatrix(((1, 0, 0), (0, 0, 0), (0, 0, 0)))


def test_atoms_of_simple_factors():
    cfg = GroupConfig(2)
    assert atom_of(QuadraticFactor.trivial(cfg), 7) == Atom((), ())
    assert atom_of(QuadraticFactor(cfg, (E1,)), GroupPoint((3, 2))).a == (3,)
    # 1^2 + 2^2 = 5
    assert atom_of(QuadraticFactor(cfg, (), (SymMatrix.identity(2),)), GroupPoint((1, 2))).b == (0,)


def test_dependent_linear_forms_are_dropped():
    cfg = GroupConfig(2)
    factor = QuadraticFactor(cfg, (E1, LinearForm((2, 0)), LinearForm((0, 0)), E2))
    assert factor.linear_forms == (E1, E2)


def test_factor_must_match_group():
    with pytest.raises(ConfigMismatchError):
        QuadraticFactor(GroupConfig(3), (E1,))


def test_conditional_expectation_extremes():
    cfg = GroupConfig(2)
    f = random_function(cfg, 1)
    trivial = conditional_expectation(f, QuadraticFactor.trivial(cfg))
    assert np.allclose(trivial.values, f.mean())
    full = conditional_expectation(f, QuadraticFactor(cfg, (E1, E2)))
    assert full.allclose(f, 1e-12)


def test_square_phase_is_measurable():
    cfg = GroupConfig(1)
    f = quad_phase_fn(make_phase(SymMatrix.identity(1), (0,)), cfg)
    factor = QuadraticFactor(cfg, (), (SymMatrix.identity(1),))
    assert conditional_expectation(f, factor).allclose(f, 1e-12)


def test_energy():
    cfg = GroupConfig(2)
    assert energy(DenseFunction.constant(cfg), QuadraticFactor.trivial(cfg)) == pytest.approx(1)
    f = balanced({0, 3, 7, 11}, cfg)
    assert energy(f, QuadraticFactor.trivial(cfg)) == pytest.approx(0, abs=1e-15)


def test_energy_grows_under_refinement():
    cfg = GroupConfig(2)
    f = random_function(cfg, 2)
    coarse = QuadraticFactor(cfg, (E1,))
    fine = join(coarse, QuadraticFactor(cfg, (), (SymMatrix.identity(2),)))
    assert refines(fine, coarse)
    assert energy(f, fine) >= energy(f, coarse) - 1e-12
    assert abs(pythagoras_gap(f, coarse, fine)) < 1e-10


def test_join():
    cfg = GroupConfig(2)
    joined = join(QuadraticFactor(cfg, (E1,)), QuadraticFactor(cfg, (E2,)))
    assert len(atoms(joined)) == 25
    I2 = SymMatrix.identity(2)
    repeated = join(QuadraticFactor(cfg, (), (I2,)), QuadraticFactor(cfg, (), (I2, SymMatrix.zero(2))))
    assert repeated.quadratics == (I2,)


def test_factor_rank():
    cfg = GroupConfig(3)
    M = SymMatrix.identity(3)
    assert factor_rank(QuadraticFactor(cfg, (), (M,))) == 3
    assert factor_rank(QuadraticFactor(cfg, (), (M, SymMatrix.from_array(2 * M.array)))) == 0
    assert factor_rank(QuadraticFactor(cfg, (LinearForm((1, 0, 0)),))) == 4


def test_factor_rank_is_brute_force_minimum():
    cfg = GroupConfig(3)
    A = SymMatrix(((1, 2, 0), (2, 0, 1), (0, 1, 3)))
    B = SymMatrix(((0, 1, 1), (1, 4, 0), (1, 0, 2)))
    brute = min(mat_rank((a * A.array + b * B.array) % 5)
                for a in range(5) for b in range(5) if (a, b) != (0, 0))
    assert factor_rank(QuadraticFactor(cfg, (), (A, B))) == brute


def test_factor_rank_limit():
    cfg = GroupConfig(1)
    quads = tuple(SymMatrix(((v,),)) for v in (1, 2, 3, 4, 1, 2, 3))
    with pytest.raises(DimensionTooLargeError):
        factor_rank(QuadraticFactor(cfg, (), quads))


def test_rank_reduce_keeps_high_rank_factor():
    cfg = GroupConfig(3)
    factor = QuadraticFactor(cfg, (), (SymMatrix.identity(3),))
    assert rank_reduce(factor, GrowthFn.constant(2)) == factor


def test_rank_reduce_replaces_low_rank_matrix():
    cfg = GroupConfig(3)
    reduced = rank_reduce(QuadraticFactor(cfg, (), (DIAG,)), GrowthFn.constant(2))
    assert reduced.quadratics == ()
    assert reduced.linear_forms == (LinearForm((1, 0, 0)),)


def test_rank_reduce_dependent_pencil():
    cfg = GroupConfig(2)
    M = SymMatrix.identity(2)
    factor = QuadraticFactor(cfg, (), (M, SymMatrix.from_array(2 * M.array)))
    reduced = rank_reduce(factor, GrowthFn.constant(1))
    assert reduced.quadratics == (M,)
    assert reduced.linear_forms == ()
    assert refines(reduced, factor)


def test_atom_statistics():
    cfg = GroupConfig(2)
    trivial = atom_statistics(QuadraticFactor.trivial(cfg))
    assert [row["probability"] for row in trivial.rows] == [1.0]
    linear = atom_statistics(QuadraticFactor(cfg, (E1,)))
    assert [row["probability"] for row in linear.rows] == [0.2] * 5


def test_atom_statistics_of_a_quadric():
    """x^2 + y^2 = b over F_5: the cone has 9 points, every other level 4."""
    cfg = GroupConfig(2)
    stats = atom_statistics(QuadraticFactor(cfg, (), (SymMatrix.identity(2),)))
    assert [row["size"] for row in stats.rows] == [9, 4, 4, 4, 4]
    assert stats.tolerance == pytest.approx(0.2)
    assert stats.validate() == (True, [])
    assert list(stats.to_frame().columns) == ["a", "b", "size", "probability", "deviation", "flagged"]


def test_ap4_atom_probability_trivial():
    cfg = GroupConfig(1)
    atom = Atom((), ())
    assert ap4_atom_probability(QuadraticFactor.trivial(cfg), [atom] * 4) == pytest.approx(1)


def test_ap4_atom_probability_needs_progression():
    cfg = GroupConfig(1)
    factor = QuadraticFactor(cfg, (LinearForm((1,)),))
    tuple_ = [Atom((0,), ()), Atom((1,), ()), Atom((3,), ()), Atom((4,), ())]
    assert ap4_atom_probability(factor, tuple_) == 0.0


def test_ap4_atom_probability_on_the_cone():
    """x, x+d, x+2d, x+3d all on x^T x = 0: 9 pairs with x = 0, 8 * 5 otherwise."""
    cfg = GroupConfig(2)
    factor = QuadraticFactor(cfg, (), (SymMatrix.identity(2),))
    value = ap4_atom_probability(factor, [Atom((), (0,))] * 4)
    assert value == pytest.approx(49 / 625)


def test_haar_on_subspace():
    cfg = GroupConfig(2)
    assert np.allclose(haar_on_subspace([GroupPoint((1, 0)), GroupPoint((0, 1))], cfg).values, 1)
    assert haar_on_subspace([], cfg).allclose(DenseFunction.point_mass(cfg))
    line = haar_on_subspace([GroupPoint((1, 2))], cfg)
    assert sorted(np.round(line.values.real, 12)) == [0.0] * 20 + [5.0] * 5


def test_haar_reduces_dependent_basis(caplog):
    cfg = GroupConfig(2)
    with caplog.at_level("WARNING"):
        mu = haar_on_subspace([GroupPoint((1, 2)), GroupPoint((2, 4))], cfg)
    assert np.count_nonzero(mu.values) == 5
    assert "reducing" in caplog.text


def test_configspace_function():
    cfg = GroupConfig(2)
    f = random_function(cfg, 3)
    factor = QuadraticFactor(cfg, (E1,), (SymMatrix.identity(2),))
    config = configspace_function(f, factor)
    assert config.values.shape == (5, 5)
    e = conditional_expectation(f, factor)
    for x in range(cfg.N):
        atom = atom_of(factor, x)
        assert config.values[atom.a[0], atom.b[0]] == pytest.approx(e.values[x])


def test_factor_from_dict():
    factor = factor_from_dict({"linear": [[1, 0]], "quadratics": [[[1, 0], [0, 1]]]})
    assert factor.cfg == GroupConfig(2)
    assert factor.complexity() == (1, 1)
    with pytest.raises(ValueError):
        factor_from_dict({"linear": [], "quadratics": []})


def test_ap4_atom_probabilities_sum_to_one():
    cfg = GroupConfig(2)
    line = GroupConfig(1)
    for factor in (QuadraticFactor(cfg, (E1,)), QuadraticFactor(cfg, (), (SymMatrix.identity(2),)),
                   QuadraticFactor(line, (LinearForm((1,)),), (SymMatrix.identity(1),))):
        listed = list(atoms(factor))
        total = 0.0
        for tuple_ in itertools.product(listed, repeat=4):
            p = ap4_atom_probability(factor, tuple_)
            if not ap_constraints_hold(factor, tuple_):
                assert p == 0.0
            total += p
        assert total == pytest.approx(1)


def test_atom_count_bound():
    cfg = GroupConfig(3)
    rng = np.random.default_rng(4)
    for _ in range(10):
        forms = tuple(LinearForm.reduce(rng.integers(0, 5, size=3)) for _ in range(rng.integers(0, 3)))
        upper = np.triu(rng.integers(0, 5, size=(3, 3)))
        factor = QuadraticFactor(cfg, forms, (SymMatrix.from_array(upper + np.triu(upper, 1).T),))
        d1, d2 = factor.complexity()
        assert len(atoms(factor)) <= 5 ** (d1 + d2)
    # independent linear forms fill every atom
    assert len(atoms(QuadraticFactor(cfg, (LinearForm((1, 0, 0)), LinearForm((0, 1, 0)))))) == 25
