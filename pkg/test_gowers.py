"""
Tests for multiplicative derivatives, Gowers norms and the related identities.
"""
import sys
import os
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import pytest

from src.data import random_function
from src.errors import BudgetExceededError, DimensionTooLargeError, UnboundedInputError
from src.fourier import DenseFunction, dft
from src.gowers import (
    derivative, gowers_cauchy_schwarz_check, gowers_inner_product, gowers_norm_direct, gowers_norm_fast,
    samorodnitsky_configuration_sum, samorodnitsky_sides, u2_inverse_check,
)
from src.models import GroupConfig, GroupPoint, OMEGA, SymMatrix
from src.quadratic import make_phase, quad_phase_fn


def key_example(n: int) -> DenseFunction:
    """x -> omega^(x^T x)."""
    return quad_phase_fn(make_phase(SymMatrix.identity(n), (0,) * n), GroupConfig(n))


def test_derivative_at_zero_is_modulus_squared():
    f = random_function(GroupConfig(2), 1)
    assert derivative(f, 0).allclose(DenseFunction(f.cfg, np.abs(f.values) ** 2))


def test_derivative_of_constant():
    one = DenseFunction.constant(GroupConfig(2))
    assert derivative(one, GroupPoint((3, 1))).allclose(one)


def test_derivative_of_square_phase_is_linear():
    """x^2 - (x - 1)^2 = 2x - 1."""
    d = derivative(key_example(1), 1)
    expected = OMEGA[(2 * np.arange(5) - 1) % 5]
    assert np.allclose(d.values, expected, atol=1e-12)


def test_direct_norm_of_constant():
    one = DenseFunction.constant(GroupConfig(1))
    assert gowers_norm_direct(one, 2).value == pytest.approx(1)
    assert gowers_norm_fast(one, 3).value == pytest.approx(1)


def test_key_example_is_u3_extremal():
    assert gowers_norm_direct(key_example(1), 3).value == pytest.approx(1, abs=1e-12)
    f = key_example(2)
    assert gowers_norm_fast(f, 3).value == pytest.approx(1, abs=1e-12)
    assert gowers_norm_fast(f, 2).value == pytest.approx(5 ** -0.5, abs=1e-12)


def test_u2_is_l4_norm_of_spectrum():
    cfg = GroupConfig(1)
    f = random_function(cfg, 2, "pm1")
    assert gowers_norm_direct(f, 2).value == pytest.approx(dft(f).norm(4), abs=1e-10)


def test_direct_matches_fast_for_u3():
    f = random_function(GroupConfig(2), 3)
    direct = gowers_norm_direct(f, 3).value
    fast = gowers_norm_fast(f, 3)
    assert abs(direct - fast.value) < 1e-9
    assert fast.method == "fast"


def test_u4_recursion_at_small_scale():
    f = random_function(GroupConfig(1), 4)
    assert abs(gowers_norm_direct(f, 4).value - gowers_norm_fast(f, 4).value) < 1e-9


def test_norms_are_nested():
    f = random_function(GroupConfig(2), 5)
    assert gowers_norm_fast(f, 2).value <= gowers_norm_fast(f, 3).value + 1e-12


def test_inner_product_of_copies():
    cfg = GroupConfig(1)
    one = DenseFunction.constant(cfg)
    assert gowers_inner_product([one] * 4, 2) == pytest.approx(1)
    f = random_function(cfg, 6)
    value = gowers_inner_product([f] * 8, 3)
    assert abs(value - gowers_norm_direct(f, 3).value ** 8) < 1e-10


def test_gowers_cauchy_schwarz():
    cfg = GroupConfig(2)
    for seed in range(5):
        fs = [random_function(cfg, 10 * seed + j) for j in range(4)]
        lhs, rhs = gowers_cauchy_schwarz_check(fs, 2)
        assert lhs <= rhs + 1e-9


def test_budget_refusal_names_estimate():
    f = random_function(GroupConfig(3), 7)
    with pytest.raises(BudgetExceededError) as info:
        gowers_norm_direct(f, 3, budget=1000)
    assert info.value.estimate == 125 ** 4
    assert "1,000" in str(info.value)


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("QF_BUDGET", "100")
    with pytest.raises(BudgetExceededError):
        gowers_norm_direct(random_function(GroupConfig(1), 8), 3)


def test_unsupported_k():
    with pytest.raises(ValueError):
        gowers_norm_fast(DenseFunction.constant(GroupConfig(1)), 5)


def test_u2_inverse_inequalities():
    u2, sup = u2_inverse_check(random_function(GroupConfig(2), 9))
    assert sup <= u2 + 1e-12
    assert u2 ** 2 <= sup + 1e-12


def test_u2_inverse_rejects_unbounded():
    with pytest.raises(UnboundedInputError):
        u2_inverse_check(DenseFunction.constant(GroupConfig(1), 2.0))


def test_samorodnitsky_trivial_cases():
    cfg = GroupConfig(2)
    assert samorodnitsky_sides(DenseFunction.constant(cfg)) == pytest.approx((1.0, 1.0))
    assert samorodnitsky_sides(DenseFunction.zeros(cfg)) == pytest.approx((0.0, 0.0))


def test_samorodnitsky_identity():
    f = random_function(GroupConfig(1), 10, "pm1")
    lhs, rhs = samorodnitsky_sides(f)
    assert abs(lhs - rhs) < 1e-9
    assert abs(samorodnitsky_configuration_sum(f) - rhs) < 1e-9


def test_samorodnitsky_dimension_limit():
    with pytest.raises(DimensionTooLargeError):
        samorodnitsky_sides(DenseFunction.constant(GroupConfig(3)))


def test_norms_are_homogeneous():
    f = random_function(GroupConfig(2), 8)
    c = 0.6 - 0.8j
    for k in (2, 3):
        assert gowers_norm_fast(c * f, k).value == pytest.approx(abs(c) * gowers_norm_fast(f, k).value)
        assert gowers_norm_fast(0.5 * f, k).value == pytest.approx(0.5 * gowers_norm_fast(f, k).value)


def test_u3_through_derivatives():
    f = random_function(GroupConfig(1), 9)
    average = np.mean([dft(derivative(f, h)).norm(4) ** 4 for h in range(f.cfg.N)])
    assert gowers_norm_direct(f, 3).value ** 8 == pytest.approx(average)
