"""
The verification suite behind `main.py verify`: one registered check per
invariant, grouped by module, each run over seeded trials. Every row of the
result table names the result the invariant comes from.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from src.data import planted_quadratic, random_function, random_phase, random_set
from src.decompose import (
    bhk_experiment, configspace_count_inequality, linear_kvn, quadratic_kvn, regularity, regularity_high_rank,
)
from src.errors import QuadFourierError
from src.factors import (
    QuadraticFactor, atom_ids, atom_statistics, atoms, ap4_atom_distribution, ap4_atom_probability,
    ap_constraints_hold, conditional_expectation, factor_rank, join, pythagoras_gap, rank_reduce, refines,
)
from src.field import index_to_point, mat_rank, null_space, point_to_index, row_space_basis
from src.fourier import DenseFunction, convolve, dft, dft_direct, idft, inner_product, spectral_inner_product
from src.gowers import (
    derivative, gowers_cauchy_schwarz_check, gowers_norm_direct, gowers_norm_fast,
    samorodnitsky_configuration_sum, samorodnitsky_sides, u2_inverse_check,
)
from src.models import GroupConfig, GrowthFn, LinearForm, OracleParams, P, SymMatrix
from src.progressions import (
    ap_census, balanced, balanced_expansion_check, gvn_check, lambda3, lambda3_fourier_control,
    lambda3_spectral, lambda4,
)
from src.quadratic import (
    best_quadratic_correlation, derivative_linear_correlation, gauss_sum, inverse_oracle, make_phase,
    quad_correlation, quad_phase_fn,
)

logger = logging.getLogger(__name__)

Check = Callable[[np.random.Generator], float]

COLUMNS = ["suite", "module", "invariant", "anchor", "trials", "violations", "max_error", "passed"]


@dataclass
class InvariantCheck:
    """One invariant: fn returns an error that must stay within tol on every trial."""
    suite: str
    module: str
    invariant: str
    fn: Check
    anchor: str = ""
    tol: float = 1e-9
    trials: int = 1


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(2 ** 32))


def _function(cfg: GroupConfig, rng: np.random.Generator, kind: str = "disc") -> DenseFunction:
    return random_function(cfg, _seed(rng), kind)


def _symmetric(cfg: GroupConfig, rng: np.random.Generator, nonzero: bool = True) -> SymMatrix:
    while True:
        upper = np.triu(rng.integers(0, P, size=(cfg.n, cfg.n)))
        M = SymMatrix.from_array(upper + np.triu(upper, 1).T)
        if not nonzero or not M.is_zero():
            return M


def _random_factor(cfg: GroupConfig, rng: np.random.Generator, d1: int, d2: int) -> QuadraticFactor:
    forms = tuple(LinearForm.reduce(rng.integers(0, P, size=cfg.n)) for _ in range(d1))
    return QuadraticFactor(cfg, forms, tuple(_symmetric(cfg, rng) for _ in range(d2)))


def _validation_error(result) -> float:
    ok, errors = result.validate()
    for error in errors:
        logger.warning("%s", error)
    return float(len(errors))


def _ap4_deviation(factor: QuadraticFactor, atom_tuple) -> float:
    """
    |p - 5^(-2 d1 - 3 d2)| in units of 5^(-rank/2) for a constrained tuple, so the
    lemma holds when the value is at most 1; p itself (which must be 0) otherwise.
    """
    number = {atom: i for i, atom in enumerate(atoms(factor))}
    key = tuple(number[atom] for atom in atom_tuple)
    probability = ap4_atom_distribution(factor).get(key, 0.0)
    if not ap_constraints_hold(factor, atom_tuple):
        return math.inf if probability else 0.0
    d1, d2 = factor.complexity()
    expected = P ** (-2 * d1 - 3 * d2)
    return abs(probability - expected) / P ** (-factor_rank(factor) / 2)


class InvariantSuite:
    """Registry and runner for every invariant check."""

    def __init__(self, n: int = 2, seed: int = 0, trials: int = 20, threads: int = 1,
                 budget: Optional[int] = None):
        """
        Initialize the suite.

        Args:
            n: dimension for the cheap checks; expensive checks cap it lower
            seed: base seed, every trial derives its own generator from it
            trials: upper limit on trials per check
            threads: worker threads handed to the kernels
            budget: direct-evaluation budget
        """
        self.n = n
        self.seed = seed
        self.trials = trials
        self.threads = threads
        self.budget = budget
        self.cfg = GroupConfig(n)
        self.mid = GroupConfig(min(n, 3))
        self.small = GroupConfig(min(n, 2))
        self.pipeline = GroupConfig(3)
        self.checks: List[InvariantCheck] = []

    def register(self, suite: str, module: str, invariant: str, fn: Check, anchor: str = "",
                 tol: float = 1e-9, trials: Optional[int] = None):
        count = self.trials if trials is None else min(trials, self.trials)
        self.checks.append(InvariantCheck(suite, module, invariant, fn, anchor, tol, max(count, 1)))

    def add_all_checks(self):
        """Register every invariant of every module."""
        logger.info("registering invariant checks (n = %d, seed = %d, trials = %d)", self.n, self.seed, self.trials)

        # A. Field arithmetic and indexing
        self.add_field_checks()

        # B. Fourier identities
        self.add_fourier_checks()

        # C. Gowers norms
        self.add_gowers_checks()

        # D. Progression counts
        self.add_progression_checks()

        # E. Quadratic phases and the oracle
        self.add_quadratic_checks()

        # F. Factors and atoms
        self.add_factor_checks()

        # G. Decomposition drivers
        self.add_decomposition_checks()

        logger.info("%d checks registered", len(self.checks))

    # ------------------------------------------------------------------

    def add_field_checks(self):
        cfg = self.cfg

        def index_round_trip(rng):
            return float(sum(point_to_index(index_to_point(i, cfg), cfg) != i for i in range(cfg.N)))

        def transpose_rank(rng):
            M = rng.integers(0, P, size=(cfg.n, cfg.n))
            return float(abs(mat_rank(M) - mat_rank(M.T)))

        def rank_nullity(rng):
            k = int(rng.integers(0, cfg.n + 2))
            rows = rng.integers(0, P, size=(k, cfg.n))
            basis = null_space([tuple(r) for r in rows], cfg)
            rank = mat_rank(rows) if k else 0
            leftover = sum(int(np.any((rows @ v.as_array()) % P)) for v in basis) if k else 0
            return float(abs(rank + len(basis) - cfg.n) + leftover)

        def row_space(rng):
            M = _symmetric(cfg, rng, nonzero=False)
            return float(abs(len(row_space_basis(M)) - mat_rank(M)))

        self.register("field", "field-core", "index_to_point and point_to_index are inverse", index_round_trip,
                      "base-5 indexing convention", tol=0, trials=1)
        self.register("field", "field-core", "rank(M) = rank(M^T)", transpose_rank,
                      "row rank equals column rank", tol=0, trials=100)
        self.register("field", "field-core", "rank + nullity = n, null space annihilated", rank_nullity,
                      "annihilator H = S^perp in the linear KvN proof", tol=0, trials=100)
        self.register("field", "field-core", "row space basis has rank many rows", row_space,
                      "Gauss sums: rank of a symmetric matrix", tol=0)

    def add_fourier_checks(self):
        cfg = self.mid
        diff = cfg.index_of(cfg.points[:, None, :] - cfg.points[None, :, :])  # [x, y] -> x - y
        anchor = "basic properties of the Fourier transform"

        def parseval(rng):
            f = _function(cfg, rng)
            return abs(f.norm(2) ** 2 - dft(f).norm(2) ** 2)

        def inversion(rng):
            f = _function(cfg, rng)
            return float(np.max(np.abs(idft(dft(f)).values - f.values)))

        def convolution(rng):
            f, g = _function(cfg, rng), _function(cfg, rng)
            direct = np.mean(f.values[None, :] * g.values[diff], axis=1)
            return float(np.max(np.abs(convolve(f, g).values - direct)))

        def fast_matches_direct(rng):
            f = _function(cfg, rng)
            return float(np.max(np.abs(dft(f).values - dft_direct(f).values)))

        def spectral_inner(rng):
            f, g = _function(cfg, rng), _function(cfg, rng)
            return abs(inner_product(f, g) - spectral_inner_product(dft(f), dft(g)))

        def coefficient_bound(rng):
            f = _function(cfg, rng)
            return max(0.0, dft(f).sup_norm() - f.norm(1))

        self.register("fourier", "fourier", "||f||_2 = ||f^||_2", parseval, anchor + ": Parseval",
                      tol=1e-10, trials=100)
        self.register("fourier", "fourier", "inversion", inversion, anchor + ": inversion", tol=1e-10, trials=100)
        self.register("fourier", "fourier", "convolution becomes multiplication", convolution,
                      anchor + ": convolution", tol=1e-10, trials=100)
        self.register("fourier", "fourier", "axis transform equals O(N^2) transform", fast_matches_direct,
                      "definition of the Fourier transform", tol=1e-10)
        self.register("fourier", "fourier", "E f conj(g) = sum f^ conj(g^)", spectral_inner,
                      anchor + ": Parseval identity", tol=1e-10, trials=100)
        self.register("fourier", "fourier", "|f^(r)| <= ||f||_1", coefficient_bound,
                      anchor + ": coefficient bound", tol=1e-12, trials=100)

    def add_gowers_checks(self):
        mid, small = self.mid, self.small
        one = GroupConfig(min(self.n, 1))
        norm_axioms = "Gowers norms are norms"

        def u2_spectral(rng):
            f = _function(mid, rng)
            return abs(gowers_norm_direct(f, 2, self.budget, self.threads).value - gowers_norm_fast(f, 2).value)

        def u3_paths(rng):
            f = _function(small, rng)
            return abs(gowers_norm_direct(f, 3, self.budget, self.threads).value - gowers_norm_fast(f, 3).value)

        def derivative_identity(rng):
            f = _function(small, rng)
            per_h = [dft(derivative(f, h)).norm(4) ** 4 for h in range(small.N)]
            return abs(gowers_norm_direct(f, 3, self.budget, self.threads).value ** 8 - float(np.mean(per_h)))

        def key_example(rng):
            q = quad_phase_fn(make_phase(SymMatrix.identity(mid.n), (0,) * mid.n), mid)
            return (abs(gowers_norm_fast(q, 3).value - 1)
                    + abs(gowers_norm_fast(q, 2).value - P ** (-mid.n / 4))
                    + abs(dft(q).sup_norm() - P ** (-mid.n / 2)))

        def nesting(rng):
            f = _function(small, rng)
            return max(0.0, gowers_norm_fast(f, 2).value - gowers_norm_fast(f, 3).value)

        def triangle(rng):
            f, g = _function(small, rng), _function(small, rng)
            k = int(rng.integers(2, 4))
            total = gowers_norm_fast(f + g, k).value
            return max(0.0, total - gowers_norm_fast(f, k).value - gowers_norm_fast(g, k).value)

        def homogeneity(rng):
            f = _function(small, rng)
            c = complex(rng.normal(), rng.normal())
            k = int(rng.integers(2, 4))
            return abs(gowers_norm_fast(c * f, k).value - abs(c) * gowers_norm_fast(f, k).value)

        def cauchy_schwarz(rng):
            k = int(rng.integers(2, 4))
            cfg = small if k == 2 else one
            lhs, rhs = gowers_cauchy_schwarz_check([_function(cfg, rng) for _ in range(2 ** k)], k, self.budget)
            return max(0.0, lhs - rhs)

        def u2_inverse(rng):
            u2, sup = u2_inverse_check(_function(mid, rng))
            return max(0.0, sup - u2, u2 ** 2 - sup)

        def samorodnitsky(rng):
            lhs, rhs = samorodnitsky_sides(_function(small, rng))
            return abs(lhs - rhs)

        def configuration_sum(rng):
            f = _function(one, rng)
            return abs(samorodnitsky_configuration_sum(f) - samorodnitsky_sides(f)[1])

        self.register("gowers", "gowers", "U^2 direct equals ||f^||_4", u2_spectral,
                      "U^2 norm is the L^4 norm of the Fourier transform", trials=100)
        self.register("gowers", "gowers", "U^3 direct equals fast recursion", u3_paths,
                      "definition of the U^k norms", trials=100)
        self.register("gowers", "gowers", "||f||_U3^8 = E_h ||Delta(f;h)^||_4^4", derivative_identity,
                      "U^3 norm through derivatives", trials=10)
        self.register("gowers", "gowers", "quadratic phase: U^3 = 1, U^2 = 5^(-n/4), ||f^||_inf = 5^(-n/2)",
                      key_example, "key example: quadratic phases", trials=1)
        self.register("gowers", "gowers", "||f||_U2 <= ||f||_U3", nesting, "nesting of Gowers norms", trials=200)
        self.register("gowers", "gowers", "triangle inequality", triangle, norm_axioms, trials=200)
        self.register("gowers", "gowers", "||c f|| = |c| ||f||", homogeneity, norm_axioms, trials=100)
        self.register("gowers", "gowers", "Gowers-Cauchy-Schwarz", cauchy_schwarz,
                      "Gowers-Cauchy-Schwarz inequality", trials=10)
        self.register("gowers", "gowers", "U^2 inverse inequalities", u2_inverse, "U^2 inverse theorem")
        self.register("gowers", "gowers", "Samorodnitsky identity", samorodnitsky, "Samorodnitsky's identity",
                      trials=25)
        self.register("gowers", "gowers", "configuration sum equals spectral side", configuration_sum,
                      "Samorodnitsky's identity, sixteen-fold form", trials=3)

    def add_progression_checks(self):
        mid, small = self.mid, self.small
        gvn_anchor = "generalised von Neumann theorem for 4-term progressions"

        def spectral_lambda3(rng):
            fs = [_function(mid, rng) for _ in range(3)]
            return abs(lambda3(*fs) - lambda3_spectral(*fs))

        def multilinear(rng):
            f, g, a, b, c = [0.5 * _function(small, rng) for _ in range(5)]
            return abs(lambda4(f + g, a, b, c) - lambda4(f, a, b, c) - lambda4(g, a, b, c))

        def gvn(rng):
            report = gvn_check(*[_function(small, rng) for _ in range(4)])
            return max(0.0, -report.slack4, -report.slack3)

        def expansion(rng):
            k = int(rng.integers(3, 5))
            sets = [random_set(small.n, 0.5, _seed(rng)) for _ in range(k)]
            report = balanced_expansion_check(sets, small)
            return abs(report.total - report.direct)

        def expansion_bookkeeping(rng):
            alpha = float(rng.uniform(0.2, 0.8))
            members = random_set(mid.n, alpha, _seed(rng))
            report = balanced_expansion_check([members] * 4, mid)
            return max(0.0, abs(report.direct - report.main_term) - report.deviation_bound())

        def fourier_control(rng):
            value, bound = lambda3_fourier_control(*[_function(small, rng) for _ in range(3)])
            return max(0.0, value - bound)

        def census(rng):
            members = random_set(small.n, 0.6, _seed(rng))
            indicator = DenseFunction.indicator(members, small)
            counts = ap_census(members, 4, small)
            return (abs(counts.with_trivial - small.N ** 2 * lambda4(*[indicator] * 4).real)
                    + abs(counts.with_trivial - counts.without_trivial - len(members)))

        def balanced_mean(rng):
            return abs(balanced(random_set(small.n, 0.4, _seed(rng)), small).mean())

        self.register("progressions", "progressions", "Lambda_3 direct equals spectral", spectral_lambda3,
                      "Lambda_3 in terms of Fourier coefficients", tol=1e-10, trials=100)
        self.register("progressions", "progressions", "Lambda_4 is multilinear", multilinear,
                      "definition of Lambda_k", tol=1e-10)
        self.register("progressions", "progressions", "generalised von Neumann", gvn, gvn_anchor, trials=200)
        self.register("progressions", "progressions", "balanced expansion sums to the count", expansion,
                      "balanced function decomposition", trials=5)
        self.register("progressions", "progressions", "|Lambda_4(1_A) - alpha^4| <= 15 max term",
                      expansion_bookkeeping, "balanced function decomposition", tol=1e-12, trials=5)
        self.register("progressions", "progressions", "|Lambda_3| <= min ||f_i^||_inf", fourier_control,
                      "Lambda_3 in terms of Fourier coefficients")
        self.register("progressions", "progressions", "census equals N^2 Lambda_4(1_A)", census,
                      "definition of Lambda_k", tol=1e-6)
        self.register("progressions", "progressions", "balanced function has mean zero", balanced_mean,
                      "balanced function decomposition", tol=1e-12)

    def add_quadratic_checks(self):
        mid, small = self.mid, self.small
        params = OracleParams()
        inverse_anchor = "inverse theorem for the U^3 norm on F_5^n"

        def gauss(rng):
            q = random_phase(mid, _seed(rng))
            value = gauss_sum(q, mid)
            return max(0.0, abs(value) - P ** (-mat_rank(q.M) / 2))

        def gauss_equality(rng):
            q = make_phase(_symmetric(mid, rng, nonzero=False), (0,) * mid.n)
            return abs(abs(gauss_sum(q, mid)) - P ** (-mat_rank(q.M) / 2))

        def correlation_forces_u3(rng):
            q = random_phase(small, _seed(rng))
            f = planted_quadratic(small, q, float(rng.uniform(0.1, 0.9)), _seed(rng))
            return max(0.0, quad_correlation(f, q).magnitude - gowers_norm_fast(f, 3).value)

        def planted(rng):
            q = random_phase(small, _seed(rng))
            f = planted_quadratic(small, q, 0.3, _seed(rng))
            return max(0.0, 0.3 - best_quadratic_correlation(f, self.threads).magnitude)

        def exact_phase(rng):
            q = random_phase(small, _seed(rng))
            f = quad_phase_fn(q, small).conj()
            return abs(1 - best_quadratic_correlation(f, self.threads).magnitude)

        def monotone_in_delta(rng):
            f = _function(small, rng)
            best = best_quadratic_correlation(f, self.threads)
            accepted = []
            errors = 0
            for delta in (0.1, 0.3, 0.5, 0.7, 0.9):
                cert = inverse_oracle(f, delta, params, self.threads)
                accepted.append(cert is not None)
                if cert is not None and cert.phase != best.phase:
                    errors += 1
            # once rejected, every larger delta is rejected too
            errors += sum(later and not earlier for earlier, later in zip(accepted, accepted[1:]))
            return float(errors)

        def derivative_map(rng):
            q = random_phase(mid, _seed(rng))
            return abs(1 - derivative_linear_correlation(quad_phase_fn(q, mid), (3 * q.M.array) % P, (0,) * mid.n))

        self.register("quadratic", "quadratic", "|Gauss sum| <= 5^(-rank/2)", gauss, "Gauss sums", trials=200)
        self.register("quadratic", "quadratic", "|Gauss sum| = 5^(-rank/2) when r = 0", gauss_equality,
                      "Gauss sums", trials=200)
        self.register("quadratic", "quadratic", "|<f, q>| <= ||f||_U3", correlation_forces_u3,
                      "quadratic phases have U^3 norm 1", trials=50)
        self.register("quadratic", "quadratic", "oracle finds a planted correlation of 0.3", planted,
                      inverse_anchor, trials=10)
        self.register("quadratic", "quadratic", "oracle scores an exact phase at 1", exact_phase,
                      inverse_anchor, trials=5)
        self.register("quadratic", "quadratic", "oracle argmax does not depend on delta", monotone_in_delta,
                      inverse_anchor, tol=0, trials=10)
        self.register("quadratic", "quadratic", "derivative spectrum of a phase is h -> 3Mh", derivative_map,
                      "structure of the derivative spectrum")

    def add_factor_checks(self):
        mid = self.mid

        def projection(rng):
            factor = _random_factor(mid, rng, int(rng.integers(0, 3)), int(rng.integers(0, 3)))
            f = _function(mid, rng)
            e = conditional_expectation(f, factor)
            again = conditional_expectation(e, factor)
            return (float(np.max(np.abs(again.values - e.values))) + abs(inner_product(f - e, e))
                    + abs(e.mean() - f.mean()) + max(0.0, e.norm(2) - f.norm(2)))

        def pythagoras(rng):
            coarse = _random_factor(mid, rng, 1, 1)
            fine = join(coarse, _random_factor(mid, rng, 1, 1))
            if not refines(fine, coarse):
                return math.inf
            return abs(pythagoras_gap(_function(mid, rng), coarse, fine))

        def atom_count(rng):
            factor = _random_factor(mid, rng, int(rng.integers(0, 3)), int(rng.integers(0, 3)))
            d1, d2 = factor.complexity()
            return float(max(0, len(atoms(factor)) - P ** (d1 + d2)))

        def atom_sizes(rng):
            return _validation_error(atom_statistics(_random_factor(mid, rng, 1, 1)))

        def ap4_atoms(rng):
            factor = _random_factor(mid, rng, 1, 1)
            ids = atom_ids(factor)
            listed = list(atoms(factor))
            pts = mid.points
            x, d = int(rng.integers(mid.N)), int(rng.integers(mid.N))
            along = [listed[ids[int(mid.index_of(pts[x] + i * pts[d]))]] for i in range(4)]
            anywhere = [listed[int(rng.integers(len(listed)))] for _ in range(4)]
            return max(_ap4_deviation(factor, along), _ap4_deviation(factor, anywhere))

        def ap4_total(rng):
            linear = bool(rng.integers(2))
            factor = _random_factor(mid, rng, int(linear), int(not linear))
            listed = list(atoms(factor))
            total = sum(ap4_atom_probability(factor, list(t)) for t in itertools.product(listed, repeat=4))
            return abs(total - 1)

        def rank_reduction(rng):
            factor = _random_factor(mid, rng, 0, 2)
            growth = GrowthFn.constant(float(rng.integers(1, mid.n + 2)))
            reduced = rank_reduce(factor, growth)
            d1, d2 = reduced.complexity()
            short = d2 > 0 and factor_rank(reduced) < growth(d1 + d2)
            return float(short) + float(not refines(reduced, factor))

        self.register("factors", "factors", "E(.|B) is an orthogonal projection", projection,
                      "conditional expectation onto a factor", tol=1e-10)
        self.register("factors", "factors", "Pythagoras for nested factors", pythagoras, "Pythagoras' theorem",
                      tol=1e-10)
        self.register("factors", "factors", "#atoms <= 5^(d1 + d2)", atom_count, "definition of factors",
                      tol=0, trials=50)
        self.register("factors", "factors", "atom sizes within 5^(-rank/2)", atom_sizes, "size of atoms",
                      tol=0, trials=10)
        self.register("factors", "factors", "4-AP atom probabilities within 5^(-rank/2), zero off constraints",
                      ap4_atoms, "4-term progressions through atoms", tol=1.0 + 1e-9, trials=10)
        self.register("factors", "factors", "4-AP atom probabilities sum to 1", ap4_total,
                      "4-term progressions through atoms", tol=1e-9, trials=5)
        self.register("factors", "factors", "rank reduction reaches the threshold and refines", rank_reduction,
                      "making factors high-rank", tol=0, trials=10)

    def add_decomposition_checks(self):
        mid, small, pipeline = self.mid, self.small, self.pipeline
        params = OracleParams()

        def linear(rng):
            delta = (0.3, 0.5)[int(rng.integers(2))]
            return _validation_error(linear_kvn(_function(mid, rng), delta))

        def quadratic(rng):
            f = balanced(random_set(small.n, 0.5, _seed(rng)), small)
            return _validation_error(quadratic_kvn(f, 0.6, params=params, threads=self.threads))

        def regular(rng):
            f = balanced(random_set(small.n, 0.5, _seed(rng)), small)
            growth = GrowthFn.exponential(base=5, scale=5 ** 4 / 0.1)
            return _validation_error(regularity(f, 0.5, growth, params=params, threads=self.threads))

        def high_rank(rng):
            f = balanced(random_set(small.n, 0.5, _seed(rng)), small)
            growth1 = GrowthFn.polynomial(power=1, scale=1, offset=1)
            growth2 = GrowthFn.exponential(base=5, scale=5 ** 4 / 0.1)
            return _validation_error(regularity_high_rank(f, 0.5, growth1, growth2, params=params,
                                                          threads=self.threads))

        def counting(rng):
            d1, d2 = int(rng.integers(0, 3)), int(rng.integers(0, 3))
            lhs, rhs = configspace_count_inequality(rng.random((P ** d1, P ** d2)))
            return max(0.0, rhs - lhs)

        def witness(rng):
            members = random_set(pipeline.n, 0.5, _seed(rng))
            return _validation_error(bhk_experiment(members, 0.1, pipeline, params=params, threads=self.threads))

        def whole_group(rng):
            report = bhk_experiment(range(pipeline.N), 0.1, pipeline, params=params, threads=self.threads)
            return _validation_error(report)

        regularity_anchor = "arithmetic regularity lemma for U^3"
        theorem_anchor = "popular differences for 4-term progressions in F_5^n"
        self.register("decompose", "decompose", "linear KvN bounds", linear,
                      "linear Koopman-von Neumann decomposition", tol=0, trials=50)
        self.register("decompose", "decompose", "quadratic KvN bounds, energy increments, iteration cap", quadratic,
                      "quadratic Koopman-von Neumann decomposition; energy increment", tol=0, trials=25)
        self.register("decompose", "decompose", "regularity bounds", regular, regularity_anchor, tol=0, trials=10)
        self.register("decompose", "decompose", "high-rank regularity bounds", high_rank,
                      regularity_anchor + ", high-rank version", tol=0, trials=10)
        self.register("decompose", "decompose", "configuration-space counting inequality", counting,
                      "counting inequality by two applications of Cauchy-Schwarz", tol=1e-10, trials=100)
        self.register("decompose", "decompose", "random sets: witness re-counts, 81 terms, claims", witness,
                      theorem_anchor, tol=0, trials=10)
        self.register("decompose", "decompose", "A = G: witness re-counts, 81 terms, claims", whole_group,
                      theorem_anchor, tol=0, trials=1)

    # ------------------------------------------------------------------

    def run_check(self, index: int, check: InvariantCheck) -> Dict:
        violations = 0
        worst = 0.0
        for trial in range(check.trials):
            rng = np.random.default_rng([self.seed, index, trial])
            try:
                error = float(check.fn(rng))
            except QuadFourierError as exc:
                logger.warning("%s / %s, trial %d: %s", check.module, check.invariant, trial, exc)
                error = math.inf
            if not error <= check.tol:
                violations += 1
            worst = max(worst, error)
        logger.debug("%s: %s -> %d violations, max error %.3g", check.module, check.invariant, violations, worst)
        return {
            "suite": check.suite, "module": check.module, "invariant": check.invariant, "anchor": check.anchor,
            "trials": check.trials, "violations": violations, "max_error": worst, "passed": violations == 0,
        }

    def run(self) -> pd.DataFrame:
        """Run every registered check; one row per invariant."""
        if not self.checks:
            self.add_all_checks()
        rows = [self.run_check(i, check) for i, check in enumerate(self.checks)]
        return pd.DataFrame(rows, columns=COLUMNS)
