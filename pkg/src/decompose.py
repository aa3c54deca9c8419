"""
Decomposition drivers: linear and quadratic Koopman-von Neumann splits, the
energy increment step, both arithmetic regularity lemmas, the counting
inequality on configuration space and the four-term progression pipeline.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import (
    DimensionTooLargeError, IdentityViolation, InverseTheoremViolation, IterationCapExceeded, UnboundedInputError,
)
from src.factors import (
    ConfigSpaceFunction, QuadraticFactor, annihilator, conditional_expectation, configspace_function, energy,
    factor_rank, haar_on_subspace, join, labels, rank_reduce,
)
from src.field import span_points
from src.fourier import DenseFunction, convolve, dft_batch, large_spectrum
from src.gowers import direct_cost, gowers_norm_direct, gowers_norm_fast
from src.models import CorrelationCertificate, GroupConfig, GrowthFn, OracleParams, P
from src.progressions import lambda4_weighted, progressions_with_difference
from src.quadratic import ORACLE_MAX_N, best_quadratic_correlation, inverse_oracle

logger = logging.getLogger(__name__)

NUMERIC_FLOOR = 1e-9  # U^3 norms at or below this count as zero
INDEPENDENT_BUDGET = 10 ** 6  # direct re-measurement only below this many evaluations


@dataclass
class Decomposition:
    """f = f1 + f2 (+ f3) with f1 = E(f | factor)."""
    kind: str
    f: DenseFunction
    f1: DenseFunction
    f2: DenseFunction
    factor: QuadraticFactor
    f3: Optional[DenseFunction] = None
    iterations: int = 0
    energy_history: List[float] = field(default_factory=list)
    certificates: List[CorrelationCertificate] = field(default_factory=list)
    parameters: Dict[str, Any] = field(default_factory=dict)
    bounds: Dict[str, float] = field(default_factory=dict)  # quantity -> upper (or rank lower) bound
    measurements: Dict[str, float] = field(default_factory=dict)

    def parts(self) -> List[DenseFunction]:
        return [self.f1, self.f2] + ([self.f3] if self.f3 is not None else [])

    def residual(self) -> float:
        total = self.f1.values + self.f2.values + (self.f3.values if self.f3 is not None else 0)
        return float(np.max(np.abs(self.f.values - total)))

    def measure(self, independent: bool = False) -> Dict[str, float]:
        """
        Measure every bounded quantity. With independent=True the Gowers norms
        use the direct definitional sum whenever it is cheap enough.
        """
        def u(g: DenseFunction, k: int) -> float:
            if independent and direct_cost(g.cfg, k) * 2 ** k <= INDEPENDENT_BUDGET:
                return gowers_norm_direct(g, k, budget=INDEPENDENT_BUDGET).value
            return gowers_norm_fast(g, k).value

        out = {}
        for name in self.bounds:
            part, _, what = name.partition("_")
            g = {"f2": self.f2, "f3": self.f3}.get(part)
            if what == "u2":
                out[name] = u(g, 2)
            elif what == "u3":
                out[name] = u(g, 3)
            elif what == "l2":
                out[name] = g.norm(2)
            elif name == "complexity":
                out[name] = float(sum(self.factor.complexity()))
            elif name == "rank":
                out[name] = float(factor_rank(self.factor))
        return out

    def validate(self, independent: bool = True) -> Tuple[bool, List[str]]:
        """
        Re-check the decomposition from scratch.

        Returns:
            (is_valid, list_of_errors)
        """
        errors = []
        if self.residual() > 1e-10:
            errors.append(f"f1 + f2 + f3 differs from f by {self.residual():.3e}")
        expected = conditional_expectation(self.f, self.factor)
        gap = float(np.max(np.abs(expected.values - self.f1.values)))
        if gap > 1e-12:
            errors.append(f"f1 differs from E(f|B) by {gap:.3e}")
        for a, b in zip(self.energy_history, self.energy_history[1:]):
            if b < a - 1e-12:
                errors.append(f"energy decreased from {a:.12g} to {b:.12g}")
        measured = self.measure(independent=independent)
        for name, bound in self.bounds.items():
            value = measured[name]
            if name == "rank":
                if self.factor.quadratics and value < bound:
                    errors.append(f"rank {value:g} below required {bound:.6g}")
            elif value > bound + 1e-9:
                errors.append(f"{name} = {value:.12g} exceeds bound {bound:.12g}")
        cap = self.parameters.get("iteration_cap")
        if cap is not None and self.iterations > cap:
            errors.append(f"{self.iterations} iterations exceed the cap {cap}")
        return not errors, errors

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.f.cfg.n,
            "factor": self.factor.to_dict(),
            "complexity": list(self.factor.complexity()),
            "iterations": self.iterations,
            "energy_history": list(self.energy_history),
            "certificates": [c.to_dict() for c in self.certificates],
            "parameters": self.parameters,
            "bounds": self.bounds,
            "measurements": self.measurements,
            "residual": self.residual(),
        }


def _growth_dict(growth) -> Any:
    return growth.to_dict() if isinstance(growth, GrowthFn) else repr(growth)


class DecompositionSolver:
    """Runs the decomposition drivers on one function and keeps their trace."""

    def __init__(self, f: DenseFunction, params: Optional[OracleParams] = None, threads: int = 1):
        """
        Initialize the solver.

        Args:
            f: the function to decompose, 1-bounded
            params: oracle acceptance floor and iteration ceilings
            threads: worker threads handed to the oracle and norm kernels
        """
        self.f = f
        self.cfg = f.cfg
        self.params = params or OracleParams()
        self.threads = threads
        self.steps = 0
        self.certificates: List[CorrelationCertificate] = []
        self._validate_input()

    def _validate_input(self):
        if not self.f.is_one_bounded(1e-9):
            raise UnboundedInputError(f"decompositions need ||f||_inf <= 1, got {self.f.sup_norm():.6g}")

    def _check_oracle(self):
        if self.cfg.n > ORACLE_MAX_N:
            raise DimensionTooLargeError("quadratic decomposition (exhaustive oracle)", self.cfg.n, ORACLE_MAX_N)

    # ------------------------------------------------------------------
    # Linear Koopman-von Neumann
    # ------------------------------------------------------------------

    def linear_kvn(self, delta: float) -> Decomposition:
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        eta = delta ** 2 / 2
        spectrum = large_spectrum(self.f, eta)
        factor = QuadraticFactor(self.cfg, tuple(spectrum))
        mu = haar_on_subspace(annihilator(factor), self.cfg)
        f1 = convolve(self.f, mu)
        projected = conditional_expectation(self.f, factor)
        if not f1.allclose(projected, 1e-10):
            raise IdentityViolation("f * mu_H differs from E(f|B) for the linear factor spanned by Spec")
        f1 = projected
        f2 = self.f - f1
        dec = Decomposition(
            kind="linear_kvn", f=self.f, f1=f1, f2=f2, factor=factor,
            energy_history=[energy(self.f, factor)],
            parameters={"delta": delta, "eta": eta, "spectrum_size": len(spectrum)},
            bounds={"f2_u2": delta, "complexity": 4 * delta ** -4},
        )
        dec.measurements = dec.measure()
        return dec

    # ------------------------------------------------------------------
    # Quadratic Koopman-von Neumann
    # ------------------------------------------------------------------

    def energy_increment_step(self, factor: QuadraticFactor, delta: float):
        """
        One refinement: absent when ||f - E(f|B_2)||_{U^3} < delta, otherwise
        the join with the best quadratic phase for the remainder.
        """
        g = self.f - conditional_expectation(self.f, factor)
        u3 = gowers_norm_fast(g, 3, threads=self.threads).value
        if u3 < delta or u3 <= NUMERIC_FLOOR:
            return None
        self._check_oracle()
        cert = inverse_oracle(g, delta, self.params, threads=self.threads)
        if cert is None:
            best = best_quadratic_correlation(g, threads=self.threads).magnitude
            raise InverseTheoremViolation(u3, delta, self.params.theta(delta), best)
        refined = join(factor, QuadraticFactor(self.cfg, (cert.phase.r,), (cert.phase.M,)))
        gain = energy(self.f, refined) - energy(self.f, factor)
        if gain < self.params.increment_floor(delta) - 1e-12:
            raise IdentityViolation(f"energy gain {gain:.6g} below the floor {self.params.increment_floor(delta):.6g}")
        logger.debug("energy step: ||g||_U3=%.6g |corr|=%.6g gain=%.6g complexity=%s",
                     u3, cert.magnitude, gain, refined.complexity())
        return refined, cert

    def quadratic_kvn(self, delta: float, initial: Optional[QuadraticFactor] = None) -> Decomposition:
        if delta < 0:
            raise ValueError(f"delta must be non-negative, got {delta}")
        factor = initial or QuadraticFactor.trivial(self.cfg)
        cap = self.params.iteration_cap(delta)
        history = [energy(self.f, factor)]
        certificates = []
        steps = 0
        while True:
            result = self.energy_increment_step(factor, delta)
            if result is None:
                break
            steps += 1
            if steps > cap:
                raise IterationCapExceeded("quadratic_kvn", cap, history)
            factor, cert = result
            certificates.append(cert)
            history.append(energy(self.f, factor))
        self.steps += steps
        self.certificates.extend(certificates)
        f1 = conditional_expectation(self.f, factor)
        dec = Decomposition(
            kind="quadratic_kvn", f=self.f, f1=f1, f2=self.f - f1, factor=factor,
            iterations=steps, energy_history=history, certificates=certificates,
            parameters={"delta": delta, "theta": self.params.theta(delta),
                        "increment_floor": self.params.increment_floor(delta),
                        "iteration_cap": cap, "oracle": self.params.to_dict()},
            bounds={"f2_u3": max(delta, NUMERIC_FLOOR)},
        )
        dec.measurements = dec.measure()
        return dec

    # ------------------------------------------------------------------
    # Arithmetic regularity
    # ------------------------------------------------------------------

    def regularity(self, delta: float, growth: Callable[[float], float],
                   initial: Optional[QuadraticFactor] = None) -> Decomposition:
        if not 0 < delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {delta}")
        factors = [initial or QuadraticFactor.trivial(self.cfg)]
        energies = [energy(self.f, factors[0])]
        certificates: List[CorrelationCertificate] = []
        schedule: List[float] = []
        rounds_cap = math.ceil(delta ** -2)
        i = 0
        while True:
            complexity = max(factors[i].complexity())
            delta_next = min(1.0, 1.0 / growth(complexity))
            schedule.append(delta_next)
            kvn = self.quadratic_kvn(delta_next, initial=factors[i])
            certificates.extend(kvn.certificates)
            factors.append(kvn.factor)
            energies.append(energy(self.f, kvn.factor))
            logger.info("regularity round %d: complexity %s, delta_i %.3g, energy %.6g",
                        i + 1, kvn.factor.complexity(), delta_next, energies[-1])
            if energies[i + 1] - energies[i] <= delta ** 2:
                break
            i += 1
            if i > rounds_cap:
                raise IterationCapExceeded("regularity", rounds_cap, energies)

        coarse = conditional_expectation(self.f, factors[i])
        fine = conditional_expectation(self.f, factors[i + 1])
        dec = Decomposition(
            kind="regularity", f=self.f, f1=coarse, f2=fine - coarse, f3=self.f - fine, factor=factors[i],
            iterations=i + 1, energy_history=energies, certificates=certificates,
            parameters={"delta": delta, "growth": _growth_dict(growth), "delta_schedule": schedule,
                        "iteration_cap": rounds_cap + 1, "oracle": self.params.to_dict()},
            bounds={"f2_l2": delta, "f3_u3": max(schedule[i], NUMERIC_FLOOR)},
        )
        dec.measurements = dec.measure()
        return dec

    def regularity_high_rank(self, delta: float, growth1: Callable[[float], float],
                             growth2: Callable[[float], float],
                             initial: Optional[QuadraticFactor] = None) -> Decomposition:
        """
        Regularity followed by rank reduction, repeated while rank reduction
        moves E(f|B_2) by at least delta/2 in L^2.

        The inner regularity run uses t -> growth2(n + t): rank reduction keeps
        d1 <= n, so its output complexity stays within n + max(d1, d2).
        """
        if not 0 < delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {delta}")
        n = self.cfg.n

        def inner_growth(t: float) -> float:
            return growth2(n + t)

        factor = initial or QuadraticFactor.trivial(self.cfg)
        history = [energy(self.f, factor)]
        certificates: List[CorrelationCertificate] = []
        outer_cap = math.ceil(4 / delta ** 2)
        for round_no in range(1, outer_cap + 1):
            dec = self.regularity(delta / 2, inner_growth, initial=factor)
            certificates.extend(dec.certificates)
            reduced = rank_reduce(dec.factor, growth1)
            before = dec.f1
            after = conditional_expectation(self.f, reduced)
            move = (after - before).norm(2)
            history.append(energy(self.f, reduced))
            logger.info("high-rank round %d: %s -> %s, move %.6g", round_no,
                        dec.factor.complexity(), reduced.complexity(), move)
            factor = reduced
            if move < delta / 2:
                break
        else:
            raise IterationCapExceeded("regularity_high_rank", outer_cap, history)

        d1, d2 = factor.complexity()
        out = Decomposition(
            kind="regularity_high_rank", f=self.f, f1=after, f2=dec.f2 + before - after, f3=dec.f3,
            factor=factor, iterations=round_no, energy_history=history, certificates=certificates,
            parameters={"delta": delta, "growth1": _growth_dict(growth1), "growth2": _growth_dict(growth2),
                        "iteration_cap": outer_cap, "oracle": self.params.to_dict()},
            bounds={"f2_l2": delta, "f3_u3": max(dec.bounds["f3_u3"], NUMERIC_FLOOR),
                    "rank": growth1(d1 + d2)},
        )
        if 1 / growth2(d1 + d2) < out.bounds["f3_u3"]:
            logger.warning("f3 bound %.3g is weaker than 1/growth2(d1+d2) = %.3g",
                           out.bounds["f3_u3"], 1 / growth2(d1 + d2))
        out.measurements = out.measure()
        return out

    def get_statistics(self) -> Dict[str, Any]:
        return {"oracle_steps": self.steps, "certificates": len(self.certificates), "n": self.cfg.n}


def linear_kvn(f: DenseFunction, delta: float) -> Decomposition:
    """f = f1 + f2 with f1 = f * mu_H, H the annihilator of Spec_{delta^2/2}(f), ||f2||_{U^2} <= delta."""
    return DecompositionSolver(f).linear_kvn(delta)


def energy_increment_step(f: DenseFunction, factor: QuadraticFactor, delta: float,
                          params: Optional[OracleParams] = None, threads: int = 1):
    return DecompositionSolver(f, params, threads).energy_increment_step(factor, delta)


def quadratic_kvn(f: DenseFunction, delta: float, initial: Optional[QuadraticFactor] = None,
                  params: Optional[OracleParams] = None, threads: int = 1) -> Decomposition:
    """f = f1 + f2 with f1 = E(f|B_2) and ||f2||_{U^3} <= delta."""
    return DecompositionSolver(f, params, threads).quadratic_kvn(delta, initial)


def regularity(f: DenseFunction, delta: float, growth: Callable[[float], float],
               initial: Optional[QuadraticFactor] = None, params: Optional[OracleParams] = None,
               threads: int = 1) -> Decomposition:
    """f = f1 + f2 + f3 with ||f2||_2 <= delta and ||f3||_{U^3} <= 1/growth(d)."""
    return DecompositionSolver(f, params, threads).regularity(delta, growth, initial)


def regularity_high_rank(f: DenseFunction, delta: float, growth1: Callable[[float], float],
                         growth2: Callable[[float], float], initial: Optional[QuadraticFactor] = None,
                         params: Optional[OracleParams] = None, threads: int = 1) -> Decomposition:
    return DecompositionSolver(f, params, threads).regularity_high_rank(delta, growth1, growth2, initial)


# ----------------------------------------------------------------------
# Counting on configuration space
# ----------------------------------------------------------------------

def configspace_count_inequality(F: Union[ConfigSpaceFunction, np.ndarray]) -> Tuple[float, float]:
    """
    lhs = E_{a, b1..b4 : b1 - 3 b2 + 3 b3 - b4 = 0} F(a,b1) F(a,b2) F(a,b3) F(a,b4),
    rhs = (E F)^4; checks lhs >= rhs and that the partial Fourier form
    E_a sum_r |F~(a,r)|^2 |F~(a,-3r)|^2 agrees.

    Args:
        F: non-negative array of shape (5^d1, 5^d2)
    """
    values = F.values if isinstance(F, ConfigSpaceFunction) else np.asarray(F)
    if np.iscomplexobj(values):
        if np.max(np.abs(values.imag), initial=0.0) > 1e-12:
            raise ValueError("configuration-space function must be real")
        values = values.real
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected a 2-D array indexed by (a, b), got shape {values.shape}")
    if np.any(values < -1e-12):
        raise ValueError("configuration-space function must be non-negative")
    d1 = round(math.log(values.shape[0], P))
    d2 = round(math.log(values.shape[1], P))
    if P ** d1 != values.shape[0] or P ** d2 != values.shape[1]:
        raise ValueError(f"shape {values.shape} is not (5^d1, 5^d2)")
    if d1 + d2 > 6:
        raise DimensionTooLargeError("configspace_count_inequality", d1 + d2, 6, what="d1 + d2")

    bcfg = GroupConfig(d2)
    pts = bcfg.points
    total = 0.0
    for b1 in range(bcfg.N):
        b4 = bcfg.index_of(pts[b1] - 3 * pts[:, None, :] + 3 * pts[None, :, :])
        total += float(np.sum(values[:, b1][:, None, None] * values[:, :, None] * values[:, None, :]
                              * values[:, b4]))
    lhs = total / (values.shape[0] * bcfg.N ** 3)

    tilde = dft_batch(values.T.astype(np.complex128), bcfg)  # (r, a)
    minus_three = bcfg.scale_indices(2)
    lhs_fourier = float(np.mean(np.sum(np.abs(tilde) ** 2 * np.abs(tilde[minus_three]) ** 2, axis=0)))
    rhs = float(values.mean()) ** 4

    if abs(lhs - lhs_fourier) > 1e-9:
        raise IdentityViolation(f"constrained count {lhs:.12g} disagrees with Fourier form {lhs_fourier:.12g}")
    if lhs < rhs - 1e-10:
        raise IdentityViolation(f"counting inequality fails: {lhs:.12g} < {rhs:.12g}")
    return lhs, rhs


# ----------------------------------------------------------------------
# Four-term progressions along a subspace
# ----------------------------------------------------------------------

@dataclass
class BhkReport:
    """Every intermediate quantity of the progression pipeline."""
    n: int
    alpha: float
    epsilon: float
    mode: str = "pipeline"  # "pipeline" or "fallback"
    parameters: Dict[str, Any] = field(default_factory=dict)
    decomposition: Optional[Dict[str, Any]] = None
    subspace_dim: Optional[int] = None
    terms: Dict[str, float] = field(default_factory=dict)  # pattern "1231" -> |term|
    term_values: Dict[str, complex] = field(default_factory=dict)
    weighted_count: Optional[float] = None
    claims: Dict[str, Any] = field(default_factory=dict)
    witness: Optional[int] = None
    witness_point: Optional[List[int]] = None
    witness_count: Optional[int] = None
    recount: Optional[int] = None
    threshold: float = 0.0
    margin: Optional[float] = None

    def validate(self) -> Tuple[bool, List[str]]:
        errors = []
        for name, claim in self.claims.items():
            if isinstance(claim, dict) and claim.get("holds") is False:
                errors.append(f"{name}: {claim}")
        if self.witness is None:
            errors.append("no difference d != 0 reaches (alpha^4 - epsilon) N")
        elif self.recount != self.witness_count:
            errors.append(f"witness recount {self.recount} != {self.witness_count}")
        return not errors, errors

    def terms_frame(self) -> pd.DataFrame:
        rows = [{"pattern": k, "real": v.real, "imag": v.imag, "abs": abs(v)} for k, v in self.term_values.items()]
        return pd.DataFrame(rows, columns=["pattern", "real", "imag", "abs"])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n, "alpha": self.alpha, "epsilon": self.epsilon, "mode": self.mode,
            "parameters": self.parameters, "decomposition": self.decomposition,
            "subspace_dim": self.subspace_dim,
            "terms": {k: [v.real, v.imag] for k, v in self.term_values.items()},
            "weighted_count": self.weighted_count, "claims": self.claims,
            "witness": self.witness, "witness_point": self.witness_point,
            "witness_count": self.witness_count, "recount": self.recount,
            "threshold": self.threshold, "margin": self.margin,
        }


def _bound_record(observed: float, bound: float) -> Dict[str, Any]:
    return {
        "observed": observed, "bound": bound, "holds": observed <= bound + 1e-9,
        "status": "vacuous" if bound >= 1 else "satisfied" if observed <= bound + 1e-9 else "violated",
    }


def _main_term_distance(factor: QuadraticFactor, basis, cfg: GroupConfig) -> float:
    """
    Total variation between the atom tuples met along x, x+d, x+2d, x+3d with d uniform
    in H and the uniform law on tuples obeying b1 - 3 b2 + 3 b3 - b4 = 0.

    For d in H the linear part is constant along the progression and b4 is fixed by
    b1, b2, b3, so a tuple is keyed by (a, b1, b2, b3).
    """
    d1, d2 = factor.complexity()
    table = labels(factor)
    a_index = GroupConfig(d1).index_of(table[:, :d1]).astype(np.int64)
    b_index = GroupConfig(d2).index_of(table[:, d1:]).astype(np.int64)
    width = P ** d2
    pts = cfg.points
    keys = []
    for d in span_points(basis, cfg):
        b2, b3 = (b_index[cfg.index_of(pts + i * pts[d])] for i in (1, 2))
        keys.append(((a_index * width + b_index) * width + b2) * width + b3)
    _, counts = np.unique(np.concatenate(keys), return_counts=True)
    observed = counts / counts.sum()
    uniform = float(P) ** -(d1 + 3 * d2)
    return 0.5 * (float(np.abs(observed - uniform).sum()) + 1.0 - counts.size * uniform)


def _recount(members: Iterable[int], d: int, cfg: GroupConfig) -> int:
    """Plain loop over x: x, x+d, x+2d, x+3d all in A."""
    members = set(members)
    step = cfg.points[d]
    count = 0
    for x in range(cfg.N):
        point = cfg.points[x]
        if all(int(cfg.index_of(point + i * step)) in members for i in range(4)):
            count += 1
    return count


def _find_witness(members, candidates: Iterable[int], threshold: float, cfg: GroupConfig):
    best_d, best_count = None, -1
    for d in candidates:
        count = progressions_with_difference(members, d, cfg)
        if count > best_count:
            best_d, best_count = d, count
    if best_d is None or best_count < threshold:
        return None, best_count
    return best_d, best_count


def bhk_experiment(members: Iterable[int], epsilon: float, cfg: GroupConfig,
                   params: Optional[OracleParams] = None, threads: int = 1) -> BhkReport:
    """
    Look for d != 0 with at least (alpha^4 - epsilon) N progressions x, x+d, x+2d, x+3d in A,
    following the high-rank regularity proof: decompose 1_A, restrict d to H, split the
    weighted count into 81 terms and check each estimate along the way.
    """
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if cfg.n > 4:
        raise DimensionTooLargeError("bhk_experiment", cfg.n, 4)
    members = sorted(set(int(i) for i in members))
    for i in members:
        cfg.check_index(i)
    alpha = len(members) / cfg.N
    report = BhkReport(n=cfg.n, alpha=alpha, epsilon=epsilon, threshold=(alpha ** 4 - epsilon) * cfg.N)
    nonzero = list(range(1, cfg.N))
    candidates = nonzero

    if cfg.n <= ORACLE_MAX_N and alpha > 0:
        delta = epsilon / 200
        growth2 = GrowthFn.exponential(base=5, scale=5 ** 4 / epsilon)
        growth1 = GrowthFn.polynomial(
            power=1, scale=100, offset=math.ceil(math.log(1 / epsilon)) + math.ceil(math.log(1 / alpha)))
        report.parameters = {"delta": delta, "growth1": growth1.to_dict(), "growth2": growth2.to_dict()}

        f = DenseFunction.indicator(members, cfg)
        dec = regularity_high_rank(f, delta, growth1, growth2, params=params, threads=threads)
        report.decomposition = dec.to_dict()
        basis = annihilator(dec.factor)
        report.subspace_dim = len(basis)
        mu = haar_on_subspace(basis, cfg)

        parts = [dec.f1, dec.f2, dec.f3]
        for pattern in itertools.product(range(3), repeat=4):
            report.term_values["".join(str(p + 1) for p in pattern)] = lambda4_weighted(
                *[parts[p] for p in pattern], mu)
        report.terms = {k: abs(v) for k, v in report.term_values.items()}
        report.weighted_count = lambda4_weighted(f, f, f, f, mu).real
        total = sum(report.term_values.values())
        if abs(total - report.weighted_count) > 1e-8:
            raise IdentityViolation(f"81 terms sum to {total}, weighted count is {report.weighted_count}")

        d1, _ = dec.factor.complexity()
        f2_l2 = dec.f2.norm(2)
        f3_u3 = gowers_norm_fast(dec.f3, 3).value
        report.claims["f2_terms"] = _bound_record(
            max(v for k, v in report.terms.items() if "2" in k), f2_l2)
        report.claims["f3_terms"] = _bound_record(
            max(v for k, v in report.terms.items() if "3" in k), P ** (2 * d1) * f3_u3)

        config = configspace_function(dec.f1, dec.factor)
        lhs, rhs = configspace_count_inequality(config)
        report.claims["configspace_count"] = {"lhs": lhs, "rhs": rhs, "holds": lhs >= rhs - 1e-10,
                                              "empty_atoms": config.empty_atoms}
        report.claims["configspace_density"] = {"mean": float(config.values.mean()), "alpha": alpha}
        main = report.term_values["1111"].real
        report.claims["main_term"] = {"weighted": main, "configspace": lhs,
                                      **_bound_record(abs(main - lhs), _main_term_distance(dec.factor, basis, cfg))}

        candidates = [int(d) for d in np.nonzero(mu.values.real > 0)[0] if d != 0]
    else:
        report.mode = "fallback"

    witness, count = _find_witness(members, candidates, report.threshold, cfg)
    if witness is None and candidates is not nonzero:
        logger.info("no witness inside H (dim %s); searching all d != 0", report.subspace_dim)
        report.mode = "fallback"
        witness, count = _find_witness(members, nonzero, report.threshold, cfg)
    if witness is not None:
        report.witness = witness
        report.witness_point = [int(v) for v in cfg.points[witness]]
        report.witness_count = count
        report.recount = _recount(members, witness, cfg)
        report.margin = count - report.threshold
    return report
