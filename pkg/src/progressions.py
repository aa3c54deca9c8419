"""
Arithmetic-progression counting operators Lambda_3 and Lambda_4, balanced
functions, progression censuses and the generalised von Neumann checks.

All averages run over (x, d) in G x G and include the trivial progressions d = 0.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.errors import DimensionTooLargeError, IdentityViolation, UnboundedInputError
from src.fourier import DenseFunction, _check_same, dft
from src.gowers import gowers_norm_fast
from src.models import APCensus, APCountReport, GroupConfig
from src.workers import EVALUATIONS

logger = logging.getLogger(__name__)


def _same_cfg(fs: Sequence[DenseFunction]) -> GroupConfig:
    for g in fs[1:]:
        _check_same(fs[0], g)
    return fs[0].cfg


def _progression_average(fs: Sequence[DenseFunction], weight: Optional[np.ndarray] = None) -> complex:
    """E_{x,d} w(d) prod_i f_i(x + i d), looping over d and vectorising over x."""
    cfg = _same_cfg(fs)
    pts = cfg.points
    total = 0j
    for d in range(cfg.N):
        w = 1.0 if weight is None else weight[d]
        if w == 0:
            continue
        prod = np.ones(cfg.N, dtype=np.complex128)
        for i, g in enumerate(fs):
            prod *= g.values[cfg.index_of(pts + i * pts[d])] if i else g.values
        total += w * complex(prod.sum())
    EVALUATIONS.add(cfg.N ** 2 * len(fs))
    return total / cfg.N ** 2


def lambda3(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction) -> complex:
    """E_{x,d} f1(x) f2(x+d) f3(x+2d)."""
    return _progression_average([f1, f2, f3])


def lambda3_spectral(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction) -> complex:
    """sum_r f1^(r) f2^(-2r) f3^(r); -2r is 3r coordinatewise."""
    cfg = _same_cfg([f1, f2, f3])
    minus_two = cfg.scale_indices(3)
    s1, s2, s3 = dft(f1).values, dft(f2).values, dft(f3).values
    return complex(np.sum(s1 * s2[minus_two] * s3))


def lambda4(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction, f4: DenseFunction) -> complex:
    """E_{x,d} f1(x) f2(x+d) f3(x+2d) f4(x+3d)."""
    return _progression_average([f1, f2, f3, f4])


def lambda4_weighted(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction, f4: DenseFunction,
                     w: DenseFunction) -> complex:
    """E_{x,d} f1(x) f2(x+d) f3(x+2d) f4(x+3d) w(d), for a probability density w."""
    _check_same(f1, w)
    weights = w.values
    if np.any(weights.real < -1e-12) or not w.is_real() or abs(w.mean() - 1) > 1e-9:
        logger.warning("weight is not a probability density (mean %s); using it as given", w.mean())
    return _progression_average([f1, f2, f3, f4], weight=weights)


def lambda_report(fs: Sequence[DenseFunction], method: str = "direct",
                  weight: Optional[DenseFunction] = None) -> APCountReport:
    """Lambda_3 or Lambda_4 (by len(fs)) through the requested method."""
    k = len(fs)
    if k not in (3, 4):
        raise ValueError(f"Lambda_k is implemented for k = 3, 4, got {k}")
    if method == "spectral":
        if k != 3:
            raise ValueError("the spectral formula exists for Lambda_3 only")
        value = lambda3_spectral(*fs)
    elif method == "weighted":
        if k != 4 or weight is None:
            raise ValueError("the weighted count needs four functions and a weight")
        value = lambda4_weighted(*fs, weight)
    elif method == "direct":
        value = lambda3(*fs) if k == 3 else lambda4(*fs)
    else:
        raise ValueError(f"unknown method '{method}'")
    return APCountReport(k=k, value=value, trivial_count_included=True, method=method)


def density(members: Iterable[int], cfg: GroupConfig) -> float:
    return len(set(members)) / cfg.N


def balanced(members: Iterable[int], cfg: GroupConfig) -> DenseFunction:
    """f_A = 1_A - alpha."""
    members = set(members)
    indicator = DenseFunction.indicator(members, cfg)
    return DenseFunction(cfg, indicator.values - len(members) / cfg.N)


@dataclass
class BalancedExpansionReport:
    """Every term of the balanced-function expansion of Lambda_k(1_{A_1}, ...)."""
    k: int
    densities: List[float]
    terms: Dict[str, complex] = field(default_factory=dict)  # pattern like "a f a f" -> value
    total: complex = 0j
    direct: complex = 0j
    main_term: float = 0.0
    max_other_term: float = 0.0

    def deviation_bound(self) -> float:
        """(2^k - 1) times the largest non-main term."""
        return (2 ** self.k - 1) * self.max_other_term

    def to_dict(self) -> Dict:
        return {
            "k": self.k,
            "densities": self.densities,
            "terms": {key: [v.real, v.imag] for key, v in self.terms.items()},
            "total": [self.total.real, self.total.imag],
            "direct": [self.direct.real, self.direct.imag],
            "main_term": self.main_term,
            "max_other_term": self.max_other_term,
        }


def balanced_expansion_check(sets: Sequence[Set[int]], cfg: GroupConfig) -> BalancedExpansionReport:
    """
    Expand Lambda_k(1_{A_1}, ..., 1_{A_k}) with 1_A = alpha + f_A into 2^k terms
    and check the sum against the direct count.

    Args:
        sets: three or four sets of indices
        cfg: the group
    """
    k = len(sets)
    if k not in (3, 4):
        raise ValueError(f"need 3 or 4 sets, got {k}")
    if cfg.n > 3:
        raise DimensionTooLargeError("balanced_expansion_check", cfg.n, 3)
    alphas = [density(a, cfg) for a in sets]
    pieces = [(DenseFunction.constant(cfg, a), balanced(s, cfg)) for a, s in zip(alphas, sets)]
    op = lambda3 if k == 3 else lambda4

    report = BalancedExpansionReport(k=k, densities=alphas)
    for pattern in itertools.product((0, 1), repeat=k):
        args = [pieces[i][choice] for i, choice in enumerate(pattern)]
        label = " ".join("f" if c else "a" for c in pattern)
        report.terms[label] = op(*args)
    report.total = complex(sum(report.terms.values()))
    report.direct = op(*[DenseFunction.indicator(s, cfg) for s in sets])
    report.main_term = float(np.prod(alphas))
    report.max_other_term = max((abs(v) for key, v in report.terms.items() if "f" in key), default=0.0)

    if abs(report.total - report.direct) > 1e-9:
        raise IdentityViolation(f"balanced expansion sums to {report.total}, direct count is {report.direct}")
    if abs(report.direct - report.main_term) > report.deviation_bound() + 1e-9:
        raise IdentityViolation("deviation from the main term exceeds the sum of the other terms")
    return report


@dataclass
class GvnReport:
    """Generalised von Neumann measurements for one tuple of functions."""
    lambda4_abs: float
    min_u3: float
    lambda3_abs: float
    min_u2: float

    @property
    def slack4(self) -> float:
        return self.min_u3 - self.lambda4_abs

    @property
    def slack3(self) -> float:
        return self.min_u2 - self.lambda3_abs

    def validate(self, tol: float = 1e-9) -> Tuple[bool, List[str]]:
        errors = []
        if self.slack4 < -tol:
            errors.append(f"|Lambda_4| = {self.lambda4_abs:.12g} > min U^3 = {self.min_u3:.12g}")
        if self.slack3 < -tol:
            errors.append(f"|Lambda_3| = {self.lambda3_abs:.12g} > min U^2 = {self.min_u2:.12g}")
        return not errors, errors

    def to_dict(self) -> Dict:
        return {
            "lambda4_abs": self.lambda4_abs, "min_u3": self.min_u3, "slack4": self.slack4,
            "lambda3_abs": self.lambda3_abs, "min_u2": self.min_u2, "slack3": self.slack3,
        }


def gvn_check(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction, f4: DenseFunction) -> GvnReport:
    """|Lambda_4| <= min ||f_i||_{U^3} and |Lambda_3(f1,f2,f3)| <= min ||f_i||_{U^2}."""
    fs = [f1, f2, f3, f4]
    _same_cfg(fs)
    for i, g in enumerate(fs, 1):
        if not g.is_one_bounded(1e-9):
            raise UnboundedInputError(f"f{i} has sup norm {g.sup_norm():.6g} > 1")
    report = GvnReport(
        lambda4_abs=abs(lambda4(*fs)),
        min_u3=min(gowers_norm_fast(g, 3).value for g in fs),
        lambda3_abs=abs(lambda3(f1, f2, f3)),
        min_u2=min(gowers_norm_fast(g, 2).value for g in fs[:3]),
    )
    ok, errors = report.validate()
    if not ok:
        raise IdentityViolation("; ".join(errors))
    return report


def lambda3_fourier_control(f1: DenseFunction, f2: DenseFunction, f3: DenseFunction) -> Tuple[float, float]:
    """
    |Lambda_3(f1,f2,f3)| <= min_i ||f_i^||_inf for 1-bounded inputs.

    Returns:
        (|Lambda_3|, min_i ||f_i^||_inf)
    """
    fs = [f1, f2, f3]
    for g in fs:
        if not g.is_one_bounded(1e-9):
            raise UnboundedInputError(f"Fourier control needs 1-bounded inputs, sup = {g.sup_norm():.6g}")
    value = abs(lambda3_spectral(*fs))
    bound = min(dft(g).sup_norm() for g in fs)
    if value > bound + 1e-9:
        raise IdentityViolation(f"|Lambda_3| = {value:.12g} exceeds min ||f^||_inf = {bound:.12g}")
    return value, bound


def _member_mask(members: Iterable[int], cfg: GroupConfig) -> np.ndarray:
    mask = np.zeros(cfg.N, dtype=bool)
    for i in set(int(i) for i in members):
        mask[cfg.check_index(i)] = True
    return mask


def _progression_hits(mask: np.ndarray, d: int, cfg: GroupConfig, k: int) -> int:
    pts = cfg.points
    hit = mask.copy()
    for i in range(1, k):
        hit &= mask[cfg.index_of(pts + i * pts[d])]
    return int(hit.sum())


def ap_census(members: Iterable[int], k: int, cfg: GroupConfig) -> APCensus:
    """
    Integer count of k-term progressions x, x+d, ... inside A, reported both with
    the |A| trivial progressions (d = 0) and without them.
    """
    if k not in (3, 4):
        raise ValueError(f"k must be 3 or 4, got {k}")
    if cfg.n > 4:
        raise DimensionTooLargeError("ap_census", cfg.n, 4)
    mask = _member_mask(members, cfg)
    total = sum(_progression_hits(mask, d, cfg, k) for d in range(cfg.N))
    return APCensus(k=k, with_trivial=total, without_trivial=total - int(mask.sum()))


def progressions_with_difference(members: Iterable[int], d: int, cfg: GroupConfig, k: int = 4) -> int:
    """Number of x with x, x+d, ..., x+(k-1)d all in A."""
    return _progression_hits(_member_mask(members, cfg), d, cfg, k)
