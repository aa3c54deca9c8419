"""
Multiplicative derivatives and Gowers uniformity norms.

Cube vertices are encoded as integers: vertex j of {0,1}^k has
omega_i = bit (i-1) of j. Odd-weight vertices carry a complex conjugate.
"""
import itertools
import logging
from typing import Sequence, Tuple, Union

import numpy as np

from src.errors import BudgetExceededError, DimensionTooLargeError, IdentityViolation, UnboundedInputError
from src.field import point_to_index
from src.fourier import DenseFunction, _check_same, convolve, dft, dft_batch
from src.models import GowersReport, GroupConfig, GroupPoint, resolve_budget
from src.workers import EVALUATIONS, chunked, ordered_map

logger = logging.getLogger(__name__)

SUPPORTED_K = (2, 3, 4)
IMAG_TOL = 1e-9


def _h_index(h: Union[int, GroupPoint], cfg: GroupConfig) -> int:
    if isinstance(h, GroupPoint):
        return point_to_index(h, cfg)
    return cfg.check_index(int(h))


def _check_k(k: int):
    if k not in SUPPORTED_K:
        raise ValueError(f"k must be one of {SUPPORTED_K}, got {k}")


def derivative(f: DenseFunction, h: Union[int, GroupPoint]) -> DenseFunction:
    """Delta(f;h)(x) = f(x) conj(f(x-h))."""
    cfg = f.cfg
    hi = _h_index(h, cfg)
    minus_h = cfg.index_of(cfg.points - cfg.points[hi])
    return DenseFunction(cfg, f.values * np.conj(f.values[minus_h]))


def _derivative_block(values: np.ndarray, cfg: GroupConfig, hs: Sequence[int]) -> np.ndarray:
    """(N, len(hs)) array whose column j is Delta(f; hs[j])."""
    minus = cfg.index_of(cfg.points[:, None, :] - cfg.points[np.asarray(hs)][None, :, :])
    return values[:, None] * np.conj(values[minus])


def _chunk_size(cfg: GroupConfig) -> int:
    return max(1, (1 << 18) // max(cfg.N, 1))


def _u2_power(values: np.ndarray, cfg: GroupConfig) -> float:
    spectrum = dft_batch(values, cfg)
    return float(np.sum(np.abs(spectrum) ** 4))


def _u3_power(values: np.ndarray, cfg: GroupConfig, threads: int = 1) -> float:
    """E_h ||Delta(f;h)^||_4^4, the eighth power of the U^3 norm."""
    chunks = chunked(list(range(cfg.N)), _chunk_size(cfg))

    def per_chunk(chunk):
        spectra = dft_batch(_derivative_block(values, cfg, chunk), cfg)
        return np.sum(np.abs(spectra) ** 4, axis=0)

    per_h = np.concatenate(ordered_map(per_chunk, chunks, threads))
    return float(np.mean(per_h))


def _power_fast(values: np.ndarray, cfg: GroupConfig, k: int, threads: int = 1) -> float:
    if k == 2:
        return _u2_power(values, cfg)
    if k == 3:
        return _u3_power(values, cfg, threads)
    total = [_power_fast(_derivative_block(values, cfg, [h])[:, 0], cfg, k - 1) for h in range(cfg.N)]
    return float(np.mean(total))


def fast_cost(cfg: GroupConfig, k: int) -> int:
    return cfg.N ** (k - 2) * (5 * cfg.N * cfg.n + cfg.N)


def gowers_norm_fast(f: DenseFunction, k: int, threads: int = 1) -> GowersReport:
    """
    ||f||_{U^k} via U^2 = ||f^||_4 and the recursion
    ||f||_{U^k}^{2^k} = E_h ||Delta(f;h)||_{U^{k-1}}^{2^{k-1}}.
    """
    _check_k(k)
    power = _power_fast(f.values, f.cfg, k, threads)
    return GowersReport(k=k, value=max(power, 0.0) ** (1.0 / 2 ** k), method="fast",
                        cost_model=fast_cost(f.cfg, k))


def direct_cost(cfg: GroupConfig, k: int) -> int:
    return cfg.N ** (k + 1)


def _check_budget(operation: str, cfg: GroupConfig, k: int, budget):
    limit = resolve_budget(budget)
    estimate = direct_cost(cfg, k)
    if estimate > limit:
        raise BudgetExceededError(operation, estimate, limit)


def gowers_inner_product(fs: Sequence[DenseFunction], k: int, budget: int = None,
                         threads: int = 1) -> complex:
    """
    Definitional average E_{x,h} prod_omega C^{|omega|} f_omega(x + omega.h).

    Args:
        fs: 2^k functions, fs[j] sits at the vertex whose bits are j
        k: cube dimension
        budget: maximum N^{k+1}; None reads QF_BUDGET

    Returns:
        the Gowers inner product
    """
    _check_k(k)
    if len(fs) != 2 ** k:
        raise ValueError(f"need 2^{k} = {2 ** k} functions, got {len(fs)}")
    cfg = fs[0].cfg
    for g in fs[1:]:
        _check_same(fs[0], g)
    _check_budget("gowers_inner_product", cfg, k, budget)

    pts = cfg.points
    tables = [np.conj(g.values) if bin(j).count("1") % 2 else g.values for j, g in enumerate(fs)]
    # x + h_k for every (x, h_k), offset later by the other h's
    xh = pts[:, None, :] + pts[None, :, :]
    low = 2 ** (k - 1)

    def partial(h_first: int) -> complex:
        total = 0j
        for rest in itertools.product(range(cfg.N), repeat=k - 2):
            hs = (h_first,) + rest
            prod = np.ones((cfg.N, cfg.N), dtype=np.complex128)
            for j in range(low):
                offset = sum((pts[hs[i]] for i in range(k - 1) if (j >> i) & 1), np.zeros(cfg.n, dtype=np.int64))
                base = cfg.index_of(pts + offset)
                shifted = cfg.index_of(xh + offset)
                prod *= tables[j][base][:, None]
                prod *= tables[j + low][shifted]
            total += complex(prod.sum())
        return total

    partials = ordered_map(partial, range(cfg.N), threads)
    EVALUATIONS.add(direct_cost(cfg, k) * 2 ** k)
    return complex(np.sum(np.array(partials))) / cfg.N ** (k + 1)


def gowers_norm_direct(f: DenseFunction, k: int, budget: int = None, threads: int = 1) -> GowersReport:
    """The 2^k-th root of the definitional average."""
    avg = gowers_inner_product([f] * 2 ** k, k, budget=budget, threads=threads)
    scale = max(f.sup_norm(), 1.0) ** (2 ** k)
    if abs(avg.imag) > IMAG_TOL * scale:
        raise IdentityViolation(f"U^{k} average has imaginary part {avg.imag:.3e}")
    return GowersReport(k=k, value=max(avg.real, 0.0) ** (1.0 / 2 ** k), method="direct",
                        cost_model=direct_cost(f.cfg, k) * 2 ** k)


def gowers_cauchy_schwarz_check(fs: Sequence[DenseFunction], k: int, budget: int = None) -> Tuple[float, float]:
    """|<f_omega>| <= prod ||f_omega||_{U^k}; returns (lhs, rhs)."""
    lhs = abs(gowers_inner_product(fs, k, budget=budget))
    rhs = float(np.prod([gowers_norm_fast(g, k).value for g in fs]))
    if lhs > rhs + 1e-9:
        raise IdentityViolation(f"Gowers-Cauchy-Schwarz fails: {lhs:.12g} > {rhs:.12g}")
    return lhs, rhs


def u2_inverse_check(f: DenseFunction) -> Tuple[float, float]:
    """
    For 1-bounded f: ||f^||_inf <= ||f||_{U^2} and ||f||_{U^2}^2 <= ||f^||_inf.

    Returns:
        (||f||_{U^2}, ||f^||_inf)
    """
    if not f.is_one_bounded(1e-9):
        raise UnboundedInputError(f"u2_inverse_check needs a 1-bounded function, sup = {f.sup_norm():.6g}")
    u2 = gowers_norm_fast(f, 2).value
    sup = dft(f).sup_norm()
    if sup > u2 + 1e-9:
        raise IdentityViolation(f"||f^||_inf = {sup:.12g} exceeds ||f||_U2 = {u2:.12g}")
    if u2 ** 2 > sup + 1e-9:
        raise IdentityViolation(f"||f||_U2^2 = {u2 ** 2:.12g} exceeds ||f^||_inf = {sup:.12g}")
    return u2, sup


def samorodnitsky_sides(f: DenseFunction) -> Tuple[float, float]:
    """
    Both sides of Samorodnitsky's identity.

    rhs = E_h sum_r |Delta(f;h)^(r)|^8.
    lhs = E_{h1+h2=h3+h4} E_x g1 g2 conj(g3 g4) with g_h = Delta(f;h) * Delta(f;h)°,
    grouped by s = h1 + h2.
    """
    cfg = f.cfg
    if cfg.n > 2:
        raise DimensionTooLargeError("samorodnitsky_sides", cfg.n, 2)
    derivs = [derivative(f, h) for h in range(cfg.N)]
    spectra = np.array([dft(d).values for d in derivs])
    rhs = float(np.mean(np.sum(np.abs(spectra) ** 8, axis=1)))

    g = np.array([convolve(d, d.reflect()).values for d in derivs])  # rows indexed by h
    pts = cfg.points
    s_minus_h = cfg.index_of(pts[:, None, :] - pts[None, :, :])  # [s, h] -> s - h
    pair_sums = np.einsum("hx,shx->sx", g, g[s_minus_h])
    lhs_complex = np.sum(np.abs(pair_sums) ** 2) / cfg.N ** 4
    EVALUATIONS.add(cfg.N ** 4)
    return float(lhs_complex), rhs


def samorodnitsky_configuration_sum(f: DenseFunction) -> float:
    """
    E_h E_{c1..c8: c1+c2+c3+c4 = c5+c6+c7+c8} prod_{i<=4} D_h(c_i) prod_{i>4} conj(D_h(c_i)),
    D_h = Delta(f;h), summed directly over the configuration set (n <= 1).
    """
    cfg = f.cfg
    if cfg.n > 1:
        raise DimensionTooLargeError("samorodnitsky_configuration_sum", cfg.n, 1)
    pts = cfg.points
    free = np.indices((cfg.N,) * 7).reshape(7, -1).T
    last = cfg.index_of(pts[free[:, 0]] + pts[free[:, 1]] + pts[free[:, 2]] + pts[free[:, 3]]
                        - pts[free[:, 4]] - pts[free[:, 5]] - pts[free[:, 6]])
    total = 0j
    for h in range(cfg.N):
        d = derivative(f, h).values
        dc = np.conj(d)
        term = d[free[:, 0]] * d[free[:, 1]] * d[free[:, 2]] * d[free[:, 3]]
        term = term * dc[free[:, 4]] * dc[free[:, 5]] * dc[free[:, 6]] * dc[last]
        total += complex(term.sum())
    EVALUATIONS.add(cfg.N ** 8)
    value = total / cfg.N ** 8
    if abs(value.imag) > 1e-9:
        raise IdentityViolation(f"configuration sum has imaginary part {value.imag:.3e}")
    return float(value.real)
