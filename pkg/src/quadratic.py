"""
Quadratic phases omega^(x^T M x + r^T x), Gauss sums, quadratic correlations,
the exhaustive inverse-theorem oracle for the U^3 norm, and the derivative
spectrum diagnostics.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import ConfigMismatchError, DimensionTooLargeError, IdentityViolation
from src.field import lex_argmin, lex_key, mat_rank, symmetrize
from src.fourier import DenseFunction, dft_batch
from src.gowers import _derivative_block
from src.models import (
    CorrelationCertificate, GroupConfig, LinearForm, OMEGA, OracleParams, P, QuadraticPhase, SymMatrix,
)
from src.workers import EVALUATIONS, ordered_map

logger = logging.getLogger(__name__)

ORACLE_MAX_N = 3
ORACLE_CHUNK = 625
TIE_TOL = 1e-12


def make_phase(M, r) -> QuadraticPhase:
    """QuadraticPhase with M replaced by its symmetric part."""
    return QuadraticPhase(symmetrize(M), LinearForm.reduce(r.r if isinstance(r, LinearForm) else r))


def quadratic_values(M: SymMatrix, cfg: GroupConfig) -> np.ndarray:
    """x^T M x mod 5 for every x."""
    if M.n != cfg.n:
        raise ConfigMismatchError(f"matrix is {M.n}x{M.n}, group has n = {cfg.n}")
    pts = cfg.points
    return np.einsum("xi,ij,xj->x", pts, M.array, pts) % P


def quad_phase_fn(q: QuadraticPhase, cfg: GroupConfig) -> DenseFunction:
    if q.n != cfg.n:
        raise ConfigMismatchError(f"phase has n = {q.n}, group has n = {cfg.n}")
    exponent = (quadratic_values(q.M, cfg) + cfg.points @ q.r.as_array()) % P
    return DenseFunction(cfg, OMEGA[exponent])


def gauss_sum(q: QuadraticPhase, cfg: GroupConfig) -> complex:
    """E_x omega^(x^T M x + r^T x); |value| <= 5^(-rank/2), with equality when r = 0."""
    value = quad_phase_fn(q, cfg).mean()
    bound = P ** (-mat_rank(q.M) / 2)
    if abs(value) > bound + 1e-9:
        raise IdentityViolation(f"|Gauss sum| = {abs(value):.12g} exceeds 5^(-rank/2) = {bound:.12g}")
    if q.r.is_zero() and abs(abs(value) - bound) > 1e-9:
        raise IdentityViolation(f"r = 0 but |Gauss sum| = {abs(value):.12g} != {bound:.12g}")
    return value


def quad_correlation(f: DenseFunction, q: QuadraticPhase) -> CorrelationCertificate:
    """E_x f(x) omega^(x^T M x + r^T x), no conjugate."""
    corr = (f * quad_phase_fn(q, f.cfg)).mean()
    return CorrelationCertificate(phase=q, correlation=corr, magnitude=abs(corr))


@lru_cache(maxsize=8)
def _upper_positions(n: int) -> Tuple[Tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i, n))


@lru_cache(maxsize=8)
def _all_uppers(n: int) -> np.ndarray:
    """Upper-triangle entries of every symmetric matrix, in lexicographic order of M."""
    m = len(_upper_positions(n))
    table = np.array(list(itertools.product(range(P), repeat=m)), dtype=np.int64).reshape(-1, m)
    table.setflags(write=False)
    return table


def _monomials(cfg: GroupConfig) -> np.ndarray:
    """Columns x_i x_j (doubled off the diagonal), so x^T M x = monomials @ upper(M)."""
    pts = cfg.points
    cols = [pts[:, i] * pts[:, j] * (1 if i == j else 2) for i, j in _upper_positions(cfg.n)]
    return np.stack(cols, axis=1) if cols else np.zeros((cfg.N, 0), dtype=np.int64)


def _upper_to_matrix(upper, n: int) -> SymMatrix:
    a = np.zeros((n, n), dtype=np.int64)
    for (i, j), v in zip(_upper_positions(n), upper):
        a[i, j] = a[j, i] = v
    return SymMatrix.from_array(a)


def _check_oracle_n(cfg: GroupConfig, operation: str):
    if cfg.n > ORACLE_MAX_N:
        raise DimensionTooLargeError(operation, cfg.n, ORACLE_MAX_N)


def _correlation_block(f: DenseFunction, mon: np.ndarray, uppers: np.ndarray) -> np.ndarray:
    """(N_r, K) correlations E_x f(x) omega^(Q_j(x) + r.x) for a block of matrices."""
    exponents = (mon @ uppers.T) % P
    EVALUATIONS.add(exponents.size)
    return dft_batch(OMEGA[exponents] * f.values[:, None], f.cfg)


def _better(mag: float, key: tuple, best_mag: float, best_key: tuple) -> bool:
    if mag > best_mag + TIE_TOL:
        return True
    return abs(mag - best_mag) <= TIE_TOL and key < best_key


def best_quadratic_correlation(f: DenseFunction, threads: int = 1) -> CorrelationCertificate:
    """
    Exhaustive argmax of |E_x f(x) omega^(x^T M x + r^T x)| over every symmetric M
    and every r. Ties go to the lexicographically least (M, r).
    """
    cfg = f.cfg
    _check_oracle_n(cfg, "inverse_oracle")
    mon = _monomials(cfg)
    uppers = _all_uppers(cfg.n)
    starts = list(range(0, uppers.shape[0], ORACLE_CHUNK))

    def search(start: int):
        block = _correlation_block(f, mon, uppers[start:start + ORACLE_CHUNK])
        mags = np.abs(block)
        top = mags.max()
        rows, cols = np.nonzero(mags >= top - TIE_TOL)
        best = min(zip(cols, rows), key=lambda jr: (int(jr[0]), lex_key(int(jr[1]), cfg)))
        j, r = int(best[0]), int(best[1])
        return float(mags[r, j]), (start + j, lex_key(r, cfg)), complex(block[r, j]), start + j, r

    best = None
    for mag, key, corr, m_pos, r_idx in ordered_map(search, starts, threads):
        if best is None or _better(mag, key, best[0], best[1]):
            best = (mag, key, corr, m_pos, r_idx)
    mag, _, corr, m_pos, r_idx = best
    phase = QuadraticPhase(_upper_to_matrix(uppers[m_pos], cfg.n),
                           LinearForm(tuple(int(v) for v in cfg.points[r_idx])))
    return CorrelationCertificate(phase=phase, correlation=corr, magnitude=abs(corr))


def inverse_oracle(f: DenseFunction, delta: float, params: Optional[OracleParams] = None,
                   threads: int = 1) -> Optional[CorrelationCertificate]:
    """
    Best quadratic phase for f, or None when its correlation is below theta(delta).

    Args:
        f: function on F_5^n, n <= 3
        delta: the U^3 level the caller is testing
        params: acceptance floor parameters (theta(delta) = delta^4 / 2 by default)
        threads: worker threads for the matrix search
    """
    params = params or OracleParams()
    cert = best_quadratic_correlation(f, threads=threads)
    floor = params.theta(delta)
    logger.debug("oracle: best |corr| = %.6g, floor theta(%.4g) = %.6g", cert.magnitude, delta, floor)
    if cert.magnitude < floor:
        return None
    return cert


def quadratic_spectrum(f: DenseFunction, delta: float, threads: int = 1) -> List[CorrelationCertificate]:
    """Every (M, r) with |correlation| >= delta, in the oracle's lexicographic order."""
    cfg = f.cfg
    _check_oracle_n(cfg, "quadratic_spectrum")
    mon = _monomials(cfg)
    uppers = _all_uppers(cfg.n)
    starts = list(range(0, uppers.shape[0], ORACLE_CHUNK))

    def search(start: int):
        block = _correlation_block(f, mon, uppers[start:start + ORACLE_CHUNK])
        rows, cols = np.nonzero(np.abs(block) >= delta)
        return [(start + int(j), int(r), complex(block[r, j])) for r, j in zip(rows, cols)]

    hits = [hit for found in ordered_map(search, starts, threads) for hit in found]
    hits.sort(key=lambda h: (h[0], lex_key(h[1], cfg)))
    return [
        CorrelationCertificate(
            phase=QuadraticPhase(_upper_to_matrix(uppers[m_pos], cfg.n),
                                 LinearForm(tuple(int(v) for v in cfg.points[r]))),
            correlation=corr, magnitude=abs(corr))
        for m_pos, r, corr in hits
    ]


@dataclass
class DerivativeSpectrumMap:
    """The sets Phi(h) of large derivative coefficients and a selection phi(h)."""
    cfg: GroupConfig
    threshold: float
    entries: Dict[int, List[int]] = field(default_factory=dict)  # h index -> r indices
    selection: Dict[int, int] = field(default_factory=dict)  # h index -> r index
    mode: str = "argmax"

    @property
    def support(self) -> List[int]:
        """S = {h : Phi(h) nonempty}."""
        return sorted(h for h, rs in self.entries.items() if rs)

    def phi(self, h: int) -> LinearForm:
        return LinearForm(tuple(int(v) for v in self.cfg.points[self.selection[h]]))

    def forms(self, h: int) -> List[LinearForm]:
        return [LinearForm(tuple(int(v) for v in self.cfg.points[r])) for r in self.entries.get(h, [])]

    def to_dict(self) -> Dict:
        return {
            "n": self.cfg.n,
            "threshold": self.threshold,
            "mode": self.mode,
            "entries": {str(h): rs for h, rs in sorted(self.entries.items()) if rs},
            "selection": {str(h): r for h, r in sorted(self.selection.items())},
        }


def _derivative_spectra(f: DenseFunction) -> np.ndarray:
    """(N_r, N_h) array: column h is the transform of Delta(f;h)."""
    cfg = f.cfg
    return dft_batch(_derivative_block(f.values, cfg, list(range(cfg.N))), cfg)


def derivative_spectrum(f: DenseFunction, eta: float, mode: str = "argmax",
                        seed: Optional[int] = None) -> DerivativeSpectrumMap:
    """
    Phi(h) = {r : |Delta(f;h)^(r)| >= eta} for every h, and a choice phi(h) in Phi(h):
    the largest coefficient (lexicographic tie-break) or, in "random" mode,
    a uniformly random element drawn from a seeded generator.
    """
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if mode not in ("argmax", "random"):
        raise ValueError(f"unknown selection mode '{mode}'")
    cfg = f.cfg
    mags = np.abs(_derivative_spectra(f))
    rng = np.random.default_rng(seed)
    dmap = DerivativeSpectrumMap(cfg=cfg, threshold=eta, mode=mode)
    for h in range(cfg.N):
        column = mags[:, h]
        large = [int(r) for r in np.nonzero(column >= eta)[0]]
        dmap.entries[h] = large
        if not large:
            continue
        if mode == "random":
            dmap.selection[h] = large[int(rng.integers(len(large)))]
        else:
            top = column[large].max()
            dmap.selection[h] = lex_argmin([r for r in large if column[r] >= top - TIE_TOL], cfg)
    return dmap


def additive_quadruple_count(dmap: DerivativeSpectrumMap) -> int:
    """#{(s1,s2,s3,s4) in S^4 : s1+s2 = s3+s4 and phi(s1)+phi(s2) = phi(s3)+phi(s4)}."""
    cfg = dmap.cfg
    support = np.array(dmap.support, dtype=np.int64)
    if support.size == 0:
        return 0
    pts = cfg.points
    in_s = np.zeros(cfg.N, dtype=bool)
    in_s[support] = True
    phi = np.full(cfg.N, -1, dtype=np.int64)
    for h, r in dmap.selection.items():
        phi[h] = r
    count = 0
    s2 = pts[support][:, None, :]
    s3 = pts[support][None, :, :]
    phi2 = pts[phi[support]][:, None, :]
    phi3 = pts[phi[support]][None, :, :]
    for s1 in support:
        s4 = cfg.index_of(pts[s1] + s2 - s3)
        ok = in_s[s4]
        target = cfg.index_of(pts[phi[s1]] + phi2 - phi3)
        count += int(np.sum(ok & (phi[s4] == target)))
    EVALUATIONS.add(support.size ** 3)
    return count


def derivative_linear_correlation(f: DenseFunction, M, b) -> float:
    """E_h |Delta(f;h)^(M h + b)|^2."""
    cfg = f.cfg
    mat = np.asarray(M.array if isinstance(M, SymMatrix) else M, dtype=np.int64) % P
    vec = np.asarray(b.r if isinstance(b, LinearForm) else b, dtype=np.int64) % P
    if mat.shape != (cfg.n, cfg.n) or vec.shape != (cfg.n,):
        raise ConfigMismatchError(f"need an {cfg.n}x{cfg.n} matrix and a length-{cfg.n} vector")
    spectra = _derivative_spectra(f)
    target = cfg.index_of(cfg.points @ mat.T + vec)
    return float(np.mean(np.abs(spectra[target, np.arange(cfg.N)]) ** 2))
