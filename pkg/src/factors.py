"""
Linear and quadratic factors: the sigma-algebras generated by linear forms
r_j^T x and pure quadratics x^T M_j x, their atoms, conditional expectation,
energy, joins, rank and rank reduction, and the atom-counting lemmas.
"""
import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import ConfigMismatchError, DimensionTooLargeError, IdentityViolation
from src.field import mat_rank, null_space, point_to_index, row_basis, row_space_basis, span_points
from src.fourier import DenseFunction, _check_same
from src.models import Atom, GroupConfig, GroupPoint, LinearForm, P, SymMatrix
from src.quadratic import quadratic_values
from src.workers import EVALUATIONS

logger = logging.getLogger(__name__)

MAX_RANK_D2 = 6


@dataclass(frozen=True)
class QuadraticFactor:
    """
    The pair (B_1, B_2): B_1 generated by the linear forms, B_2 by the linear
    forms together with the quadratics. Linear forms are reduced to an
    independent list at construction.
    """
    cfg: GroupConfig
    linear_forms: Tuple[LinearForm, ...] = ()
    quadratics: Tuple[SymMatrix, ...] = ()

    def __post_init__(self):
        forms = tuple(self.linear_forms)
        for r in forms:
            if r.n != self.cfg.n:
                raise ConfigMismatchError(f"linear form {r} does not live on {self.cfg}")
        for M in self.quadratics:
            if M.n != self.cfg.n:
                raise ConfigMismatchError(f"quadratic of size {M.n} does not live on {self.cfg}")
        kept = row_basis(forms)
        object.__setattr__(self, "linear_forms", tuple(forms[i] for i in kept))
        object.__setattr__(self, "quadratics", tuple(self.quadratics))

    @classmethod
    def trivial(cls, cfg: GroupConfig) -> "QuadraticFactor":
        return cls(cfg)

    def complexity(self) -> Tuple[int, int]:
        return len(self.linear_forms), len(self.quadratics)

    def to_dict(self) -> Dict:
        return {
            "n": self.cfg.n,
            "linear": [list(r.r) for r in self.linear_forms],
            "quadratics": [M.to_list() for M in self.quadratics],
        }

    def __str__(self) -> str:
        d1, d2 = self.complexity()
        return f"QuadraticFactor(n={self.cfg.n}, d1={d1}, d2={d2})"


@lru_cache(maxsize=256)
def labels(factor: QuadraticFactor) -> np.ndarray:
    """(N, d1 + d2) array with row x = (Gamma(x), Phi(x))."""
    cfg = factor.cfg
    cols = [(cfg.points @ r.as_array()) % P for r in factor.linear_forms]
    cols += [quadratic_values(M, cfg) for M in factor.quadratics]
    table = np.stack(cols, axis=1) if cols else np.zeros((cfg.N, 0), dtype=np.int64)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=256)
def atom_ids(factor: QuadraticFactor) -> np.ndarray:
    """Atom number of every x; atoms are numbered in lexicographic (a, b) order."""
    table = labels(factor)
    if table.shape[1] == 0:
        ids = np.zeros(factor.cfg.N, dtype=np.int64)
    else:
        _, inverse = np.unique(table, axis=0, return_inverse=True)
        ids = inverse.reshape(-1).astype(np.int64)
    ids.setflags(write=False)
    return ids


def _split(row, d1: int) -> Atom:
    row = tuple(int(v) for v in row)
    return Atom(a=row[:d1], b=row[d1:])


def atom_of(factor: QuadraticFactor, x) -> Atom:
    """(Gamma(x), Phi(x))."""
    i = point_to_index(x, factor.cfg) if isinstance(x, GroupPoint) else factor.cfg.check_index(int(x))
    return _split(labels(factor)[i], len(factor.linear_forms))


def atoms(factor: QuadraticFactor) -> Dict[Atom, List[int]]:
    """Sparse map from every nonempty atom to its member indices."""
    table = labels(factor)
    d1 = len(factor.linear_forms)
    out: Dict[Atom, List[int]] = {}
    for x, row in enumerate(table):
        out.setdefault(_split(row, d1), []).append(x)
    return dict(sorted(out.items(), key=lambda item: (item[0].a, item[0].b)))


def conditional_expectation(f: DenseFunction, factor: QuadraticFactor) -> DenseFunction:
    """E(f|B_2): the average of f over the atom of each x."""
    if f.cfg != factor.cfg:
        raise ConfigMismatchError(f"function on {f.cfg}, factor on {factor.cfg}")
    ids = atom_ids(factor)
    counts = np.bincount(ids)
    sums = np.bincount(ids, weights=f.values.real) + 1j * np.bincount(ids, weights=f.values.imag)
    return DenseFunction(f.cfg, (sums / counts)[ids])


def energy(f: DenseFunction, factor: QuadraticFactor) -> float:
    """||E(f|B_2)||_2^2."""
    return conditional_expectation(f, factor).norm(2) ** 2


def join(fa: QuadraticFactor, fb: QuadraticFactor) -> QuadraticFactor:
    """Common refinement: all forms of both, minus dependent forms and repeated or zero matrices."""
    if fa.cfg != fb.cfg:
        raise ConfigMismatchError(f"factors on {fa.cfg} and {fb.cfg}")
    quads: List[SymMatrix] = []
    for M in fa.quadratics + fb.quadratics:
        if not M.is_zero() and M not in quads:
            quads.append(M)
    return QuadraticFactor(fa.cfg, fa.linear_forms + fb.linear_forms, tuple(quads))


def refines(fine: QuadraticFactor, coarse: QuadraticFactor) -> bool:
    """True when every atom of fine lies inside a single atom of coarse."""
    pairs = np.stack([atom_ids(fine), atom_ids(coarse)], axis=1)
    return len(np.unique(pairs, axis=0)) == len(np.unique(atom_ids(fine)))


def pythagoras_gap(f: DenseFunction, coarse: QuadraticFactor, fine: QuadraticFactor) -> float:
    """||E(f|fine)||^2 - ||E(f|coarse)||^2 - ||E(f|fine) - E(f|coarse)||^2 (zero when nested)."""
    e_fine = conditional_expectation(f, fine)
    e_coarse = conditional_expectation(f, coarse)
    return e_fine.norm(2) ** 2 - e_coarse.norm(2) ** 2 - (e_fine - e_coarse).norm(2) ** 2


def _combinations(d2: int):
    """Nonzero lambda in F_5^{d2}, lexicographic."""
    for lam in itertools.product(range(P), repeat=d2):
        if any(lam):
            yield lam


def _combine(quadratics: Sequence[SymMatrix], lam) -> np.ndarray:
    total = np.zeros_like(quadratics[0].array)
    for c, M in zip(lam, quadratics):
        total = total + c * M.array
    return total % P


def factor_rank(factor: QuadraticFactor) -> int:
    """min over nonzero lambda of rk(sum lambda_j M_j); n + 1 when there are no quadratics."""
    d2 = len(factor.quadratics)
    if d2 == 0:
        return factor.cfg.n + 1
    if d2 > MAX_RANK_D2:
        raise DimensionTooLargeError("factor_rank", d2, MAX_RANK_D2, what="d_2")
    best = factor.cfg.n
    for lam in _combinations(d2):
        best = min(best, mat_rank(_combine(factor.quadratics, lam)))
        if best == 0:
            break
    return best


def rank_reduce(factor: QuadraticFactor, growth: Callable[[float], float]) -> QuadraticFactor:
    """
    Refine until rank >= growth(d1 + d2) or no quadratics remain.

    Each round takes the first violating combination U = sum lambda_j M_j in
    lexicographic order among those whose last nonzero coefficient is 1, drops
    that last matrix and adds a basis of the row space of U as linear forms.
    """
    current = factor
    while current.quadratics:
        d1, d2 = current.complexity()
        threshold = growth(d1 + d2)
        # rank never exceeds n, so a larger threshold needs no search
        if threshold <= current.cfg.n and factor_rank(current) >= threshold:
            break
        for lam in _combinations(d2):
            last = max(j for j, c in enumerate(lam) if c)
            if lam[last] != 1:
                continue
            U = _combine(current.quadratics, lam)
            if mat_rank(U) < threshold:
                break
        else:
            raise IdentityViolation("rank below threshold but no violating combination found")
        added = row_space_basis(U)
        logger.debug("rank_reduce: lambda=%s rank(U)=%d removes M_%d, adds %d linear forms",
                     lam, mat_rank(U), last, len(added))
        remaining = current.quadratics[:last] + current.quadratics[last + 1:]
        current = QuadraticFactor(current.cfg, current.linear_forms + tuple(added), remaining)
    return current


def annihilator(factor: QuadraticFactor) -> List[GroupPoint]:
    """Basis of H = {x : r_j^T x = 0 for all j}."""
    return null_space(list(factor.linear_forms), factor.cfg)


def haar_on_subspace(basis: Sequence[GroupPoint], cfg: GroupConfig) -> DenseFunction:
    """mu_H = 1_H / E 1_H for H = span(basis)."""
    basis = list(basis)
    kept = row_basis(basis)
    if len(kept) < len(basis):
        logger.warning("haar_on_subspace: basis of %d vectors has rank %d, reducing", len(basis), len(kept))
    members = span_points([basis[i] for i in kept], cfg)
    values = np.zeros(cfg.N, dtype=np.complex128)
    values[members] = cfg.N / len(members)
    return DenseFunction(cfg, values)


@dataclass
class AtomStatistics:
    """Atom sizes against the prediction 5^(-d1-d2) +- 5^(-rank/2)."""
    complexity: Tuple[int, int]
    rank: int
    rows: List[Dict] = field(default_factory=list)

    @property
    def expected(self) -> float:
        return P ** (-sum(self.complexity))

    @property
    def tolerance(self) -> float:
        return P ** (-self.rank / 2)

    def flagged(self) -> List[Dict]:
        return [row for row in self.rows if row["flagged"]]

    def validate(self) -> Tuple[bool, List[str]]:
        errors = [f"atom a={row['a']} b={row['b']}: probability {row['probability']:.6g} deviates by "
                  f"{row['deviation']:.6g} > {self.tolerance:.6g}" for row in self.flagged()]
        return not errors, errors

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["a", "b", "size", "probability", "deviation", "flagged"])


def atom_statistics(factor: QuadraticFactor, include_empty: bool = True) -> AtomStatistics:
    """Exact atom census; empty configurations are listed when there are at most 5^6 of them."""
    cfg = factor.cfg
    if cfg.n > 4:
        raise DimensionTooLargeError("atom_statistics", cfg.n, 4)
    d1, d2 = factor.complexity()
    stats = AtomStatistics(complexity=(d1, d2), rank=factor_rank(factor))
    census = {(atom.a, atom.b): len(members) for atom, members in atoms(factor).items()}
    if include_empty and d1 + d2 <= 6:
        keys = [(c[:d1], c[d1:]) for c in itertools.product(range(P), repeat=d1 + d2)]
    else:
        keys = list(census)
    for a, b in keys:
        size = census.get((a, b), 0)
        probability = size / cfg.N
        deviation = abs(probability - stats.expected)
        stats.rows.append({
            "a": list(a), "b": list(b), "size": size, "probability": probability,
            "deviation": deviation, "flagged": deviation > stats.tolerance + 1e-12,
        })
    for row in stats.flagged():
        logger.warning("atom a=%s b=%s deviates by %.4g", row["a"], row["b"], row["deviation"])
    return stats


def ap_constraints_hold(factor: QuadraticFactor, atom_tuple: Sequence[Atom]) -> bool:
    """a's in arithmetic progression and b1 - 3 b2 + 3 b3 - b4 = 0."""
    a = [np.array(atom.a, dtype=np.int64) for atom in atom_tuple]
    b = [np.array(atom.b, dtype=np.int64) for atom in atom_tuple]
    step = (a[1] - a[0]) % P
    in_ap = np.all((a[2] - a[1]) % P == step) and np.all((a[3] - a[2]) % P == step)
    third_difference = np.all((b[0] - 3 * b[1] + 3 * b[2] - b[3]) % P == 0)
    return bool(in_ap and third_difference)


@lru_cache(maxsize=64)
def ap4_atom_distribution(factor: QuadraticFactor) -> Dict[Tuple[int, int, int, int], float]:
    """Probability over uniform (x, d) of each tuple of atom numbers along x, x+d, x+2d, x+3d."""
    cfg = factor.cfg
    if cfg.n > 3:
        raise DimensionTooLargeError("ap4_atom_probability", cfg.n, 3)
    ids = atom_ids(factor)
    pts = cfg.points
    rows = []
    for d in range(cfg.N):
        rows.append(np.stack([ids[cfg.index_of(pts + i * pts[d])] for i in range(4)], axis=1))
    EVALUATIONS.add(cfg.N ** 2)
    tuples, counts = np.unique(np.concatenate(rows), axis=0, return_counts=True)
    return {tuple(int(v) for v in t): c / cfg.N ** 2 for t, c in zip(tuples, counts)}


def ap4_atom_probability(factor: QuadraticFactor, atom_tuple: Sequence[Atom]) -> float:
    """
    P[(Gamma, Phi)(x + i d) = (a^(i), b^(i)) for i = 0..3] over uniform (x, d).

    Zero unless the constraints hold; otherwise within 5^(-rank/2) of 5^(-2 d1 - 3 d2).
    """
    if len(atom_tuple) != 4:
        raise ValueError("need exactly four atoms")
    d1, d2 = factor.complexity()
    for atom in atom_tuple:
        if len(atom.a) != d1 or len(atom.b) != d2:
            raise ConfigMismatchError(f"atom {atom} does not match complexity ({d1}, {d2})")
    number = {atom: i for i, atom in enumerate(atoms(factor))}
    key = tuple(number.get(atom, -1) for atom in atom_tuple)
    probability = 0.0 if -1 in key else ap4_atom_distribution(factor).get(key, 0.0)

    if not ap_constraints_hold(factor, atom_tuple):
        if probability != 0.0:
            raise IdentityViolation(f"atoms {atom_tuple} violate the constraints but have probability {probability}")
        return probability
    expected = P ** (-2 * d1 - 3 * d2)
    tolerance = P ** (-factor_rank(factor) / 2)
    if abs(probability - expected) > tolerance + 1e-12:
        raise IdentityViolation(
            f"4-AP atom probability {probability:.6g} is {abs(probability - expected):.6g} away from "
            f"5^(-2d1-3d2) = {expected:.6g}, beyond 5^(-rank/2) = {tolerance:.6g}")
    return probability


@dataclass
class ConfigSpaceFunction:
    """A B_2-measurable function viewed on F_5^{d1} x F_5^{d2}."""
    d1: int
    d2: int
    values: np.ndarray  # shape (5^d1, 5^d2), index of a and b little-endian
    empty_atoms: int = 0

    def mean(self) -> complex:
        return complex(self.values.mean())


def configspace_function(f: DenseFunction, factor: QuadraticFactor) -> ConfigSpaceFunction:
    """Atom averages of f placed at (a, b); empty atoms get 0."""
    d1, d2 = factor.complexity()
    averaged = conditional_expectation(f, factor).values
    table = labels(factor)
    a_index = GroupConfig(d1).index_of(table[:, :d1])
    b_index = GroupConfig(d2).index_of(table[:, d1:])
    values = np.zeros((P ** d1, P ** d2), dtype=np.complex128)
    filled = np.zeros((P ** d1, P ** d2), dtype=bool)
    values[a_index, b_index] = averaged
    filled[a_index, b_index] = True
    if np.allclose(values.imag, 0, atol=1e-12):
        values = values.real.copy()
    return ConfigSpaceFunction(d1=d1, d2=d2, values=values, empty_atoms=int((~filled).sum()))


def factor_from_dict(data: Dict, n: Optional[int] = None) -> QuadraticFactor:
    linear = data.get("linear", [])
    quads = data.get("quadratics", [])
    if n is None:
        n = data.get("n")
    if n is None:
        n = len(linear[0]) if linear else (len(quads[0]) if quads else None)
    if n is None:
        raise ValueError("cannot infer n for an empty factor; add an 'n' field")
    cfg = GroupConfig(int(n))
    return QuadraticFactor(cfg, tuple(LinearForm(tuple(r)) for r in linear),
                           tuple(SymMatrix(tuple(tuple(row) for row in M)) for M in quads))
