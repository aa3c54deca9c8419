"""
Fourier analysis on G = F_5^n.

Normalisation: the forward transform averages, f^(r) = E_x f(x) omega^(r.x);
the inverse sums, f(x) = sum_r f^(r) omega^(-r.x). Functions on G use the
uniform probability measure, spectra use counting measure.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Union

import numpy as np

from src.errors import ConfigMismatchError
from src.models import GroupConfig, LinearForm, OMEGA, P
from src.workers import EVALUATIONS

logger = logging.getLogger(__name__)

# 5-point transform matrix W[r, x] = omega^(r x)
_W = OMEGA[np.outer(np.arange(P), np.arange(P)) % P]
_W_INV = np.conj(_W)

Scalar = Union[int, float, complex]


def _check_same(a, b):
    if a.cfg != b.cfg:
        raise ConfigMismatchError(f"operands live on {a.cfg} and {b.cfg}")


@dataclass(eq=False)
class DenseFunction:
    """A complex-valued function on G stored as a length-N array."""
    cfg: GroupConfig
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128).reshape(-1)
        if values.shape[0] != self.cfg.N:
            raise ConfigMismatchError(
                f"function has {values.shape[0]} values, {self.cfg} needs {self.cfg.N}")
        self.values = values

    @classmethod
    def constant(cls, cfg: GroupConfig, c: Scalar = 1.0) -> "DenseFunction":
        return cls(cfg, np.full(cfg.N, c, dtype=np.complex128))

    @classmethod
    def zeros(cls, cfg: GroupConfig) -> "DenseFunction":
        return cls.constant(cfg, 0.0)

    @classmethod
    def indicator(cls, members: Iterable[int], cfg: GroupConfig) -> "DenseFunction":
        values = np.zeros(cfg.N, dtype=np.complex128)
        for i in members:
            values[cfg.check_index(int(i))] = 1.0
        return cls(cfg, values)

    @classmethod
    def point_mass(cls, cfg: GroupConfig, i: int = 0, mass: Scalar = None) -> "DenseFunction":
        """mass (default N) at index i, so that E f = 1 by default."""
        values = np.zeros(cfg.N, dtype=np.complex128)
        values[cfg.check_index(i)] = cfg.N if mass is None else mass
        return cls(cfg, values)

    def __add__(self, other: "DenseFunction") -> "DenseFunction":
        _check_same(self, other)
        return DenseFunction(self.cfg, self.values + other.values)

    def __sub__(self, other: "DenseFunction") -> "DenseFunction":
        _check_same(self, other)
        return DenseFunction(self.cfg, self.values - other.values)

    def __neg__(self) -> "DenseFunction":
        return DenseFunction(self.cfg, -self.values)

    def __mul__(self, other) -> "DenseFunction":
        if isinstance(other, DenseFunction):
            _check_same(self, other)
            return DenseFunction(self.cfg, self.values * other.values)
        return DenseFunction(self.cfg, self.values * other)

    __rmul__ = __mul__

    def conj(self) -> "DenseFunction":
        return DenseFunction(self.cfg, np.conj(self.values))

    def reflect(self) -> "DenseFunction":
        """f°(x) = conj(f(-x))."""
        return DenseFunction(self.cfg, np.conj(self.values[self.cfg.neg_indices()]))

    def mean(self) -> complex:
        return complex(self.values.mean())

    def norm(self, p: float = 2) -> float:
        """L^p norm with respect to the uniform probability measure."""
        if np.isinf(p):
            return self.sup_norm()
        return float(np.mean(np.abs(self.values) ** p) ** (1.0 / p))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def is_one_bounded(self, tol: float = 1e-12) -> bool:
        return self.sup_norm() <= 1 + tol

    def is_real(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.values.imag) <= tol))

    def allclose(self, other: "DenseFunction", tol: float = 1e-10) -> bool:
        _check_same(self, other)
        return bool(np.max(np.abs(self.values - other.values), initial=0.0) <= tol)

    def copy(self) -> "DenseFunction":
        return DenseFunction(self.cfg, self.values.copy())


@dataclass(eq=False)
class Spectrum:
    """A function on the dual group, indexed like G, with counting measure."""
    cfg: GroupConfig
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128).reshape(-1)
        if values.shape[0] != self.cfg.N:
            raise ConfigMismatchError(
                f"spectrum has {values.shape[0]} values, {self.cfg} needs {self.cfg.N}")
        self.values = values

    def norm(self, p: float = 2) -> float:
        """l^p norm with respect to counting measure."""
        if np.isinf(p):
            return self.sup_norm()
        return float(np.sum(np.abs(self.values) ** p) ** (1.0 / p))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def at(self, r: LinearForm) -> complex:
        return complex(self.values[int(self.cfg.index_of(r.r))])


def axis_transform(values: np.ndarray, n: int, matrix: np.ndarray) -> np.ndarray:
    """
    Apply a 5x5 matrix along every coordinate axis.

    Args:
        values: array of shape (5^n, ...) indexed by group element on axis 0
        n: dimension
        matrix: 5x5 complex matrix

    Returns:
        array of the same shape
    """
    batch = values.shape[1:]
    t = np.asarray(values, dtype=np.complex128).reshape((P,) * n + batch)
    for axis in range(n):
        t = np.moveaxis(np.tensordot(matrix, t, axes=([1], [axis])), 0, axis)
    EVALUATIONS.add(values.size * P * n)
    return t.reshape((P ** n,) + batch)


def dft(f: DenseFunction) -> Spectrum:
    """f^(r) = N^-1 sum_x f(x) omega^(r.x), one 5-point pass per axis."""
    return Spectrum(f.cfg, axis_transform(f.values, f.cfg.n, _W) / f.cfg.N)


def dft_batch(values: np.ndarray, cfg: GroupConfig) -> np.ndarray:
    """Transform every column of an (N, K) array at once."""
    return axis_transform(values, cfg.n, _W) / cfg.N


def idft(s: Spectrum) -> DenseFunction:
    """f(x) = sum_r f^(r) omega^(-r.x)."""
    return DenseFunction(s.cfg, axis_transform(s.values, s.cfg.n, _W_INV))


def dft_direct(f: DenseFunction) -> Spectrum:
    """O(N^2) reference transform."""
    pts = f.cfg.points
    phases = OMEGA[(pts @ pts.T) % P]
    EVALUATIONS.add(f.cfg.N ** 2)
    return Spectrum(f.cfg, phases @ f.values / f.cfg.N)


def convolve(f: DenseFunction, g: DenseFunction) -> DenseFunction:
    """(f*g)(x) = E_y f(y) g(x-y), via (f*g)^ = f^ g^."""
    _check_same(f, g)
    return idft(Spectrum(f.cfg, dft(f).values * dft(g).values))


def large_spectrum(f: DenseFunction, eta: float) -> List[LinearForm]:
    """Spec_eta(f) = {r : |f^(r)| >= eta}, in index order."""
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    spectrum = dft(f)
    hits = np.nonzero(np.abs(spectrum.values) >= eta)[0]
    if f.is_one_bounded() and len(hits) > eta ** -2:
        logger.warning("large spectrum has %d elements, above the Parseval bound %.3g", len(hits), eta ** -2)
    pts = f.cfg.points
    return [LinearForm(tuple(int(v) for v in pts[i])) for i in hits]


def inner_product(f: DenseFunction, g: DenseFunction) -> complex:
    """E_x f(x) conj(g(x))."""
    _check_same(f, g)
    return complex(np.mean(f.values * np.conj(g.values)))


def spectral_inner_product(s: Spectrum, t: Spectrum) -> complex:
    """sum_r s(r) conj(t(r))."""
    _check_same(s, t)
    return complex(np.sum(s.values * np.conj(t.values)))
