"""
Data models for quadratic Fourier analysis over G = F_5^n.
"""
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

P = 5  # order of the base field
INV = (0, 1, 3, 2, 4)  # multiplicative inverses mod 5, INV[0] unused
HALF = 3  # 2^{-1} in F_5

DEFAULT_BUDGET = 10 ** 9
BUDGET_ENV = "QF_BUDGET"
SCHEMA_VERSION = 1

# the five fifth roots of unity, evaluated once
OMEGA = np.array([complex(math.cos(2 * math.pi * k / P), math.sin(2 * math.pi * k / P))
                  for k in range(P)])


@lru_cache(maxsize=None)
def _digit_table(n: int) -> np.ndarray:
    idx = np.arange(P ** n, dtype=np.int64)
    digits = np.empty((P ** n, n), dtype=np.int64)
    for j in range(n):
        digits[:, j] = (idx // P ** j) % P
    digits.setflags(write=False)
    return digits


@lru_cache(maxsize=64)
def _scale_table(n: int, c: int) -> np.ndarray:
    table = ((c * _digit_table(n)) % P) @ (P ** np.arange(n, dtype=np.int64))
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class GroupConfig:
    """The ambient group G = F_5^n with little-endian base-5 indexing."""
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"dimension must be a non-negative integer, got {self.n}")

    @property
    def N(self) -> int:
        return P ** self.n

    @property
    def points(self) -> np.ndarray:
        """(N, n) read-only array; row i holds the coordinates of index i."""
        return _digit_table(self.n)

    @property
    def weights(self) -> np.ndarray:
        return P ** np.arange(self.n, dtype=np.int64)

    def index_of(self, coords) -> np.ndarray:
        """Index of every coordinate vector along the last axis (reduced mod 5)."""
        return (np.asarray(coords, dtype=np.int64) % P) @ self.weights

    def shift_indices(self, h: int) -> np.ndarray:
        """Array whose entry x is the index of x + h."""
        return self.index_of(self.points + self.points[h])

    def scale_indices(self, c: int) -> np.ndarray:
        """Array whose entry x is the index of c*x."""
        return _scale_table(self.n, c % P)

    def neg_indices(self) -> np.ndarray:
        return self.scale_indices(P - 1)

    def check_index(self, i: int) -> int:
        if not 0 <= i < self.N:
            raise IndexError(f"index {i} out of range [0, {self.N}) for n = {self.n}")
        return int(i)

    def __str__(self) -> str:
        return f"F_5^{self.n} (N = {self.N})"


def _residues(values, what: str) -> Tuple[int, ...]:
    out = tuple(int(v) for v in values)
    for v in out:
        if not 0 <= v < P:
            raise ValueError(f"{what} entries must be residues in 0..4, got {list(out)}")
    return out


@dataclass(frozen=True)
class GroupPoint:
    """A point of F_5^n: x, h, d, y and subspace basis vectors."""
    coords: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", _residues(self.coords, "point"))

    @classmethod
    def reduce(cls, values) -> "GroupPoint":
        return cls(tuple(int(v) % P for v in values))

    @property
    def n(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class LinearForm:
    """A dual vector r, acting as x -> r^T x."""
    r: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "r", _residues(self.r, "linear form"))

    @classmethod
    def reduce(cls, values) -> "LinearForm":
        return cls(tuple(int(v) % P for v in values))

    @property
    def n(self) -> int:
        return len(self.r)

    def is_zero(self) -> bool:
        return not any(self.r)

    def as_array(self) -> np.ndarray:
        return np.array(self.r, dtype=np.int64)

    def __str__(self) -> str:
        return "<" + ",".join(str(c) for c in self.r) + ">"


@dataclass(frozen=True)
class SymMatrix:
    """A symmetric n x n matrix over F_5, stored dense."""
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        rows = tuple(_residues(row, "matrix") for row in self.entries)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ValueError("matrix must be square")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise ValueError(f"matrix is not symmetric at ({i},{j}); symmetrize it first")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def zero(cls, n: int) -> "SymMatrix":
        return cls(tuple((0,) * n for _ in range(n)))

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def from_array(cls, arr) -> "SymMatrix":
        a = np.asarray(arr, dtype=np.int64) % P
        return cls(tuple(tuple(int(v) for v in row) for row in a))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64).reshape(self.n, self.n)

    def is_zero(self) -> bool:
        return not any(any(row) for row in self.entries)

    def to_list(self) -> List[List[int]]:
        return [list(row) for row in self.entries]


@dataclass(frozen=True)
class Atom:
    """Configuration (a, b) = (Gamma(x), Phi(x)) of a quadratic factor."""
    a: Tuple[int, ...]
    b: Tuple[int, ...]

    def __str__(self) -> str:
        return f"a={list(self.a)} b={list(self.b)}"


@dataclass(frozen=True)
class QuadraticPhase:
    """x -> omega^(x^T M x + r^T x)."""
    M: SymMatrix
    r: LinearForm

    def __post_init__(self):
        if self.M.n != self.r.n:
            raise ValueError(f"matrix is {self.M.n}x{self.M.n} but r has length {self.r.n}")

    @property
    def n(self) -> int:
        return self.r.n

    def key(self) -> Tuple[int, ...]:
        """Lexicographic search key: M row-major, then r."""
        return tuple(v for row in self.M.entries for v in row) + self.r.r


@dataclass(frozen=True)
class CorrelationCertificate:
    """A quadratic phase together with its measured correlation."""
    phase: QuadraticPhase
    correlation: complex
    magnitude: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "M": self.phase.M.to_list(),
            "r": list(self.phase.r.r),
            "corr": [self.correlation.real, self.correlation.imag],
        }


@dataclass
class GowersReport:
    """Value of ||f||_{U^k} and how it was obtained."""
    k: int
    value: float
    method: str  # "direct" or "fast"
    cost_model: int  # inner-loop evaluations

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "value": self.value, "method": self.method, "cost_model": self.cost_model}


@dataclass
class APCountReport:
    """A Lambda_k value."""
    k: int
    value: complex
    trivial_count_included: bool = True  # d = 0 terms are part of the average
    method: str = "direct"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "value": [self.value.real, self.value.imag],
            "trivial_count_included": self.trivial_count_included,
            "method": self.method,
        }


@dataclass
class APCensus:
    """Integer progression counts inside a set, with and without the d = 0 progressions."""
    k: int
    with_trivial: int
    without_trivial: int

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "with_trivial": self.with_trivial, "without_trivial": self.without_trivial}


GROWTH_KINDS = ("exponential", "polynomial", "constant")


@dataclass
class GrowthFn:
    """A named monotone growth function t -> omega(t)."""
    kind: str
    params: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GROWTH_KINDS:
            raise ValueError(f"unknown growth preset '{self.kind}', expected one of {GROWTH_KINDS}")
        self.params = {key: float(value) for key, value in self.params.items()}
        p = self.params
        if self.kind == "exponential":
            p.setdefault("scale", 1.0)
            p.setdefault("shift", 0.0)
            if p.get("base", 0) < 1 or p["scale"] <= 0:
                raise ValueError(f"exponential growth needs base >= 1 and scale > 0, got {p}")
        elif self.kind == "polynomial":
            p.setdefault("scale", 1.0)
            p.setdefault("offset", 1.0)
            if p.get("power", -1) < 0 or p["scale"] <= 0 or p["offset"] < 0:
                raise ValueError(f"polynomial growth needs power >= 0, scale > 0, offset >= 0, got {p}")
        elif p.get("value", 0) <= 0:
            raise ValueError(f"constant growth needs value > 0, got {p}")

    @classmethod
    def exponential(cls, base: float, scale: float = 1.0, shift: float = 0.0) -> "GrowthFn":
        return cls("exponential", {"base": float(base), "scale": float(scale), "shift": float(shift)})

    @classmethod
    def polynomial(cls, power: float, scale: float = 1.0, offset: float = 1.0) -> "GrowthFn":
        return cls("polynomial", {"power": float(power), "scale": float(scale), "offset": float(offset)})

    @classmethod
    def constant(cls, value: float) -> "GrowthFn":
        return cls("constant", {"value": float(value)})

    @classmethod
    def parse(cls, text: str) -> "GrowthFn":
        """Parse 'kind:key=value,key=value'."""
        kind, _, rest = text.strip().partition(":")
        params = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, sep, value = item.partition("=")
            if not sep:
                raise ValueError(f"malformed growth parameter '{item}' in '{text}'")
            params[key.strip()] = float(value)
        return cls(kind.strip(), params)

    def __call__(self, t: float) -> float:
        p = self.params
        try:
            if self.kind == "exponential":
                return p["scale"] * p["base"] ** (t + p["shift"])
            if self.kind == "polynomial":
                return p["scale"] * (t + p["offset"]) ** p["power"]
        except OverflowError:
            return math.inf
        return p["value"]

    def is_monotone(self, upto: int = 10 ** 6) -> bool:
        samples = sorted({0, 1, 2, 3, 5, 10, 100, 1000, upto} | {2 ** j for j in range(20) if 2 ** j <= upto})
        values = [self(t) for t in samples]
        return all(a <= b for a, b in zip(values, values[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "params": dict(sorted(self.params.items()))}

    def __str__(self) -> str:
        return self.kind + ":" + ",".join(f"{k}={v:g}" for k, v in sorted(self.params.items()))


@dataclass
class OracleParams:
    """Acceptance floor theta(delta) = scale * delta^exponent and derived caps."""
    theta_exponent: float = 4.0
    theta_scale: float = 0.5
    max_iterations: int = 10_000

    def theta(self, delta: float) -> float:
        return self.theta_scale * delta ** self.theta_exponent

    def increment_floor(self, delta: float) -> float:
        """c(delta), the guaranteed energy gain per successful step."""
        return self.theta(delta) ** 2 / 4

    def iteration_cap(self, delta: float) -> int:
        theta = self.theta(delta)
        if theta ** 2 * self.max_iterations < 1:
            return self.max_iterations
        return min(math.ceil(1 / theta ** 2) + 8, self.max_iterations)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta_exponent": self.theta_exponent,
            "theta_scale": self.theta_scale,
            "max_iterations": self.max_iterations,
        }


def resolve_budget(explicit: Optional[int] = None) -> int:
    """Explicit value, else the QF_BUDGET environment variable, else 10^9."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(BUDGET_ENV)
    if env:
        try:
            return int(float(env))
        except ValueError:
            raise ValueError(f"{BUDGET_ENV} must be an integer, got '{env}'")
    return DEFAULT_BUDGET


@dataclass
class RunConfig:
    """Everything a CLI run depends on; echoed into every report."""
    command: str = "verify"
    n: int = 2
    seed: int = 0
    delta: float = 0.5
    epsilon: float = 0.1
    eta: float = 0.1
    k: int = 3
    trials: int = 20
    alpha: float = 0.5
    growth: Optional[str] = None
    growth2: Optional[str] = None
    budget: Optional[int] = None
    threads: int = 1
    method: Optional[str] = None
    input: Optional[str] = None
    inputs: List[str] = field(default_factory=list)
    output: Optional[str] = None
    timings: bool = False
    oracle: OracleParams = field(default_factory=OracleParams)

    def budget_limit(self) -> int:
        return resolve_budget(self.budget)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "n": self.n,
            "seed": self.seed,
            "delta": self.delta,
            "epsilon": self.epsilon,
            "eta": self.eta,
            "k": self.k,
            "trials": self.trials,
            "alpha": self.alpha,
            "growth": self.growth,
            "growth2": self.growth2,
            "budget": self.budget_limit(),
            "method": self.method,
            "input": self.input,
            "inputs": list(self.inputs),
            "output": self.output,
            "oracle": self.oracle.to_dict(),
        }
