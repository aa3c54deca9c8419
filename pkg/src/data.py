"""
Input data for experiments: seeded random sets and functions, planted
quadratic corpora, and the JSON file formats for functions, sets, factors
and correlation certificates.

Random draws use numpy's default_rng(seed) (PCG64 seeded through
SeedSequence), so a seed reproduces the same draw on every platform.
"""
import json
import logging
import os
from typing import Any, Dict, List, Set, Tuple

import numpy as np

from src.errors import MalformedInputError
from src.factors import QuadraticFactor, factor_from_dict
from src.fourier import DenseFunction
from src.models import CorrelationCertificate, GroupConfig, LinearForm, SymMatrix
from src.output import dumps_json
from src.quadratic import make_phase, quad_phase_fn

logger = logging.getLogger(__name__)

FUNCTION_KINDS = ("disc", "pm1", "circle")


def random_set(n: int, alpha: float, seed: int) -> Set[int]:
    """Each index of F_5^n joins independently with probability alpha."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    cfg = GroupConfig(n)
    rng = np.random.default_rng(seed)
    coins = rng.random(cfg.N)
    return set(int(i) for i in np.nonzero(coins < alpha)[0])


def random_function(cfg: GroupConfig, seed: int, kind: str = "disc") -> DenseFunction:
    """
    A seeded 1-bounded random function.

    Args:
        cfg: the group
        seed: generator seed
        kind: "disc" (uniform in the closed unit disc), "pm1" (random signs)
            or "circle" (uniform on the unit circle)
    """
    rng = np.random.default_rng(seed)
    if kind == "disc":
        radius = np.sqrt(rng.random(cfg.N))
        angle = 2 * np.pi * rng.random(cfg.N)
        values = radius * np.exp(1j * angle)
    elif kind == "pm1":
        values = rng.choice(np.array([-1.0, 1.0]), size=cfg.N).astype(np.complex128)
    elif kind == "circle":
        values = np.exp(2j * np.pi * rng.random(cfg.N))
    else:
        raise ValueError(f"unknown function kind '{kind}', expected one of {FUNCTION_KINDS}")
    return DenseFunction(cfg, values)


def random_phase(cfg: GroupConfig, seed: int):
    """Uniformly random (M, r) with M symmetric."""
    rng = np.random.default_rng(seed)
    upper = rng.integers(0, 5, size=(cfg.n, cfg.n))
    M = np.triu(upper) + np.triu(upper, 1).T
    return make_phase(SymMatrix.from_array(M), LinearForm.reduce(rng.integers(0, 5, size=cfg.n)))


def planted_quadratic(cfg: GroupConfig, q, correlation: float, seed: int) -> DenseFunction:
    """
    conj(q) * (c + (1 - c) u) for mean-zero noise u with |u| <= 1, so that
    E_x f(x) q(x) = c exactly and ||f||_inf <= 1.
    """
    if not 0 <= correlation <= 1:
        raise ValueError(f"correlation must lie in [0, 1], got {correlation}")
    noise = random_function(cfg, seed, "disc").values
    noise = noise - noise.mean()
    peak = np.max(np.abs(noise))
    if peak > 0:
        noise = noise / peak
    phase = quad_phase_fn(q, cfg).values
    return DenseFunction(cfg, np.conj(phase) * (correlation + (1 - correlation) * noise))


# ----------------------------------------------------------------------
# JSON files
# ----------------------------------------------------------------------

def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise MalformedInputError(f"{path}: no such file")
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{path}: not valid JSON ({exc})")
    if not isinstance(data, dict):
        raise MalformedInputError(f"{path}: expected a JSON object at top level")
    return data


def _write_json(data: Dict[str, Any], path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(data))


def _group(data: Dict[str, Any], path: str) -> GroupConfig:
    try:
        return GroupConfig(int(data["n"]))
    except (KeyError, TypeError, ValueError):
        raise MalformedInputError(f"{path}: missing or invalid 'n'")


def function_to_dict(f: DenseFunction) -> Dict[str, Any]:
    return {"n": f.cfg.n, "values": [[float(v.real), float(v.imag)] for v in f.values]}


def function_from_dict(data: Dict[str, Any], path: str = "<input>") -> DenseFunction:
    cfg = _group(data, path)
    raw = data.get("values")
    if not isinstance(raw, list) or len(raw) != cfg.N:
        raise MalformedInputError(f"{path}: 'values' must list {cfg.N} entries")
    values = np.empty(cfg.N, dtype=np.complex128)
    for i, entry in enumerate(raw):
        if isinstance(entry, (int, float)):
            values[i] = float(entry)
        elif isinstance(entry, list) and len(entry) == 2:
            values[i] = complex(float(entry[0]), float(entry[1]))
        else:
            raise MalformedInputError(f"{path}: value {i} is neither a number nor [re, im]")
    return DenseFunction(cfg, values)


def load_function(path: str) -> DenseFunction:
    return function_from_dict(_read_json(path), path)


def save_function(f: DenseFunction, path: str):
    _write_json(function_to_dict(f), path)


def load_set(path: str) -> Tuple[GroupConfig, Set[int]]:
    data = _read_json(path)
    cfg = _group(data, path)
    members = data.get("members")
    if not isinstance(members, list):
        raise MalformedInputError(f"{path}: 'members' must be a list of indices")
    out = set()
    for m in members:
        if not isinstance(m, int) or not 0 <= m < cfg.N:
            raise MalformedInputError(f"{path}: member {m!r} is not an index in [0, {cfg.N})")
        out.add(m)
    return cfg, out


def save_set(members, cfg: GroupConfig, path: str):
    _write_json({"n": cfg.n, "members": sorted(int(m) for m in members)}, path)


def load_factor(path: str, n: int = None) -> QuadraticFactor:
    data = _read_json(path)
    try:
        return factor_from_dict(data, n)
    except (TypeError, ValueError) as exc:
        raise MalformedInputError(f"{path}: {exc}")


def save_factor(factor: QuadraticFactor, path: str):
    _write_json(factor.to_dict(), path)


def certificate_from_dict(data: Dict[str, Any], path: str = "<input>") -> CorrelationCertificate:
    try:
        M = SymMatrix(tuple(tuple(int(v) for v in row) for row in data["M"]))
        r = LinearForm(tuple(int(v) for v in data["r"]))
        re, im = data.get("corr", [0.0, 0.0])
        corr = complex(float(re), float(im))
        return CorrelationCertificate(phase=make_phase(M, r), correlation=corr, magnitude=abs(corr))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedInputError(f"{path}: malformed certificate ({exc})")


def load_certificate(path: str) -> CorrelationCertificate:
    return certificate_from_dict(_read_json(path), path)


def save_certificate(cert: CorrelationCertificate, path: str):
    _write_json(cert.to_dict(), path)


def load_sets(paths: List[str]) -> Tuple[GroupConfig, List[Set[int]]]:
    """Several set files on one group."""
    loaded = [load_set(p) for p in paths]
    cfgs = {cfg for cfg, _ in loaded}
    if len(cfgs) != 1:
        raise MalformedInputError(f"set files live on different groups: {sorted(c.n for c in cfgs)}")
    return loaded[0][0], [members for _, members in loaded]
