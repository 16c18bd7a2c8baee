"""Periodic points of ``f(z) = z^2 + c``: enumeration, multipliers, density.

Fixed points of ``f^p`` are found as the ``2^p`` roots of ``f^p(z) - z``.
For ``p <= 10`` all roots are refined simultaneously by Aberth iteration,
evaluating the composed polynomial implicitly by iterating ``f``.  For
``p in {11, 12}`` each root is seeded by an inverse-branch word and
polished by Newton steps; that route needs a Cantor Julia set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import PreconditionError, RootRefinementError

BAND = 1e-12
RESIDUAL_TOL = 1e-8
ABERTH_MAX_P = 10
EPS = np.finfo(float).eps


@dataclass(frozen=True)
class PeriodicPointRecord:
    period: int
    cycle: tuple
    multiplier: complex
    modulus: float
    classification: str
    multiplicity: int = 1
    residual: float = 0.0


@dataclass(frozen=True)
class JuliaSample:
    c: complex
    points: np.ndarray
    method: str = "inverse-iteration"
    seed: int = 0

    def __len__(self) -> int:
        return len(self.points)


def classify_modulus(modulus: float) -> str:
    if modulus <= BAND:
        return "superattracting"
    if abs(modulus - 1.0) <= BAND:
        return "neutral"
    return "repelling" if modulus > 1.0 else "attracting"


def classify(record: PeriodicPointRecord) -> str:
    """Repelling, attracting, neutral or superattracting by ``|multiplier|``."""
    return classify_modulus(abs(record.multiplier))


def _orbit(z: np.ndarray, c: complex, p: int) -> tuple[np.ndarray, np.ndarray]:
    """``f^p(z)`` and ``(f^p)'(z)``."""
    w = np.array(z, dtype=np.complex128)
    dw = np.ones_like(w)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(p):
            dw = 2.0 * w * dw
            w = w * w + c
    return w, dw


def residual_tolerance(z: np.ndarray, c: complex, p: int) -> np.ndarray:
    """``1e-8``, widened to the rounding floor ``|(f^p)'| ulp(z)`` where larger."""
    _, dw = _orbit(z, c, p)
    floor = 16.0 * EPS * np.abs(dw) * np.maximum(1.0, np.abs(z))
    return np.maximum(RESIDUAL_TOL, floor)


def escape_threshold(c: complex) -> float:
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * abs(c)))


def _aberth(c: complex, p: int, seed: int, max_iter: int = 2000) -> np.ndarray:
    n = 2**p
    rng = np.random.default_rng(seed)
    radius = 1.1 * escape_threshold(c)
    angles = 2.0 * np.pi * (np.arange(n) + 0.5 + 0.25 * rng.random(n)) / n
    z = radius * (1.0 + 0.05 * rng.random(n)) * np.exp(1j * angles)
    for _ in range(max_iter):
        ratio = kernels.quad_newton_ratio(z, c, p)
        step = kernels.aberth_correction(z, ratio)
        step = np.where(np.isfinite(step), step, 0.0)
        z = z - step
        if np.all(np.abs(step) <= 4.0 * EPS * (1.0 + np.abs(z))):
            break
    return _polish(z, c, p)


def _polish(z: np.ndarray, c: complex, p: int, steps: int = 4) -> np.ndarray:
    for _ in range(steps):
        r = kernels.quad_newton_ratio(z, c, p)
        z = z - np.where(np.isfinite(r), r, 0.0)
    return z


def _sqrt_branch(u: np.ndarray, c: complex) -> np.ndarray:
    """Square root with its cut pointing away from ``-c``."""
    if c == 0:
        return np.sqrt(u)
    rot = complex(np.exp(-1j * np.angle(-c)))
    return np.sqrt(u * rot) / np.sqrt(rot)


def inverse_branch_fixed_points(c: complex, p: int, passes: int = 4) -> np.ndarray:
    """Fixed points of ``f^p`` from all ``2^p`` inverse-branch words.

    For ``|c| > 2`` each composition of inverse branches contracts the disk
    of radius ``escape_threshold(c)`` into itself, so iterating it from 0
    converges to its unique fixed point.
    """
    if not abs(c) > 2.0:
        raise PreconditionError("inverse-branch enumeration needs |c| > 2")
    n = 2**p
    words = (np.arange(n)[:, None] >> np.arange(p)[None, :]) & 1
    signs = 1.0 - 2.0 * words
    z = np.zeros(n, dtype=np.complex128)
    for _ in range(passes):
        for k in range(p - 1, -1, -1):
            z = signs[:, k] * _sqrt_branch(z - c, c)
    return z


def _find_roots(c: complex, p: int, seed: int) -> np.ndarray:
    if p <= ABERTH_MAX_P:
        attempts = (seed, seed + 7919)
        bad = None
        for s in attempts:
            z = _aberth(c, p, s)
            w, _ = _orbit(z, c, p)
            res = np.abs(w - z)
            ok = np.isfinite(res) & (res < residual_tolerance(z, c, p))
            if ok.all():
                return z
            bad = [(complex(zi), float(ri)) for zi, ri, o in zip(z, res, ok) if not o]
        raise RootRefinementError(f"{len(bad)} roots failed to converge", residual_roots=bad)
    z = _polish(inverse_branch_fixed_points(c, p), c, p)
    w, _ = _orbit(z, c, p)
    res = np.abs(w - z)
    ok = res < residual_tolerance(z, c, p)
    if not ok.all():
        bad = [(complex(zi), float(ri)) for zi, ri, o in zip(z, res, ok) if not o]
        raise RootRefinementError(f"{len(bad)} roots failed to converge", residual_roots=bad)
    return z


def _merge_multiple(z: np.ndarray, c: complex, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Merge clusters that approximate one multiple root (``(f^p)' ~ 1``)."""
    pts = np.column_stack([z.real, z.imag])
    tree = cKDTree(pts)
    parent = np.arange(len(z))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in tree.query_pairs(1e-4):
        mid = 0.5 * (z[i] + z[j])
        _, dw = _orbit(np.array([mid]), c, p)
        if abs(dw[0] - 1.0) < 1e-3:
            parent[find(i)] = find(j)
    roots = np.array([find(i) for i in range(len(z))])
    keys, inverse, counts = np.unique(roots, return_inverse=True, return_counts=True)
    merged = np.array([z[inverse == k].mean() for k in range(len(keys))])
    for k in np.nonzero(counts > 1)[0]:
        spread = float(np.abs(z[inverse == k] - merged[k]).max())
        merged[k] = _refine_cluster(merged[k], spread, c, p)
    return merged, counts


def _newton_q(z: complex, c: complex, q: int, critical: bool, steps: int = 60) -> complex:
    """Newton on ``f^q - z`` or, with ``critical``, on ``(f^q)' - 1``."""
    for _ in range(steps):
        w, d1, d2 = z, 1.0 + 0j, 0j
        for _ in range(q):
            d2 = 2.0 * (d1 * d1 + w * d2)
            d1 = 2.0 * w * d1
            w = w * w + c
        num, den = (d1 - 1.0, d2) if critical else (w - z, d1 - 1.0)
        if den == 0 or not np.isfinite(num / den):
            break
        dz = num / den
        z = z - dz
        if abs(dz) <= EPS * (1.0 + abs(z)):
            break
    return z


def _refine_cluster(z: complex, spread: float, c: complex, p: int) -> complex:
    """Best representative of a multiple root, tried against each divisor period.

    A multiple root of ``f^p - z`` can be a simple or double root of
    ``f^q - z`` for a divisor ``q``; Newton on that equation, or on
    ``(f^q)' = 1`` when the root stays multiple, recovers full accuracy.
    """
    reach = 4.0 * spread + 1e-10
    for q in range(1, p + 1):
        if p % q:
            continue
        best, best_res = None, math.inf
        for critical in (False, True):
            zq = _newton_q(complex(z), c, q, critical)
            if abs(zq - z) > reach:
                continue
            w, _ = _orbit(np.array([zq]), c, q)
            res = abs(w[0] - zq)
            if res < best_res:
                best, best_res = zq, res
        if best is not None and best_res < residual_tolerance(np.array([best]), c, q)[0]:
            return best
    return z


def _primitive_period(z: complex, c: complex, p: int) -> int:
    for q in range(1, p + 1):
        if p % q:
            continue
        w, _ = _orbit(np.array([z]), c, q)
        if abs(w[0] - z) < residual_tolerance(np.array([z]), c, q)[0]:
            return q
    return p


def periodic_points(c: complex, p: int, seed: int = 0) -> list[PeriodicPointRecord]:
    """Every cycle whose period divides ``p``, one record per cycle."""
    if not 1 <= p <= 12:
        raise PreconditionError("period must lie in 1..12")
    c = complex(c)
    z = _find_roots(c, p, seed)
    z, mult = _merge_multiple(z, c, p)
    succ_tree = cKDTree(np.column_stack([z.real, z.imag]))
    fz = z * z + c
    _, succ = succ_tree.query(np.column_stack([fz.real, fz.imag]))
    seen = np.zeros(len(z), dtype=bool)
    records = []
    for start in np.argsort(z.real + 1e-3 * z.imag, kind="stable"):
        if seen[start]:
            continue
        cyc = [int(start)]
        seen[start] = True
        nxt = int(succ[start])
        while nxt != start and len(cyc) <= p:
            if seen[nxt]:
                raise RootRefinementError("successor map is not a permutation",
                                          residual_roots=[(complex(z[nxt]), math.nan)])
            cyc.append(nxt)
            seen[nxt] = True
            nxt = int(succ[nxt])
        q = _primitive_period(complex(z[start]), c, p)
        if q != len(cyc):
            raise RootRefinementError(f"cycle length {len(cyc)} disagrees with primitive period {q}",
                                      residual_roots=[(complex(z[start]), math.nan)])
        pts = z[cyc]
        lam = complex(np.prod(2.0 * pts))
        w, _ = _orbit(pts, c, q)
        records.append(PeriodicPointRecord(
            period=q, cycle=tuple(complex(v) for v in pts), multiplier=lam, modulus=abs(lam),
            classification=classify_modulus(abs(lam)), multiplicity=int(mult[start]),
            residual=float(np.abs(w - pts).max()),
        ))
    records.sort(key=lambda r: (r.period, min(v.real for v in r.cycle)))
    return records


def root_count(records: list[PeriodicPointRecord]) -> int:
    """Fixed points of ``f^p`` counted with multiplicity."""
    return sum(r.multiplicity * len(r.cycle) for r in records)


def cycle_points(records: list[PeriodicPointRecord]) -> np.ndarray:
    return np.array([v for r in records for v in r.cycle], dtype=np.complex128)


def julia_sample(c: complex = -6.0, count: int = 2000, seed: int = 0, burn_in: int = 50) -> JuliaSample:
    """Random backward orbit ``z -> +-sqrt(z - c)`` from the repelling fixed point."""
    if count < 0:
        raise PreconditionError("count must be non-negative")
    c = complex(c)
    rng = np.random.default_rng(seed)
    z = 0.5 * (1.0 + np.sqrt(1.0 - 4.0 * c + 0j))
    signs = np.where(rng.random(burn_in + count) < 0.5, -1.0, 1.0)
    out = np.empty(count, dtype=np.complex128)
    for i, s in enumerate(signs):
        z = s * np.sqrt(z - c)
        if i >= burn_in:
            out[i - burn_in] = z
    return JuliaSample(c, out, "inverse-iteration", seed)


def density_gap(records: list[PeriodicPointRecord], sample: JuliaSample) -> float:
    """Largest distance from a sample point to its nearest periodic point."""
    pts = cycle_points(records)
    if len(pts) == 0 or len(sample) == 0:
        raise PreconditionError("density_gap needs non-empty inputs")
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    d, _ = tree.query(np.column_stack([sample.points.real, sample.points.imag]))
    return float(d.max())


__all__ = [
    "PeriodicPointRecord",
    "JuliaSample",
    "classify",
    "classify_modulus",
    "periodic_points",
    "inverse_branch_fixed_points",
    "residual_tolerance",
    "root_count",
    "cycle_points",
    "julia_sample",
    "density_gap",
]
