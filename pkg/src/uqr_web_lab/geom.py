"""Points, rings, curves, sphere samples and modulus functionals in R^2 and R^3.

Planar points are handled as complex numbers throughout; spatial points as
arrays of shape ``(N, 3)``.  Sphere samples are deterministic and nested:
the first ``N`` points of a sample of size ``2N`` are the sample of size
``N``, so sampled maxima can only grow as the count grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import EvaluationError, PreconditionError, ThresholdTooSmallError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
# Kronecker constants of the plastic number, used for the 3-D sequence.
_PLASTIC = 1.324717957244746
_ALPHA3 = (1.0 / _PLASTIC, 1.0 / _PLASTIC**2)
REFINE_RTOL = 1e-6


class Map(Protocol):
    dimension: int

    def __call__(self, x): ...


def as_points(x, n: int) -> np.ndarray:
    """Normalise input to complex ``(N,)`` for n=2 or real ``(N, 3)`` for n=3."""
    if n == 2:
        a = np.asarray(x)
        if a.ndim >= 1 and a.shape[-1] == 2 and not np.iscomplexobj(a):
            a = a[..., 0] + 1j * a[..., 1]
        return np.atleast_1d(a.astype(np.complex128))
    a = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if a.shape[-1] != 3:
        raise PreconditionError("spatial points need three coordinates")
    return a


def norms(points: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(points):
        return np.abs(points)
    return np.linalg.norm(points, axis=-1)


@dataclass(frozen=True)
class Point:
    coords: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) not in (2, 3):
            raise PreconditionError("points live in R^2 or R^3")
        if not all(math.isfinite(c) for c in self.coords):
            raise PreconditionError("point coordinates must be finite")

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls((float(z.real), float(z.imag)))

    def to_complex(self) -> complex:
        if self.dimension != 2:
            raise PreconditionError("only planar points have a complex form")
        return complex(self.coords[0], self.coords[1])

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.float64)


@dataclass(frozen=True)
class Ring:
    """Ring domain ``inner < |x - center| < outer``."""

    center: complex | tuple = 0j
    inner: float = 1.0
    outer: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.inner < self.outer):
            raise PreconditionError("ring radii must satisfy 0 < inner < outer")


@dataclass(frozen=True)
class ClosedCurve:
    """Closed polyline; the last vertex joins the first.

    ``vertices`` is complex ``(N,)`` for planar curves or ``(N, 3)`` real.
    Planar curves may carry ``log_scale``: actual coordinates are
    ``vertices * exp(log_scale)``, which keeps curves far beyond the double
    range representable.
    """

    vertices: np.ndarray
    resolution: float
    log_scale: float = 0.0
    tolerance: float = 1e-12

    def __post_init__(self):
        v = np.array(self.vertices, copy=True)
        if v.ndim == 1:
            v = v.astype(np.complex128)
        if len(v) < 8:
            raise PreconditionError("closed curves need at least 8 vertices")
        if not np.all(np.isfinite(v)):
            raise PreconditionError("curve vertices must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        gap = float(self.gaps().max())
        if gap > self.resolution * (1 + 1e-9) + 1e-300:
            raise PreconditionError(f"vertex gap {gap} exceeds declared resolution {self.resolution}")

    @property
    def planar(self) -> bool:
        return self.vertices.ndim == 1

    def __len__(self) -> int:
        return len(self.vertices)

    def gaps(self) -> np.ndarray:
        """Consecutive vertex gaps in the stored (unscaled) frame."""
        v = self.vertices
        return norms(np.roll(v, -1, axis=0) - v)

    @classmethod
    def from_vertices(cls, vertices, log_scale: float = 0.0) -> "ClosedCurve":
        v = np.asarray(vertices)
        gap = float(norms(np.roll(v, -1, axis=0) - v).max())
        return cls(v, resolution=gap, log_scale=log_scale)

    @classmethod
    def circle(cls, center: complex = 0j, radius: float = 1.0, count: int = 256) -> "ClosedCurve":
        t = 2.0 * np.pi * np.arange(count) / count
        return cls.from_vertices(center + radius * np.exp(1j * t))

    def log_norms(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(norms(self.vertices)) + self.log_scale

    def max_norm(self) -> float:
        """Largest vertex norm; ``inf`` when it exceeds the double range."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_norms().max()))

    def min_norm(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_norms().min()))

    def diameter(self) -> float:
        v = self.vertices
        if self.planar:
            pts = np.column_stack([v.real, v.imag])
        else:
            pts = v
        d = 0.0
        for i0 in range(0, len(pts), 512):
            diff = pts[i0:i0 + 512, None, :] - pts[None, :, :]
            d = max(d, float(np.sqrt((diff**2).sum(-1)).max()))
        return d * math.exp(self.log_scale) if self.log_scale < 700 else math.inf

    def actual_vertices(self) -> np.ndarray:
        """Vertices in the true frame (may overflow to inf for huge curves)."""
        with np.errstate(over="ignore"):
            return self.vertices * math.exp(self.log_scale) if self.log_scale else self.vertices.copy()


@dataclass(frozen=True)
class SphereSample:
    radius: float
    points: np.ndarray
    count: int
    max_gap: float
    center: object = 0.0

    @property
    def dimension(self) -> int:
        return 2 if np.iscomplexobj(self.points) else 3


def _unit_directions(count: int, n: int) -> np.ndarray:
    k = np.arange(count, dtype=np.float64)
    if n == 2:
        theta = np.mod(k * GOLDEN_ANGLE, 2.0 * np.pi)
        return np.exp(1j * theta)
    u = np.mod(0.5 + k * _ALPHA3[0], 1.0)
    v = np.mod(0.5 + k * _ALPHA3[1], 1.0)
    z = 1.0 - 2.0 * u
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * np.pi * v
    pts = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return pts / np.linalg.norm(pts, axis=1)[:, None]


def sphere_sample(radius: float, count: int, n: int = 2, center=0.0, jitter_seed: int | None = None) -> SphereSample:
    """Deterministic nested sample of the sphere ``|x - center| = radius``.

    Golden-angle points in the plane, a Kronecker sequence mapped by the
    area-preserving cylinder projection in space.  ``jitter_seed`` rotates the
    whole sample by a seeded random rotation (off by default).
    """
    if not radius > 0:
        raise PreconditionError("sphere radius must be positive")
    if count < 1:
        raise PreconditionError("sample count must be positive")
    u = _unit_directions(count, n)
    if jitter_seed is not None:
        rng = np.random.default_rng(jitter_seed)
        if n == 2:
            u = u * np.exp(2j * np.pi * rng.random())
        else:
            q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            u = u @ q.T
    if n == 2:
        ang = np.sort(np.angle(u))
        gaps = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
        gap = 2.0 * radius * math.sin(float(gaps.max()) / 2.0)
        pts = center + radius * u
    else:
        # covering radius estimated against a denser probe set
        probe = _unit_directions(8 * count + 64, 3)
        dist, _ = cKDTree(u).query(probe)
        gap = 2.0 * radius * float(dist.max())
        pts = np.asarray(center, dtype=np.float64) + radius * u
    return SphereSample(radius=float(radius), points=pts, count=count, max_gap=gap, center=center)


def _abs_values(f: Map, pts: np.ndarray) -> np.ndarray:
    vals = f(pts)
    a = norms(vals)
    bad = ~np.isfinite(a)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise EvaluationError("non-finite map value", pts[i])
    return a


def _modulus(f: Map, r: float, samples: int, which: str, refine: bool) -> float:
    if not r > 0:
        raise PreconditionError("radius must be positive")
    if samples < 64:
        raise PreconditionError("at least 64 samples are required")
    reduce = np.max if which == "max" else np.min
    n = samples
    val = float(reduce(_abs_values(f, sphere_sample(r, n, f.dimension).points)))
    if not refine:
        return val
    for _ in range(20):
        n *= 2
        new = float(reduce(_abs_values(f, sphere_sample(r, n, f.dimension).points)))
        if abs(new - val) <= REFINE_RTOL * abs(new):
            return new
        val = new
    return val


def max_modulus(f: Map, r: float, samples: int = 1024, refine: bool = False) -> float:
    """Sampled ``max |f(x)|`` over ``|x| = r``; a lower bound on the true value.

    With ``refine=True`` the sample count doubles until the value moves by
    less than ``REFINE_RTOL`` relative.
    """
    return _modulus(f, r, samples, "max", refine)


def min_modulus(f: Map, r: float, samples: int = 1024, refine: bool = False) -> float:
    """Sampled ``min |f(x)|`` over ``|x| = r``; an upper bound on the true value."""
    return _modulus(f, r, samples, "min", refine)


def iterated_max_modulus(f: Map, R: float, m: int, samples: int = 1024) -> float:
    """``M^m(R, f)`` by the recursion ``M^m = M^{m-1}(M(R, f), f)``."""
    if m < 1:
        raise PreconditionError("m must be at least 1")
    first = max_modulus(f, R, samples)
    if not first > R:
        raise ThresholdTooSmallError(f"M(R, f) = {first} does not exceed R = {R}")
    r = first
    for _ in range(m - 1):
        r = max_modulus(f, r, samples)
    return r


def modulus_on_set(f: Map, points, which: str = "max") -> float:
    """``max`` or ``min`` of ``|f|`` over a curve, sphere sample or point array."""
    if isinstance(points, ClosedCurve):
        pts = points.actual_vertices()
    elif isinstance(points, SphereSample):
        pts = points.points
    else:
        pts = np.asarray(points)
    if len(pts) == 0:
        raise PreconditionError("modulus over an empty set")
    if which not in ("max", "min"):
        raise PreconditionError("which must be 'max' or 'min'")
    a = _abs_values(f, pts)
    return float(a.max() if which == "max" else a.min())


def winding_number(curve: ClosedCurve, point: complex, tolerance: float | None = None) -> int:
    """Integer winding number of a planar curve about ``point``."""
    w = winding_numbers(curve, np.array([point]), tolerance)
    return int(w[0])


def winding_numbers(curve: ClosedCurve, points, tolerance: float | None = None) -> np.ndarray:
    """Vectorised winding numbers; points are in the curve's true frame."""
    if not curve.planar:
        raise PreconditionError("winding numbers need a planar curve")
    pts = np.atleast_1d(np.asarray(points, dtype=np.complex128)) * math.exp(-curve.log_scale)
    tol = curve.tolerance if tolerance is None else tolerance
    dist = point_curve_distance(curve.vertices, pts)
    if np.any(dist <= tol):
        raise PreconditionError("point lies on the curve within tolerance")
    raw = kernels.winding_numbers(curve.vertices, pts)
    return np.rint(raw).astype(np.int64)


def point_curve_distance(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Distance from each planar point to a closed polyline."""
    a = np.asarray(vertices, dtype=np.complex128)
    b = np.roll(a, -1)
    seg = b - a
    L2 = np.maximum(np.abs(seg) ** 2, 1e-300)
    out = np.empty(len(points))
    for i0 in range(0, len(points), 256):
        p = points[i0:i0 + 256, None]
        t = np.clip(((p - a) * np.conj(seg)).real / L2, 0.0, 1.0)
        out[i0:i0 + 256] = np.abs(p - (a + t * seg)).min(axis=1)
    return out


def is_simple(curve: ClosedCurve) -> bool:
    """True when no two non-adjacent polyline segments intersect."""
    v = curve.vertices
    n = len(v)
    p = np.column_stack([v.real, v.imag])
    q = np.roll(p, -1, axis=0)
    lo = np.minimum(p, q)
    hi = np.maximum(p, q)
    order = np.argsort(lo[:, 0])
    for ii, i in enumerate(order):
        for j in order[ii + 1:]:
            if lo[j, 0] > hi[i, 0]:
                break
            if abs(int(i) - int(j)) in (0, 1, n - 1):
                continue
            if lo[j, 1] > hi[i, 1] or hi[j, 1] < lo[i, 1]:
                continue
            if _segments_cross(p[i], q[i], p[j], q[j]):
                return False
    return True


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 <= 0) and (o3 * o4 <= 0)


__all__ = [
    "Point",
    "Ring",
    "ClosedCurve",
    "SphereSample",
    "sphere_sample",
    "max_modulus",
    "min_modulus",
    "iterated_max_modulus",
    "modulus_on_set",
    "winding_number",
    "winding_numbers",
    "point_curve_distance",
    "is_simple",
    "as_points",
    "norms",
]
