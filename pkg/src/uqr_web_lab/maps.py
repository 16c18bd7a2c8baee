"""Concrete dynamical maps and numerical dilatation estimates.

Families
--------
``polynomial``
    Complex polynomial, coefficients stored in ascending order.
``loxodromic``
    ``x -> c A x`` with ``c > 1`` and ``A`` a rotation.
``similarity``
    ``x -> s A x + b``.
``example28``
    The piecewise-linear quasiconformal construction: ``g1`` on the closed
    unit disk, ``g2`` outside radius 2, an explicit interpolation between,
    and the conjugate ``f = g o (2 .) o g^-1``.  ``piece`` picks which of
    ``f``, ``g``, ``g_inv``, ``g1``, ``g2`` to evaluate.

The interpolation on ``1 < |z| < 2`` works in polar form.  With
``t = |z| - 1`` the image argument is the blend ``(1-t) psi0 + t psi1`` of
the boundary arguments ``psi0 = arg g1(e^{i theta})`` and
``psi1 = arg g2(e^{i theta})``, and the image radius is the blend
``(1-t) rho0 + t rho1`` of the two boundary image curves written in polar
form over that argument.  Since ``rho1 >= 2 rho0`` in every direction the
blend is injective, and it agrees with ``g1`` and ``g2`` on the boundary
circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError, UnreliableEstimateError
from .geom import Point, Ring, as_points, sphere_sample

FAMILIES = ("polynomial", "loxodromic", "similarity", "example28")
EX28_PIECES = ("f", "g", "g_inv", "g1", "g2")
DEGENERATE_FRACTION = 0.01


@dataclass(frozen=True)
class MapSpec:
    family: str
    dimension: int = 2
    coefficients: tuple = ()
    scale: float = 1.0
    rotation: tuple = ()
    translation: tuple = ()
    piece: str = "f"
    declared_K: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown map family {self.family!r}")
        if self.dimension not in (2, 3):
            raise PreconditionError("maps live in dimension 2 or 3")
        if self.family == "polynomial":
            co = tuple(complex(c) for c in self.coefficients)
            while len(co) > 1 and co[-1] == 0:
                co = co[:-1]
            if len(co) < 2 or co[-1] == 0:
                raise PreconditionError("polynomial needs degree >= 1 with non-zero leading coefficient")
            if self.dimension != 2:
                raise PreconditionError("polynomials are planar")
            object.__setattr__(self, "coefficients", co)
        if self.family in ("loxodromic", "similarity"):
            if not self.scale > 0:
                raise PreconditionError("scale must be positive")
            if self.family == "loxodromic" and not self.scale > 1:
                raise PreconditionError("loxodromic scale must exceed 1")
            n = self.dimension
            rot = np.eye(n) if not self.rotation else np.asarray(self.rotation, dtype=float)
            if rot.shape != (n, n) or not np.allclose(rot @ rot.T, np.eye(n), atol=1e-12):
                raise PreconditionError("rotation must be orthonormal")
            if np.linalg.det(rot) < 0:
                raise PreconditionError("rotation must preserve orientation")
            object.__setattr__(self, "rotation", tuple(map(tuple, rot)))
            tr = (0.0,) * n if not self.translation else tuple(float(t) for t in self.translation)
            if len(tr) != n:
                raise PreconditionError("translation has the wrong dimension")
            if self.family == "loxodromic" and any(tr):
                raise PreconditionError("loxodromic maps fix the origin")
            object.__setattr__(self, "translation", tr)
        if self.family == "example28":
            if self.piece not in EX28_PIECES:
                raise PreconditionError(f"unknown example piece {self.piece!r}")
            if self.dimension != 2:
                raise PreconditionError("the example map is planar")
        if self.declared_K is not None and self.declared_K < 1:
            raise PreconditionError("declared K must be at least 1")

    @property
    def degree(self) -> int:
        return degree(self)

    def __call__(self, x):
        return _apply(self, as_points(x, self.dimension))

    def iterate(self, x, m: int):
        pts = as_points(x, self.dimension)
        for _ in range(m):
            pts = _apply(self, pts)
        return pts

    def rotation_complex(self) -> complex:
        R = np.asarray(self.rotation)
        return complex(R[0, 0], R[1, 0])

    def to_config(self) -> dict[str, str]:
        """Flat ``key -> value`` strings in the run-config format."""
        out = {"map.family": self.family, "map.dimension": str(self.dimension)}
        if self.family == "polynomial":
            out["map.coefficients"] = ",".join(_fmt_complex(c) for c in self.coefficients)
        elif self.family in ("loxodromic", "similarity"):
            out["map.scale"] = repr(self.scale)
            out["map.rotation"] = ",".join(repr(float(v)) for row in self.rotation for v in row)
            out["map.translation"] = ",".join(repr(v) for v in self.translation)
        else:
            out["map.piece"] = self.piece
        if self.declared_K is not None:
            out["map.declared_K"] = repr(self.declared_K)
        return out

    @classmethod
    def from_config(cls, items: dict[str, str]) -> "MapSpec":
        fam = items["map.family"]
        n = int(items.get("map.dimension", "2"))
        kw: dict = {"family": fam, "dimension": n}
        if "map.declared_K" in items:
            kw["declared_K"] = float(items["map.declared_K"])
        if fam == "polynomial":
            kw["coefficients"] = tuple(complex(s.replace(" ", "")) for s in items["map.coefficients"].split(","))
        elif fam in ("loxodromic", "similarity"):
            kw["scale"] = float(items["map.scale"])
            vals = [float(s) for s in items["map.rotation"].split(",")]
            kw["rotation"] = tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n))
            kw["translation"] = tuple(float(s) for s in items["map.translation"].split(","))
        elif fam == "example28":
            kw["piece"] = items.get("map.piece", "f")
        return cls(**kw)


def _fmt_complex(c: complex) -> str:
    return repr(complex(c)).strip("()")


# --- constructors ---------------------------------------------------------


def polynomial(coefficients, declared_K: float | None = 1.0) -> MapSpec:
    """Polynomial from ascending coefficients ``a0, a1, ..., ad``."""
    return MapSpec("polynomial", 2, coefficients=tuple(coefficients), declared_K=declared_K)


def quadratic(c: complex) -> MapSpec:
    """``z -> z^2 + c``."""
    return polynomial((c, 0.0, 1.0))


def similarity(scale: float, rotation=None, translation=None, dimension: int = 2) -> MapSpec:
    """``x -> scale * A x + b``; ``rotation`` may be an angle in the plane."""
    rot = _rotation(rotation, dimension)
    return MapSpec("similarity", dimension, scale=float(scale), rotation=rot,
                   translation=tuple(translation) if translation is not None else (), declared_K=1.0)


def loxodromic(scale: float, rotation=None, dimension: int = 2) -> MapSpec:
    """``x -> scale * A x`` with ``scale > 1``."""
    return MapSpec("loxodromic", dimension, scale=float(scale), rotation=_rotation(rotation, dimension),
                   declared_K=1.0)


def _rotation(rotation, n: int) -> tuple:
    if rotation is None:
        return ()
    if np.isscalar(rotation):
        if n != 2:
            raise PreconditionError("an angle only defines a planar rotation")
        c, s = math.cos(rotation), math.sin(rotation)
        return ((c, -s), (s, c))
    return tuple(map(tuple, np.asarray(rotation, dtype=float)))


def example28_map(piece: str = "f") -> MapSpec:
    """The composite ``f = g o (2 .) o g^-1`` (or one of its ingredients)."""
    return MapSpec("example28", 2, piece=piece, declared_K=None)


# --- evaluation -----------------------------------------------------------


def _apply(f: MapSpec, pts: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        if f.family == "polynomial":
            out = np.polynomial.polynomial.polyval(pts, np.asarray(f.coefficients))
        elif f.family in ("loxodromic", "similarity"):
            if f.dimension == 2:
                out = f.scale * f.rotation_complex() * pts + complex(*f.translation)
            else:
                out = f.scale * pts @ np.asarray(f.rotation).T + np.asarray(f.translation)
        else:
            out = _EX28[f.piece](pts)
    if np.iscomplexobj(out):
        bad = ~np.isfinite(out)
        if bad.any():
            out = out.copy()
            out[bad] = complex(math.inf, 0.0)
    else:
        bad = ~np.all(np.isfinite(out), axis=-1)
        if bad.any():
            out = out.copy()
            out[bad] = math.inf
    return out


def evaluate(f: MapSpec, x):
    """Apply ``f`` to a point, complex scalar or array of points.

    Overflowing values come back as ``inf`` so escape tests can use them.
    """
    if isinstance(x, Point):
        if f.dimension == 2:
            return Point.from_complex(complex(f(x.to_complex())[0]))
        return Point(tuple(float(v) for v in f(x.as_array())[0]))
    if np.isscalar(x):
        return complex(f(x)[0])
    return f(x)


def degree(f: MapSpec) -> int:
    if f.family == "polynomial":
        return len(f.coefficients) - 1
    return 1


# --- the piecewise example --------------------------------------------------


def g1(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    return np.where(x >= 0, x, x / 10.0) + 1j * y


def g1_inv(w: np.ndarray) -> np.ndarray:
    x, y = w.real, w.imag
    return np.where(x >= 0, x, 10.0 * x) + 1j * y


def g2(z: np.ndarray) -> np.ndarray:
    x, y = z.real, z.imag
    return np.where(x >= 0, -x / 10.0, -x) - 1j * y


def g2_inv(w: np.ndarray) -> np.ndarray:
    x, y = w.real, w.imag
    return np.where(x <= 0, -10.0 * x, -x) - 1j * y


def _h(u: np.ndarray) -> np.ndarray:
    # g2 = -h with h compressing the right half plane
    x, y = u.real, u.imag
    return np.where(x >= 0, x / 10.0, x) + 1j * y


def _psi_blend(theta: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Lifted image argument on the circle of radius ``1 + t``; increasing in theta."""
    u = np.exp(1j * theta)
    a0 = np.angle(g1(u))
    a1 = np.angle(_h(u)) + math.pi
    # atan2 jumps at theta = pi; theta is kept in (-pi, pi]
    return (1.0 - t) * a0 + t * a1


def _rho0(psi: np.ndarray) -> np.ndarray:
    return 1.0 / np.abs(g1_inv(np.exp(1j * psi)))


def _rho1(psi: np.ndarray) -> np.ndarray:
    return 2.0 / np.abs(g2_inv(np.exp(1j * psi)))


def _g_int(z: np.ndarray) -> np.ndarray:
    r = np.abs(z)
    t = r - 1.0
    theta = np.angle(z)
    psi = _psi_blend(theta, t)
    rad = (1.0 - t) * _rho0(psi) + t * _rho1(psi)
    return rad * np.exp(1j * psi)


def _g_int_inv(w: np.ndarray) -> np.ndarray:
    psi = np.angle(w)
    r0, r1 = _rho0(psi), _rho1(psi)
    t = (np.abs(w) - r0) / (r1 - r0)
    # the blended argument covers (-pi + t pi, pi + t pi]; lift the target
    lo_edge = -math.pi + t * math.pi
    target = lo_edge + np.mod(psi - lo_edge, 2.0 * math.pi)
    a = np.full(w.shape, -math.pi)
    b = np.full(w.shape, math.pi)
    for _ in range(64):
        mid = 0.5 * (a + b)
        below = _psi_blend(mid, t) < target
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    theta = 0.5 * (a + b)
    return (1.0 + t) * np.exp(1j * theta)


def g_map(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.complex128)
    r = np.abs(z)
    out = np.empty_like(z)
    inner = r <= 1.0
    outer = r >= 2.0
    mid = ~(inner | outer)
    out[inner] = g1(z[inner])
    out[outer] = g2(z[outer])
    if mid.any():
        out[mid] = _g_int(z[mid])
    return out


def g_inv(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    psi = np.angle(w)
    r = np.abs(w)
    inner = r <= _rho0(psi)
    outer = r >= _rho1(psi)
    mid = ~(inner | outer)
    out = np.empty_like(w)
    out[inner] = g1_inv(w[inner])
    out[outer] = g2_inv(w[outer])
    if mid.any():
        out[mid] = _g_int_inv(w[mid])
    return out


def f_example(z: np.ndarray) -> np.ndarray:
    return g_map(2.0 * g_inv(z))


_EX28 = {"f": f_example, "g": g_map, "g_inv": g_inv, "g1": g1, "g2": g2}


# --- dilatation ----------------------------------------------------------------


@dataclass(frozen=True)
class DilatationEstimate:
    K_O: float
    K_I: float
    K: float
    grid: int
    cells: int
    skipped: int
    note: str = field(default="finite-difference estimate; not a certified bound")


def _jacobians(f: MapSpec, centers: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = f.dimension
    if n == 2:
        cols = []
        for e in (1.0, 1j):
            d = (f(centers + h * e) - f(centers - h * e)) / (2.0 * h)
            cols.append(np.column_stack([d.real, d.imag]))
        return np.stack(cols, axis=-1)
    cols = []
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        d = (f(centers + h[:, None] * e) - f(centers - h[:, None] * e)) / (2.0 * h[:, None])
        cols.append(d)
    return np.stack(cols, axis=-1)


def estimate_dilatation(f: MapSpec, region: Ring, grid: int = 64, sector: tuple[float, float] | None = None) -> DilatationEstimate:
    """Outer, inner and maximal dilatation from per-cell central differences.

    Planar regions use a polar ``grid x grid`` cell layout, optionally
    restricted to the angular ``sector = (theta_min, theta_max)``; spatial
    shells use ``grid`` radii times ``grid**2`` sphere directions.  The step is
    ``1e-5`` times the cell size.  Cells with non-positive or negligible
    Jacobian are skipped and counted.
    """
    if grid < 2:
        raise PreconditionError("grid must be at least 2")
    n = f.dimension
    dr = (region.outer - region.inner) / grid
    radii = region.inner + (np.arange(grid) + 0.5) * dr
    if n == 2:
        t0, t1 = sector if sector is not None else (0.0, 2.0 * math.pi)
        dt = (t1 - t0) / grid
        th = t0 + (np.arange(grid) + 0.5) * dt
        R, T = np.meshgrid(radii, th, indexing="ij")
        center = complex(region.center) if not isinstance(region.center, tuple) else complex(*region.center)
        centers = (center + R * np.exp(1j * T)).ravel()
        size = np.minimum(dr, R * dt).ravel()
    else:
        if sector is not None:
            raise PreconditionError("angular sectors are planar only")
        dirs = sphere_sample(1.0, grid * grid, 3).points
        c0 = np.asarray(region.center if isinstance(region.center, tuple) else (0.0, 0.0, 0.0), dtype=float)
        centers = (c0 + radii[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        ang = math.sqrt(4.0 * math.pi / (grid * grid))
        size = np.repeat(np.minimum(dr, radii * ang), grid * grid)
    h = 1e-5 * size
    J = _jacobians(f, centers, h)
    sv = np.linalg.svd(J, compute_uv=False)
    det = np.linalg.det(J)
    smax, smin = sv[:, 0], sv[:, -1]
    ok = np.isfinite(det) & (det > 1e-12 * np.maximum(smax, 1e-300) ** n) & (smin > 0)
    skipped = int((~ok).sum())
    cells = len(det)
    if skipped > DEGENERATE_FRACTION * cells:
        raise UnreliableEstimateError(f"{skipped} of {cells} cells have a degenerate Jacobian")
    KO = max(1.0, float(np.max(smax[ok] ** n / det[ok])))
    KI = max(1.0, float(np.max(det[ok] / smin[ok] ** n)))
    return DilatationEstimate(K_O=KO, K_I=KI, K=max(KO, KI), grid=grid, cells=cells, skipped=skipped)


__all__ = [
    "MapSpec",
    "DilatationEstimate",
    "polynomial",
    "quadratic",
    "similarity",
    "loxodromic",
    "example28_map",
    "evaluate",
    "degree",
    "estimate_dilatation",
    "g1",
    "g2",
    "g1_inv",
    "g2_inv",
    "g_map",
    "g_inv",
    "f_example",
]
