"""Linearizers at repelling fixed points.

For a planar map with repelling fixed point ``x0`` and multiplier ``lam``
the linearizer solves ``f(L(z)) = L(lam z)`` with ``L(0) = x0`` and
``L'(0) = 1``.  It is evaluated as ``L(z) = f^n(S(z / lam^n))`` where ``S``
is a local seed.  For polynomial maps the seed is the truncated power
series of ``L`` itself, obtained from the coefficient recursion
``(lam^k - lam) a_k = [z^k] sum_{j>=2} b_j w(z)^j``; this makes the first
usable ``n`` already accurate to rounding.  Other maps use the first-order
seed ``x0 + u`` and rely on larger ``n``.

Huge arguments are handled in log space: ``log|L(lam^p u)|`` equals
``log|f^p(L(u))|``, which the kernels bound from both sides without ever
forming the large number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConvergenceError, OutsideInjectivityError, PreconditionError
from .geom import _unit_directions
from .maps import MapSpec

SERIES_ORDER = 24
SERIES_EPS = 1e-17
N_MAX = 256


@dataclass(frozen=True)
class LinearizerModel:
    map: MapSpec
    x0: object
    multiplier: complex | None
    rho: float
    tolerance: float = 1e-12
    series: tuple = (1.0,)
    seed_radius: float = 0.0
    model_map: MapSpec | None = None
    n_max: int = N_MAX

    @property
    def planar(self) -> bool:
        return self.map.dimension == 2

    @property
    def expansion(self) -> float:
        """Modulus of the multiplier (or scale of the model similarity)."""
        if self.planar:
            return abs(self.multiplier)
        return self.model_map.scale

    def log_max_modulus(self, log_r: float, samples: int = 1024) -> float:
        return log_modulus(self, log_r, samples, "max")

    def log_min_modulus(self, log_r: float, samples: int = 1024) -> float:
        return log_modulus(self, log_r, samples, "min")


def _taylor_at(coeffs: tuple, x0: complex) -> np.ndarray:
    """Coefficients of ``f(x0 + w)`` in powers of ``w`` (ascending)."""
    a = np.array(coeffs, dtype=np.complex128)
    d = len(a) - 1
    b = a.copy()
    for k in range(d):
        for j in range(d - 1, k - 1, -1):
            b[j] += x0 * b[j + 1]
    return b


def poincare_series(coeffs: tuple, x0: complex, lam: complex, order: int = SERIES_ORDER) -> np.ndarray:
    """Coefficients ``a_0 = x0, a_1 = 1, a_2, ..., a_order`` of the linearizer."""
    b = _taylor_at(coeffs, x0)
    a = np.zeros(order + 1, dtype=np.complex128)
    a[1] = 1.0
    for k in range(2, order + 1):
        w = a[: k + 1].copy()
        w[0] = 0.0
        power = w.copy()
        acc = 0.0
        for j in range(2, len(b)):
            power = np.convolve(power, w)[: k + 1]
            acc += b[j] * power[k]
        a[k] = acc / (lam**k - lam)
    a[0] = x0
    return a


def _series_radius(a: np.ndarray, scale: float) -> float:
    order = len(a) - 1
    rs = []
    for k in range(max(2, order - 3), order + 1):
        if abs(a[k]) > 0:
            rs.append((SERIES_EPS * scale / abs(a[k])) ** (1.0 / k))
    return min(rs) if rs else math.inf


def _derivative(f: MapSpec, x0: complex) -> complex:
    if f.family == "polynomial":
        d = np.polynomial.polynomial.polyder(np.asarray(f.coefficients))
        return complex(np.polynomial.polynomial.polyval(x0, d))
    h = 1e-7 * max(1.0, abs(x0))
    return complex((f(x0 + h)[0] - f(x0 - h)[0]) / (2 * h))


def critical_points(f: MapSpec) -> np.ndarray:
    if f.family != "polynomial":
        return np.array([], dtype=complex)
    d = np.polynomial.polynomial.polyder(np.asarray(f.coefficients))
    if len(d) == 1:
        return np.array([], dtype=complex)
    return np.polynomial.polynomial.polyroots(d)


def make_linearizer(
    f: MapSpec,
    x0,
    multiplier: complex | None = None,
    rho: float | None = None,
    tolerance: float = 1e-12,
    model_map: MapSpec | None = None,
    order: int = SERIES_ORDER,
) -> LinearizerModel:
    """Build and validate a linearizer model.

    ``rho`` is the radius of the injective chart around 0; by default half
    the distance from ``x0`` to the nearest critical point.
    """
    if f.dimension == 2:
        x0c = complex(x0)
        if not abs(complex(f(x0c)[0]) - x0c) < 1e-10:
            raise PreconditionError("x0 is not a fixed point")
        lam = complex(multiplier) if multiplier is not None else _derivative(f, x0c)
        if not abs(lam) > 1:
            raise PreconditionError("the fixed point is not repelling")
        if rho is None:
            crit = critical_points(f)
            rho = 0.5 * float(np.min(np.abs(crit - x0c))) if len(crit) else 1.0
        if f.family == "polynomial":
            a = poincare_series(f.coefficients, x0c, lam, order)
            radius = min(_series_radius(a, max(1.0, abs(x0c))), rho)
            series = tuple(complex(c) for c in a[1:])
        else:
            series = (1.0,)
            radius = rho
        return LinearizerModel(f, x0c, lam, float(rho), tolerance, series, float(radius))
    x0a = np.asarray(x0, dtype=float)
    if model_map is None or model_map.family != "loxodromic" or model_map.dimension != 3:
        raise PreconditionError("spatial linearizers need a loxodromic model map")
    if not np.linalg.norm(f(x0a)[0] - x0a) < 1e-10:
        raise PreconditionError("x0 is not a fixed point")
    eps = 1e-6
    basis = np.eye(3)
    got = (f(x0a + eps * basis) - x0a) / eps
    want = model_map(basis)
    if not np.allclose(got, want, rtol=1e-4, atol=1e-4 * model_map.scale):
        raise PreconditionError("the model map does not match the derivative at x0")
    if rho is None:
        rho = 1.0
    return LinearizerModel(f, x0a, None, float(rho), tolerance, (1.0,), float(rho), model_map)


def _seed(model: LinearizerModel, u: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(model.series, dtype=np.complex128)
    acc = np.zeros_like(u)
    for c in coeffs[::-1]:
        acc = (acc + c) * u
    return model.x0 + acc


def _push(model: LinearizerModel, w: np.ndarray, n: int) -> np.ndarray:
    f = model.map
    if f.family == "polynomial":
        out, _ = kernels.poly_iterate(np.asarray(f.coefficients), w, n, math.inf)
        return out
    return f.iterate(w, n)


def _estimate(model: LinearizerModel, z: np.ndarray, n: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    for k in np.unique(n):
        sel = n == k
        if model.planar:
            u = z[sel] / model.multiplier ** int(k)
            out[sel] = _push(model, _seed(model, u), int(k))
        else:
            u = _model_power(model.model_map, z[sel], -int(k))
            out[sel] = model.map.iterate(model.x0 + u, int(k))
    return out


def _model_power(phi: MapSpec, x: np.ndarray, k: int) -> np.ndarray:
    A = np.linalg.matrix_power(np.asarray(phi.rotation), k)
    return (phi.scale ** k) * x @ A.T


def _start_index(model: LinearizerModel, z: np.ndarray) -> np.ndarray:
    r = np.abs(z) if model.planar else np.linalg.norm(z, axis=-1)
    with np.errstate(divide="ignore"):
        n = np.ceil(np.log(r / model.seed_radius) / math.log(model.expansion))
    return np.clip(np.nan_to_num(n, neginf=0.0), 0, None).astype(np.int64)


def linearize(model: LinearizerModel, z, n_max: int | None = None) -> np.ndarray:
    """Evaluate ``L`` at one or many points.

    ``n`` starts at the least value putting ``z / lam^n`` inside the seed
    radius and grows until successive estimates agree to
    ``tolerance * (1 + |L|)``.
    """
    n_max = model.n_max if n_max is None else n_max
    scalar = np.ndim(z) == 0 if model.planar else np.ndim(z) == 1
    if model.planar:
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    else:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    n = _start_index(model, z)
    if np.any(n > n_max):
        raise ConvergenceError("argument needs more than n_max iterations", diagnostic=int(n.max()))
    prev = _estimate(model, z, n)
    result = prev.copy()
    todo = np.arange(len(z))
    for _ in range(n_max + 1):
        n_t = n[todo] + 1
        if np.any(n_t > n_max):
            bad = todo[n_t > n_max][0]
            raise ConvergenceError("linearizer did not settle within n_max",
                                   diagnostic=(prev[bad], result[bad]))
        cur = _estimate(model, z[todo], n_t)
        diff = np.abs(cur - prev[todo]) if model.planar else np.linalg.norm(cur - prev[todo], axis=-1)
        size = np.abs(cur) if model.planar else np.linalg.norm(cur, axis=-1)
        done = diff < model.tolerance * (1.0 + size)
        result[todo] = cur
        prev[todo] = cur
        n[todo] = n_t
        todo = todo[~done]
        if todo.size == 0:
            break
    return result[0] if scalar else result


def residual(model: LinearizerModel, z, relative: bool = False) -> np.ndarray:
    """``|f(L(z)) - L(lam z)|``; relative form divides by ``1 + |L(lam z)|``."""
    Lz = np.atleast_1d(linearize(model, z))
    if model.planar:
        Llz = np.atleast_1d(linearize(model, model.multiplier * np.atleast_1d(np.asarray(z, dtype=complex))))
        res = np.abs(model.map(Lz) - Llz)
        size = np.abs(Llz)
    else:
        zz = np.atleast_2d(z)
        Llz = linearize(model, model.model_map(zz))
        res = np.linalg.norm(model.map(Lz) - Llz, axis=-1)
        size = np.linalg.norm(Llz, axis=-1)
    out = res / (1.0 + size) if relative else res
    return out[0] if np.ndim(z) == (0 if model.planar else 1) else out


def derivative(model: LinearizerModel, z: complex, h: float | None = None) -> complex:
    """Central-difference derivative of a planar linearizer."""
    h = 1e-6 * max(1.0, abs(z)) if h is None else h
    v = linearize(model, np.array([z + h, z - h]))
    return complex((v[0] - v[1]) / (2.0 * h))


def local_inverse(model: LinearizerModel, w, seed=None, max_iter: int = 60):
    """Solve ``L(z) = w`` inside the chart ``|z| <= rho`` by Newton steps.

    The default seed is ``w - x0``.  Raises ``OutsideInjectivityError`` when
    Newton diverges, leaves the chart, or the round trip misses ``w``.
    """
    if not model.planar:
        return _local_inverse_spatial(model, np.asarray(w, dtype=float), seed, max_iter)
    w = complex(w)
    z = w - model.x0 if seed is None else complex(seed)
    tol = model.tolerance * (1.0 + abs(w))
    for _ in range(max_iter):
        if not abs(z) <= model.rho:
            raise OutsideInjectivityError(f"Newton iterate {z} left the chart of radius {model.rho}")
        err = complex(linearize(model, z)) - w
        if abs(err) < tol:
            return z
        dz = err / derivative(model, z)
        z = z - dz
        if abs(dz) < 1e-3 * tol:
            break
    err = abs(complex(linearize(model, z)) - w)
    if err < tol and abs(z) <= model.rho:
        return z
    raise OutsideInjectivityError(f"round trip misses the target by {err}")


def _local_inverse_spatial(model: LinearizerModel, w: np.ndarray, seed, max_iter: int) -> np.ndarray:
    z = w - model.x0 if seed is None else np.asarray(seed, dtype=float)
    tol = model.tolerance * (1.0 + np.linalg.norm(w))
    for _ in range(max_iter):
        if not np.linalg.norm(z) <= model.rho:
            raise OutsideInjectivityError("Newton iterate left the chart")
        err = linearize(model, z) - w
        if np.linalg.norm(err) < tol:
            return z
        h = 1e-6 * max(1.0, float(np.linalg.norm(z)))
        pts = np.concatenate([z + h * np.eye(3), z - h * np.eye(3)])
        vals = linearize(model, pts)
        J = ((vals[:3] - vals[3:]) / (2 * h)).T
        z = z - np.linalg.solve(J, err)
    err = np.linalg.norm(linearize(model, z) - w)
    if err < tol:
        return z
    raise OutsideInjectivityError(f"round trip misses the target by {err}")


# --- log-space evaluation ---------------------------------------------------------


def escape_bailout(coeffs) -> float:
    """Radius beyond which ``|f(w)| = |a_d||w|^d (1 + eps)`` with tiny ``eps``."""
    a = np.asarray(coeffs, dtype=np.complex128)
    d = len(a) - 1
    ratios = np.abs(a[:-1]) / abs(a[-1])
    scale = max([1.0] + [float(q) ** (1.0 / (d - k)) for k, q in enumerate(ratios) if q > 0])
    return 1e8 * scale


def log_abs_pushed(model: LinearizerModel, u: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Bounds on ``log|L(lam^p u)| = log|f^p(L(u))|`` for moderate ``u``."""
    if model.map.family != "polynomial":
        raise PreconditionError("log-space evaluation needs a polynomial map")
    w = np.atleast_1d(linearize(model, u))
    co = np.asarray(model.map.coefficients)
    return kernels.poly_log_abs(co, w, int(p), escape_bailout(co))


def circle_base(model: LinearizerModel, log_r: float, samples: int) -> tuple[np.ndarray, int]:
    """Points ``u`` with ``lam^p u`` on the circle ``|z| = e^{log_r}``."""
    lam = model.multiplier
    ref = min(model.seed_radius, model.rho)
    p = max(0, int(math.ceil((log_r - math.log(ref)) / math.log(abs(lam)))))
    rot = (lam / abs(lam)) ** (-p)
    u = math.exp(log_r - p * math.log(abs(lam))) * _unit_directions(samples, 2) * rot
    return u, p


def log_modulus(model: LinearizerModel, log_r: float, samples: int = 1024, which: str = "max") -> float:
    """``log M(r, L)`` (upper bound per sample) or ``log m(r, L)`` (lower bound)."""
    u, p = circle_base(model, log_r, samples)
    lo, hi = log_abs_pushed(model, u, p)
    return float(hi.max()) if which == "max" else float(lo.min())


__all__ = [
    "LinearizerModel",
    "make_linearizer",
    "linearize",
    "residual",
    "local_inverse",
    "derivative",
    "poincare_series",
    "log_modulus",
    "log_abs_pushed",
    "circle_base",
    "escape_bailout",
    "critical_points",
]
