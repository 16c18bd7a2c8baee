"""Pure numpy implementations of the hot loops.

Every function here has a twin with the same signature in ``_kernels_c``.
The two are tested against each other; this module is the reference.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

_BIG_ORBIT = 1e100


def _horner(coeffs: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.full_like(w, coeffs[-1])
    for a in coeffs[-2::-1]:
        out = out * w + a
    return out


def poly_iterate(coeffs, z, n, bailout):
    """Iterate a polynomial (ascending coefficients) ``n`` times.

    A point stops as soon as its modulus exceeds ``bailout``; ``steps`` holds
    the number of completed iterations per point.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    w = np.array(z, dtype=np.complex128, copy=True).ravel()
    steps = np.full(w.shape, n, dtype=np.int64)
    active = np.arange(w.size)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            if active.size == 0:
                break
            w[active] = _horner(coeffs, w[active])
            a = np.abs(w[active])
            out = ~(a <= bailout)
            if out.any():
                steps[active[out]] = i + 1
                active = active[~out]
    return w, steps


def _eps(ratios: np.ndarray, d: int, ell: np.ndarray) -> np.ndarray:
    e = np.zeros_like(ell)
    with np.errstate(over="ignore", under="ignore"):
        for k, q in enumerate(ratios):
            if q != 0.0:
                e = e + q * np.exp((k - d) * ell)
    return e


def poly_log_abs(coeffs, z, n, big):
    """Bounds ``lo <= log|f^n(z)| <= hi`` valid once orbits pass ``big``.

    Orbits are iterated exactly while ``|w| <= big``.  Afterwards only the
    logarithm is tracked, using
    ``|a_d||w|^d (1 - eps) <= |f(w)| <= |a_d||w|^d (1 + eps)`` with
    ``eps = sum_k |a_k/a_d| |w|^(k-d)``.  The caller picks ``big`` so that
    ``eps < 1/2`` there.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    d = coeffs.size - 1
    w, steps = poly_iterate(coeffs, z, n, big)
    with np.errstate(divide="ignore"):
        lo = np.log(np.abs(w))
    hi = lo.copy()
    ad = np.abs(coeffs[-1])
    log_ad = np.log(ad)
    ratios = np.abs(coeffs[:-1]) / ad
    rem = n - steps
    for r in range(int(rem.max()) if rem.size else 0):
        idx = rem > r
        e = _eps(ratios, d, lo[idx])
        with np.errstate(over="ignore", invalid="ignore"):
            hi[idx] = d * hi[idx] + log_ad + np.log1p(e)
            lo[idx] = d * lo[idx] + log_ad + np.log1p(-np.minimum(e, 1.0))
    return lo, hi


def quad_newton_ratio(z, c, p):
    """Newton ratio ``P/P'`` for ``P(z) = f^p(z) - z`` with ``f = z^2 + c``.

    Once ``|w|`` exceeds 1e100 the ratio ``t = w'/w`` is tracked instead,
    which stays finite where ``w`` itself would overflow.
    """
    z = np.asarray(z, dtype=np.complex128)
    w = z.copy()
    dw = np.ones_like(z)
    t = np.zeros_like(z)
    big = np.zeros(z.shape, dtype=bool)
    for _ in range(p):
        nb = ~big
        dw[nb] = 2.0 * w[nb] * dw[nb]
        w[nb] = w[nb] * w[nb] + c
        wb = w[big]
        with np.errstate(under="ignore"):
            # (c/w)/w instead of c/(w*w): w*w can overflow and complex c/inf is nan
            t[big] = 2.0 * t[big] / (1.0 + (c / wb) / wb)
        newly = nb & (np.abs(w) > _BIG_ORBIT)
        t[newly] = dw[newly] / w[newly]
        big |= newly
    out = np.empty_like(z)
    nb = ~big
    with np.errstate(divide="ignore", invalid="ignore"):
        out[nb] = (w[nb] - z[nb]) / (dw[nb] - 1.0)
        out[big] = 1.0 / t[big]
    return out


def aberth_correction(z, ratio):
    """Aberth-Ehrlich correction ``r/(1 - r*sum_j 1/(z_k - z_j))``."""
    z = np.asarray(z, dtype=np.complex128)
    ratio = np.asarray(ratio, dtype=np.complex128)
    n = z.size
    s = np.zeros(n, dtype=np.complex128)
    chunk = max(1, 4_000_000 // max(n, 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        for i0 in range(0, n, chunk):
            i1 = min(n, i0 + chunk)
            diff = z[i0:i1, None] - z[None, :]
            diff[np.arange(i1 - i0), np.arange(i0, i1)] = np.inf
            s[i0:i1] = (1.0 / diff).sum(axis=1)
        return ratio / (1.0 - ratio * s)


def gauss_linking(a, b):
    """Gauss linking integral of two closed polylines by midpoint sums."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    da = np.roll(a, -1, axis=0) - a
    db = np.roll(b, -1, axis=0) - b
    ma = a + 0.5 * da
    mb = b + 0.5 * db
    total = 0.0
    chunk = max(1, 2_000_000 // max(len(b), 1))
    for i0 in range(0, len(a), chunk):
        r = ma[i0:i0 + chunk, None, :] - mb[None, :, :]
        cr = np.cross(da[i0:i0 + chunk, None, :], db[None, :, :])
        num = np.einsum("ijk,ijk->ij", r, cr)
        den = np.einsum("ijk,ijk->ij", r, r) ** 1.5
        total += float((num / den).sum())
    return total / (4.0 * np.pi)


def winding_numbers(vertices, points):
    """Signed angle sums of a closed polyline about each point, over 2*pi."""
    v = np.asarray(vertices, dtype=np.complex128)
    pts = np.asarray(points, dtype=np.complex128).ravel()
    out = np.empty(pts.size, dtype=np.float64)
    vn = np.roll(v, -1)
    chunk = max(1, 2_000_000 // max(v.size, 1))
    for i0 in range(0, pts.size, chunk):
        p = pts[i0:i0 + chunk, None]
        a = v[None, :] - p
        b = vn[None, :] - p
        ang = np.arctan2((a.real * b.imag - a.imag * b.real), (a.real * b.real + a.imag * b.imag))
        out[i0:i0 + chunk] = ang.sum(axis=1) / (2.0 * np.pi)
    return out


def voxelize(origin, spacing, shape, kinds, centers, frames, p1, p2):
    """Occupancy of voxel centres for tori (0), balls (1) and shells (2).

    ``p1``/``p2`` are (major, minor) for tori, (radius, unused) for balls
    and (outer, inner) for shells.
    """
    nx, ny, nz = (int(s) for s in shape)
    occ = np.zeros((nx, ny, nz), dtype=np.uint8)
    origin = np.asarray(origin, dtype=np.float64)
    for k in range(len(kinds)):
        c = np.asarray(centers[k], dtype=np.float64)
        ext = p1[k] + (p2[k] if kinds[k] == 0 else 0.0)
        lo = np.floor((c - ext - origin) / spacing - 0.5).astype(int)
        hi = np.ceil((c + ext - origin) / spacing - 0.5).astype(int) + 1
        lo = np.maximum(lo, 0)
        hi = np.minimum(hi, (nx, ny, nz))
        if np.any(hi <= lo):
            continue
        axes = [origin[i] + (np.arange(lo[i], hi[i]) + 0.5) * spacing - c[i] for i in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        if kinds[k] == 0:
            F = np.asarray(frames[k], dtype=np.float64)
            u = X * F[0, 0] + Y * F[1, 0] + Z * F[2, 0]
            v = X * F[0, 1] + Y * F[1, 1] + Z * F[2, 1]
            h = X * F[0, 2] + Y * F[1, 2] + Z * F[2, 2]
            rho = np.hypot(u, v)
            inside = (rho - p1[k]) ** 2 + h * h <= p2[k] * p2[k]
        else:
            r2 = X * X + Y * Y + Z * Z
            inside = r2 <= p1[k] * p1[k]
            if kinds[k] == 2:
                inside &= r2 >= p2[k] * p2[k]
        sl = tuple(slice(lo[i], hi[i]) for i in range(3))
        occ[sl] |= inside.astype(np.uint8)
    return occ


def flood_fill6(free, seeds):
    """Voxels of ``free`` reachable from ``seeds`` through face neighbours."""
    free = np.asarray(free, dtype=bool)
    start = np.asarray(seeds, dtype=bool) & free
    structure = ndimage.generate_binary_structure(3, 1)
    return ndimage.binary_propagation(start, structure=structure, mask=free).astype(np.uint8)
