# cython: language_level=3
"""Compiled twins of the loops in ``_kernels_py``; same signatures and results."""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, sqrt, log, log1p, exp, floor, ceil, fabs, M_PI, INFINITY

cnp.import_array()

cdef double BIG_ORBIT = 1e100


cdef inline double cabs2(double complex w) nogil:
    return w.real * w.real + w.imag * w.imag


cdef inline double cabs_(double complex w) nogil:
    return sqrt(w.real * w.real + w.imag * w.imag)


def poly_iterate(coeffs, z, long n, double bailout):
    cdef const double complex[::1] a = np.ascontiguousarray(coeffs, dtype=np.complex128)
    w_arr = np.array(z, dtype=np.complex128, copy=True).ravel()
    steps_arr = np.full(w_arr.shape, n, dtype=np.int64)
    cdef double complex[::1] w = w_arr
    cdef long long[::1] steps = steps_arr
    cdef Py_ssize_t i, k, d = a.shape[0] - 1, npts = w.shape[0]
    cdef long j
    cdef double complex acc, x
    with nogil:
        for i in range(npts):
            x = w[i]
            for j in range(n):
                acc = a[d]
                for k in range(d - 1, -1, -1):
                    acc = acc * x + a[k]
                x = acc
                if not (cabs_(x) <= bailout):
                    steps[i] = j + 1
                    break
            w[i] = x
    return w_arr, steps_arr


def poly_log_abs(coeffs, z, long n, double big):
    cdef const double complex[::1] a = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef Py_ssize_t d = a.shape[0] - 1
    w_arr, steps_arr = poly_iterate(coeffs, z, n, big)
    cdef double complex[::1] w = w_arr
    cdef long long[::1] steps = steps_arr
    npts = w.shape[0]
    lo_arr = np.empty(npts, dtype=np.float64)
    hi_arr = np.empty(npts, dtype=np.float64)
    cdef double[::1] lo = lo_arr
    cdef double[::1] hi = hi_arr
    ratios_arr = np.abs(np.asarray(a)[:d]) / abs(a[d])
    cdef double[::1] ratios = ratios_arr
    cdef double log_ad = log(cabs_(a[d]))
    cdef Py_ssize_t i, k
    cdef long r
    cdef double l, h, e, m
    with nogil:
        for i in range(npts):
            m = cabs_(w[i])
            l = log(m) if m > 0 else -INFINITY
            h = l
            for r in range(n - steps[i]):
                e = 0.0
                for k in range(d):
                    if ratios[k] != 0.0:
                        e = e + ratios[k] * exp((k - d) * l)
                h = d * h + log_ad + log1p(e)
                if e > 1.0:
                    e = 1.0
                l = d * l + log_ad + log1p(-e)
            lo[i] = l
            hi[i] = h
    return lo_arr, hi_arr


def quad_newton_ratio(z, double complex c, long p):
    z_arr = np.ascontiguousarray(np.asarray(z, dtype=np.complex128).ravel())
    cdef double complex[::1] zz = z_arr
    out_arr = np.empty_like(z_arr)
    cdef double complex[::1] out = out_arr
    cdef Py_ssize_t i, npts = zz.shape[0]
    cdef long j
    cdef double complex w, dw, t
    cdef bint big
    with nogil:
        for i in range(npts):
            w = zz[i]
            dw = 1.0
            t = 0.0
            big = False
            for j in range(p):
                if big:
                    t = 2.0 * t / (1.0 + c / (w * w))
                else:
                    dw = 2.0 * w * dw
                    w = w * w + c
                    if cabs_(w) > BIG_ORBIT:
                        t = dw / w
                        big = True
            if big:
                out[i] = 1.0 / t
            else:
                out[i] = (w - zz[i]) / (dw - 1.0)
    return out_arr.reshape(np.shape(z))


def aberth_correction(z, ratio):
    cdef const double complex[::1] zz = np.ascontiguousarray(z, dtype=np.complex128)
    cdef const double complex[::1] rr = np.ascontiguousarray(ratio, dtype=np.complex128)
    cdef Py_ssize_t n = zz.shape[0], i, j
    out_arr = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] out = out_arr
    cdef double complex s, diff
    with nogil:
        for i in range(n):
            s = 0.0
            for j in range(n):
                if j != i:
                    diff = zz[i] - zz[j]
                    s = s + 1.0 / diff
            out[i] = rr[i] / (1.0 - rr[i] * s)
    return out_arr


def gauss_linking(a, b):
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0], i, j, i1, j1
    cdef double dax, day, daz, dbx, dby, dbz, rx, ry, rz, cx, cy, cz, r2
    cdef double total = 0.0, row
    with nogil:
        for i in range(na):
            i1 = i + 1 if i + 1 < na else 0
            dax = A[i1, 0] - A[i, 0]
            day = A[i1, 1] - A[i, 1]
            daz = A[i1, 2] - A[i, 2]
            row = 0.0
            for j in range(nb):
                j1 = j + 1 if j + 1 < nb else 0
                dbx = B[j1, 0] - B[j, 0]
                dby = B[j1, 1] - B[j, 1]
                dbz = B[j1, 2] - B[j, 2]
                rx = (A[i, 0] + 0.5 * dax) - (B[j, 0] + 0.5 * dbx)
                ry = (A[i, 1] + 0.5 * day) - (B[j, 1] + 0.5 * dby)
                rz = (A[i, 2] + 0.5 * daz) - (B[j, 2] + 0.5 * dbz)
                cx = day * dbz - daz * dby
                cy = daz * dbx - dax * dbz
                cz = dax * dby - day * dbx
                r2 = rx * rx + ry * ry + rz * rz
                row = row + (rx * cx + ry * cy + rz * cz) / (r2 * sqrt(r2))
            total = total + row
    return total / (4.0 * M_PI)


def winding_numbers(vertices, points):
    cdef const double complex[::1] v = np.ascontiguousarray(vertices, dtype=np.complex128)
    cdef const double complex[::1] p = np.ascontiguousarray(np.asarray(points, dtype=np.complex128).ravel())
    cdef Py_ssize_t nv = v.shape[0], npts = p.shape[0], i, k, k1
    out_arr = np.empty(npts, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double complex a, b
    cdef double s
    with nogil:
        for i in range(npts):
            s = 0.0
            for k in range(nv):
                k1 = k + 1 if k + 1 < nv else 0
                a = v[k] - p[i]
                b = v[k1] - p[i]
                s = s + atan2(a.real * b.imag - a.imag * b.real, a.real * b.real + a.imag * b.imag)
            out[i] = s / (2.0 * M_PI)
    return out_arr


def voxelize(origin, double spacing, shape, kinds, centers, frames, p1, p2):
    cdef Py_ssize_t nx = shape[0], ny = shape[1], nz = shape[2]
    occ_arr = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] occ = occ_arr
    cdef const double[::1] o = np.ascontiguousarray(origin, dtype=np.float64)
    cdef const long[::1] kd = np.ascontiguousarray(kinds, dtype=np.int_)
    cdef const double[:, ::1] C = np.ascontiguousarray(centers, dtype=np.float64).reshape(-1, 3)
    cdef const double[:, :, ::1] F = np.ascontiguousarray(frames, dtype=np.float64).reshape(-1, 3, 3)
    cdef const double[::1] P1 = np.ascontiguousarray(p1, dtype=np.float64)
    cdef const double[::1] P2 = np.ascontiguousarray(p2, dtype=np.float64)
    cdef Py_ssize_t k, i, j, l, npc = kd.shape[0]
    cdef long lo[3]
    cdef long hi[3]
    cdef long dims[3]
    cdef double ext, x, y, zc, u, vv, h, rho, r2
    dims[0] = nx
    dims[1] = ny
    dims[2] = nz
    with nogil:
        for k in range(npc):
            ext = P1[k] + (P2[k] if kd[k] == 0 else 0.0)
            for i in range(3):
                lo[i] = <long>floor((C[k, i] - ext - o[i]) / spacing - 0.5)
                hi[i] = <long>ceil((C[k, i] + ext - o[i]) / spacing - 0.5) + 1
                if lo[i] < 0:
                    lo[i] = 0
                if hi[i] > dims[i]:
                    hi[i] = dims[i]
            for i in range(lo[0], hi[0]):
                x = o[0] + (i + 0.5) * spacing - C[k, 0]
                for j in range(lo[1], hi[1]):
                    y = o[1] + (j + 0.5) * spacing - C[k, 1]
                    for l in range(lo[2], hi[2]):
                        zc = o[2] + (l + 0.5) * spacing - C[k, 2]
                        if kd[k] == 0:
                            u = x * F[k, 0, 0] + y * F[k, 1, 0] + zc * F[k, 2, 0]
                            vv = x * F[k, 0, 1] + y * F[k, 1, 1] + zc * F[k, 2, 1]
                            h = x * F[k, 0, 2] + y * F[k, 1, 2] + zc * F[k, 2, 2]
                            rho = sqrt(u * u + vv * vv)
                            if (rho - P1[k]) * (rho - P1[k]) + h * h <= P2[k] * P2[k]:
                                occ[i, j, l] = 1
                        else:
                            r2 = x * x + y * y + zc * zc
                            if r2 <= P1[k] * P1[k] and (kd[k] == 1 or r2 >= P2[k] * P2[k]):
                                occ[i, j, l] = 1
    return occ_arr


def flood_fill6(free, seeds):
    cdef const unsigned char[:, :, ::1] fr = np.ascontiguousarray(free, dtype=np.uint8)
    cdef const unsigned char[:, :, ::1] sd = np.ascontiguousarray(seeds, dtype=np.uint8)
    cdef Py_ssize_t nx = fr.shape[0], ny = fr.shape[1], nz = fr.shape[2]
    out_arr = np.zeros((nx, ny, nz), dtype=np.uint8)
    cdef unsigned char[:, :, ::1] out = out_arr
    queue_arr = np.empty(nx * ny * nz, dtype=np.int64)
    cdef long long[::1] queue = queue_arr
    cdef Py_ssize_t head = 0, tail = 0, i, j, l, q
    cdef long long idx
    cdef long long sx = ny * nz
    cdef long long sy = nz
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for l in range(nz):
                    if sd[i, j, l] and fr[i, j, l]:
                        out[i, j, l] = 1
                        queue[tail] = i * sx + j * sy + l
                        tail += 1
        while head < tail:
            idx = queue[head]
            head += 1
            i = idx // sx
            j = (idx // sy) % ny
            l = idx % nz
            if i > 0 and fr[i - 1, j, l] and not out[i - 1, j, l]:
                out[i - 1, j, l] = 1
                queue[tail] = idx - sx
                tail += 1
            if i + 1 < nx and fr[i + 1, j, l] and not out[i + 1, j, l]:
                out[i + 1, j, l] = 1
                queue[tail] = idx + sx
                tail += 1
            if j > 0 and fr[i, j - 1, l] and not out[i, j - 1, l]:
                out[i, j - 1, l] = 1
                queue[tail] = idx - sy
                tail += 1
            if j + 1 < ny and fr[i, j + 1, l] and not out[i, j + 1, l]:
                out[i, j + 1, l] = 1
                queue[tail] = idx + sy
                tail += 1
            if l > 0 and fr[i, j, l - 1] and not out[i, j, l - 1]:
                out[i, j, l - 1] = 1
                queue[tail] = idx - 1
                tail += 1
            if l + 1 < nz and fr[i, j, l + 1] and not out[i, j, l + 1]:
                out[i, j, l + 1] = 1
                queue[tail] = idx + 1
                tail += 1
    return out_arr
