# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; same API and semantics as ``_kernels_py``."""

from libc.math cimport sqrt, fabs, cbrt, cos, acos, exp, log, frexp, ldexp, NAN, isnan

import numpy as np

from .errors import UseFallback


cdef inline double _polish_cubic(double z, double p, double q, double r):
    cdef double f = ((z + p) * z + q) * z + r
    cdef double fp, zn, fn
    cdef int k
    for k in range(2):
        fp = (3.0 * z + 2.0 * p) * z + q
        if fp == 0.0:
            break
        zn = z - f / fp
        fn = ((zn + p) * zn + q) * zn + r
        if fabs(fn) >= fabs(f):
            break
        z = zn
        f = fn
    return z


cdef inline double _polish_quartic(double v, double a, double b, double c):
    cdef double f = ((v * v + a) * v + b) * v + c
    cdef double fp, vn, fn
    cdef int k
    for k in range(2):
        fp = (4.0 * v * v + 2.0 * a) * v + b
        if fp == 0.0:
            break
        vn = v - f / fp
        fn = ((vn * vn + a) * vn + b) * vn + c
        if fabs(fn) >= fabs(f):
            break
        v = vn
        f = fn
    return v


cdef double _cardano(double p, double q, double r, bint *ok):
    cdef double d0 = p * p - 3.0 * q
    cdef double d1 = 2.0 * p * p * p - 9.0 * p * q + 27.0 * r
    cdef double disc = d1 * d1 - 4.0 * d0 * d0 * d0
    cdef double sq, big, c, z
    ok[0] = True
    if disc < 0.0:
        if disc < -1e-12 * (d1 * d1 + 4.0 * fabs(d0) * d0 * d0):
            ok[0] = False
            return NAN
        disc = 0.0
    sq = sqrt(disc)
    big = 0.5 * (d1 + sq) if d1 >= 0.0 else 0.5 * (d1 - sq)
    c = cbrt(big)
    if c == 0.0:
        z = -p / 3.0
    else:
        z = -(p + c + d0 / c) / 3.0
    return _polish_cubic(z, p, q, r)


def cardano_real_root(double p, double q, double r):
    cdef bint ok
    cdef double z = _cardano(p, q, r, &ok)
    if not ok:
        raise UseFallback("cubic discriminant is negative")
    return z


cdef double _cubic_max(double p, double q, double r):
    # rescale z = s y by a power of two so the coefficients are O(1)
    cdef double s = fabs(p)
    cdef double tmp = sqrt(fabs(q))
    cdef int e
    if tmp > s:
        s = tmp
    tmp = cbrt(fabs(r))
    if tmp > s:
        s = tmp
    if s == 0.0:
        return 0.0
    frexp(s, &e)
    s = ldexp(1.0, e)
    return _polish_cubic(s * _cubic_max_unit(p / s, q / s / s, r / s / s / s), p, q, r)


cdef double _cubic_max_unit(double p, double q, double r):
    cdef double d0 = p * p - 3.0 * q
    cdef double d1 = 2.0 * p * p * p - 9.0 * p * q + 27.0 * r
    cdef double disc = d1 * d1 - 4.0 * d0 * d0 * d0
    cdef double pp, qq, t, m, arg
    cdef bint ok
    if disc > 1e-14 * (d1 * d1 + 4.0 * fabs(d0) * d0 * d0):
        return _cardano(p, q, r, &ok)
    pp = q - p * p / 3.0
    qq = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r
    if pp >= 0.0:
        t = cbrt(-qq)
    else:
        m = 2.0 * sqrt(-pp / 3.0)
        arg = 3.0 * qq / (pp * m)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        t = m * cos(acos(arg) / 3.0)
    return _polish_cubic(t - p / 3.0, p, q, r)


def cubic_max_real_root(double p, double q, double r):
    return _cubic_max(p, q, r)


cdef inline double _sqrt_nonneg(double v, double slack):
    if v >= 0.0:
        return sqrt(v)
    if v >= -slack:
        return 0.0
    return -1.0


cdef int _ferrari(double a, double b, double c, double *out):
    cdef double z0 = _cubic_max(2.0 * a, a * a - 4.0 * c, -b * b)
    cdef double scale = fabs(a)
    cdef double tmp = sqrt(fabs(c))
    cdef double disc, sd, w, sw, s, t, slack, r1, r2
    cdef int k = 0, i
    if tmp > scale:
        scale = tmp
    tmp = cbrt(fabs(b))
    tmp = tmp * tmp
    if tmp > scale:
        scale = tmp
    if z0 <= 1e-14 * scale or scale == 0.0:
        disc = a * a - 4.0 * c
        sd = _sqrt_nonneg(disc, 1e-12 * (a * a + 4.0 * fabs(c)))
        if sd < 0.0:
            return 0
        for i in range(2):
            w = 0.5 * (-a + sd) if i == 0 else 0.5 * (-a - sd)
            sw = _sqrt_nonneg(w, 1e-12 * (fabs(a) if fabs(a) > sd else sd))
            if sw >= 0.0:
                out[k] = sw
                out[k + 1] = -sw
                k += 2
    else:
        s = sqrt(z0)
        t = 2.0 * b / s
        slack = 1e-12 * (z0 + 2.0 * fabs(a) + fabs(t))
        r1 = _sqrt_nonneg(-z0 - 2.0 * a + t, slack)
        if r1 >= 0.0:
            out[k] = 0.5 * (-s + r1)
            out[k + 1] = 0.5 * (-s - r1)
            k += 2
        r2 = _sqrt_nonneg(-z0 - 2.0 * a - t, slack)
        if r2 >= 0.0:
            out[k] = 0.5 * (s + r2)
            out[k + 1] = 0.5 * (s - r2)
            k += 2
    for i in range(k):
        out[i] = _polish_quartic(out[i], a, b, c)
    return k


def ferrari_roots(double a, double b, double c):
    cdef double out[4]
    cdef int k = _ferrari(a, b, c, out)
    return sorted([out[i] for i in range(k)])


def hom_norm2(double x1, double x2, double p11, double p12, double p22):
    cdef double out[4]
    cdef int k, i
    cdef double best = NAN, y1, y2, g
    if x1 == 0.0 and x2 == 0.0:
        return 0.0
    k = _ferrari(-p22 * x2 * x2, -2.0 * p12 * x1 * x2, -p11 * x1 * x1, out)
    for i in range(k):
        if out[i] > 0.0 and (isnan(best) or out[i] > best):
            best = out[i]
    if isnan(best):
        return NAN
    y1 = x1 / (best * best)
    y2 = x2 / best
    g = p11 * y1 * y1 + 2.0 * p12 * y1 * y2 + p22 * y2 * y2
    if fabs(g - 1.0) > 1e-9:
        return NAN
    return best


def hom_norm_newton(x_in, w_in, P_in, double mu_lo, double mu_hi,
                    double tol=1e-13, int maxit=200):
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef double[:, ::1] P = np.ascontiguousarray(P_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double y[64]
    cdef double g0 = 0.0, L, lo, hi, s, g, q, f, fp, sn, acc
    cdef int it
    if n > 64:
        raise ValueError("order above 64 is not supported")
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += P[i, j] * x[j]
        g0 += x[i] * acc
    if g0 <= 0.0:
        return 0.0
    L = log(g0)
    if L >= 0.0:
        lo = L / mu_hi
        hi = L / mu_lo
    else:
        lo = L / mu_lo
        hi = L / mu_hi
    lo -= 1e-12 * (1.0 + fabs(lo))
    hi += 1e-12 * (1.0 + fabs(hi))
    s = 2.0 * L / (mu_lo + mu_hi)
    for it in range(maxit):
        for i in range(n):
            y[i] = x[i] * exp(-w[i] * s)
        g = 0.0
        q = 0.0
        for i in range(n):
            for j in range(n):
                acc = y[i] * P[i, j] * y[j]
                g += acc
                q += acc * w[j]
        if fabs(g - 1.0) < tol:
            break
        f = log(g)
        if f > 0.0:
            lo = s
        else:
            hi = s
        fp = -2.0 * q / g
        sn = s - f / fp
        if not (lo < sn < hi):
            sn = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * (1.0 + fabs(s)):
            s = sn
            break
        s = sn
    return exp(s)


def rk4_chain_step(x_in, double u, double h):
    cdef double[::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], i, st
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double k[4][64]
    cdef double z[64]
    cdef double c
    if n > 64:
        raise ValueError("order above 64 is not supported")
    for st in range(4):
        c = 0.0 if st == 0 else (0.5 * h if st < 3 else h)
        for i in range(n):
            z[i] = x[i] + (c * k[st - 1][i] if st > 0 else 0.0)
        for i in range(n - 1):
            k[st][i] = z[i + 1]
        k[st][n - 1] = u
    for i in range(n):
        o[i] = x[i] + (h / 6.0) * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i])
    return out
