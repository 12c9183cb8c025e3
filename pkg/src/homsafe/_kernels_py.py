"""Pure-Python implementation of the numerical hot kernels.

This module mirrors ``_kernels.pyx`` function for function.  It is used when
the compiled extension is not available (or ``HOMSAFE_PURE=1`` is set).
"""

import math

import numpy as np

from .errors import UseFallback

_THIRD = 1.0 / 3.0


def _cbrt(v):
    return math.copysign(abs(v) ** _THIRD, v)


def _polish_cubic(z, p, q, r, steps=2):
    f = ((z + p) * z + q) * z + r
    for _ in range(steps):
        fp = (3.0 * z + 2.0 * p) * z + q
        if fp == 0.0:
            break
        zn = z - f / fp
        fn = ((zn + p) * zn + q) * zn + r
        if abs(fn) >= abs(f):
            break
        z, f = zn, fn
    return z


def cardano_real_root(p, q, r):
    """Real root of ``z^3 + p z^2 + q z + r`` by Cardano's formula.

    Raises ``UseFallback`` when ``D1^2 - 4 D0^3 < 0`` (three distinct real
    roots), where the formula needs complex arithmetic.
    """
    d0 = p * p - 3.0 * q
    d1 = 2.0 * p * p * p - 9.0 * p * q + 27.0 * r
    disc = d1 * d1 - 4.0 * d0 * d0 * d0
    if disc < 0.0:
        if disc < -1e-12 * (d1 * d1 + 4.0 * abs(d0) ** 3):
            raise UseFallback("cubic discriminant is negative")
        disc = 0.0
    sq = math.sqrt(disc)
    # C1*C2 = D0; take the cube root with no cancellation and recover the other
    big = 0.5 * (d1 + sq) if d1 >= 0.0 else 0.5 * (d1 - sq)
    c = _cbrt(big)
    if c == 0.0:
        z = -p / 3.0
    else:
        z = -(p + c + d0 / c) / 3.0
    return _polish_cubic(z, p, q, r)


def cubic_max_real_root(p, q, r):
    """Largest real root of the monic cubic."""
    # rescale z = s y by a power of two so the coefficients are O(1)
    s = max(abs(p), math.sqrt(abs(q)), abs(r) ** _THIRD)
    if s == 0.0:
        return 0.0
    s = math.ldexp(1.0, math.frexp(s)[1])
    y = _cubic_max_unit(p / s, q / s / s, r / s / s / s)
    return _polish_cubic(s * y, p, q, r)


def _cubic_max_unit(p, q, r):
    d0 = p * p - 3.0 * q
    d1 = 2.0 * p * p * p - 9.0 * p * q + 27.0 * r
    disc = d1 * d1 - 4.0 * d0 * d0 * d0
    if disc > 1e-14 * (d1 * d1 + 4.0 * abs(d0) ** 3):
        return cardano_real_root(p, q, r)
    # trigonometric form for (possibly repeated) three real roots
    pp = q - p * p / 3.0
    qq = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r
    if pp >= 0.0:
        t = _cbrt(-qq)
    else:
        m = 2.0 * math.sqrt(-pp / 3.0)
        arg = 3.0 * qq / (pp * m)
        arg = min(1.0, max(-1.0, arg))
        t = m * math.cos(math.acos(arg) / 3.0)
    return _polish_cubic(t - p / 3.0, p, q, r)


def _polish_quartic(v, a, b, c, steps=2):
    f = ((v * v + a) * v + b) * v + c
    for _ in range(steps):
        fp = (4.0 * v * v + 2.0 * a) * v + b
        if fp == 0.0:
            break
        vn = v - f / fp
        fn = ((vn * vn + a) * vn + b) * vn + c
        if abs(fn) >= abs(f):
            break
        v, f = vn, fn
    return v


def _sqrt_nonneg(v, slack):
    if v >= 0.0:
        return math.sqrt(v)
    if v >= -slack:
        return 0.0
    return None


def ferrari_roots(a, b, c):
    """Real roots of the depressed quartic ``V^4 + a V^2 + b V + c``, ascending."""
    z0 = cubic_max_real_root(2.0 * a, a * a - 4.0 * c, -b * b)
    scale = max(abs(a), math.sqrt(abs(c)), abs(b) ** (2.0 / 3.0))
    roots = []
    if z0 <= 1e-14 * scale or scale == 0.0:
        disc = a * a - 4.0 * c
        sd = _sqrt_nonneg(disc, 1e-12 * (a * a + 4.0 * abs(c)))
        if sd is None:
            return []
        for w in (0.5 * (-a + sd), 0.5 * (-a - sd)):
            sw = _sqrt_nonneg(w, 1e-12 * max(abs(a), sd))
            if sw is not None:
                roots.extend((sw, -sw))
    else:
        s = math.sqrt(z0)
        t = 2.0 * b / s
        slack = 1e-12 * (z0 + 2.0 * abs(a) + abs(t))
        r1 = _sqrt_nonneg(-z0 - 2.0 * a + t, slack)
        if r1 is not None:
            roots.extend((0.5 * (-s + r1), 0.5 * (-s - r1)))
        r2 = _sqrt_nonneg(-z0 - 2.0 * a - t, slack)
        if r2 is not None:
            roots.extend((0.5 * (s + r2), 0.5 * (s - r2)))
    return sorted(_polish_quartic(v, a, b, c) for v in roots)


def hom_norm2(x1, x2, p11, p12, p22):
    """Positive root of ``V^4 - p22 x2^2 V^2 - 2 p12 x1 x2 V - p11 x1^2``.

    Returns ``nan`` when the closed form fails its residual check so that the
    caller can fall back to the iterative solver.
    """
    if x1 == 0.0 and x2 == 0.0:
        return 0.0
    roots = ferrari_roots(-p22 * x2 * x2, -2.0 * p12 * x1 * x2, -p11 * x1 * x1)
    best = math.nan
    for v in roots:
        if v > 0.0:
            best = v
    if not best > 0.0:
        return math.nan
    y1 = x1 / (best * best)
    y2 = x2 / best
    g = p11 * y1 * y1 + 2.0 * p12 * y1 * y2 + p22 * y2 * y2
    if abs(g - 1.0) > 1e-9:
        return math.nan
    return best


def hom_norm_newton(x, w, P, mu_lo, mu_hi, tol=1e-13, maxit=200):
    """Safeguarded Newton in ``s = ln V`` on ``ln ||d(-s)x||^2 = 0``.

    ``mu_lo``/``mu_hi`` bound ``y'(PG+GP)y / y'Py`` and give a valid bracket.
    """
    x = np.asarray(x, dtype=float)
    g0 = float(x @ P @ x)
    if g0 <= 0.0:
        return 0.0
    L = math.log(g0)
    if L >= 0.0:
        lo, hi = L / mu_hi, L / mu_lo
    else:
        lo, hi = L / mu_lo, L / mu_hi
    lo -= 1e-12 * (1.0 + abs(lo))
    hi += 1e-12 * (1.0 + abs(hi))
    s = 2.0 * L / (mu_lo + mu_hi)
    Pw = P * w[None, :]
    for _ in range(maxit):
        y = x * np.exp(-w * s)
        g = float(y @ P @ y)
        if abs(g - 1.0) < tol:
            break
        f = math.log(g)
        if f > 0.0:
            lo = s
        else:
            hi = s
        fp = -2.0 * float(y @ Pw @ y) / g
        sn = s - f / fp
        if not (lo < sn < hi):
            sn = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * (1.0 + abs(s)):
            s = sn
            break
        s = sn
    return math.exp(s)


def rk4_chain_step(x, u, h):
    """One classical RK4 step of the integrator chain with input held at ``u``."""
    x = np.asarray(x, dtype=float)

    def f(z):
        dz = np.empty_like(z)
        dz[:-1] = z[1:]
        dz[-1] = u
        return dz

    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
