"""Weighted dilation group and the canonical homogeneous norm."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import InvalidContext, InvalidInput, NotPositiveDefinite, UndefinedAtOrigin
from .numkernel import as_sym, eig_min, gen_eig_range

CERT_TOL = 1e-10


@dataclass(frozen=True)
class Dilation:
    """``d(s) = exp(s G_d)`` with ``G_d = diag(n, n-1, ..., 1)``."""

    n: int
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInput(f"order must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "weights", np.arange(self.n, 0, -1, dtype=float))

    @property
    def G(self) -> np.ndarray:
        return np.diag(self.weights)

    def __call__(self, s: float, x) -> np.ndarray:
        return np.asarray(x, dtype=float) * np.exp(self.weights * s)

    def matrix(self, s: float) -> np.ndarray:
        return np.diag(np.exp(self.weights * s))


def dil(ctx: Dilation, s: float, x) -> np.ndarray:
    return ctx(s, x)


class HomNormContext:
    """Canonical homogeneous norm induced by ``||x|| = sqrt(x' P x)``.

    The constructor checks the monotonicity certificate ``P > 0`` and
    ``P G_d + G_d P > 0``; both minimum eigenvalues are cached.
    """

    def __init__(self, dilation: Dilation, P):
        self.dilation = dilation
        P = as_sym(P)
        if P.shape != (dilation.n, dilation.n):
            raise InvalidContext(f"shape matrix must be {dilation.n}x{dilation.n}")
        G = dilation.G
        Q = P @ G + G @ P
        self.P = P
        self.Q = Q
        self.min_eig_P = eig_min(P)
        self.min_eig_Q = eig_min(Q)
        if self.min_eig_P <= CERT_TOL or self.min_eig_Q <= CERT_TOL:
            raise InvalidContext(
                "dilation is not monotone for this P "
                f"(min eig P={self.min_eig_P:.3e}, PG+GP={self.min_eig_Q:.3e})"
            )
        try:
            self.mu_lo, self.mu_hi = gen_eig_range(Q, P)
        except NotPositiveDefinite as exc:  # pragma: no cover - excluded above
            raise InvalidContext(str(exc)) from None
        self._Pc = np.ascontiguousarray(P)
        self._w = np.ascontiguousarray(dilation.weights)

    @property
    def n(self) -> int:
        return self.dilation.n

    def euclid(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return math.sqrt(max(float(x @ self.P @ x), 0.0))

    def norm(self, x) -> float:
        x = np.ascontiguousarray(x, dtype=float)
        if not np.any(x):
            return 0.0
        n = self.n
        if n == 1:
            return math.sqrt(self.P[0, 0]) * abs(float(x[0]))
        if n == 2:
            # bring x near the unit sphere first so the quartic is well scaled
            g0 = float(x @ self.P @ x)
            s0 = 2.0 * math.log(g0) / (self.mu_lo + self.mu_hi)
            xs = x * np.exp(-self._w * s0)
            P = self.P
            v = kernels.hom_norm2(float(xs[0]), float(xs[1]), P[0, 0], P[0, 1], P[1, 1])
            if math.isnan(v):
                v = kernels.hom_norm_newton(xs, self._w, self._Pc, self.mu_lo, self.mu_hi)
            return v * math.exp(s0)
        return kernels.hom_norm_newton(x, self._w, self._Pc, self.mu_lo, self.mu_hi)

    def project(self, x, V=None) -> np.ndarray:
        """Homogeneous projection ``d(-ln V) x`` onto the unit sphere."""
        if V is None:
            V = self.norm(x)
        if V <= 0.0:
            raise UndefinedAtOrigin("projection is undefined at the origin")
        return self.dilation(-math.log(V), x)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        V = self.norm(x)
        if V == 0.0:
            raise UndefinedAtOrigin("homogeneous norm is not differentiable at 0")
        w = self.dilation.weights
        y = x * V ** (-w)
        Py = self.P @ y
        return V * (Py * V ** (-w)) / float(Py @ (w * y))


def hom_norm(ctx: HomNormContext, x) -> float:
    return ctx.norm(x)


def hom_norm_grad(ctx: HomNormContext, x) -> np.ndarray:
    return ctx.grad(x)
