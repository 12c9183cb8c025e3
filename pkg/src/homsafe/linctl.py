"""Linear nonovershooting design for the integrator chain."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import InvalidInput, NotInInterior

CONE_TOL = 1e-12


@dataclass(frozen=True)
class ChainSystem:
    n: int
    A: np.ndarray = field(init=False, repr=False, compare=False)
    B: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInput(f"order must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "A", np.eye(self.n, k=1))
        B = np.zeros(self.n)
        B[-1] = 1.0
        object.__setattr__(self, "B", B)

    def rhs(self, x, u):
        dx = np.empty(self.n)
        dx[:-1] = x[1:]
        dx[-1] = u
        return dx


@dataclass(frozen=True, eq=False)
class LinearDesign:
    """Gain ``K`` and barrier rows ``h_i = -e1'(A + lam I)^(i-1)``."""

    n: int
    lam: float
    h: np.ndarray  # row i is h_{i+1}
    K: np.ndarray
    Hinv: np.ndarray = field(repr=False)

    @property
    def H(self) -> np.ndarray:
        return self.h

    @property
    def system(self) -> ChainSystem:
        return ChainSystem(self.n)


def _binomial_row(k: int, n: int, lam: float) -> np.ndarray:
    """``e1' (A + lam I)^k`` for the order-``n`` chain."""
    row = np.zeros(n)
    for j in range(min(k, n - 1) + 1):
        row[j] = comb(k, j) * lam ** (k - j)
    return row


def build_linear_design(n: int, lam: float) -> LinearDesign:
    n = int(n)
    if n < 1:
        raise InvalidInput(f"order must be >= 1, got {n}")
    lam = float(lam)
    if not (lam > 0.0 and math.isfinite(lam)):
        raise InvalidInput(f"lambda must be positive and finite, got {lam}")
    h = np.array([-_binomial_row(i, n, lam) for i in range(n)])
    K = -_binomial_row(n, n, lam)
    # H = -L(lam) with L(lam)_ij = C(i, j) lam^(i-j), and L(lam)^-1 = L(-lam)
    Hinv = np.array([-_binomial_row(i, n, -lam) for i in range(n)])
    return LinearDesign(n=n, lam=lam, h=h, K=K, Hinv=Hinv)


def _check_interior(x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim != 1 or x0.size < 1 or not np.all(np.isfinite(x0)):
        raise InvalidInput("initial state must be a finite vector")
    if not x0[0] < 0.0:
        raise NotInInterior(f"first coordinate must be negative, got {x0[0]}")
    return x0


def lambda_lower_bound(x0) -> float:
    """Sufficient lower bound on lambda from the initial state alone.

    Returns ``-inf`` for ``n = 1`` where no condition applies.  The value is
    the literal maximum and can be below one or even negative.
    """
    x0 = _check_interior(x0)
    n = x0.size
    best = -math.inf
    for i in range(2, n + 1):
        for k in range(1, i):
            best = max(best, 1.0 - (x0[k] / x0[0]) * comb(i - 1, i - k - 1))
    return best


def check_lambda_feasible(x0, lam: float) -> bool:
    """True iff ``h_i x0 >= 0`` for i >= 2, by direct binomial sums."""
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    for i in range(2, n + 1):
        acc = sum(comb(i - 1, j) * x0[i - j - 1] * lam**j for j in range(i))
        if acc > 0.0:
            return False
    return True


def select_lambda(x0, minimal: bool = False, lam_min: float = 1e-6) -> float:
    """Pick lambda for ``x0``.

    Default rounds the sufficient bound up to an integer.  ``minimal=True``
    bisects down to (approximately) the smallest feasible lambda.
    """
    bound = lambda_lower_bound(x0)
    lam = max(1.0, float(math.ceil(bound))) if math.isfinite(bound) else 1.0
    if not minimal:
        return lam
    hi = max(bound, lam_min) if math.isfinite(bound) else 1.0
    if not check_lambda_feasible(x0, hi):  # pragma: no cover - bound is sufficient
        hi = lam
    if check_lambda_feasible(x0, lam_min):
        return lam_min
    lo = lam_min
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if check_lambda_feasible(x0, mid):
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-12 * hi:
            break
    return hi


def in_cone_omega(d: LinearDesign, x, tol: float = CONE_TOL) -> bool:
    return bool(np.all(d.h @ np.asarray(x, dtype=float) >= -tol))


def barrier_coords(d: LinearDesign, x) -> np.ndarray:
    return d.h @ np.asarray(x, dtype=float)


def from_barrier_coords(d: LinearDesign, phi) -> np.ndarray:
    return d.Hinv @ np.asarray(phi, dtype=float)


def u_lin(d: LinearDesign, x) -> float:
    return float(d.K @ np.asarray(x, dtype=float))


def shift_diag_matrices(n: int) -> list:
    """Diagonal ``D_i = diag(i-1, i-2, ..., 1, 0, ..., 0)`` for i = 1..n.

    Only used by the identity tests; ``D_n = G_d - I``.
    """
    return [np.diag([max(i - 1 - j, 0) for j in range(n)]).astype(float) for i in range(1, n + 1)]
