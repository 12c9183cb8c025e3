"""Small dense linear algebra and closed-form polynomial roots.

Dimensions handled here are tiny (n <= 16), so the symmetric eigensolver is a
plain cyclic Jacobi iteration.  The polynomial solvers delegate to the kernel
backend (compiled when available).
"""

import numpy as np

from . import kernels
from .errors import InvalidInput, NotPositiveDefinite, SingularMatrix

RTOL = 1e-9
ATOL = 1e-12


def as_sym(S):
    """Validate a square matrix and return its exactly symmetric copy."""
    S = np.array(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidInput("matrix has non-finite entries")
    return 0.5 * (S + S.T)


def sym_eig(S, tol=1e-15, max_sweeps=100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ascending eigenvalues ``w`` and orthonormal
    eigenvectors in the columns of ``V``.
    """
    a = as_sym(S)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    scale = max(np.abs(a).max(), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    w = a.diagonal().copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eig_min(S):
    return float(sym_eig(S)[0][0])


def eig_max(S):
    return float(sym_eig(S)[0][-1])


def _spd_eig(P):
    w, V = sym_eig(P)
    if w[0] <= ATOL * max(1.0, abs(w[-1])):
        raise NotPositiveDefinite(f"minimum eigenvalue {w[0]:.3e} is not positive")
    return w, V


def sqrt_spd(P):
    """Unique symmetric positive definite square root."""
    w, V = _spd_eig(P)
    M = (V * np.sqrt(w)) @ V.T
    return 0.5 * (M + M.T)


def inv_sqrt_spd(P):
    w, V = _spd_eig(P)
    M = (V / np.sqrt(w)) @ V.T
    return 0.5 * (M + M.T)


def gen_eig_max(Z, Q):
    """Largest ``eta`` with ``Z v = eta Q v`` for symmetric Z and SPD Q.

    Computed as the top eigenvalue of ``Q^{-1/2} Z Q^{-1/2}``.
    """
    Z = as_sym(Z)
    R = inv_sqrt_spd(Q)
    return eig_max(R @ Z @ R)


def gen_eig_range(Z, Q):
    Z = as_sym(Z)
    R = inv_sqrt_spd(Q)
    w = sym_eig(R @ Z @ R)[0]
    return float(w[0]), float(w[-1])


def matmul(A, B):
    return np.asarray(A, dtype=float) @ np.asarray(B, dtype=float)


def transpose(A):
    return np.asarray(A, dtype=float).T.copy()


def matvec(A, x):
    return np.asarray(A, dtype=float) @ np.asarray(x, dtype=float)


def inverse(M):
    """Matrix inverse (LU with partial pivoting) with a residual check."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    try:
        Mi = np.linalg.inv(M)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix(str(exc)) from None
    n = M.shape[0]
    if not np.all(np.isfinite(Mi)) or np.abs(M @ Mi - np.eye(n)).max() > RTOL:
        raise SingularMatrix("matrix is singular to working tolerance")
    return Mi


def cardano_real_root(p, q, r):
    """Real root of ``z^3 + p z^2 + q z + r = 0`` (Cardano).

    Raises ``UseFallback`` if the discriminant ``D1^2 - 4 D0^3`` is negative.
    """
    return kernels.cardano_real_root(float(p), float(q), float(r))


def cubic_max_real_root(p, q, r):
    return kernels.cubic_max_real_root(float(p), float(q), float(r))


def ferrari_roots(a, b, c):
    """Real roots of ``V^4 + a V^2 + b V + c = 0`` in ascending order."""
    return list(kernels.ferrari_roots(float(a), float(b), float(c)))
