"""Homogeneous upgrade of the linear nonovershooting controller."""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dilation import Dilation, HomNormContext
from .errors import DiagonalInfeasible, InternalError, InvalidInput, UndefinedAtOrigin
from .linctl import LinearDesign
from .numkernel import eig_max, eig_min, gen_eig_max, inv_sqrt_spd, inverse

PTILDE_MARGIN = 1e-8
CERT_MARGIN = 1e-10
CONE_TOL = 1e-10
BALL_TOL = 1e-12


def _m_matrix(n: int, lam: float) -> np.ndarray:
    """``G_d + lam (n I - G_d) A'``; equals ``H G_d H^-1``."""
    G = np.diag(np.arange(n, 0, -1, dtype=float))
    return G + lam * np.diag(np.arange(n, dtype=float)) @ np.eye(n, k=-1)


def reduced_lmis(Pt, lam: float):
    """The three matrices that must be positive definite in barrier coordinates.

    Returns ``(-(Pt(A-lam I) + (A-lam I)'Pt), Pt M + M'Pt, Pt)``.
    """
    Pt = np.asarray(Pt, dtype=float)
    n = Pt.shape[0]
    Al = np.eye(n, k=1) - lam * np.eye(n)
    M = _m_matrix(n, lam)
    S1 = -(Pt @ Al + Al.T @ Pt)
    S2 = Pt @ M + M.T @ Pt
    return 0.5 * (S1 + S1.T), 0.5 * (S2 + S2.T), Pt


def reduced_margin(Pt, lam: float) -> float:
    return min(eig_min(S) for S in reduced_lmis(Pt, lam))


def build_diag_ptilde(n: int, lam: float) -> np.ndarray:
    """Diagonal ``p_1..p_n`` (``p_n = 1``) satisfying the reduced LMIs.

    Backward recursion: with the trailing block fixed, a Schur complement
    gives an open window ``(lo, hi)`` for ``p_k``; the geometric mean is taken.
    Raises ``DiagonalInfeasible`` when a window is empty.
    """
    n = int(n)
    lam = float(lam)
    if n < 1 or not lam > 0.0:
        raise InvalidInput("need n >= 1 and lambda > 0")
    p = np.zeros(n)
    p[-1] = 1.0
    for k in range(n - 2, -1, -1):
        S1, S2 = _trailing_blocks(p, k + 1, n, lam)
        m1 = inverse(S1)[0, 0]
        m2 = inverse(S2)[0, 0]
        hi = 2.0 * lam / m1
        lo = (lam * (k + 1) * p[k + 1]) ** 2 * m2 / (2.0 * (n - k))
        if not lo < hi:
            raise DiagonalInfeasible(
                f"no diagonal solution: window for p_{k + 1} is empty (lo={lo:.4g}, hi={hi:.4g})"
            )
        p[k] = math.sqrt(lo * hi)
    margin = reduced_margin(np.diag(p), lam) / max(1.0, p.max())
    if margin < PTILDE_MARGIN:
        raise DiagonalInfeasible(f"diagonal solution has margin {margin:.3e} below {PTILDE_MARGIN}")
    return p


def _trailing_blocks(p, start: int, n: int, lam: float):
    """Trailing principal blocks (rows ``start..n-1``) of the reduced LMIs."""
    S1, S2, _ = reduced_lmis(np.diag(np.concatenate([np.ones(start), p[start:]])), lam)
    return S1[start:, start:], S2[start:, start:]


def _softmin(w, beta):
    m = w.min()
    e = np.exp(-beta * (w - m))
    return m - math.log(e.sum()) / beta, e / e.sum()


@functools.lru_cache(maxsize=None)
def _full_ptilde_unit(n: int) -> tuple:
    """Non-diagonal solution of the reduced LMIs at ``lam = 1`` (trace ``n``)."""
    from scipy.optimize import minimize

    iu = np.triu_indices(n)
    Al = np.eye(n, k=1) - np.eye(n)
    M = _m_matrix(n, 1.0)

    def unpack(v):
        X = np.zeros((n, n))
        X[iu] = v
        X = X + X.T - np.diag(np.diag(X))
        return X * (n / np.trace(X))

    def objective(v, beta):
        X = unpack(v)
        blocks = (-(X @ Al + Al.T @ X), X @ M + M.T @ X, X)
        val = 0.0
        grad_X = np.zeros((n, n))
        ws, vs = [], []
        for S in blocks:
            w, V = np.linalg.eigh(S)
            ws.append(w)
            vs.append(V)
        allw = np.concatenate(ws)
        val, weights = _softmin(allw, beta)
        off = 0
        for S_id, (w, V) in enumerate(zip(ws, vs)):
            # d(eig)/dS = v v'; chain through S(X)
            Wk = (V * weights[off : off + n]) @ V.T
            off += n
            if S_id == 0:
                grad_X += -(Wk @ Al.T + Al @ Wk)
            elif S_id == 1:
                grad_X += Wk @ M.T + M @ Wk
            else:
                grad_X += Wk
        # chain through the trace normalization and the symmetric packing
        Xr = np.zeros((n, n))
        Xr[iu] = v
        Xr = Xr + Xr.T - np.diag(np.diag(Xr))
        tr = np.trace(Xr)
        gX = (n / tr) * (grad_X - np.sum(grad_X * Xr) / tr * np.eye(n))
        g = 2.0 * gX[iu]
        g[iu[0] == iu[1]] *= 0.5
        return -val, -g

    v = np.eye(n)[iu]
    for beta in (5.0, 30.0, 200.0, 2000.0):
        res = minimize(objective, v, args=(beta,), method="BFGS", jac=True, options={"gtol": 1e-12, "maxiter": 5000})
        v = res.x
    X = unpack(v)
    return tuple(map(tuple, X))


def build_full_ptilde(n: int, lam: float) -> np.ndarray:
    """Symmetric (non-diagonal) P~ for orders where no diagonal choice exists.

    The reduced LMIs at ``lam`` are congruent to those at ``lam = 1`` through
    ``D = diag(lam^-(i-1))``, so a single numerical solve per order suffices.
    """
    X1 = np.array(_full_ptilde_unit(int(n)))
    if reduced_margin(X1, 1.0) <= 0.0:
        raise InternalError(f"no P~ found for n={n}")
    D = np.diag(float(lam) ** -np.arange(n, dtype=float))
    X = D @ X1 @ D
    X = X / X[-1, -1]
    return 0.5 * (X + X.T)


def build_ptilde(n: int, lam: float, allow_full: bool = True) -> np.ndarray:
    """P~ as a matrix: diagonal when possible, otherwise the full fallback."""
    try:
        return np.diag(build_diag_ptilde(n, lam))
    except DiagonalInfeasible:
        if not allow_full:
            raise
    return build_full_ptilde(n, lam)


@dataclass(frozen=True, eq=False)
class HomDesign:
    base: LinearDesign
    Ptilde: np.ndarray
    P: np.ndarray
    Z: np.ndarray
    Q: np.ndarray
    rho: float
    T: float
    s_tilde: float
    r: float
    K_tilde: np.ndarray
    h_tilde: np.ndarray
    M: np.ndarray
    norm_ctx: HomNormContext = field(repr=False)
    margins: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def lam(self) -> float:
        return self.base.lam

    @property
    def dilation(self) -> Dilation:
        return self.norm_ctx.dilation

    @property
    def diagonal(self) -> bool:
        return bool(np.count_nonzero(self.Ptilde - np.diag(np.diag(self.Ptilde))) == 0)

    def with_radius(self, r: float) -> "HomDesign":
        if not r > 0.0:
            raise InvalidInput(f"radius must be positive, got {r}")
        return _replace(self, r=float(r))

    def scaled_norm(self, x) -> float:
        """``||x||`` of the norm context (``sqrt(x' d(s) P d(s) x)``)."""
        return self.norm_ctx.euclid(x)

    def hom_norm_r(self, x, r=None) -> float:
        """``||x/r||_d``."""
        r = self.r if r is None else r
        return self.norm_ctx.norm(np.asarray(x, dtype=float) / r)

    def u_bound(self, r=None) -> float:
        r = self.r if r is None else r
        R = inv_sqrt_spd(self.P)
        k = self.base.K[:, None]
        return r * math.sqrt(max(eig_max(R @ k @ k.T @ R), 0.0))


def _replace(d: HomDesign, **kw) -> HomDesign:
    return dataclasses.replace(d, **kw)


def certificate(P, base: LinearDesign) -> dict:
    n = base.n
    A = np.eye(n, k=1)
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    Acl = A + B @ base.K[None, :]
    G = np.diag(np.arange(n, 0, -1, dtype=float))
    Z = P @ Acl + Acl.T @ P
    Q = P @ G + G @ P
    return {
        "Z": 0.5 * (Z + Z.T),
        "Q": 0.5 * (Q + Q.T),
        "max_eig_Z": eig_max(Z),
        "min_eig_Q": eig_min(Q),
        "min_eig_P": eig_min(P),
    }


def build_hom_design(
    base: LinearDesign,
    T: Optional[float] = None,
    r: float = 1.0,
    alpha_override: Optional[float] = None,
    ptilde: Optional[np.ndarray] = None,
    margin: float = CERT_MARGIN,
) -> HomDesign:
    """Homogeneous design on top of ``base``.

    ``T=None`` selects ``T = 1/rho`` (gain scaling zero).  ``alpha_override``
    sets ``p_1`` for ``n = 2``; ``ptilde`` supplies the whole matrix.
    """
    n = base.n
    if not r > 0.0:
        raise InvalidInput(f"radius must be positive, got {r}")
    if T is not None and not T > 0.0:
        raise InvalidInput(f"settling bound must be positive, got {T}")
    if ptilde is not None:
        Pt = np.array(ptilde, dtype=float)
        if Pt.ndim == 1:
            Pt = np.diag(Pt)
    elif alpha_override is not None:
        if n != 2:
            raise InvalidInput("alpha_override applies to n = 2 only")
        Pt = np.diag([float(alpha_override), 1.0])
    else:
        Pt = build_ptilde(n, base.lam)
    H = base.H
    P = H.T @ Pt @ H
    P = 0.5 * (P + P.T)
    cert = certificate(P, base)
    if not (cert["max_eig_Z"] < -margin and cert["min_eig_Q"] > margin and cert["min_eig_P"] > margin):
        raise InternalError(
            "LMI certificate failed: "
            f"max eig Z={cert['max_eig_Z']:.3e}, min eig Q={cert['min_eig_Q']:.3e}, "
            f"min eig P={cert['min_eig_P']:.3e}"
        )
    rho = -gen_eig_max(cert["Z"], cert["Q"])
    if not rho > 0.0:  # pragma: no cover - implied by the certificate
        raise InternalError(f"decay rate is not positive: {rho}")
    if T is None:
        T, s_tilde = 1.0 / rho, 0.0
    else:
        s_tilde = max(0.0, math.log(1.0 / (rho * T)))
    dil = Dilation(n)
    ds = dil.matrix(s_tilde)
    Ps = ds @ P @ ds
    ctx = HomNormContext(dil, Ps)
    return HomDesign(
        base=base,
        Ptilde=Pt,
        P=P,
        Z=cert["Z"],
        Q=cert["Q"],
        rho=rho,
        T=float(T),
        s_tilde=s_tilde,
        r=float(r),
        K_tilde=base.K @ ds,
        h_tilde=H @ ds,
        M=_m_matrix(n, base.lam),
        norm_ctx=ctx,
        margins={k: cert[k] for k in ("max_eig_Z", "min_eig_Q", "min_eig_P")},
    )


def phi(d: HomDesign, x, r=None, V=None) -> np.ndarray:
    """Homogeneous barrier vector ``H d(s~) d(-ln||x/r||_d) x``; zero at 0."""
    x = np.asarray(x, dtype=float)
    r = d.r if r is None else r
    if V is None:
        V = d.norm_ctx.norm(x / r)
    if V == 0.0:
        return np.zeros(d.n)
    return d.h_tilde @ d.dilation(-math.log(V), x)


def u_hom(d: HomDesign, x, r=None) -> float:
    x = np.asarray(x, dtype=float)
    r = d.r if r is None else r
    V = d.norm_ctx.norm(x / r)
    if V == 0.0:
        raise UndefinedAtOrigin("homogeneous feedback is set-valued at the origin")
    return float(d.K_tilde @ d.dilation(-math.log(V), x))


def in_cone_omega_r(d: HomDesign, x, r=None, tol: float = CONE_TOL) -> bool:
    """Membership in the homogeneous cone; the slack is relative to ``r``."""
    r = d.r if r is None else r
    return bool(np.all(phi(d, x, r) >= -tol * r))


def in_ball_br(d: HomDesign, x, r=None, tol: float = BALL_TOL) -> bool:
    return d.hom_norm_r(x, r) <= math.exp(d.s_tilde) * (1.0 + tol)


def u_mixed(d: HomDesign, x, r=None) -> float:
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise UndefinedAtOrigin("mixed feedback is not defined at the origin")
    if d.hom_norm_r(x, r) <= math.exp(d.s_tilde):
        return u_hom(d, x, r)
    return float(d.base.K @ x)


def barrier_dynamics_matrix(d, gamma: float) -> np.ndarray:
    """``-lam I + A + gamma G_d + gamma lam (nI - G_d) A'`` (tridiagonal Metzler)."""
    if not gamma > 0.0:
        raise InvalidInput(f"gamma must be positive, got {gamma}")
    n, lam = d.n, d.lam
    G = np.diag(np.arange(n, 0, -1, dtype=float))
    Pi = -lam * np.eye(n) + np.eye(n, k=1) + gamma * G + gamma * lam * np.diag(np.arange(n, dtype=float)) @ np.eye(n, k=-1)
    off = Pi - np.diag(np.diag(Pi))
    if off.min() < 0.0:  # pragma: no cover - structural
        raise InternalError("barrier dynamics matrix is not Metzler")
    return Pi


def rho_closed_form_n2(lam: float, alpha: float) -> float:
    """Printed closed-form decay rate for the double integrator with P~ = diag(alpha, 1)."""
    a = 3.0 + 4.0 * alpha
    disc = a * a * lam * lam - (8.0 * alpha - lam * lam) * (4.0 * lam * lam - 1.0)
    return (4.0 * lam * lam - 1.0) / (a * lam + math.sqrt(disc))


def t_star_n2(lam: float) -> float:
    """Printed optimal settling bound for the double integrator."""
    return (6.0 + lam * lam) * lam / (4.0 * lam * lam - 1.0)
