import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings, strategies as st

from homsafe import numkernel as nk
from homsafe.errors import InvalidInput, NotPositiveDefinite, SingularMatrix, UseFallback


def _spd(rng, n, floor=0.1):
    L = rng.normal(size=(n, n))
    return L @ L.T + floor * np.eye(n)


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
def test_sym_eig_matches_eigh(n):
    rng = np.random.default_rng(n)
    S = rng.normal(size=(n, n))
    S = S + S.T
    w, V = nk.sym_eig(S)
    np.testing.assert_allclose(w, np.linalg.eigvalsh(S), atol=1e-12 * max(1.0, np.abs(w).max()))
    np.testing.assert_allclose(V @ np.diag(w) @ V.T, S, atol=1e-11)
    np.testing.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)


def test_sym_eig_rejects_nonsquare():
    with pytest.raises(InvalidInput):
        nk.sym_eig(np.ones((2, 3)))


def test_sqrt_and_inv_sqrt():
    P = _spd(np.random.default_rng(3), 4)
    R = nk.sqrt_spd(P)
    np.testing.assert_allclose(R @ R, P, rtol=1e-11, atol=1e-12)
    Ri = nk.inv_sqrt_spd(P)
    np.testing.assert_allclose(Ri @ P @ Ri, np.eye(4), atol=1e-10)


def test_sqrt_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        nk.sqrt_spd(np.diag([1.0, -1.0]))


def test_gen_eig_against_scipy():
    rng = np.random.default_rng(4)
    for n in (2, 3, 6):
        Q = _spd(rng, n)
        Z = rng.normal(size=(n, n))
        Z = Z + Z.T
        ref = sl.eigh(Z, Q, eigvals_only=True)
        assert nk.gen_eig_max(Z, Q) == pytest.approx(ref[-1], rel=1e-10, abs=1e-12)
        lo, hi = nk.gen_eig_range(Z, Q)
        assert lo == pytest.approx(ref[0], rel=1e-10, abs=1e-12)
        assert hi == pytest.approx(ref[-1], rel=1e-10, abs=1e-12)


def test_inverse_and_singular():
    M = np.array([[2.0, 1.0], [1.0, 3.0]])
    np.testing.assert_allclose(nk.inverse(M) @ M, np.eye(2), atol=1e-14)
    with pytest.raises(SingularMatrix):
        nk.inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


def _real_roots(coeffs):
    r = np.roots(coeffs)
    return np.sort(r[np.abs(r.imag) < 1e-7 * (1 + np.abs(r))].real)


coef = st.floats(-50, 50, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(coef, coef, coef)
def test_cubic_max_root_vs_numpy(p, q, r):
    z = nk.cubic_max_real_root(p, q, r)
    allr = np.roots([1.0, p, q, r])
    ref = _real_roots([1.0, p, q, r]).max()
    scale = 1.0 + abs(p) + abs(q) ** 0.5 + abs(r) ** (1 / 3)
    # z sits on a root (a near-real complex pair counts: it is a double
    # root to working precision) and no real root lies clearly above it
    assert np.abs(allr - z).min() <= 1e-6 * scale
    assert z >= ref - 1e-6 * scale


def test_cardano_three_real_roots_falls_back():
    # (z-1)(z-2)(z-3)
    with pytest.raises(UseFallback):
        nk.cardano_real_root(-6.0, 11.0, -6.0)
    assert nk.cubic_max_real_root(-6.0, 11.0, -6.0) == pytest.approx(3.0, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(coef, coef, coef)
def test_ferrari_vs_numpy(a, b, c):
    roots = nk.ferrari_roots(a, b, c)
    ref = _real_roots([1.0, 0.0, a, b, c])
    scale = 1.0 + abs(a) ** 0.5 + abs(b) ** (1 / 3) + abs(c) ** 0.25
    # every returned root is a root
    for v in roots:
        assert abs(((v * v + a) * v + b) * v + c) <= 1e-8 * scale ** 4
    # the largest real root agrees whenever numpy finds a well separated one
    if ref.size and len(roots):
        assert abs(max(roots) - ref.max()) <= 1e-5 * scale


def test_ferrari_known_quartic():
    # (V^2 - 1)(V^2 - 4) = V^4 - 5 V^2 + 4
    assert nk.ferrari_roots(-5.0, 0.0, 4.0) == pytest.approx([-2.0, -1.0, 1.0, 2.0], abs=1e-12)
    assert nk.ferrari_roots(1.0, 0.0, 1.0) == []
