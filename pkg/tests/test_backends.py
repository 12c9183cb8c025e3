"""The compiled and pure-Python kernels must agree."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homsafe import _kernels_py as py
from homsafe.errors import UseFallback

cy = pytest.importorskip("homsafe._kernels")

fl = st.floats(-30, 30, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(fl, fl, fl)
def test_cubic_parity(p, q, r):
    a, b = py.cubic_max_real_root(p, q, r), cy.cubic_max_real_root(p, q, r)
    assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(fl, fl, fl)
def test_cardano_parity(p, q, r):
    try:
        a = py.cardano_real_root(p, q, r)
    except UseFallback:
        with pytest.raises(UseFallback):
            cy.cardano_real_root(p, q, r)
        return
    assert a == pytest.approx(cy.cardano_real_root(p, q, r), rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(fl, fl, fl)
def test_ferrari_parity(a, b, c):
    ra, rb = py.ferrari_roots(a, b, c), cy.ferrari_roots(a, b, c)
    assert len(ra) == len(rb)
    np.testing.assert_allclose(ra, rb, rtol=1e-12, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_hom_norm2_parity(x1, x2):
    a = py.hom_norm2(x1, x2, 0.9, 0.2, 1.0)
    b = cy.hom_norm2(x1, x2, 0.9, 0.2, 1.0)
    if math.isnan(a):
        assert math.isnan(b)
    else:
        assert a == pytest.approx(b, rel=1e-12)


def test_newton_and_rk4_parity():
    rng = np.random.default_rng(0)
    n = 4
    w = np.arange(n, 0, -1, dtype=float)
    L = rng.normal(size=(n, n))
    P = L @ L.T + np.eye(n)
    Q = P @ np.diag(w) + np.diag(w) @ P
    mu = np.linalg.eigvals(np.linalg.solve(P, Q)).real
    for _ in range(50):
        x = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
        a = py.hom_norm_newton(x, w, P, mu.min(), mu.max())
        b = cy.hom_norm_newton(x, w, P, mu.min(), mu.max())
        assert a == pytest.approx(b, rel=1e-12)
        u, h = rng.normal(), 10 ** rng.uniform(-6, -1)
        np.testing.assert_allclose(py.rk4_chain_step(x, u, h), cy.rk4_chain_step(x, u, h), rtol=1e-14, atol=1e-300)
