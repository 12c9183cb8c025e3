import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homsafe.acceptance import bisection_norm, random_context
from homsafe.dilation import Dilation, HomNormContext, hom_norm, hom_norm_grad
from homsafe.errors import InvalidContext, InvalidInput, UndefinedAtOrigin


def test_dilation_weights_and_group():
    d = Dilation(3)
    np.testing.assert_array_equal(d.weights, [3.0, 2.0, 1.0])
    np.testing.assert_array_equal(d.G, np.diag([3.0, 2.0, 1.0]))
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(d(0.3, d(0.4, x)), d(0.7, x), rtol=1e-15)
    np.testing.assert_allclose(d.matrix(0.2) @ x, d(0.2, x), rtol=1e-15)
    np.testing.assert_allclose(d(0.0, x), x)


def test_bad_order():
    with pytest.raises(InvalidInput):
        Dilation(0)


def test_context_rejects_bad_shape():
    with pytest.raises(InvalidContext):
        HomNormContext(Dilation(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    # positive definite, but PG + GP = [[4, -3.9], [-3.9, 3.6]] is indefinite
    P = np.array([[1.0, -1.3], [-1.3, 1.8]])
    with pytest.raises(InvalidContext):
        HomNormContext(Dilation(2), P)


def test_identity_shape_values():
    ctx = HomNormContext(Dilation(2), np.eye(2))
    assert ctx.norm([0.0, 0.0]) == 0.0
    # V^4 = x1^2 + x2^2 V^2 with x = (1, 0): V = 1; x = (4, 0): V = 2
    assert ctx.norm([1.0, 0.0]) == pytest.approx(1.0, rel=1e-14)
    assert ctx.norm([4.0, 0.0]) == pytest.approx(2.0, rel=1e-14)
    assert ctx.norm([0.0, 3.0]) == pytest.approx(3.0, rel=1e-14)


def test_n1_closed_form():
    ctx = HomNormContext(Dilation(1), np.array([[4.0]]))
    assert ctx.norm([3.0]) == pytest.approx(6.0)


def test_grad_undefined_at_origin():
    ctx = HomNormContext(Dilation(3), np.eye(3))
    with pytest.raises(UndefinedAtOrigin):
        ctx.grad(np.zeros(3))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_norm_matches_bisection(n):
    rng = np.random.default_rng(10 + n)
    for _ in range(30):
        ctx = random_context(rng, n)
        x = rng.normal(size=n) * 10 ** rng.uniform(-4, 4)
        assert ctx.norm(x) == pytest.approx(bisection_norm(ctx, x), rel=1e-11)


def test_project_lands_on_sphere():
    rng = np.random.default_rng(2)
    ctx = random_context(rng, 3)
    x = rng.normal(size=3) * 7.0
    y = ctx.project(x, ctx.norm(x))
    assert ctx.euclid(y) == pytest.approx(1.0, rel=1e-12)


@st.composite
def ctx_and_point(draw):
    n = draw(st.integers(2, 5))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, n)
    x = rng.normal(size=n) * 10 ** draw(st.floats(-3, 3))
    return ctx, x


@settings(max_examples=150, deadline=None)
@given(ctx_and_point(), st.floats(-6, 6))
def test_homogeneity_property(cp, s):
    ctx, x = cp
    V = ctx.norm(x)
    assert ctx.norm(ctx.dilation(s, x)) == pytest.approx(math.exp(s) * V, rel=1e-10)


@settings(max_examples=150, deadline=None)
@given(ctx_and_point())
def test_level_set_and_gradient_identity(cp):
    ctx, x = cp
    V = ctx.norm(x)
    y = ctx.dilation(-math.log(V), x)
    assert ctx.euclid(y) == pytest.approx(1.0, rel=1e-10)
    # Euler identity for the dilation: grad . G x = V
    g = ctx.grad(x)
    assert g @ (ctx.dilation.weights * x) == pytest.approx(V, rel=1e-9)


def test_module_level_helpers():
    ctx = HomNormContext(Dilation(2), np.eye(2))
    assert hom_norm(ctx, [4.0, 0.0]) == pytest.approx(2.0)
    np.testing.assert_allclose(hom_norm_grad(ctx, [4.0, 0.0]), ctx.grad([4.0, 0.0]))
