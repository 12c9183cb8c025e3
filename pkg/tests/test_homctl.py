import math

import numpy as np
import pytest
import scipy.linalg as sl
from hypothesis import given, settings, strategies as st

from homsafe import homctl, linctl
from homsafe.errors import DiagonalInfeasible, InternalError, InvalidInput

# decay rate of the double-integrator design with alpha = 0.50125, frozen
# from scipy.linalg.eigh and from the sampled worst-case Lyapunov decrease
RHO_N2_ALPHA = 0.5537452636744548


def _design(n, lam, **kw):
    return homctl.build_hom_design(linctl.build_linear_design(n, lam), **kw)


def _sup_vdot(d, samples=3000, seed=0):
    rng = np.random.default_rng(seed)
    A = np.eye(d.n, k=1)
    worst = -np.inf
    for _ in range(samples):
        x = rng.normal(size=d.n)
        x /= d.scaled_norm(x)
        f = A @ x
        f[-1] += homctl.u_hom(d, x, 1.0)
        worst = max(worst, d.norm_ctx.grad(x) @ f)
    return worst


def test_double_integrator_rho_frozen():
    d = _design(2, 2.0, alpha_override=0.50125)
    assert d.rho == pytest.approx(RHO_N2_ALPHA, rel=1e-12)
    assert -sl.eigh(d.Z, d.Q, eigvals_only=True).max() == pytest.approx(d.rho, rel=1e-12)
    np.testing.assert_allclose(d.Ptilde, np.diag([0.50125, 1.0]))


@pytest.mark.parametrize("n,lam", [(2, 2.0), (3, 2.0), (4, 1.0)])
def test_rho_is_worst_lyapunov_decrease(n, lam):
    d = _design(n, lam)
    sup = _sup_vdot(d)
    # the bound holds everywhere on the unit sphere and is nearly attained
    assert sup <= -d.rho * (1 - 1e-9)
    assert sup >= -d.rho * 1.01


def test_closed_form_helpers():
    assert homctl.t_star_n2(2.0) == pytest.approx(4.0 / 3.0)
    assert homctl.t_star_n2(3.0) == pytest.approx(45.0 / 35.0)
    assert homctl.rho_closed_form_n2(2.0, 0.50125) == pytest.approx(0.74953, abs=1e-5)


@pytest.mark.parametrize("n", range(1, 5))
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_diagonal_recursion_feasible(n, lam):
    p = homctl.build_diag_ptilde(n, lam)
    assert p[-1] == 1.0 and np.all(p > 0)
    S1, S2, _ = homctl.reduced_lmis(np.diag(p), lam)
    assert np.linalg.eigvalsh(S1).min() > 0
    assert np.linalg.eigvalsh(S2).min() > 0


@pytest.mark.parametrize("n", [5, 6])
def test_diagonal_recursion_infeasible_from_order_five(n):
    with pytest.raises(DiagonalInfeasible):
        homctl.build_diag_ptilde(n, 1.0)


@pytest.mark.parametrize("n", [5, 6])
@pytest.mark.parametrize("lam", [0.5, 1.0, 2.0, 5.0])
def test_full_shape_certificates(n, lam):
    Pt = homctl.build_full_ptilde(n, lam)
    assert homctl.reduced_margin(Pt, lam) > 0
    d = _design(n, lam)
    assert not d.diagonal
    assert d.margins["max_eig_Z"] < -1e-10
    assert d.margins["min_eig_Q"] > 1e-10


@pytest.mark.parametrize("n", range(1, 7))
def test_certificates(n):
    for lam in (0.5, 1.0, 2.0, 5.0):
        d = _design(n, lam)
        c = homctl.certificate(d.P, d.base)
        assert c["max_eig_Z"] < -1e-10 and c["min_eig_Q"] > 1e-10 and c["min_eig_P"] > 1e-10
        assert d.T == pytest.approx(1.0 / d.rho)
        assert d.s_tilde == 0.0


def test_broken_shape_is_rejected():
    base = linctl.build_linear_design(3, 1.0)
    with pytest.raises(InternalError):
        homctl.build_hom_design(base, ptilde=np.diag([1e-6, 1e-6, 1.0]))


def test_assigned_time_shifts_gain():
    d0 = _design(3, 2.0)
    d = _design(3, 2.0, T=d0.T / 4)
    assert d.s_tilde == pytest.approx(math.log(4.0))
    np.testing.assert_allclose(d.K_tilde, d.base.K * np.exp(d.s_tilde * np.array([3.0, 2.0, 1.0])))
    # larger T than the natural bound needs no shift
    assert _design(3, 2.0, T=100.0).s_tilde == 0.0
    with pytest.raises(InvalidInput):
        _design(2, 2.0, T=-1.0)


@st.composite
def cone_point(draw, n=3):
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    return rng.normal(size=n) * 10 ** rng.uniform(-2, 2)


D3 = _design(3, 2.0)


@settings(max_examples=200, deadline=None)
@given(cone_point(), st.floats(-3, 3))
def test_feedback_is_degree_zero(x, s):
    if not np.any(x):
        return
    u = homctl.u_hom(D3, x, 1.0)
    assert homctl.u_hom(D3, D3.dilation(s, x), 1.0) == pytest.approx(u, rel=1e-9, abs=1e-12)
    assert abs(u) <= D3.u_bound(1.0) * (1 + 1e-9)


@settings(max_examples=200, deadline=None)
@given(cone_point())
def test_linear_cone_in_ball_is_inside_omega_r(x):
    if linctl.in_cone_omega(D3.base, x) and homctl.in_ball_br(D3, x, 1.0):
        assert homctl.in_cone_omega_r(D3, x, 1.0)
    if homctl.in_cone_omega_r(D3, x, 1.0):
        assert x[0] <= 1e-12


def test_phi_and_mixed_agree_inside_ball():
    x = np.array([-0.05, 0.02, 0.01])
    assert D3.hom_norm_r(x) < 1
    assert homctl.u_mixed(D3, x) == pytest.approx(homctl.u_hom(D3, x))
    xo = x * 50
    assert homctl.u_mixed(D3, xo) == pytest.approx(float(D3.base.K @ xo))


def test_barrier_dynamics_matrix_is_tridiagonal_metzler():
    Pi = homctl.barrier_dynamics_matrix(D3.base, 0.3)
    off = Pi - np.diag(np.diag(Pi))
    assert off.min() >= 0
    assert np.all(np.triu(Pi, 2) == 0) and np.all(np.tril(Pi, -2) == 0)


def test_mixed_feedback_continuous_on_ball_boundary():
    rng = np.random.default_rng(5)
    for d in (D3, _design(3, 2.0, T=1.0), _design(4, 1.0)):
        for _ in range(20):
            x = rng.normal(size=d.n)
            # scale onto ||x/r||_d = e^{s~}
            x = d.dilation(d.s_tilde - math.log(d.hom_norm_r(x)), x)
            assert d.hom_norm_r(x) == pytest.approx(math.exp(d.s_tilde), rel=1e-12)
            assert homctl.u_hom(d, x) == pytest.approx(float(d.base.K @ x), rel=1e-9)
