"""Acceptance criteria, shared by ``homsafe verify`` and the test suite.

Each criterion returns a :class:`Result`; nothing here weakens a stated
tolerance.  Tolerances live in ``DEFAULT_TOLS`` and may be overridden.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import homctl, linctl, safety, sim
from .dilation import Dilation, HomNormContext
from .errors import DiagonalInfeasible, HomsafeError, InternalError
from .numkernel import eig_min

# reference values for the double integrator with lambda = 2, alpha = 0.50125
REF_K = (-4.0, -4.0)
REF_RHO = 0.7495
REF_T = 1.3342

DEFAULT_TOLS = {
    "rho": 1e-3,
    "T": 1e-3,
    "closed_form": 1e-9,
    "t_star": 1e-3,
    "homog": 1e-9,
    "sphere": 1e-9,
    "ferrari": 1e-10,
    "grad": 1e-6,
    "identity": 1e-10,
    "lmi": 1e-10,
    "overshoot": 1e-6,
    "settle": 1e-4,
    "slack_steps": 10.0,
}

LAMBDAS = (0.5, 1.0, 2.0, 5.0)


@dataclass
class Result:
    cid: int
    name: str
    passed: bool
    detail: str
    elapsed: float = 0.0
    margins: Dict[str, float] = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} [{self.cid:2d}] {self.name}: {self.detail} ({self.elapsed:.2f}s)"


@dataclass
class Context:
    tols: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLS))
    seed: int = 20240501
    fault: Optional[str] = None
    quick: bool = False
    # (label, violations) gathered by the simulation criteria
    invariance: List[tuple] = field(default_factory=list)
    done: set = field(default_factory=set)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng(self.seed + salt)


def _hom_design(n, lam, ctx: Context, **kw):
    base = linctl.build_linear_design(n, lam)
    if ctx.fault == "lmi":
        # negative control: a P~ that breaks the Lyapunov inequality
        pt = np.diag(np.r_[1e-6 * np.ones(n - 1), 1.0]) if n > 1 else np.array([[1.0]])
        kw.setdefault("ptilde", pt)
    return homctl.build_hom_design(base, **kw)


# 1 -------------------------------------------------------------------------
def c_reference_numbers(ctx: Context) -> Result:
    tol_r, tol_T = ctx.tols["rho"], ctx.tols["T"]
    t0 = time.perf_counter()
    d = _hom_design(2, 2.0, ctx, alpha_override=0.50125)
    el = time.perf_counter() - t0
    K = tuple(float(v) for v in d.base.K)
    k_ok = K == REF_K
    err_r = abs(d.rho - REF_RHO)
    err_T = abs(1.0 / d.rho - REF_T)
    ok = k_ok and err_r <= tol_r and err_T <= tol_T and el < 1.0
    detail = (
        f"K={K} rho={d.rho:.6f} (ref {REF_RHO}, |err|={err_r:.2e} tol {tol_r:g}) "
        f"1/rho={1 / d.rho:.6f} (ref {REF_T}, |err|={err_T:.2e} tol {tol_T:g})"
    )
    return Result(1, "double-integrator reference numbers", ok, detail, margins={"rho_err": err_r, "T_err": err_T})


# 2 -------------------------------------------------------------------------
def c_closed_form(ctx: Context) -> Result:
    tol = ctx.tols["closed_form"]
    worst = 0.0
    where = None
    cases = 0
    for lam in (1.2, 2.0, 3.0, 5.0):
        lo = lam * lam / 8.0
        for alpha in np.linspace(lo, lam * lam, 11)[1:]:
            d = _hom_design(2, lam, ctx, alpha_override=float(alpha))
            ref = homctl.rho_closed_form_n2(lam, float(alpha))
            err = abs(d.rho - ref)
            cases += 1
            if err > worst:
                worst, where = err, (lam, float(alpha), d.rho, ref)
    ok = worst <= tol
    detail = f"{cases} cases, max |rho - closed form| = {worst:.3e} (tol {tol:g})"
    if where is not None and not ok:
        detail += f"; worst at lambda={where[0]}, alpha={where[1]:.4g}: {where[2]:.6f} vs {where[3]:.6f}"
    return Result(2, "decay rate vs closed form", ok, detail, margins={"max_err": worst})


# 3 -------------------------------------------------------------------------
def c_optimal_bound(ctx: Context) -> Result:
    tol = ctx.tols["t_star"]
    parts = []
    ok = True
    worst = 0.0
    for lam in (2.0, 3.0):
        alpha = lam * lam / 8.0 + 1e-6
        d = _hom_design(2, lam, ctx, alpha_override=alpha)
        ts = homctl.t_star_n2(lam)
        err = abs(1.0 / d.rho - ts)
        worst = max(worst, err)
        ok &= err <= tol
        parts.append(f"lambda={lam:g}: 1/rho={1 / d.rho:.6f} T*={ts:.6f}")
    return Result(3, "optimal settling bound", ok, "; ".join(parts) + f" (tol {tol:g})", margins={"max_err": worst})


# 4 -------------------------------------------------------------------------
def random_context(rng, n) -> HomNormContext:
    """Random shape matrix with a valid monotonicity certificate."""
    G = np.diag(np.arange(n, 0, -1, dtype=float))
    while True:
        L = rng.normal(size=(n, n))
        P = L @ L.T + 0.2 * np.eye(n)
        P /= np.trace(P) / n
        if eig_min(P @ G + G @ P) > 1e-3:
            return HomNormContext(Dilation(n), P)


def bisection_norm(ctx: HomNormContext, x, iters=200) -> float:
    """Plain bisection on ``s -> ||d(-s) x||^2 - 1`` (independent oracle)."""
    P, w = ctx.P, ctx.dilation.weights
    x = np.asarray(x, dtype=float)

    def g(s):
        y = x * np.exp(-w * s)
        return y @ P @ y - 1.0

    lo, hi = -1.0, 1.0
    while g(lo) < 0.0:
        lo *= 2.0
    while g(hi) > 0.0:
        hi *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, abs(mid)):
            break
    return math.exp(0.5 * (lo + hi))


def c_norm_suite(ctx: Context) -> Result:
    t0 = time.perf_counter()
    tols = ctx.tols
    N = 200 if ctx.quick else 1000
    stats = {"homog": 0.0, "sphere": 0.0, "ferrari": 0.0, "grad": 0.0}
    sphere_bad = 0
    for n in (2, 3, 4, 5):
        rng = ctx.rng(100 + n)
        ctxs = [random_context(rng, n) for _ in range(10)]
        for j in range(N):
            c = ctxs[j % len(ctxs)]
            x = rng.normal(size=n) * 10.0 ** rng.uniform(-2, 2)
            s = rng.uniform(-5, 5)
            V = c.norm(x)
            Vs = c.norm(c.dilation(s, x))
            stats["homog"] = max(stats["homog"], abs(Vs - math.exp(s) * V) / (math.exp(s) * V))
            # unit sphere
            xu = rng.normal(size=n)
            xu /= c.euclid(xu)
            stats["sphere"] = max(stats["sphere"], abs(c.norm(xu) - 1.0))
            xr = xu * rng.uniform(0.2, 2.0)
            if (c.euclid(xr) <= 1.0) != (c.norm(xr) <= 1.0):
                sphere_bad += 1
            if n == 2:
                stats["ferrari"] = max(stats["ferrari"], abs(V - bisection_norm(c, x)) / V)
            # gradient vs central differences, step sized to each coordinate's scale
            g = c.grad(x)
            fd = np.empty(n)
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1e-5 * V ** c.dilation.weights[i]
                fd[i] = (c.norm(x + e) - c.norm(x - e)) / (2 * e[i])
            scale = np.abs(g * V ** c.dilation.weights)
            rel = np.abs((g - fd) * V ** c.dilation.weights).max() / scale.max()
            stats["grad"] = max(stats["grad"], rel)
    el = time.perf_counter() - t0
    ok = (
        stats["homog"] <= tols["homog"]
        and stats["sphere"] <= tols["sphere"]
        and sphere_bad == 0
        and stats["ferrari"] <= tols["ferrari"]
        and stats["grad"] <= tols["grad"]
        and el < 30.0
    )
    detail = (
        f"{N} cases x n=2..5: homogeneity {stats['homog']:.1e}, sphere {stats['sphere']:.1e} "
        f"(order mismatches {sphere_bad}), closed form vs bisection {stats['ferrari']:.1e}, "
        f"gradient vs FD {stats['grad']:.1e}"
    )
    return Result(4, "homogeneous norm properties", ok, detail, margins=stats)


# 5 -------------------------------------------------------------------------
def identity_residuals(n: int, lam: float) -> Dict[str, float]:
    d = linctl.build_linear_design(n, lam)
    A = np.eye(n, k=1)
    B = np.zeros((n, 1))
    B[-1] = 1.0
    H = d.H
    G = np.diag(np.arange(n, 0, -1, dtype=float))
    I = np.eye(n)
    scale = max(1.0, np.abs(H).max() * max(1.0, lam))
    res = {
        "closed_loop": np.abs(H @ (A + B @ d.K[None, :]) - (A - lam * I) @ H).max() / scale,
        "dilation": np.abs(H @ G - (G + lam * (n * I - G) @ A.T) @ H).max() / scale,
    }
    D = linctl.shift_diag_matrices(n)
    l1 = l2 = l3 = l4 = l5 = 0.0
    for i in range(2, n + 1):
        Di, Dm = D[i - 1], D[i - 2]
        hi, hm = d.h[i - 1], d.h[i - 2]
        l1 = max(l1, np.abs(Dm @ A - A @ Di).max())
        for s in (-1.3, 0.7, 2.1):
            l2 = max(l2, np.abs(A @ np.diag(np.exp(s * np.diag(Di))) - np.diag(np.exp(s * np.diag(Dm))) @ A).max())
        E = np.diag([1.0 if j < i else 0.0 for j in range(n)])
        hs = np.abs(hi).max()
        l3 = max(l3, np.abs(hi @ E - hi).max() / hs)
        for s in (-0.4, 1.1):
            l3 = max(l3, np.abs(hi @ np.diag(np.exp(s * np.diag(E))) - math.exp(s) * hi).max() / (hs * math.exp(s)))
        l4 = max(l4, np.abs(hi @ Di - (i - 1) * lam * hm).max() / scale)
        l5 = max(l5, np.abs(hi @ D[-1] - ((n - i) * hi + (i - 1) * lam * hm)).max() / scale)
    res.update(shift_comm=l1, shift_exp=l2, row_support=l3, row_weight=l4, row_gen=l5)
    off = (-lam * I + A) - np.diag(np.diag(-lam * I + A))
    res["metzler_lin"] = max(0.0, -off.min())
    worst_pi = 0.0
    for g in (1e-3, 0.5, 1.0, 7.0):
        Pi = homctl.barrier_dynamics_matrix(d, g) if n > 0 else None
        offd = Pi - np.diag(np.diag(Pi))
        worst_pi = max(worst_pi, -offd.min())
        # tridiagonal structure
        worst_pi = max(worst_pi, np.abs(np.triu(Pi, 2)).max() if n > 2 else 0.0, np.abs(np.tril(Pi, -2)).max() if n > 2 else 0.0)
    res["metzler_pi"] = worst_pi
    return res


def c_identities(ctx: Context) -> Result:
    tol = ctx.tols["identity"]
    worst: Dict[str, float] = {}
    for n in range(1, 9):
        for lam in LAMBDAS:
            for k, v in identity_residuals(n, lam).items():
                worst[k] = max(worst.get(k, 0.0), float(v))
    ok = all(v < tol for v in worst.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol {tol:g}, n<=8)"
    return Result(5, "algebraic identities", ok, detail, margins=worst)


# 6 -------------------------------------------------------------------------
def c_lmi(ctx: Context) -> Result:
    tol = ctx.tols["lmi"]
    failed = []
    fallback_ok = []
    worst = math.inf
    for n in range(1, 7):
        for lam in LAMBDAS:
            base = linctl.build_linear_design(n, lam)
            try:
                if ctx.fault == "lmi":
                    pt = np.diag(np.r_[1e-6 * np.ones(n - 1), 1.0]) if n > 1 else np.array([[-1.0]])
                else:
                    pt = np.diag(homctl.build_diag_ptilde(n, lam))
                d = homctl.build_hom_design(base, ptilde=pt, margin=tol)
                m = min(-d.margins["max_eig_Z"], d.margins["min_eig_Q"], d.margins["min_eig_P"])
                worst = min(worst, m)
            except (DiagonalInfeasible, InternalError, HomsafeError) as exc:
                failed.append(f"n={n},lambda={lam:g}: {type(exc).__name__}")
                try:
                    homctl.build_hom_design(base, ptilde=homctl.build_full_ptilde(n, lam), margin=tol)
                    fallback_ok.append((n, lam))
                except HomsafeError:
                    pass
    ok = not failed
    shown = "n/a" if math.isinf(worst) else f"{worst:.2e}"
    detail = f"min certificate margin {shown} (tol {tol:g}) over {24 - len(failed)} diagonal designs"
    if failed:
        detail += f"; {len(failed)} failed [{'; '.join(failed[:4])}{'; ...' if len(failed) > 4 else ''}]"
        if ctx.fault is None:
            detail += f"; non-diagonal P~ certificates hold for {len(fallback_ok)}/{len(failed)} of them"
    return Result(6, "LMI feasibility (diagonal P~)", ok, detail, margins={"min_margin": worst})


# 7 -------------------------------------------------------------------------
def _sample_omega(rng, lin, hom, n, scale_hi=1.0):
    while True:
        x = rng.normal(size=n)
        x[0] = -abs(x[0])
        if linctl.in_cone_omega(lin, x):
            break
    return x / hom.scaled_norm(x) * rng.uniform(0.05, scale_hi)


def c_stabilization(ctx: Context) -> Result:
    t0 = time.perf_counter()
    rng = ctx.rng(7)
    N = 12 if ctx.quick else 50
    T = 2.0
    worst_os, worst_xT, viol = -math.inf, 0.0, 0
    designs = {}
    for j in range(N):
        n = (2, 3, 4)[j % 3]
        if n not in designs:
            lin = linctl.build_linear_design(n, 2.0)
            designs[n] = (lin, homctl.build_hom_design(lin, T=T, r=1.0))
        lin, hom = designs[n]
        x0 = _sample_omega(rng, lin, hom, n)
        s = sim.Scenario(n=n, x0=tuple(x0), controller="homogeneous", lam=2.0, T=T, r=1.0, t_end=T)
        tr = sim.integrate(s, (lin, hom))
        worst_os = max(worst_os, sim.max_overshoot(tr))
        worst_xT = max(worst_xT, float(tr.xnorm[-1]))
        v = sim.invariance_violations(tr)
        viol += v
        ctx.invariance.append((f"hom n={n} #{j}", v))
    el = time.perf_counter() - t0
    ok = worst_os <= ctx.tols["overshoot"] and worst_xT <= ctx.tols["settle"] and el < 60.0
    detail = f"{N} runs (n=2,3,4; T={T:g}): max x1 {worst_os:.2e}, max ||x(T)|| {worst_xT:.2e}, cone violations {viol}"
    return Result(7, "nonovershooting finite-time stabilization", ok, detail, margins={"overshoot": worst_os, "xT": worst_xT})


# 8 -------------------------------------------------------------------------
def c_fixed_time(ctx: Context) -> Result:
    rng = ctx.rng(8)
    n, lam, T = 3, 2.0, 2.0
    lin = linctl.build_linear_design(n, lam)
    hom = homctl.build_hom_design(lin, T=T, r=1.0)
    r_min = safety.FilterConfig().r_min
    worst = 0.0
    late = []
    count = 0
    for dec in range(-2, 3):
        for _ in range(1 if ctx.quick else 3):
            x0 = _sample_omega(rng, lin, hom, n)
            x0 = x0 / hom.scaled_norm(x0) * 10.0 ** rng.uniform(dec, dec + 1)
            r = max(r_min, hom.scaled_norm(x0))
            s = sim.Scenario(n=n, x0=tuple(x0), controller="homogeneous", lam=lam, T=T, r=r, t_end=T + 0.05)
            tr = sim.integrate(s, (lin, hom.with_radius(r)))
            st = sim.detect_settling(tr, s.eps_origin * r)
            count += 1
            ctx.invariance.append((f"fixed-time |x0|={r:.1e}", sim.invariance_violations(tr)))
            if st is None or st > T + s.dt:
                late.append(f"|x0|={r:.2e}: {st}")
            else:
                worst = max(worst, st)
    ok = not late
    detail = f"{count} runs, |x0| in [1e-2, 1e3], T={T:g}: latest settling {worst:.3f}"
    if late:
        detail += f"; late: {late[:3]}"
    return Result(8, "fixed-time settling", ok, detail, margins={"latest": worst})


# 9 -------------------------------------------------------------------------
def c_fntsf_restraint(ctx: Context) -> Result:
    rng = ctx.rng(9)
    n, lam = 3, 2.0
    lin = linctl.build_linear_design(n, lam)
    hom = homctl.build_hom_design(lin, T=None, r=1.0)
    unom = 10.0
    # size r so that u_nom dominates the bounded homogeneous feedback
    r = 0.9 * unom / hom.u_bound(1.0)
    hom = hom.with_radius(r)
    slack = ctx.tols["slack_steps"]
    events = []
    worst_ratio = 0.0
    for j in range(3 if ctx.quick else 6):
        x0 = _sample_omega(rng, lin, hom, n, scale_hi=1.0) * r * rng.uniform(0.3, 2.5)
        V0 = hom.hom_norm_r(x0)
        T0 = V0 * hom.T
        s = sim.Scenario(
            n=n, x0=tuple(x0), controller="filtered", filter=safety.FilterConfig(mode="FnTSf"),
            nominal=sim.Nominal(kind="constant", value=unom), lam=lam, r=r, t_end=T0 + 0.5,
        )
        tr = sim.integrate(s, (lin, hom))
        ctx.invariance.append((f"FnTSf push #{j}", sim.invariance_violations(tr)))
        reach = np.nonzero(tr.at_origin)[0]
        t_hit = float(tr.t[reach[0]]) if reach.size else math.inf
        ok_j = t_hit <= T0 + slack * s.dt and bool(np.all(tr.at_origin[reach[0]:])) if reach.size else False
        worst_ratio = max(worst_ratio, t_hit / T0)
        events.append(ok_j)
    ok = all(events)
    detail = f"{len(events)} runs (n=3, u_nom=+10, r={r:.3g}): worst reach/T0 {worst_ratio:.3f}, all held at origin: {ok}"
    return Result(9, "finite-time restraint", ok, detail, margins={"worst_ratio": worst_ratio})


# 10 ------------------------------------------------------------------------
def c_fxtsf_restraint(ctx: Context) -> Result:
    rng = ctx.rng(10)
    n, lam = 3, 2.0
    lin = linctl.build_linear_design(n, lam)
    hom = homctl.build_hom_design(lin, T=None, r=1.0)
    slack = ctx.tols["slack_steps"]
    bad = []
    n_events = 0
    for j in range(4 if ctx.quick else 10):
        x0 = _sample_omega(rng, lin, hom, n) * 10.0 ** rng.uniform(-1, 1)
        for preset in ("push", "paperV"):
            s = sim.Scenario(
                n=n, x0=tuple(x0), controller="filtered", filter=safety.FilterConfig(mode="FxTSf"),
                nominal=sim.Nominal(kind="preset", preset=preset), lam=lam, t_end=hom.T + 3.0, dt=1e-3,
            )
            tr = sim.integrate(s, (lin, hom.with_radius(1.0)))
            ctx.invariance.append((f"FxTSf {preset} #{j}", sim.invariance_violations(tr, use_theta=True)))
            for ev in sim.restraint_events(tr, fixed_time=True, slack_steps=int(slack)):
                n_events += 1
                if not ev.ok:
                    bad.append(f"#{j} {preset} start {ev.start:.3f}")
    # recurrence on the periodic double-integrator scenario
    tr = sim.integrate(sim.paper_v_scenario("FxTSf"))
    ctx.invariance.append(("FxTSf reference scenario", sim.invariance_violations(tr, use_theta=True)))
    ivs = sim.override_intervals(tr)
    T = tr.design.T
    hits = [iv for iv in ivs if iv[2] is not None and iv[2] - iv[0] <= T + slack * 1e-3]
    evs = sim.restraint_events(tr, fixed_time=True, slack_steps=int(slack))
    ok = not bad and len(ivs) >= 2 and len(hits) == len(ivs) and all(e.ok for e in evs)
    detail = (
        f"{n_events} pressure events over random starts, {len(bad)} late; reference scenario: "
        f"{len(ivs)} override intervals, {len(hits)} reach the origin within T={T:g}"
    )
    return Result(10, "fixed-time restraint", ok, detail, margins={"late": len(bad)})


# 11 ------------------------------------------------------------------------
def c_invariance(ctx: Context) -> Result:
    total = sum(v for _, v in ctx.invariance)
    bad = [lab for lab, v in ctx.invariance if v]
    ok = total == 0 and len(ctx.invariance) > 0
    detail = f"{len(ctx.invariance)} monitored runs, {total} violating samples"
    if bad:
        detail += f" in {bad[:4]}"
    return Result(11, "invariance monitors", ok, detail, margins={"violations": total})


# 12 ------------------------------------------------------------------------
def c_figures(ctx: Context) -> Result:
    raw = sim.integrate(sim.paper_v_scenario("off"))
    lin = sim.integrate(sim.paper_v_scenario("MinLinear"))
    hom = sim.integrate(sim.paper_v_scenario("FxTSf"))
    ctx.invariance.append(("reference FxTSf (figures)", sim.invariance_violations(hom, use_theta=True)))
    a = sim.max_overshoot(raw) > 0.0
    b = sim.max_overshoot(lin) < 0.0
    ivs = sim.override_intervals(hom)
    T = hom.design.T
    c = bool(ivs) and ivs[0][2] is not None and ivs[0][2] - ivs[0][0] <= T
    # conservatism: distance of x1 from the unfiltered run
    d_lin = float(np.mean(np.abs(lin.x[:, 0] - raw.x[:, 0])))
    d_hom = float(np.mean(np.abs(hom.x[:, 0] - raw.x[:, 0])))
    order = d_hom < d_lin
    ok = a and b and c and order
    first = f"{ivs[0][2] - ivs[0][0]:.3f}s" if c else "never"
    detail = (
        f"raw max x1 {sim.max_overshoot(raw):+.3f}, linear max x1 {sim.max_overshoot(lin):+.3f}, "
        f"homogeneous reaches x=0 {first} after override onset (T={T:g}); mean |x1 - raw| linear "
        f"{d_lin:.3f} > homogeneous {d_hom:.3f}: {order}"
    )
    return Result(12, "qualitative filter comparison", ok, detail)


CRITERIA: Dict[int, Callable[[Context], Result]] = {
    1: c_reference_numbers,
    2: c_closed_form,
    3: c_optimal_bound,
    4: c_norm_suite,
    5: c_identities,
    6: c_lmi,
    7: c_stabilization,
    8: c_fixed_time,
    9: c_fntsf_restraint,
    10: c_fxtsf_restraint,
    11: c_invariance,
    12: c_figures,
}
SIM_CRITERIA = (7, 8, 9, 10, 12)


def run_one(cid: int, ctx: Context) -> Result:
    if cid == 11:
        for dep in SIM_CRITERIA:
            if dep not in ctx.done:
                run_one(dep, ctx)
    t0 = time.perf_counter()
    try:
        res = CRITERIA[cid](ctx)
    except HomsafeError as exc:
        res = Result(cid, CRITERIA[cid].__name__[2:], False, f"raised {type(exc).__name__}: {exc}")
    res.elapsed = time.perf_counter() - t0
    ctx.done.add(cid)
    return res


def run_all(ctx: Optional[Context] = None, only=None, echo: Optional[Callable[[str], None]] = None) -> List[Result]:
    ctx = ctx or Context()
    ids = sorted(only) if only else sorted(CRITERIA)
    # criterion 11 aggregates the simulation runs, so it goes last
    ids = [i for i in ids if i != 11] + ([11] if 11 in ids else [])
    out = []
    for cid in ids:
        res = run_one(cid, ctx)
        out.append(res)
        if echo:
            echo(res.line())
    return out
