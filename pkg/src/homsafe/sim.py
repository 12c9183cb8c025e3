"""Closed-loop simulation of the integrator chain with property monitors.

Stepping is classical RK4 with the control held over each (sub)step.  For
feedbacks built on the homogeneous norm the step is subdivided so that the
hold time stays a small fraction of the local time scale ``||x/r||_d``.
Near the origin the state is clamped to exactly zero (sliding mode of the
set-valued feedback); it leaves again only when the nominal control is
negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .errors import DivergenceDetected, InvalidInput
from .homctl import HomDesign, build_hom_design, in_cone_omega_r, phi, u_hom, u_mixed
from .linctl import LinearDesign, build_linear_design, in_cone_omega, select_lambda
from .safety import FilterConfig, apply, in_theta, updated_radius

CONTROLLERS = ("nominal", "linear", "homogeneous", "mixed", "filtered")
OVERRIDE_TOL = 1e-9
DIVERGENCE_BOUND = 1e12
SUBSTEP_KAPPA = 0.02
MIN_SUBSTEP = 1e-9


@dataclass(frozen=True)
class Nominal:
    """Nominal control descriptor.

    ``kind`` is ``none``, ``preset``, ``constant`` or ``sinusoid``
    (``offset + amp * sin(freq * t)``, ``freq`` in rad/s).
    """

    kind: str = "none"
    preset: Optional[str] = None
    value: float = 0.0
    amp: float = 0.0
    freq: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        for k in ("value", "amp", "freq", "offset"):
            object.__setattr__(self, k, float(getattr(self, k)))
        if self.kind not in ("none", "preset", "constant", "sinusoid"):
            raise InvalidInput(f"unknown nominal kind {self.kind!r}")
        if self.kind == "preset" and self.preset not in PRESETS:
            raise InvalidInput(f"unknown nominal preset {self.preset!r}; known: {sorted(PRESETS)}")

    def __call__(self, t: float, x) -> float:
        if self.kind == "none":
            return math.nan
        if self.kind == "constant":
            return self.value
        if self.kind == "sinusoid":
            return self.offset + self.amp * math.sin(self.freq * t)
        return PRESETS[self.preset](t, x)


def _paper_v_nominal(t: float, x) -> float:
    w = 0.5 * math.pi
    return -4.0 * (x[0] + math.sin(w * t) + 0.8) - 4.0 * (x[1] + w * math.cos(w * t))


PRESETS: dict = {
    "paperV": _paper_v_nominal,
    "zero": lambda t, x: 0.0,
    "push": lambda t, x: 10.0,
}


@dataclass(frozen=True)
class Scenario:
    n: int
    x0: tuple
    controller: str = "filtered"
    filter: FilterConfig = field(default_factory=FilterConfig)
    nominal: Nominal = field(default_factory=Nominal)
    lam: Optional[float] = None
    T: Optional[float] = None
    r: Optional[float] = None
    alpha: Optional[float] = None
    t_end: float = 10.0
    dt: float = 1e-3
    eps_origin: float = 1e-6
    inv_slack: float = 1e-10

    def __post_init__(self):
        x0 = tuple(float(v) for v in self.x0)
        object.__setattr__(self, "x0", x0)
        for k in ("lam", "T", "r", "alpha", "t_end", "dt", "eps_origin", "inv_slack"):
            v = getattr(self, k)
            if v is not None:
                object.__setattr__(self, k, float(v))
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInput(f"order must be a positive integer, got {self.n!r}")
        if len(x0) != self.n:
            raise InvalidInput(f"x0 has {len(x0)} entries, expected {self.n}")
        if not all(math.isfinite(v) for v in x0):
            raise InvalidInput("x0 must be finite")
        if self.controller not in CONTROLLERS:
            raise InvalidInput(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        if not self.dt > 0.0 or not self.t_end > 0.0 or not self.eps_origin > 0.0:
            raise InvalidInput("dt, t_end and eps_origin must be positive")
        if self.T is not None and not self.T > 0.0:
            raise InvalidInput("T must be positive")
        if self.r is not None and not self.r > 0.0:
            raise InvalidInput("r must be positive")
        if self.controller in ("nominal", "filtered") and self.nominal.kind == "none":
            raise InvalidInput(f"controller {self.controller!r} needs a nominal control")

    @property
    def uses_hom(self) -> bool:
        if self.controller in ("homogeneous", "mixed"):
            return True
        return self.controller == "filtered" and self.filter.mode != "MinLinear"

    @property
    def adaptive_radius(self) -> bool:
        return self.controller == "filtered" and self.filter.mode == "FxTSf"


def paper_v_scenario(mode: str = "FxTSf", **kw) -> Scenario:
    """Double-integrator scenario with the periodic overshooting nominal."""
    opts = dict(
        n=2,
        x0=(-4.0, 2.0),
        controller="filtered",
        filter=FilterConfig(mode="FxTSf" if mode == "off" else mode),
        nominal=Nominal(kind="preset", preset="paperV"),
        lam=2.0,
        T=4.0,
        alpha=0.50125,
        t_end=12.0,
        dt=1e-3,
    )
    if mode == "off":
        opts["controller"] = "nominal"
    opts.update(kw)
    return Scenario(**opts)


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    u_nom: np.ndarray
    homnorm: np.ndarray
    r_t: np.ndarray
    phi: np.ndarray
    in_omega: np.ndarray
    in_omega_r: np.ndarray
    in_theta: np.ndarray
    override: np.ndarray
    at_origin: np.ndarray
    u_safe: np.ndarray
    xnorm: np.ndarray
    design: Optional[HomDesign] = None
    linear: Optional[LinearDesign] = None
    scenario: Optional[Scenario] = None
    substeps: int = 0
    violations: List[tuple] = field(default_factory=list)

    def __len__(self) -> int:
        return self.t.size


def design_for(s: Scenario):
    """Linear and homogeneous designs used by a scenario."""
    if s.lam is not None:
        lam = float(s.lam)
    elif s.x0[0] < 0.0:
        lam = select_lambda(np.array(s.x0))
    else:
        lam = 1.0
    lin = build_linear_design(s.n, lam)
    hom = build_hom_design(lin, T=s.T, r=1.0, alpha_override=s.alpha)
    if s.r is not None:
        r = float(s.r)
    else:
        r = max(s.filter.r_min, hom.scaled_norm(np.array(s.x0)))
    return lin, hom.with_radius(r)


class _Loop:
    def __init__(self, s: Scenario, lin: LinearDesign, hom: HomDesign):
        self.s = s
        self.lin = lin
        self.hom = hom
        self.cfg = s.filter
        self.r = hom.r
        if s.adaptive_radius:
            self.r = updated_radius(self.cfg, hom, self.cfg.r_min, np.array(s.x0))
        self.released = False
        self.es = math.exp(hom.s_tilde)

    def control(self, t, x):
        """``(u, u_nom, u_safe, at_origin, x)``; ``x`` is clamped at the origin."""
        s = self.s
        unom = s.nominal(t, x)
        if s.controller == "nominal":
            return unom, unom, math.nan, False, x
        if s.controller == "linear" or (s.controller == "filtered" and s.filter.mode == "MinLinear"):
            us = float(self.lin.K @ x)
            u = us if s.controller == "linear" else min(unom, us)
            return u, unom, us, False, x
        if self.hom.scaled_norm(x) <= s.eps_origin:
            pushing = math.isnan(unom) or unom >= 0.0
            # a state just released into the negative orthant is not pulled back
            if pushing or not (self.released and np.all(x <= 0.0)):
                x = np.zeros_like(x)
            if pushing:
                self.released = False
                return 0.0, unom, 0.0, True, x
            self.released = True
            return unom, unom, math.nan, False, x
        self.released = False
        if s.controller == "homogeneous":
            u = u_hom(self.hom, x, self.r)
            return u, unom, u, False, x
        if s.controller == "mixed":
            u = u_mixed(self.hom, x, self.r)
            return u, unom, u, False, x
        out = apply(self.cfg, self.hom, unom, x, self.r)
        return out.u, unom, out.u_safe, False, x

    def substep(self, x) -> float:
        if not self.s.uses_hom:
            return self.s.dt
        V = self.hom.hom_norm_r(x, self.r)
        if V == 0.0:
            return self.s.dt
        return max(MIN_SUBSTEP, SUBSTEP_KAPPA * V / (self.es * self.hom.lam))


def _record(tr_lists, t, x, u, unom, us, at0, loop: _Loop):
    hom, lin, r = loop.hom, loop.lin, loop.r
    V = hom.hom_norm_r(x, r)
    ph = phi(hom, x, r, V=V)
    in_om = in_cone_omega(lin, x)
    in_omr = in_cone_omega_r(hom, x, r, tol=loop.s.inv_slack)
    in_th = in_theta(hom, x, r) if in_omr else False
    ov = (not math.isnan(unom)) and abs(u - unom) > OVERRIDE_TOL
    for key, val in (
        ("t", t), ("x", np.array(x)), ("u", u), ("u_nom", unom), ("homnorm", V), ("r_t", r),
        ("phi", ph), ("in_omega", in_om), ("in_omega_r", in_omr), ("in_theta", in_th),
        ("override", ov), ("at_origin", at0), ("u_safe", us), ("xnorm", hom.scaled_norm(x)),
    ):
        tr_lists[key].append(val)


def integrate(s: Scenario, designs=None, record_every: int = 1) -> Trajectory:
    """Simulate ``s``; returns samples on the grid ``k * dt``."""
    lin, hom = designs if designs is not None else design_for(s)
    loop = _Loop(s, lin, hom)
    keys = ("t", "x", "u", "u_nom", "homnorm", "r_t", "phi", "in_omega", "in_omega_r",
            "in_theta", "override", "at_origin", "u_safe", "xnorm")
    rec = {k: [] for k in keys}
    x = np.array(s.x0, dtype=float)
    nsteps = int(round(s.t_end / s.dt))
    nsub = 0
    for k in range(nsteps + 1):
        t = k * s.dt
        u, unom, us, at0, x = loop.control(t, x)
        if s.adaptive_radius and not at0:
            loop.r = updated_radius(loop.cfg, hom, loop.r, x)
        if k % record_every == 0 or k == nsteps:
            _record(rec, t, x, u, unom, us, at0, loop)
        if k == nsteps:
            break
        # advance one grid step, subdividing for the homogeneous feedbacks
        tau = 0.0
        first = True
        while tau < s.dt * (1.0 - 1e-12):
            if not first:
                u, unom, us, at0, x = loop.control(t + tau, x)
            first = False
            h = min(s.dt - tau, loop.substep(x))
            if at0:
                # hold at the origin until the next grid point
                h = s.dt - tau
                x = np.zeros_like(x)
            else:
                x = kernels.rk4_chain_step(x, u, h)
            tau += h
            nsub += 1
            if not np.all(np.isfinite(x)) or np.abs(x).max() > DIVERGENCE_BOUND:
                raise DivergenceDetected(f"state diverged at t={t + tau:.6g}", t=t + tau)
            if s.adaptive_radius:
                loop.r = updated_radius(loop.cfg, hom, loop.r, x)
    arr = {k: np.array(v) for k, v in rec.items()}
    return Trajectory(**arr, design=hom, linear=lin, scenario=s, substeps=nsub)


def detect_settling(tr: Trajectory, eps: float) -> Optional[float]:
    """First recorded time after which ``||x||`` stays at or below ``eps``."""
    above = np.nonzero(tr.xnorm > eps)[0]
    if above.size == 0:
        return float(tr.t[0])
    last = above[-1]
    if last + 1 >= tr.t.size:
        return None
    return float(tr.t[last + 1])


def max_overshoot(tr: Trajectory) -> float:
    return float(tr.x[:, 0].max())


def _intervals(mask: np.ndarray, t: np.ndarray):
    out = []
    start = None
    for k, m in enumerate(mask):
        if m and start is None:
            start = k
        elif not m and start is not None:
            out.append((start, k - 1))
            start = None
    if start is not None:
        out.append((start, mask.size - 1))
    return out


def _first_origin(tr: Trajectory, k0: int) -> Optional[float]:
    hit = np.nonzero(tr.at_origin[k0:])[0]
    return float(tr.t[k0 + hit[0]]) if hit.size else None


def override_intervals(tr: Trajectory):
    """Maximal override intervals ``(start, end, reached_origin_at)``."""
    res = []
    for a, b in _intervals(tr.override, tr.t):
        res.append((float(tr.t[a]), float(tr.t[b]), _first_origin(tr, a)))
    return res


@dataclass
class RestraintEvent:
    start: float
    end: float
    bound: float
    reached: Optional[float]
    ok: bool


def pressure_intervals(tr: Trajectory):
    """Intervals where the nominal pushes at least as hard as the safe feedback."""
    mask = tr.at_origin | (tr.u_nom >= tr.u_safe)
    return _intervals(mask, tr.t)


def restraint_events(tr: Trajectory, fixed_time: bool, slack_steps: int = 10) -> List[RestraintEvent]:
    """Check the restraint-time bound on every pressure interval.

    The bound is ``||x(tau)/r||_d T`` (finite-time filter) or ``T`` (fixed
    time), plus ``slack_steps * dt``.  An interval that ends before its bound
    expires without reaching the origin is vacuous and passes.
    """
    dt = tr.scenario.dt
    T = tr.design.T
    out = []
    for a, b in pressure_intervals(tr):
        t0 = float(tr.t[a])
        base = T if fixed_time else tr.homnorm[a] * T
        bound = base + slack_steps * dt
        hit = np.nonzero(tr.at_origin[a : b + 1])[0]
        reached = float(tr.t[a + hit[0]]) if hit.size else None
        if reached is not None:
            ok = reached - t0 <= bound
        else:
            ok = float(tr.t[b]) - t0 < bound
        out.append(RestraintEvent(t0, float(tr.t[b]), bound, reached, ok))
    return out


def invariance_violations(tr: Trajectory, use_theta: bool = False) -> int:
    flags = tr.in_theta if use_theta else tr.in_omega_r
    return int(np.count_nonzero(~flags))


def lyapunov_rates(tr: Trajectory) -> np.ndarray:
    """Finite-difference rate of ``||x/r||_d`` between samples where ``u = u_h``."""
    V = tr.homnorm
    dt = np.diff(tr.t)
    rate = np.diff(V) / dt
    mask = (~tr.at_origin[:-1]) & (~tr.at_origin[1:]) & (np.abs(tr.u[:-1] - tr.u_safe[:-1]) <= OVERRIDE_TOL)
    mask &= tr.r_t[1:] == tr.r_t[:-1]
    return rate[mask]
