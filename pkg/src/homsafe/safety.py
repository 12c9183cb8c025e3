"""Safety filters wrapping a nominal control signal.

Modes:

* ``MinLinear``  ``min(u_nom, K x)``
* ``MinHom``     ``min(u_nom, u_h(x))`` (sufficient for n <= 2)
* ``FnTSf``      ``max(u_h - Delta_r, min(u_nom, u_h))`` with a fixed radius
* ``FxTSf``      same law with the radius adapted along the trajectory
* ``Mixed``      FnTSf around the mixed feedback, ``Delta = inf`` off the ball
  (no separate guarantee; experimental)
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateDenominator, InvalidCallOrder, InvalidInput, UndefinedAtOrigin
from .homctl import HomDesign, in_ball_br, in_cone_omega_r, phi, u_hom, u_mixed

MODES = ("MinLinear", "MinHom", "FnTSf", "FxTSf", "Mixed")
DEN_TOL = 1e-14


@dataclass(frozen=True)
class FilterConfig:
    mode: str = "FnTSf"
    c: Optional[Sequence[float]] = None  # c_2..c_{n-1}; default all ones
    r_min: float = 1e-3
    delta_cap: float = 1e9

    def __post_init__(self):
        object.__setattr__(self, "r_min", float(self.r_min))
        object.__setattr__(self, "delta_cap", float(self.delta_cap))
        if self.mode not in MODES:
            raise InvalidInput(f"unknown filter mode {self.mode!r}; expected one of {MODES}")
        if not self.r_min > 0.0:
            raise InvalidInput("r_min must be positive")
        if not self.delta_cap >= 1e6:
            raise InvalidInput("delta_cap must be at least 1e6")
        if self.c is not None:
            c = tuple(float(v) for v in self.c)
            if any(not v > 0.0 for v in c):
                raise InvalidInput("override margin constants must be positive")
            object.__setattr__(self, "c", c)

    def c_i(self, i: int) -> float:
        """Constant for 1-based index ``i`` (2 <= i <= n-1)."""
        if self.c is None:
            return 1.0
        k = i - 2
        if k >= len(self.c):
            raise InvalidInput(f"no override constant for index {i}")
        return self.c[k]


@dataclass(frozen=True)
class FilterState:
    running_radius: float
    t: Optional[float] = None
    override_log: tuple = field(default=(), compare=False)


@dataclass(frozen=True)
class GammaPair:
    gamma_r: float
    gamma_u: float
    den: float


def gammas(d: HomDesign, x, r=None, ph=None) -> GammaPair:
    r = d.r if r is None else r
    if ph is None:
        x = np.asarray(x, dtype=float)
        if not np.any(x):
            raise UndefinedAtOrigin("barrier ratios are undefined at the origin")
        ph = phi(d, x, r)
    # ratios are dilation-free in phi, so normalise for conditioning
    w = ph / r
    Pw = d.Ptilde @ w
    den = float(Pw @ (d.M @ w))
    if den <= DEN_TOL:
        raise DegenerateDenominator(f"barrier denominator {den:.3e} is not positive")
    lamIA = d.lam * w - np.append(w[1:], 0.0)
    gr = float(Pw @ lamIA) / den
    gu = float(Pw[-1]) / den / r
    return GammaPair(gr, gu, den)


def _delta_raw(cfg: FilterConfig, d: HomDesign, x, r) -> float:
    n = d.n
    if n <= 2:
        return math.inf
    x = np.asarray(x, dtype=float)
    if not in_cone_omega_r(d, x, r):
        return math.inf
    ph = phi(d, x, r)
    try:
        g = gammas(d, x, r, ph=ph)
    except DegenerateDenominator:
        return math.inf
    if g.gamma_u <= DEN_TOL / r:
        return math.inf
    best = math.inf
    for i in range(2, n):
        den = d.lam * (i - 1) * g.gamma_u * ph[i - 2]
        if ph[i - 2] <= DEN_TOL * r:
            continue
        best = min(best, (cfg.c_i(i) * ph[i - 1] + ph[i]) / den)
    if math.isinf(best):
        return math.inf
    return g.gamma_r / g.gamma_u + best


def delta_r(cfg: FilterConfig, d: HomDesign, x, r=None) -> float:
    """Override margin; ``+inf`` is returned as ``cfg.delta_cap``."""
    r = d.r if r is None else r
    v = _delta_raw(cfg, d, x, r)
    return cfg.delta_cap if v > cfg.delta_cap else v


def filter_min(u_nom: float, u_safe: float) -> float:
    return min(u_nom, u_safe)


def filter_fntsf(cfg: FilterConfig, d: HomDesign, u_nom: float, x, r=None) -> float:
    uh = u_hom(d, x, r)
    return max(uh - delta_r(cfg, d, x, r), min(u_nom, uh))


def updated_radius(cfg: FilterConfig, d: HomDesign, previous: float, x) -> float:
    """``max(previous, r_min, ||d(-s~) x||)``."""
    x = np.asarray(x, dtype=float)
    cur = d.scaled_norm(d.dilation(-d.s_tilde, x))
    return max(previous, cfg.r_min, cur)


def initial_state(cfg: FilterConfig, d: HomDesign, x0=None) -> FilterState:
    r = cfg.r_min
    if x0 is not None:
        r = updated_radius(cfg, d, r, x0)
    return FilterState(running_radius=r)


def filter_fxtsf(cfg: FilterConfig, d: HomDesign, state: FilterState, u_nom: float, x, t: float):
    if state.t is not None and t < state.t:
        raise InvalidCallOrder(f"time went backwards: {t} < {state.t}")
    r = updated_radius(cfg, d, state.running_radius, x)
    new_state = dataclasses.replace(state, running_radius=r, t=float(t))
    return filter_fntsf(cfg, d, u_nom, x, r), new_state


def in_theta(d: HomDesign, x, r=None) -> bool:
    return in_cone_omega_r(d, x, r) and in_ball_br(d, x, r)


@dataclass
class FilterOutput:
    u: float
    u_safe: float  # u_h (or K x for the linear min filter)
    delta: float


def apply(cfg: FilterConfig, d: HomDesign, u_nom: float, x, r) -> FilterOutput:
    """Evaluate the configured law at a non-zero state for a given radius."""
    x = np.asarray(x, dtype=float)
    mode = cfg.mode
    if mode == "MinLinear":
        us = float(d.base.K @ x)
        return FilterOutput(filter_min(u_nom, us), us, math.inf)
    if mode == "MinHom":
        us = u_hom(d, x, r)
        return FilterOutput(filter_min(u_nom, us), us, math.inf)
    if mode == "Mixed":
        us = u_mixed(d, x, r)
        if d.hom_norm_r(x, r) > math.exp(d.s_tilde):
            return FilterOutput(min(u_nom, us), us, math.inf)
        dl = delta_r(cfg, d, x, r)
        return FilterOutput(max(us - dl, min(u_nom, us)), us, dl)
    us = u_hom(d, x, r)
    dl = delta_r(cfg, d, x, r)
    return FilterOutput(max(us - dl, min(u_nom, us)), us, dl)


def b_terms(cfg: FilterConfig, d: HomDesign, x, r, u: float, uh: float) -> np.ndarray:
    """``b_i`` (i = 2..n-1) of the componentwise barrier dynamics."""
    ph = phi(d, x, r)
    g = gammas(d, x, r, ph=ph)
    gf = g.gamma_r - g.gamma_u * (uh - u)
    out = [
        ph[i] + cfg.c_i(i) * ph[i - 1] + d.lam * (i - 1) * gf * ph[i - 2]
        for i in range(2, d.n)
    ]
    return np.array(out)
