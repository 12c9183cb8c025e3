"""Command line entry point: ``homsafe design|simulate|verify|region``.

Exit codes: 0 ok, 1 usage, 2 parse, 3 verification failure, 4 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from typing import Dict, List, Optional

import numpy as np

from . import acceptance, homctl, linctl, scenario, sim
from .safety import MODES
from .errors import DivergenceDetected, HomsafeError, InvalidInput, ScenarioParseError

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_VERIFY, EXIT_DIVERGED = 0, 1, 2, 3, 4

SIM_TOL_KEYS = ("eps_origin", "inv_slack", "slack_steps")
REGION_TOL_KEYS = ("cone", "ball")
DESIGN_TOL_KEYS = ("margin",)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _tols(items, allowed) -> Dict[str, float]:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects key=value, got {item!r}")
        if key not in allowed:
            raise UsageError(f"unknown tolerance {key!r}; known: {', '.join(allowed)}")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"tolerance {key!r}: {val!r} is not a number") from None
    return out


def _outdir(path: Optional[str]) -> Optional[str]:
    if path:
        os.makedirs(path, exist_ok=True)
    return path


def _emit(text: str, out: Optional[str], name: str):
    print(text)
    if out:
        with open(os.path.join(out, name), "w") as fh:
            fh.write(text + "\n")


def _fmt17(v) -> str:
    return format(float(v), ".17g")


# design ---------------------------------------------------------------------
def _design_obj(args):
    tols = _tols(args.tol, DESIGN_TOL_KEYS)
    x0 = np.array(args.x0) if args.x0 is not None else None
    n = args.n if args.n is not None else (x0.size if x0 is not None else None)
    if n is None:
        raise UsageError("give --n or --x0")
    if x0 is not None and x0.size != n:
        raise UsageError(f"--x0 has {x0.size} entries, expected {n}")
    if args.lam is not None:
        lam, source = float(args.lam), "given"
    elif x0 is not None:
        lam = linctl.select_lambda(x0, minimal=args.minimal_lambda)
        bound = linctl.lambda_lower_bound(x0)
        source = f"{'minimal feasible' if args.minimal_lambda else 'rounded up from'} lower bound {bound:.6g}"
    else:
        lam, source = 1.0, "default"
    base = linctl.build_linear_design(n, lam)
    d = homctl.build_hom_design(base, T=args.T, r=1.0, alpha_override=args.alpha, margin=tols.get("margin", 1e-10))
    r = args.r
    if r is None:
        r = max(1e-3, d.scaled_norm(x0)) if x0 is not None else 1.0
    d = d.with_radius(r)
    return d, lam, source


def cmd_design(args) -> int:
    d, lam, source = _design_obj(args)
    info = {
        "n": d.n,
        "lambda": lam,
        "lambda_source": source,
        "K": [float(v) for v in d.base.K],
        "K_tilde": [float(v) for v in d.K_tilde],
        "Ptilde": d.Ptilde.tolist(),
        "Ptilde_diagonal": d.diagonal,
        "P": d.P.tolist(),
        "rho": d.rho,
        "s_tilde": d.s_tilde,
        "T": d.T,
        "r": d.r,
        "u_bound": d.u_bound(),
        "margins": dict(d.margins),
    }
    if args.json:
        _emit(json.dumps(info, indent=2), args.out, "design.json")
        return EXIT_OK
    lines = [
        f"n            {d.n}",
        f"lambda       {lam:.6g} ({source})",
        f"K            {np.array2string(d.base.K, precision=6)}",
        f"K~           {np.array2string(d.K_tilde, precision=6)}",
        f"P~ ({'diagonal' if d.diagonal else 'full'})",
        np.array2string(d.Ptilde, precision=6),
        f"rho          {d.rho:.6g}",
        f"s~           {d.s_tilde:.6g}",
        f"T            {d.T:.6g}",
        f"r            {d.r:.6g}",
        f"|u_h| <=     {d.u_bound():.6g}",
        "margins      " + ", ".join(f"{k}={v:.3e}" for k, v in d.margins.items()),
    ]
    _emit("\n".join(lines), args.out, "design.txt")
    if args.out:
        with open(os.path.join(args.out, "design.json"), "w") as fh:
            json.dump(info, fh, indent=2)
    return EXIT_OK


# simulate -------------------------------------------------------------------
def csv_header(n: int) -> str:
    cols = ["t"] + [f"x{i}" for i in range(1, n + 1)] + ["u", "u_nom", "homnorm", "r_t"]
    cols += [f"phi{i}" for i in range(1, n + 1)]
    cols += ["in_omega", "in_omega_r", "in_theta", "override", "at_origin"]
    return ",".join(cols)


def write_csv(tr: sim.Trajectory, path: str):
    n = tr.x.shape[1]
    with open(path, "w") as fh:
        fh.write(csv_header(n) + "\n")
        for k in range(len(tr)):
            row = [_fmt17(tr.t[k])] + [_fmt17(v) for v in tr.x[k]]
            row += [_fmt17(tr.u[k]), _fmt17(tr.u_nom[k]), _fmt17(tr.homnorm[k]), _fmt17(tr.r_t[k])]
            row += [_fmt17(v) for v in tr.phi[k]]
            row += [str(int(bool(f[k]))) for f in (tr.in_omega, tr.in_omega_r, tr.in_theta, tr.override, tr.at_origin)]
            fh.write(",".join(row) + "\n")


def summarize(tr: sim.Trajectory, slack_steps: int = 10) -> dict:
    s = tr.scenario
    fixed = s.adaptive_radius
    events = sim.restraint_events(tr, fixed_time=fixed, slack_steps=slack_steps) if s.uses_hom else []
    settle = sim.detect_settling(tr, s.eps_origin)
    return {
        "samples": len(tr),
        "settling_time": settle,
        "max_x1": sim.max_overshoot(tr),
        "final_norm": float(tr.xnorm[-1]),
        "override_intervals": [
            {"start": a, "end": b, "origin_at": c} for a, b, c in sim.override_intervals(tr)
        ],
        "restraint_checks": [
            {"start": e.start, "end": e.end, "bound": e.bound, "reached": e.reached, "ok": e.ok} for e in events
        ],
        "omega_r_violations": sim.invariance_violations(tr),
        "theta_violations": sim.invariance_violations(tr, use_theta=True),
        "design": {"lambda": tr.linear.lam, "rho": tr.design.rho, "T": tr.design.T, "s_tilde": tr.design.s_tilde},
    }


def _summary_text(sm: dict) -> str:
    st = sm["settling_time"]
    lines = [
        f"samples            {sm['samples']}",
        f"settling time      {'not settled' if st is None else f'{st:.4f}'}",
        f"max x1             {sm['max_x1']:+.6e}",
        f"final ||x||        {sm['final_norm']:.3e}",
        f"design             lambda={sm['design']['lambda']:.6g} rho={sm['design']['rho']:.6g} "
        f"T={sm['design']['T']:.6g} s~={sm['design']['s_tilde']:.6g}",
        f"override intervals {len(sm['override_intervals'])}",
    ]
    for iv in sm["override_intervals"]:
        hit = "never" if iv["origin_at"] is None else f"{iv['origin_at']:.4f}"
        lines.append(f"  [{iv['start']:.4f}, {iv['end']:.4f}] origin reached at {hit}")
    checks = sm["restraint_checks"]
    lines.append(f"restraint checks   {sum(c['ok'] for c in checks)}/{len(checks)} ok")
    for c in checks:
        if not c["ok"]:
            lines.append(f"  FAILED from {c['start']:.4f}: bound {c['bound']:.4f}, reached {c['reached']}")
    lines.append(f"violations         Omega_r {sm['omega_r_violations']}, Theta {sm['theta_violations']}")
    return "\n".join(lines)


def _load_scenario(args) -> sim.Scenario:
    if args.scenario and args.preset:
        raise UsageError("give either a scenario file or --preset, not both")
    if args.scenario:
        s = scenario.load(args.scenario)
    elif args.preset == "paperV":
        s = sim.paper_v_scenario(args.mode or "FxTSf")
    else:
        raise UsageError("a scenario file or --preset is required")
    return s


def cmd_simulate(args) -> int:
    tols = _tols(args.tol, SIM_TOL_KEYS)
    s = _load_scenario(args)
    kw = {}
    if args.mode and args.scenario:
        kw["filter"] = dataclasses.replace(s.filter, mode=args.mode)
    if args.t_end is not None:
        kw["t_end"] = args.t_end
    for k in ("eps_origin", "inv_slack"):
        if k in tols:
            kw[k] = tols[k]
    if kw:
        s = dataclasses.replace(s, **kw)
    out = _outdir(args.out or "homsafe_run")
    with open(os.path.join(out, "scenario.toml"), "w") as fh:
        fh.write(scenario.dumps(s))
    try:
        tr = sim.integrate(s, record_every=args.every)
    except DivergenceDetected as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    write_csv(tr, os.path.join(out, "trajectory.csv"))
    sm = summarize(tr, slack_steps=int(tols.get("slack_steps", 10)))
    with open(os.path.join(out, "summary.json"), "w") as fh:
        json.dump(sm, fh, indent=2)
    _emit(_summary_text(sm), out, "summary.txt")
    print(f"wrote {os.path.join(out, 'trajectory.csv')}")
    return EXIT_OK


# verify ---------------------------------------------------------------------
def cmd_verify(args) -> int:
    tols = dict(acceptance.DEFAULT_TOLS)
    tols.update(_tols(args.tol, tuple(acceptance.DEFAULT_TOLS)))
    only = None
    if args.only:
        try:
            only = sorted({int(v) for v in args.only.split(",")})
        except ValueError:
            raise UsageError(f"--only expects criterion numbers, got {args.only!r}") from None
        bad = [c for c in only if c not in acceptance.CRITERIA]
        if bad:
            raise UsageError(f"no such criterion: {bad}")
    ctx = acceptance.Context(tols=tols, fault=args.inject_fault, quick=args.quick, seed=args.seed)
    results = acceptance.run_all(ctx, only=only, echo=print)
    failed = [r for r in results if not r.passed]
    if args.tol:
        print("margins:")
        for r in results:
            print(f"  [{r.cid:2d}] " + ", ".join(f"{k}={v:.3e}" for k, v in r.margins.items()))
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print("failed: " + ", ".join(f"[{r.cid}] {r.name}" for r in failed))
    out = _outdir(args.out)
    if out:
        rep = [
            {"id": r.cid, "name": r.name, "passed": r.passed, "detail": r.detail, "elapsed": r.elapsed, "margins": r.margins}
            for r in results
        ]
        with open(os.path.join(out, "verify.json"), "w") as fh:
            json.dump(rep, fh, indent=2, default=float)
    return EXIT_VERIFY if failed else EXIT_OK


# region ---------------------------------------------------------------------
def parse_grid(text: str):
    """``x1min:x1max:N,x2min:x2max:M`` -> two 1-D axes."""
    axes = []
    for part in text.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise UsageError(f"grid axis {part!r} must be lo:hi:count")
        try:
            lo, hi, cnt = float(bits[0]), float(bits[1]), int(bits[2])
        except ValueError:
            raise UsageError(f"grid axis {part!r} must be lo:hi:count") from None
        if cnt < 0 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise UsageError(f"grid axis {part!r}: count must be >= 0 and bounds finite")
        axes.append(np.linspace(lo, hi, cnt))
    if len(axes) != 2:
        raise UsageError("grid needs exactly two axes (x1 and x2)")
    return axes


def region_points(d: homctl.HomDesign, axes, cone_tol=homctl.CONE_TOL, ball_tol=homctl.BALL_TOL):
    rows = []
    for x1 in axes[0]:
        for x2 in axes[1]:
            x = np.zeros(d.n)
            x[0], x[1] = x1, x2
            om = linctl.in_cone_omega(d.base, x)
            omr = homctl.in_cone_omega_r(d, x, d.r, tol=cone_tol)
            ball = homctl.in_ball_br(d, x, d.r, tol=ball_tol)
            rows.append((x1, x2, om, omr, ball))
    return rows


def cmd_region(args) -> int:
    tols = _tols(args.tol, REGION_TOL_KEYS)
    axes = parse_grid(args.grid)
    if args.preset == "paperV":
        lin, d = sim.design_for(sim.paper_v_scenario("FxTSf"))
        if args.r is not None:
            d = d.with_radius(args.r)
    else:
        d, _, _ = _design_obj(args)
    if d.n < 2:
        raise UsageError("region needs n >= 2")
    rows = region_points(
        d, axes, cone_tol=tols.get("cone", homctl.CONE_TOL), ball_tol=tols.get("ball", homctl.BALL_TOL)
    )
    out = _outdir(args.out or "homsafe_region")
    path = os.path.join(out, "region.csv")
    with open(path, "w") as fh:
        if rows:
            fh.write("x1,x2,in_omega,in_omega_r,in_ball\n")
            for x1, x2, om, omr, ball in rows:
                fh.write(f"{_fmt17(x1)},{_fmt17(x2)},{int(om)},{int(omr)},{int(ball)}\n")
    contain_bad = sum(1 for r in rows if r[2] and r[4] and not r[3])
    halfspace_bad = sum(1 for r in rows if (r[2] or r[3]) and r[0] > 0.0)
    n_om = sum(r[2] for r in rows)
    n_omr = sum(r[3] and r[4] for r in rows)
    n_omb = sum(r[2] and r[4] for r in rows)
    lines = [
        f"grid points                 {len(rows)}",
        f"in Omega                    {n_om}",
        f"in Omega and B_r            {n_omb}",
        f"in Omega_r and B_r          {n_omr}",
        f"containment violations      {contain_bad}",
        f"members with x1 > 0         {halfspace_bad}",
        f"wrote {path}",
    ]
    _emit("\n".join(lines), out, "region.txt")
    return EXIT_VERIFY if contain_bad or halfspace_bad else EXIT_OK


# ----------------------------------------------------------------------------
def _design_args(p):
    p.add_argument("--n", type=int, help="chain order")
    p.add_argument("--x0", type=_floats, help="initial state, used to pick lambda and r")
    p.add_argument("--lam", type=float, help="linear design parameter lambda")
    p.add_argument("--minimal-lambda", action="store_true", help="bisect to the smallest feasible lambda")
    p.add_argument("--T", type=float, help="settling-time bound to assign")
    p.add_argument("--r", type=float, help="radius of the cone/ball")
    p.add_argument("--alpha", type=float, help="override the n=2 shape parameter")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="homsafe", description="Homogeneous nonovershooting control and safety filters.")
    sub = ap.add_subparsers(dest="cmd", parser_class=_Parser)
    sub.required = True

    def common(p):
        p.add_argument("--out", help="output directory")
        p.add_argument("--tol", action="append", metavar="KEY=VALUE", help="tolerance override (repeatable)")

    p = sub.add_parser("design", help="compute linear and homogeneous designs")
    _design_args(p)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    common(p)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("simulate", help="simulate a scenario and write a trajectory CSV")
    p.add_argument("scenario", nargs="?", help="scenario TOML file")
    p.add_argument("--preset", choices=("paperV",), help="built-in double-integrator scenario")
    p.add_argument("--mode", choices=("off",) + MODES, help="filter mode (off = raw nominal)")
    p.add_argument("--t-end", type=float, dest="t_end", help="override the final time")
    p.add_argument("--every", type=int, default=1, help="record every k-th grid step")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--only", help="comma separated criterion numbers")
    p.add_argument("--quick", action="store_true", help="fewer random samples")
    p.add_argument("--seed", type=int, default=20240501)
    p.add_argument("--inject-fault", choices=("lmi",), help="negative control: break the LMI certificate")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("region", help="rasterize Omega, Omega_r and B_r membership")
    p.add_argument("--grid", required=True, help="x1min:x1max:N,x2min:x2max:M")
    p.add_argument("--preset", choices=("paperV",), help="use the double-integrator scenario design")
    _design_args(p)
    common(p)
    p.set_defaults(func=cmd_region)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "every", 1) < 1:
        ap.error("--every must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"homsafe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioParseError as exc:
        print(f"homsafe: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivergenceDetected as exc:
        print(f"homsafe: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (InvalidInput, ValueError) as exc:
        print(f"homsafe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HomsafeError as exc:
        print(f"homsafe: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
