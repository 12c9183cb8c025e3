"""Scenario files: TOML in, deterministic TOML (or JSON) out."""

from __future__ import annotations

import json
import math
import sys

from .errors import HomsafeError, ScenarioParseError
from .safety import FilterConfig
from .sim import Nominal, Scenario

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

TOP_KEYS = ("n", "x0", "controller", "lam", "T", "r", "alpha", "t_end", "dt", "eps_origin", "inv_slack")
FILTER_KEYS = ("mode", "c", "r_min", "delta_cap")
SINUSOID_KEYS = ("amp", "freq", "offset")


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioParseError(f"field {where!r}: expected a number, got {type(v).__name__}")
    return float(v)


def _num_list(v, where):
    if not isinstance(v, list):
        raise ScenarioParseError(f"field {where!r}: expected a list of numbers")
    return [_num(e, f"{where}[{i}]") for i, e in enumerate(v)]


def _check_keys(table, allowed, where):
    for k in table:
        if k not in allowed:
            raise ScenarioParseError(f"unknown field {where + k!r}")


def from_dict(doc: dict) -> Scenario:
    _check_keys(doc, TOP_KEYS + ("filter", "nominal"), "")
    if "n" not in doc or "x0" not in doc:
        raise ScenarioParseError("fields 'n' and 'x0' are required")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int):
        raise ScenarioParseError("field 'n': expected an integer")
    kw = {"n": n, "x0": tuple(_num_list(doc["x0"], "x0"))}
    if "controller" in doc:
        if not isinstance(doc["controller"], str):
            raise ScenarioParseError("field 'controller': expected a string")
        kw["controller"] = doc["controller"]
    for k in ("lam", "T", "r", "alpha", "t_end", "dt", "eps_origin", "inv_slack"):
        if k in doc:
            kw[k] = _num(doc[k], k)
    ft = doc.get("filter", {})
    if not isinstance(ft, dict):
        raise ScenarioParseError("field 'filter' must be a table")
    _check_keys(ft, FILTER_KEYS, "filter.")
    fkw = {}
    if "mode" in ft:
        fkw["mode"] = str(ft["mode"])
    if "c" in ft:
        fkw["c"] = tuple(_num_list(ft["c"], "filter.c"))
    for k in ("r_min", "delta_cap"):
        if k in ft:
            fkw[k] = _num(ft[k], f"filter.{k}")
    nt = doc.get("nominal", {})
    if not isinstance(nt, dict):
        raise ScenarioParseError("field 'nominal' must be a table")
    _check_keys(nt, ("preset", "constant", "sinusoid"), "nominal.")
    if len(nt) > 1:
        raise ScenarioParseError("nominal: give exactly one of preset, constant, sinusoid")
    if "preset" in nt:
        nom = Nominal(kind="preset", preset=str(nt["preset"]))
    elif "constant" in nt:
        nom = Nominal(kind="constant", value=_num(nt["constant"], "nominal.constant"))
    elif "sinusoid" in nt:
        st = nt["sinusoid"]
        if not isinstance(st, dict):
            raise ScenarioParseError("field 'nominal.sinusoid' must be a table")
        _check_keys(st, SINUSOID_KEYS, "nominal.sinusoid.")
        skw = {k: _num(st[k], f"nominal.sinusoid.{k}") for k in SINUSOID_KEYS if k in st}
        nom = Nominal(kind="sinusoid", **skw)
    else:
        nom = Nominal()
    try:
        return Scenario(filter=FilterConfig(**fkw), nominal=nom, **kw)
    except HomsafeError as exc:
        raise ScenarioParseError(str(exc)) from None


def parse(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioParseError(f"syntax error: {exc}") from None
    return from_dict(doc)


def load(path) -> Scenario:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ScenarioParseError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


def _fmt(v) -> str:
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(e) for e in v) + "]"
    raise TypeError(f"cannot format {v!r}")


def to_dict(s: Scenario) -> dict:
    doc = {"n": s.n, "x0": list(s.x0), "controller": s.controller}
    for k in ("lam", "T", "r", "alpha"):
        v = getattr(s, k)
        if v is not None:
            doc[k] = v
    doc.update(t_end=s.t_end, dt=s.dt, eps_origin=s.eps_origin, inv_slack=s.inv_slack)
    f = s.filter
    fd = {"mode": f.mode}
    if f.c is not None:
        fd["c"] = list(f.c)
    fd.update(r_min=f.r_min, delta_cap=f.delta_cap)
    doc["filter"] = fd
    nm = s.nominal
    if nm.kind == "preset":
        doc["nominal"] = {"preset": nm.preset}
    elif nm.kind == "constant":
        doc["nominal"] = {"constant": nm.value}
    elif nm.kind == "sinusoid":
        doc["nominal"] = {"sinusoid": {"amp": nm.amp, "freq": nm.freq, "offset": nm.offset}}
    return doc


def dumps(s: Scenario) -> str:
    doc = to_dict(s)
    lines = [f"{k} = {_fmt(v)}" for k, v in doc.items() if not isinstance(v, dict)]
    lines.append("")
    lines.append("[filter]")
    lines += [f"{k} = {_fmt(v)}" for k, v in doc["filter"].items()]
    nom = doc.get("nominal")
    if nom:
        lines.append("")
        if "sinusoid" in nom:
            lines.append("[nominal.sinusoid]")
            lines += [f"{k} = {_fmt(v)}" for k, v in nom["sinusoid"].items()]
        else:
            lines.append("[nominal]")
            lines += [f"{k} = {_fmt(v)}" for k, v in nom.items()]
    return "\n".join(lines) + "\n"


def to_json(s: Scenario) -> str:
    return json.dumps(to_dict(s), indent=2, sort_keys=False)
