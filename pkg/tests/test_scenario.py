import json

import pytest
from hypothesis import given, settings, strategies as st

from homsafe import scenario, sim
from homsafe.errors import ScenarioParseError
from homsafe.safety import MODES, FilterConfig

PAPER_TOML = scenario.dumps(sim.paper_v_scenario("FxTSf"))


def test_reference_round_trip():
    assert scenario.dumps(scenario.parse(PAPER_TOML)) == PAPER_TOML
    assert "[nominal]\npreset = \"paperV\"" in PAPER_TOML


def test_minimal_document_defaults():
    s = scenario.parse('n = 2\nx0 = [-1, 0]\ncontroller = "homogeneous"\n')
    assert s.x0 == (-1.0, 0.0) and s.filter.mode == "FnTSf" and s.nominal.kind == "none"


@pytest.mark.parametrize(
    "text,msg",
    [
        ("n = 2\nx0 = [", "syntax error"),
        ("n = 2\nx0 = [-1.0, 0.0]\nfoo = 1\n", "unknown field 'foo'"),
        ("x0 = [-1.0]\n", "required"),
        ('n = 2\nx0 = [-1.0, "a"]\n', "x0[1]"),
        ("n = 2.5\nx0 = [-1.0, 0.0]\n", "integer"),
        ('n = 2\nx0 = [-1.0, 0.0]\n[filter]\nmode = "X"\n', "unknown filter mode"),
        ("n = 2\nx0 = [-1.0, 0.0]\n[nominal]\nconstant = 1\npreset = \"zero\"\n", "exactly one"),
        ("n = 2\nx0 = [-1.0, 0.0]\n[nominal.sinusoid]\nphase = 1\n", "nominal.sinusoid.phase"),
        ("n = 3\nx0 = [-1.0, 0.0]\n", "x0 has 2 entries"),
    ],
)
def test_parse_errors(text, msg):
    with pytest.raises(ScenarioParseError) as ei:
        scenario.parse(text)
    assert msg in str(ei.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(ScenarioParseError):
        scenario.load(tmp_path / "none.toml")


def test_json_export():
    doc = json.loads(scenario.to_json(sim.paper_v_scenario("MinLinear")))
    assert doc["filter"]["mode"] == "MinLinear" and doc["x0"] == [-4.0, 2.0]


finite = st.floats(-1e6, 1e6, allow_nan=False).filter(lambda v: v != 0.0)
pos = st.floats(1e-6, 1e3, allow_nan=False)


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 5))
    x0 = tuple(draw(st.lists(finite, min_size=n, max_size=n)))
    kind = draw(st.sampled_from(["preset", "constant", "sinusoid"]))
    if kind == "preset":
        nom = sim.Nominal(kind="preset", preset=draw(st.sampled_from(sorted(sim.PRESETS))))
    elif kind == "constant":
        nom = sim.Nominal(kind="constant", value=draw(finite))
    else:
        nom = sim.Nominal(kind="sinusoid", amp=draw(finite), freq=draw(pos), offset=draw(finite))
    c = draw(st.none() | st.lists(pos, min_size=1, max_size=3))
    filt = FilterConfig(mode=draw(st.sampled_from(MODES)), c=c, r_min=draw(pos))
    opt = st.none() | pos
    return sim.Scenario(
        n=n, x0=x0, controller=draw(st.sampled_from(sim.CONTROLLERS)), filter=filt, nominal=nom,
        lam=draw(opt), T=draw(opt), r=draw(opt), alpha=draw(opt), t_end=draw(pos), dt=draw(pos),
    )


@settings(max_examples=200, deadline=None)
@given(scenarios())
def test_round_trip_property(s):
    text = scenario.dumps(s)
    s2 = scenario.parse(text)
    assert s2 == s
    assert scenario.dumps(s2) == text
