import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nonauto_slowfast.config import ConfigError, ScenarioConfig, dump_config, load_config, parse_config
from nonauto_slowfast.presets import PRESETS, apply_preset, get_preset

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-3, 10, allow_nan=False)

gamma_docs = st.one_of(
    st.builds(lambda s: {"kind": "quasiperiodic-sum", "scale": s}, finite),
    st.builds(lambda a: {"kind": "arctan", "amplitude": a}, positive),
    st.builds(lambda v: {"kind": "constant", "value": v}, finite),
    st.builds(lambda a, b: {"kind": "linear", "slope": a, "intercept": b}, finite, finite),
    st.lists(finite, min_size=2, max_size=5).map(
        lambda vs: {"kind": "table", "x": [float(i) for i in range(len(vs))], "values": vs}
    ),
)
docs = st.fixed_dictionaries(
    {
        "gamma": gamma_docs,
        "forcing": st.fixed_dictionaries(
            {"offset": finite, "terms": st.lists(st.fixed_dictionaries({"amplitude": finite, "frequency": positive}), max_size=3, unique_by=lambda t: t["frequency"])}
        ),
        "initial": st.fixed_dictionaries({"x0": st.lists(finite, min_size=1, max_size=1), "y0": st.lists(finite, min_size=1, max_size=1)}),
        "horizons": st.fixed_dictionaries({"t0": positive}),
        "epsilon_grid": st.lists(st.floats(1e-3, 1.0), min_size=1, max_size=4),
        "seed": st.integers(0, 2**31 - 1),
    }
)


@given(docs, st.sampled_from(["yaml", "json"]))
def test_round_trip(doc, fmt):
    import yaml

    cfg = parse_config(doc)
    text = dump_config(cfg, fmt)
    again = parse_config(json.loads(text) if fmt == "json" else yaml.safe_load(text))
    assert again == cfg
    # the resolved scenario is identical too
    a, b = cfg.build_scenario(), again.build_scenario()
    assert a.layer.forcing.to_dict() == b.layer.forcing.to_dict()
    assert a.gamma.to_dict() == b.gamma.to_dict()
    assert (a.x0, a.y0, a.t0, a.epsilons) == (b.x0, b.y0, b.t0, b.epsilons)


def test_defaults_are_canonical():
    cfg = parse_config({})
    sc = cfg.build_scenario()
    assert float(sc.forcing(np.zeros(2), 0.0)) == pytest.approx(0.962)
    assert sc.t0 == 20.0
    assert cfg.seed == 42
    assert cfg.tracking.mode == "proxy"
    assert cfg.metric.mode == "torus-angle"


@pytest.mark.parametrize(
    "doc, path",
    [
        ({"foo": 1}, "foo"),
        ({"gamma": {"kind": "arctan", "amplitude": "x"}}, "gamma.arctan.amplitude"),
        ({"forcing": {"terms": [{"amplitude": 1, "frequency": 1, "kind": "tan"}]}}, "forcing.terms.0.kind"),
        ({"integrator": {"step": -1}}, "integrator.step"),
        ({"epsilon_grid": [2.0]}, "epsilon_grid"),
        ({"fiber": {"seed_lower": [0.0]}}, "fiber"),
        ({"gamma": {"kind": "table", "x": [1.0, 0.0], "values": [0.0, 1.0]}}, "gamma.table"),
    ],
)
def test_errors_name_field_path(doc, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config(doc)


def test_dimension_checks():
    with pytest.raises(ConfigError, match="theta0"):
        parse_config({"theta0": [0.0]})
    with pytest.raises(ConfigError, match="y0"):
        parse_config({"initial": {"y0": [1.0, 2.0]}})


def test_load_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("gamma:\n  kind: arctan\nhorizons:\n  t0: 5\n")
    cfg = load_config(p)
    assert cfg.horizons.t0 == 5.0 and cfg.gamma.kind == "arctan"
    j = tmp_path / "c.json"
    j.write_text(dump_config(cfg, "json"))
    assert load_config(j) == cfg
    with pytest.raises(ConfigError, match="missing.yaml"):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)
    broken = tmp_path / "broken.yaml"
    broken.write_text("a: [1,\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        load_config(broken)


def test_builders():
    cfg = parse_config({"fiber": {"seed_lower": [0.0], "seed_upper": [2.0], "spacing": 0.5}, "seed": 7})
    box = cfg.build_seeds()
    assert len(box.points()) == 5 and box.relative
    assert cfg.build_sampler().seed == 7
    assert parse_config({}).build_seeds() is None
    ts = parse_config({"gamma": {"kind": "arctan"}}).build_transition()
    assert ts.limits == (-1.0, 1.0)
    assert cfg.build_integrator().step == 0.01


def test_config_frozen():
    cfg = parse_config({})
    with pytest.raises(Exception):
        cfg.seed = 3


# -- presets ---------------------------------------------------------------------


def test_presets_exist():
    assert {"fig1", "fig2", "fig2-left", "fig2-right", "fig3"} <= set(PRESETS)
    assert get_preset("fig1").horizons.t0 == 100.0
    assert get_preset("fig2").epsilon_grid == [0.05, 0.2, 0.35, 0.5]
    assert get_preset("fig3").gamma.kind == "arctan"
    assert get_preset("fig3").epsilon_grid == [0.8]
    with pytest.raises(ConfigError):
        get_preset("fig9")


def test_preset_frozen_with_warning():
    with pytest.warns(UserWarning, match="horizons.t0"):
        cfg = apply_preset("fig2", {"horizons": {"t0": 5.0}, "output": {"dir": "x"}})
    assert cfg.horizons.t0 == 20.0
    assert cfg.output.dir == "x"


def test_preset_no_warning_without_conflict():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cfg = apply_preset("fig2", {"output": {"dir": "y"}})
    assert cfg.output.dir == "y"
    assert isinstance(cfg, ScenarioConfig)
