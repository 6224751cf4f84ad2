import pytest

from apdaloc.config import ExperimentConfig, FilterConfig, Variant, parse_variant
from apdaloc.filter import VARIANTS, FilterFeatures
from apdaloc.simulator import OlosWindow, ScenarioConfig


def test_defaults():
    cfg = ExperimentConfig()
    assert [v.label for v in cfg.variants] == ["AL1", "AL2", "AL3", "AL4", "AL5"]
    assert cfg.runs == 500
    assert cfg.filter.r_init == 30_000 and cfg.filter.r_track == 1000
    assert cfg.filter.q_fixed == 0.999 and cfg.filter.sigma_const == 0.1
    assert cfg.scenario.n_steps == 400


def test_yaml_roundtrip(tmp_path):
    cfg = ExperimentConfig(
        scenario=ScenarioConfig(clutter_rate=3.0, olos_windows=(OlosWindow((2,), 1.0, 2.0),)),
        filter=FilterConfig(r_init=500, r_track=100, sigma_a=0.7),
        variants=("AL2", {"label": "mine", "track_q": True, "use_amplitude": False, "nonuniform_nlos": True, "crlb_sigma": False}),
        runs=7,
        seed=42,
    )
    path = tmp_path / "cfg.yaml"
    cfg.save(path)
    back = ExperimentConfig.load(path)
    assert back == cfg
    assert back.to_yaml() == cfg.to_yaml()


def test_manifest_is_loadable():
    cfg = ExperimentConfig(runs=3)
    manifest = {"config": cfg.to_dict(), "build": {"git": "x"}}
    assert ExperimentConfig.from_dict(manifest) == cfg


def test_partial_file_uses_defaults():
    cfg = ExperimentConfig.from_yaml("runs: 4\nscenario:\n  clutter_rate: 0\nfilter:\n  r_u: 20\n")
    assert cfg.runs == 4 and cfg.scenario.clutter_rate == 0.0 and cfg.filter.r_u == 20
    assert cfg.scenario.olos_windows == ScenarioConfig().olos_windows


@pytest.mark.parametrize(
    "text",
    ["bogus: 1\n", "scenario:\n  colour: red\n", "filter:\n  r_track: 5\n  r_init: 2\n", "runs: 0\n", "variants: [AL7]\n"],
)
def test_invalid_configs(text):
    with pytest.raises(ValueError):
        ExperimentConfig.from_yaml(text)


def test_parse_variant():
    assert parse_variant("al4") == Variant("AL4", VARIANTS["AL4"])
    assert parse_variant(FilterFeatures()).label == "AL5"
    assert parse_variant(FilterFeatures(False, True, False, True), 3).label == "custom3"
    with pytest.raises(ValueError):
        parse_variant(3.5)
    with pytest.raises(ValueError):
        ExperimentConfig(variants=("AL1", "AL1"))
