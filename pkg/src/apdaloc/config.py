"""Experiment configuration and its YAML representation.

Layout of a config file (every key optional; omitted keys take the defaults
shown by ``apdaloc config``)::

    runs: 500
    seed: 0
    workers: 1
    output: results
    variants: [AL1, AL2, AL3, AL4, AL5]
    scenario:
      anchors: [[-1.5, -0.6], [1.5, -0.6], [0.0, 1.2]]
      duration: 20.0
      ...
      nlos: {p_mp: 0.9, gamma_r: 1.5, gamma_f: 6.0, bias_b: 0.2, d_max: 50.0}
      olos_windows:
        - {anchors: [1], start: 6.0, end: 8.0}
    filter:
      r_init: 30000
      ...

A variant entry is either a name ``AL1``..``AL5`` or a mapping with the four
feature flags and an optional ``label``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .filter import VARIANTS, FilterFeatures, FilterSettings
from .motion import AmplitudeWalk, KinematicModel
from .simulator import OlosWindow, ScenarioConfig
from .types import AmplitudeParams, NlosParams


@dataclass(frozen=True)
class FilterConfig:
    r_init: int = 30_000  # acquisition margin; see README
    r_track: int = 1000
    r_u: int = 1000
    sigma_a: float = 3.0  # inflated for the particle approximation; see README
    sigma_u: float = 0.2
    gamma: float = 0.0
    u_max: float = 40.0
    q_fixed: float = 0.999
    sigma_const: float = 0.1
    resample_threshold: float = 0.5
    xi_floor: float = 1e-300

    def __post_init__(self):
        if not 1 <= self.r_track <= self.r_init or self.r_u < 1:
            raise ValueError("need 1 <= r_track <= r_init and r_u >= 1")
        if not 0 < self.q_fixed <= 1 or self.sigma_const <= 0:
            raise ValueError("q_fixed must lie in (0, 1] and sigma_const be positive")

    @property
    def amplitude(self) -> AmplitudeParams:
        return AmplitudeParams(self.gamma, self.u_max)

    @property
    def settings(self) -> FilterSettings:
        return FilterSettings(self.q_fixed, self.sigma_const, self.resample_threshold, self.xi_floor)

    def kinematics(self, dt: float) -> KinematicModel:
        return KinematicModel(dt, self.sigma_a)

    @property
    def amplitude_walk(self) -> AmplitudeWalk:
        return AmplitudeWalk(self.sigma_u, self.u_max)


@dataclass(frozen=True)
class Variant:
    label: str
    features: FilterFeatures


def parse_variant(entry: Any, index: int = 0) -> Variant:
    if isinstance(entry, Variant):
        return entry
    if isinstance(entry, str):
        return Variant(entry.upper(), FilterFeatures.variant(entry))
    if isinstance(entry, FilterFeatures):
        return Variant(entry.name or f"custom{index}", entry)
    if isinstance(entry, dict):
        entry = dict(entry)
        label = entry.pop("label", None)
        flags = FilterFeatures(**{k: bool(v) for k, v in entry.items()})
        return Variant(label or flags.name or f"custom{index}", flags)
    raise ValueError(f"cannot interpret variant {entry!r}")


def _variant_to_yaml(v: Variant):
    if VARIANTS.get(v.label) == v.features:
        return v.label
    return {"label": v.label, **dataclasses.asdict(v.features)}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    variants: tuple[Variant, ...] = tuple(parse_variant(k) for k in VARIANTS)
    runs: int = 500
    seed: int = 0
    workers: int = 1
    output: str = "results"

    def __post_init__(self):
        object.__setattr__(self, "variants", tuple(parse_variant(v, i) for i, v in enumerate(self.variants)))
        labels = [v.label for v in self.variants]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate variant labels: {labels}")
        if self.runs < 1 or self.workers < 1:
            raise ValueError("runs and workers must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    # --- (de)serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        sc = self.scenario
        scenario = {
            "anchors": [list(a) for a in sc.anchors],
            "duration": sc.duration,
            "dt": sc.dt,
            "speed_nominal": sc.speed_nominal,
            "speed_variation": sc.speed_variation,
            "ramp_time": sc.ramp_time,
            "waypoints": [list(w) for w in sc.waypoints],
            "waypoint_jitter": sc.waypoint_jitter,
            "snr_ref_db": sc.snr_ref_db,
            "pathloss_exponent": sc.pathloss_exponent,
            "pathloss_domain": sc.pathloss_domain,
            "clutter_rate": sc.clutter_rate,
            "effective_bandwidth": sc.effective_bandwidth,
            "nlos": dataclasses.asdict(sc.nlos),
            "olos_windows": [
                {"anchors": list(w.anchors), "start": w.start, "end": w.end} for w in sc.olos_windows
            ],
        }
        return {
            "runs": self.runs,
            "seed": self.seed,
            "workers": self.workers,
            "output": self.output,
            "variants": [_variant_to_yaml(v) for v in self.variants],
            "scenario": scenario,
            "filter": dataclasses.asdict(self.filter),
        }

    @classmethod
    def from_dict(cls, data: dict | None) -> ExperimentConfig:
        data = dict(data or {})
        if "config" in data and isinstance(data["config"], dict):  # manifest file
            data = dict(data["config"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

        scen = dict(data.pop("scenario", None) or {})
        _check_keys(scen, {f.name for f in dataclasses.fields(ScenarioConfig)}, "scenario")
        if "nlos" in scen:
            scen["nlos"] = NlosParams(**_float_values(scen["nlos"]))
        if "olos_windows" in scen:
            scen["olos_windows"] = tuple(
                OlosWindow(tuple(w["anchors"]), float(w["start"]), float(w["end"])) for w in scen["olos_windows"] or ()
            )
        if "anchors" in scen and "olos_windows" not in scen:
            from .simulator import default_olos_windows

            scen["olos_windows"] = default_olos_windows(len(scen["anchors"]))
        for key in ("anchors", "waypoints"):
            if key in scen:
                scen[key] = tuple(tuple(float(c) for c in row) for row in scen[key])
        for key in list(scen):
            if key in _SCENARIO_FLOATS:
                scen[key] = float(scen[key])

        filt = dict(data.pop("filter", None) or {})
        _check_keys(filt, {f.name for f in dataclasses.fields(FilterConfig)}, "filter")
        for key in ("r_init", "r_track", "r_u"):
            if key in filt:
                filt[key] = int(filt[key])
        for key in list(filt):
            if key not in ("r_init", "r_track", "r_u"):
                filt[key] = float(filt[key])

        kwargs: dict[str, Any] = {"scenario": ScenarioConfig(**scen), "filter": FilterConfig(**filt)}
        if "variants" in data:
            variants = data.pop("variants")
            if isinstance(variants, (str, dict)):
                variants = [variants]
            kwargs["variants"] = tuple(parse_variant(v, i) for i, v in enumerate(variants))
        for key in ("runs", "seed", "workers"):
            if key in data:
                kwargs[key] = int(data.pop(key))
        if "output" in data:
            kwargs["output"] = str(data.pop("output"))
        return cls(**kwargs)

    def to_yaml(self) -> str:
        return dump_yaml(self.to_dict())

    @classmethod
    def from_yaml(cls, text: str) -> ExperimentConfig:
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_yaml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_yaml())


_SCENARIO_FLOATS = {
    "duration",
    "dt",
    "speed_nominal",
    "speed_variation",
    "ramp_time",
    "waypoint_jitter",
    "snr_ref_db",
    "pathloss_exponent",
    "clutter_rate",
    "effective_bandwidth",
}


def _check_keys(section: dict, allowed: set[str], name: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown {name} keys: {sorted(unknown)}")


def _float_values(d: dict) -> dict:
    return {k: float(v) for k, v in d.items()}


def dump_yaml(data) -> str:
    """Canonical YAML text: insertion-ordered keys, block style, flow-style leaf lists."""
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)
