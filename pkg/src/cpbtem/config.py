"""Flat ``section.key = value`` run configuration.

Every key has a default; the defaults reproduce the reference scenario
(dose 180 e/nm^2, k = 9, S0/S1 widths 1.5/0.3 nm, 100 x 100 map at 0.3 nm).
"""

from __future__ import annotations

from dataclasses import fields

from cpbtem.detector import DetectorModel, build_detector
from cpbtem.dose import SpecimenModelConstants
from cpbtem.feasibility import DeviceParams, Thresholds
from cpbtem.fileio import format_value, read_kv
from cpbtem.imaging import BeamProfile
from cpbtem.protocol import ProtocolConfig
from cpbtem.rng import STREAM_DETECTOR, substream


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError(f"not an integer: {text!r}")
    return int(v)


def _intlist(text: str) -> list[int]:
    items = [t for t in text.replace(" ", "").split(",") if t]
    return [_int(t) for t in items]


_PARSERS = {bool: _bool, int: _int, float: float, str: str, list: _intlist}

DEFAULTS: dict[str, object] = {
    "seed": 0,
    "protocol.k": 9,
    "protocol.p_inelastic": 0.0,
    "protocol.xi_precision": 1e-3,
    "protocol.localization_epsilon": 0.0,
    "protocol.p_loss": 0.0,
    "protocol.inelastic_model": "delocalized",
    "protocol.deferred_correction": False,
    "protocol.delta_theta_inel": 1e-3,
    "detector.n_pixels": 1024,
    "detector.eta": 0.0,
    "beam.sigma0": 1.5,
    "beam.sigma1": 0.3,
    "beam.offset_x": 0.0,
    "beam.offset_y": 0.0,
    "scan.dose": 180.0,
    "scan.step": 0.0,  # 0 means one scan position per map pixel
    "specimen.file": "",
    "specimen.kind": "blob-noise",
    "specimen.width": 100,
    "specimen.height": 100,
    "specimen.pixel_size": 0.3,
    "specimen.amplitude": 0.3,
    "specimen.radius": 3.0,
    "specimen.count": 1,
    "specimen.period": 3.0,
    "specimen.envelope_radius": 8.0,
    "specimen.n_blobs": 300,
    "filter.sigma_fine": 0.3,
    "filter.sigma_coarse": 1.5,
    "output.display_sigma": 0.3,
    "dose.alpha": 0.01,
    "dose.gamma": 1e-3,
    "scaling.k": [1, 2, 4, 8, 16],
    "scaling.budget": 4096,
    "scaling.replicates": 200,
    "scaling.delta_theta": 0.01,
}
_device_defaults = DeviceParams()
for _f in fields(DeviceParams):
    if _f.name != "thresholds":
        DEFAULTS[f"device.{_f.name}"] = getattr(_device_defaults, _f.name)
for _f in fields(Thresholds):
    DEFAULTS[f"threshold.{_f.name}"] = getattr(_device_defaults.thresholds, _f.name)


class RunConfig:
    """Resolved configuration: defaults, then a config file, then overrides."""

    def __init__(self, values: dict | None = None):
        self.values = dict(DEFAULTS)
        for key, value in (values or {}).items():
            self.set(key, value)

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        cfg = cls()
        if path:
            for key, text in read_kv(path).items():
                cfg.set(key, text)
        for key, value in (overrides or {}).items():
            cfg.set(key, value)
        return cfg

    def set(self, key: str, value) -> None:
        if key not in DEFAULTS:
            raise ConfigError(f"unknown configuration key {key!r}")
        kind = type(DEFAULTS[key])
        if isinstance(value, str) and kind is not str:
            try:
                value = _PARSERS[kind](value)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        elif kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif kind is list:
            value = list(value)
        self.values[key] = value

    def __getitem__(self, key: str):
        return self.values[key]

    def section(self, name: str) -> dict:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def echo(self) -> list[str]:
        return [f"{k} = {format_value(self.values[k])}" for k in sorted(self.values)]

    def _build(self, factory, **kwargs):
        try:
            return factory(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None

    def protocol(self) -> ProtocolConfig:
        return self._build(ProtocolConfig, **self.section("protocol"))

    def beam(self) -> BeamProfile:
        s = self.section("beam")
        return self._build(BeamProfile, sigma0=s["sigma0"], sigma1=s["sigma1"],
                           offset=(s["offset_x"], s["offset_y"]))

    def detector(self) -> DetectorModel:
        s = self.section("detector")
        rng = substream(self["seed"], STREAM_DETECTOR)
        return self._build(build_detector, n_pixels=s["n_pixels"], eta=s["eta"], rng=rng)

    def device(self) -> DeviceParams:
        th = self._build(Thresholds, **self.section("threshold"))
        return self._build(DeviceParams, thresholds=th, **self.section("device"))

    def constants(self) -> SpecimenModelConstants:
        return self._build(SpecimenModelConstants, **self.section("dose"))
