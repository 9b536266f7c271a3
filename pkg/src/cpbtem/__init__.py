"""Simulator for entanglement-enhanced TEM with a Cooper-pair-box probe."""

from cpbtem._engine import BACKEND
from cpbtem.detector import DetectorModel, build_detector, uniform_detector
from cpbtem.imaging import (
    BeamProfile,
    ImageResult,
    ScanPlan,
    SpecimenPhaseMap,
    dog_target,
    extract_high_res,
    gaussian_filter,
    plan_from_dose,
    simulate_baseline,
    simulate_proposed,
    synth_specimen,
)
from cpbtem.protocol import ProtocolConfig, estimate_phase, simulate_bits
from cpbtem.qubit import CpbState, canonical_equal

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BeamProfile",
    "CpbState",
    "DetectorModel",
    "ImageResult",
    "ProtocolConfig",
    "ScanPlan",
    "SpecimenPhaseMap",
    "build_detector",
    "canonical_equal",
    "dog_target",
    "estimate_phase",
    "extract_high_res",
    "gaussian_filter",
    "plan_from_dose",
    "simulate_baseline",
    "simulate_bits",
    "simulate_proposed",
    "synth_specimen",
    "uniform_detector",
]
