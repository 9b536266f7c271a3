"""Estimator spread versus k at a fixed electron budget."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from cpbtem.dose import SpecimenModelConstants, entangled_precision, entangled_resolution
from cpbtem.protocol import ProtocolConfig, estimate_from_frequency, simulate_bits
from cpbtem.rng import STREAM_SCALING


@dataclass(frozen=True)
class ScalingRow:
    k: int
    measurements: int
    mean: float
    std: float
    predicted_std: float
    resolution_nm: float


@dataclass(frozen=True)
class ScalingResult:
    rows: list
    slope: float
    intercept: float


def fit_loglog(x, y):
    """Least-squares slope and intercept of log(y) against log(x)."""
    slope, intercept = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope), float(intercept)


def scaling_study(
    ks,
    budget: int,
    replicates: int,
    det,
    *,
    delta_theta: float = 0.01,
    seed: int = 0,
    base: ProtocolConfig | None = None,
    constants: SpecimenModelConstants | None = None,
    threads: int = 1,
    backend: str | None = None,
) -> ScalingResult:
    """For each k spend ``budget`` electrons as budget // k measurements, repeat, and take the spread."""
    ks = [int(k) for k in ks]
    if not ks:
        raise ValueError("need at least one k value")
    if budget < max(ks):
        raise ValueError("electron budget is smaller than the largest k")
    base = base or ProtocolConfig()
    constants = constants or SpecimenModelConstants()
    rows = []
    for k in ks:
        cfg = replace(base, k=k, delta_theta=delta_theta)
        m = budget // k
        bits = simulate_bits(cfg, det, replicates * m, seed=seed, stream=STREAM_SCALING * 1_000_000 + k,
                             threads=threads, backend=backend).reshape(replicates, m)
        valid = bits >= 0
        freq = (bits == 1).sum(axis=1) / np.maximum(valid.sum(axis=1), 1)
        est = estimate_from_frequency(freq, k)
        rows.append(ScalingRow(k, m, float(est.mean()), float(est.std(ddof=1)),
                               entangled_precision(budget, k), entangled_resolution(constants, k)))
    if len(rows) > 1:
        slope, intercept = fit_loglog([r.k for r in rows], [r.std for r in rows])
    else:
        slope, intercept = float("nan"), float("nan")
    return ScalingResult(rows, slope, intercept)
