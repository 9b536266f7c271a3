"""Per-electron measurement round and CPB readout.

One measurement starts the box in (|0>_b + |1>_b)/sqrt2, lets k electrons
each imprint the specimen phase difference on the |1>_b branch, corrects the
known detector phase after each detection, and finally reads the box out so
that P(1) = [1 + sin(k dtheta)] / 2.

The step-by-step functions here (:func:`run_electron_round`,
:func:`run_measurement`) are the readable reference.  Bulk simulation goes
through :func:`simulate_bits`, which hands the whole batch to the compiled
kernel (or its numpy fallback).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from cpbtem import _engine
from cpbtem.detector import (
    DELTA_THETA_INEL,
    DetectorModel,
    imbalance,
    localized_projection,
    project_elastic,
    project_inelastic,
)
from cpbtem.qubit import SQRT_HALF, CpbState, measure_charge, phase_shift, to_energy_basis
from cpbtem.rng import STREAM_PROTOCOL

INELASTIC_MODELS = ("delocalized", "localized")


class PhaseRangeWarning(UserWarning):
    """Accumulated phase k*dtheta leaves the monotone branch |phi| <= pi/2."""


@dataclass(frozen=True)
class ProtocolConfig:
    k: int = 9
    delta_theta: float = 0.0
    p_inelastic: float = 0.0
    xi_precision: float = 0.0
    localization_epsilon: float = 0.0
    p_loss: float = 0.0
    inelastic_model: str = "delocalized"
    deferred_correction: bool = False
    delta_theta_inel: float = DELTA_THETA_INEL

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        for name in ("p_inelastic", "p_loss"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.p_inelastic + self.p_loss > 1.0:
            raise ValueError("p_inelastic + p_loss exceeds 1")
        if self.xi_precision < 0 or self.localization_epsilon < 0:
            raise ValueError("xi_precision and localization_epsilon must be non-negative")
        if self.inelastic_model not in INELASTIC_MODELS:
            raise ValueError(f"inelastic_model must be one of {INELASTIC_MODELS}")

    @property
    def accumulated_phase(self) -> float:
        return self.k * self.delta_theta

    @property
    def exceeds_linear_range(self) -> bool:
        return abs(self.accumulated_phase) > math.pi / 2 + 1e-9


@dataclass(frozen=True)
class RoundOutcome:
    pixel_index: int
    inelastic: bool
    xi_applied: float
    cpb_after: CpbState
    lost: bool = False


def init_round_state() -> CpbState:
    return CpbState(SQRT_HALF + 0j, SQRT_HALF + 0j)


def run_electron_round(state: CpbState, cfg: ProtocolConfig, det: DetectorModel, rng: np.random.Generator):
    """Send one electron: entangle, imprint, detect, correct.

    Returns ``(new_state, RoundOutcome)``.  With ``deferred_correction`` the
    phase fix is not applied here; the caller accumulates
    ``-beta_j`` / ``xi_applied`` and applies it before readout (as
    :func:`run_measurement` does).  A lost electron (probability
    ``p_loss``) returns the state untouched with ``lost=True``.
    """
    if not state.is_normalized(1e-9):
        raise ValueError("input CPB state is not normalized")
    u = rng.random()
    if u < cfg.p_loss:
        return state, RoundOutcome(-1, False, 0.0, state, lost=True)
    # the mirror maps |0>_b|i> -> |0>_b|0>, |1>_b|i> -> |1>_b|1>; the specimen
    # then multiplies the |1> branch by exp(i dtheta)
    imprinted = phase_shift(state, cfg.delta_theta)
    if u < cfg.p_loss + cfg.p_inelastic:
        if cfg.inelastic_model == "localized":
            _, post = localized_projection(imprinted, rng)
            outcome = RoundOutcome(-1, True, 0.0, post)
            return post, outcome
        event, post = project_inelastic(imprinted, cfg.xi_precision, rng, cfg.delta_theta_inel)
        post = imbalance(post, cfg.localization_epsilon, rng.standard_normal())
        if not cfg.deferred_correction:
            post = phase_shift(post, event.xi_reported)
        return post, RoundOutcome(-1, True, event.xi_reported, post)
    j, post = project_elastic(imprinted, det, rng)
    if not cfg.deferred_correction:
        post = phase_shift(post, -det.beta[j])
    return post, RoundOutcome(j, False, 0.0, post)


def correction_angle(outcome: RoundOutcome, det: DetectorModel) -> float:
    if outcome.lost:
        return 0.0
    if outcome.inelastic:
        return outcome.xi_applied
    return -float(det.beta[outcome.pixel_index])


def readout_transform(state: CpbState) -> CpbState:
    """Phase shift by pi/2, then |0>_b -> |s>_b, |1>_b -> |a>_b."""
    return to_energy_basis(phase_shift(state, math.pi / 2))


def readout_probability(phi):
    """P(bit = 1) for an accumulated phase ``phi``."""
    return 0.5 * (1.0 + np.sin(phi))


def run_chain(cfg: ProtocolConfig, det: DetectorModel, rng: np.random.Generator):
    """k rounds from the initial state; returns ``(final_state, outcomes)`` or ``(None, outcomes)`` if lost."""
    state = init_round_state()
    outcomes = []
    pending = 0.0
    for _ in range(cfg.k):
        state, out = run_electron_round(state, cfg, det, rng)
        outcomes.append(out)
        if out.lost:
            return None, outcomes
        if cfg.deferred_correction:
            pending += correction_angle(out, det)
    if cfg.deferred_correction:
        state = phase_shift(state, pending)
    return state, outcomes


def run_measurement(cfg: ProtocolConfig, det: DetectorModel, rng: np.random.Generator) -> int:
    """One full measurement; returns the readout bit, or -1 if an electron was lost."""
    state, _ = run_chain(cfg, det, rng)
    if state is None:
        return -1
    return measure_charge(readout_transform(state), rng.random())


def simulate_bits(
    cfg: ProtocolConfig,
    det: DetectorModel,
    n: int | None = None,
    *,
    seed: int,
    delta_theta=None,
    stream: int = STREAM_PROTOCOL,
    threads: int = 1,
    backend: str | None = None,
    return_states: bool = False,
):
    """Batch of independent measurements through the fast kernel.

    ``delta_theta`` may be an array (one entry per measurement); otherwise
    ``n`` copies of ``cfg.delta_theta`` are used.
    """
    if delta_theta is None:
        if n is None:
            raise ValueError("give n or a delta_theta array")
        dtheta = np.full(int(n), cfg.delta_theta)
    else:
        dtheta = np.asarray(delta_theta, dtype=float).ravel()
    if dtheta.size and cfg.k * float(np.max(np.abs(dtheta))) > math.pi / 2 + 1e-9:
        warnings.warn(
            f"k*dtheta reaches {cfg.k * float(np.max(np.abs(dtheta))):.3f} rad, beyond pi/2; "
            "the phase estimate is ambiguous there",
            PhaseRangeWarning,
            stacklevel=2,
        )
    bits, states = _engine.run_measurements(
        dtheta,
        cfg.k,
        det,
        seed=seed,
        stream=stream,
        p_loss=cfg.p_loss,
        p_inel=cfg.p_inelastic,
        xi_precision=cfg.xi_precision,
        epsilon=cfg.localization_epsilon,
        localized=cfg.inelastic_model == "localized",
        deferred=cfg.deferred_correction,
        threads=threads,
        backend=backend,
    )
    if return_states:
        return bits, states
    return bits


def estimate_phase(bits, k: int) -> float:
    """Inverse-sine estimate of dtheta from readout bits (aborted -1 entries ignored)."""
    b = np.asarray(bits)
    b = b[b >= 0]
    if b.size == 0:
        raise ValueError("no measurements")
    return float(estimate_from_frequency(float(b.mean()), k))


def estimate_from_frequency(freq, k: int):
    return np.arcsin(np.clip(2.0 * np.asarray(freq, dtype=float) - 1.0, -1.0, 1.0)) / k
