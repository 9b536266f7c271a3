import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cpbtem._engine import run_measurements
from cpbtem.detector import (
    DetectorModel,
    build_detector,
    imbalance,
    localized_projection,
    pixel_probabilities,
    project_elastic,
    project_inelastic,
    sample_pixel,
    uniform_detector,
)
from cpbtem.qubit import KET0, KET1, SQRT_HALF, CpbState, canonical_equal, phase_shift
from cpbtem.rng import substream

S = SQRT_HALF


@st.composite
def states(draw):
    theta = draw(st.floats(0.0, math.pi))
    phi = draw(st.floats(-math.pi, math.pi))
    return CpbState(math.cos(theta / 2), cmath.exp(1j * phi) * math.sin(theta / 2))


def test_exact_similarity_without_violation():
    det = build_detector(1024, 0.0, substream(0, 2))
    assert np.max(np.abs(det.mag_b - det.mag_a)) == 0.0
    assert np.max(np.abs(np.abs(det.amp_b) - np.abs(det.amp_a))) < 1e-15


def test_two_pixel_profile_is_flat():
    det = build_detector(2, 0.0, substream(4, 2))
    np.testing.assert_allclose(np.abs(det.amp_a), [S, S], atol=1e-15)
    np.testing.assert_allclose(np.abs(det.amp_b), [S, S], atol=1e-15)


@pytest.mark.parametrize("eta", [0.1, 0.5])
def test_violation_keeps_normalization(eta):
    det = build_detector(1024, eta, substream(1, 2))
    assert abs(np.sum(np.abs(det.amp_b) ** 2) - 1) < 1e-12
    assert abs(np.sum(np.abs(det.amp_a) ** 2) - 1) < 1e-12
    assert np.max(np.abs(det.mag_b - det.mag_a)) > 0


def test_ripple_profile():
    det = build_detector(256, 0.0, substream(1, 2), ripple=0.2)
    i = np.abs(det.amp_a) ** 2 * 256
    assert i.min() < i.max() <= 1.2 * i.min() + 1e-12


@pytest.mark.parametrize("n, eta", [(1, 0.0), (8, -0.1)])
def test_build_detector_rejects(n, eta):
    with pytest.raises(ValueError):
        build_detector(n, eta, substream(0, 2))


def test_detector_model_rejects_unnormalized():
    with pytest.raises(ValueError):
        DetectorModel(np.ones(4), np.ones(4), np.zeros(4), np.zeros(4))


def test_unentangled_branch_stays_put():
    det = build_detector(64, 0.0, substream(2, 2), ripple=0.5)
    rng = np.random.default_rng(3)
    pixels = []
    for _ in range(20_000):
        j, post = project_elastic(KET0, det, rng)
        assert canonical_equal(post, KET0)
        pixels.append(j)
    counts = np.bincount(pixels, minlength=64)
    p = np.abs(det.amp_a) ** 2
    sigma = np.sqrt(p * (1 - p) * 20_000)
    assert np.all(np.abs(counts - 20_000 * p) < 5 * sigma)


def test_elastic_post_state_carries_beta():
    det = build_detector(16, 0.0, substream(5, 2))
    c = CpbState(S, cmath.exp(0.4j) * S)
    rng = np.random.default_rng(0)
    for _ in range(50):
        j, post = project_elastic(c, det, rng)
        assert canonical_equal(post, CpbState(S, cmath.exp(1j * (0.4 + det.beta[j])) * S), 1e-12)


def test_two_pixel_enumeration():
    # hand enumeration: a = b = (1/sqrt2, 1/sqrt2) up to beta = (0, pi);
    # each pixel has probability 1/2 and leaves (1, +1)/sqrt2 or (1, -1)/sqrt2
    det = uniform_detector([0.0, math.pi])
    c = CpbState(S, S)
    np.testing.assert_allclose(pixel_probabilities(c, det), [0.5, 0.5], atol=1e-15)
    for u_pixel, expected in [(0.25, CpbState(S, S)), (0.75, CpbState(S, -S))]:
        j = sample_pixel(0.5, det, 0.1, u_pixel)
        post = CpbState(det.amp_a[j] * c.amp0, det.amp_b[j] * c.amp1).normalized()
        assert canonical_equal(post, expected, 1e-15)


@given(states(), st.floats(0.0, 0.5))
def test_pixel_probabilities_complete(state, eta):
    det = build_detector(128, eta, substream(9, 2))
    assert abs(pixel_probabilities(state, det).sum() - 1) < 1e-12


@pytest.mark.parametrize("c", [CpbState(S, S), CpbState(0.6, 0.8j), CpbState(0.95, math.sqrt(1 - 0.95**2))])
def test_pixel_marginal_matches_mixture(c):
    det = build_detector(8, 0.4, substream(6, 2), ripple=1.0)
    rng = np.random.default_rng(7)
    n = 100_000
    u = rng.random((n, 2))
    p0 = abs(c.amp0) ** 2
    pixels = np.array([sample_pixel(p0, det, a, b) for a, b in u])
    p = pixel_probabilities(c, det)
    counts = np.bincount(pixels, minlength=8)
    assert np.all(np.abs(counts - n * p) < 4 * np.sqrt(n * p * (1 - p)))


def test_inelastic_leaves_ket0_alone():
    rng = np.random.default_rng(1)
    for _ in range(20):
        _, post = project_inelastic(KET0, 0.0, rng)
        assert canonical_equal(post, KET0)


def test_inelastic_phase_and_exact_correction():
    class FixedXi:
        def random(self):
            return 0.7 / (2 * math.pi)

        def standard_normal(self):
            return 0.0

    c = CpbState(S, cmath.exp(0.3j) * S)
    event, post = project_inelastic(c, 0.0, FixedXi())
    assert event.xi_true == pytest.approx(0.7)
    assert canonical_equal(post, CpbState(S, cmath.exp(1j * (0.3 - 0.7)) * S), 1e-12)
    assert canonical_equal(phase_shift(post, event.xi_reported), c, 1e-12)


def test_inelastic_report_noise():
    rng = np.random.default_rng(8)
    err = []
    for _ in range(100_000):
        ev, _ = project_inelastic(CpbState(S, S), 1e-3, rng)
        err.append(ev.xi_reported - ev.xi_true)
    err = np.array(err)
    assert np.std(err) == pytest.approx(1e-3, rel=0.05)
    assert abs(np.mean(err)) < 4e-3 / math.sqrt(err.size)


def test_inelastic_scatter_angle_scale():
    rng = np.random.default_rng(2)
    angles = [project_inelastic(CpbState(S, S), 0.0, rng)[0].scatter_angle for _ in range(5000)]
    assert np.std(angles) == pytest.approx(1e-3, rel=0.1)


def test_localized_collapse():
    rng = np.random.default_rng(4)
    for _ in range(100):
        assert localized_projection(KET1, rng) == (1, KET1)
    branches = []
    for _ in range(100_000):
        b, post = localized_projection(CpbState(S, S), rng)
        assert abs(post.amp0) * abs(post.amp1) == 0
        branches.append(b)
    assert abs(np.mean(branches) - 0.5) < 4 * 0.5 / math.sqrt(len(branches))


@given(states(), st.floats(-3, 3), st.floats(0, 0.3))
def test_imbalance_keeps_phase_and_norm(state, z, eps):
    out = imbalance(state, eps, z)
    assert out.is_normalized(1e-12)
    if abs(state.amp0) > 1e-6 and abs(state.amp1) > 1e-6:
        assert cmath.phase(out.amp1 / out.amp0) == pytest.approx(cmath.phase(state.amp1 / state.amp0), abs=1e-9)


def test_amplitude_random_walk_exponent():
    det = build_detector(1024, 0.01, substream(3, 2))
    rounds = [10, 20, 50, 100, 200]
    mean_imbalance = []
    for r in rounds:
        _, s = run_measurements(np.zeros(10_000), r, det, seed=1, stream=7)
        mean_imbalance.append(np.mean(np.abs(np.abs(s[:, 0]) ** 2 - 0.5)))
    slope = np.polyfit(np.log(rounds), np.log(mean_imbalance), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.1)
