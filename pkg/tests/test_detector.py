import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from homodyne_bell import SourceConfig, run_experiment
from homodyne_bell.detector import (
    DetectorConfig,
    HomodyneReading,
    MisconfiguredDetector,
    Outcome,
    digitize,
    discriminate,
    read_homodyne,
)
from homodyne_bell.optics import PortIntensities, output_intensities

from conftest import make_config


def test_read_homodyne_noiseless_examples():
    rng = np.random.default_rng(0)
    r = read_homodyne(PortIntensities(4.5, 0.5), DetectorConfig(gain=1.0), rng)
    assert r.v_diff == pytest.approx(4.0)
    r = read_homodyne(PortIntensities(1.0, 1.0), DetectorConfig(gain=3.0), rng)
    assert r.v_diff == 0.0


def test_difference_noise_adds_in_quadrature():
    n = 100_000
    ports = PortIntensities(np.ones(n), np.ones(n))
    r = read_homodyne(ports, DetectorConfig(noise_sigma=0.1), np.random.default_rng(4))
    assert np.std(r.v_diff) == pytest.approx(0.1 * np.sqrt(2), rel=0.02)


def test_digitize_signs():
    rng = np.random.default_rng(0)
    assert digitize(0.3, rng) is Outcome.PLUS
    assert digitize(-0.3, rng) is Outcome.MINUS


def test_digitize_tie_is_fair_coin():
    out = digitize(np.zeros(100_000), np.random.default_rng(1))
    assert abs(np.mean(out == 1) - 0.5) < 0.01
    assert set(np.unique(out)) == {-1, 1}


@given(st.floats(allow_nan=False, allow_infinity=False).filter(lambda v: v != 0))
def test_digitize_antisymmetric(v):
    rng = np.random.default_rng(0)
    assert digitize(-v, rng) == -digitize(v, rng)


@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(-np.pi, np.pi))
def test_zero_noise_step_function(E, E_L, theta):
    s = np.sin(theta)
    v = read_homodyne(output_intensities(E, E_L, theta), DetectorConfig(), np.random.default_rng(0)).v_diff
    out = digitize(v, np.random.default_rng(0))
    if s * E * E_L > 1e-12:
        assert out is Outcome.PLUS
    elif s * E * E_L < -1e-12:
        assert out is Outcome.MINUS


@pytest.mark.parametrize(
    "v_r, v_t, expected",
    [(1.2, 0.3, Outcome.PLUS), (0.3, 1.2, Outcome.MINUS), (0.3, 0.2, Outcome.NONE), (1.5, 1.1, Outcome.NONE)],
)
def test_discriminate_examples(v_r, v_t, expected):
    assert discriminate(HomodyneReading(v_r, v_t), DetectorConfig(discriminator_threshold=1.0)) is expected


def test_discriminate_needs_threshold():
    with pytest.raises(MisconfiguredDetector):
        discriminate(HomodyneReading(1.0, 0.0), DetectorConfig())


def test_discriminate_with_pedestal_subtracted():
    cfg = DetectorConfig(discriminator_threshold=0.2, subtract_pedestal=True)
    assert discriminate(HomodyneReading(1.5, 1.0), cfg) is Outcome.PLUS
    assert discriminate(HomodyneReading(1.1, 1.0), cfg) is Outcome.NONE


@given(st.floats(0.05, 5), st.floats(0.05, 5), st.floats(-np.pi, np.pi))
def test_small_threshold_reduces_to_sign_rule(E, E_L, theta):
    ports = output_intensities(E, E_L, theta)
    # above the dimmer port, below the brighter one
    thr = min(ports) + 0.5 * abs(ports[0] - ports[1])
    if abs(ports[0] - ports[1]) < 1e-9:
        return
    reading = HomodyneReading(*ports)
    expected = Outcome.PLUS if np.sin(theta) > 0 else Outcome.MINUS
    assert discriminate(reading, DetectorConfig(discriminator_threshold=thr)) is expected
    assert digitize(reading.v_diff, np.random.default_rng(0)) is expected


def test_gain_invariance_of_digitised_outcomes():
    outs = []
    for gain in (1.0, 7.5):
        det = DetectorConfig(gain=gain, noise_sigma=0.3 * gain)
        outs.append(run_experiment(make_config(detector=det), 20_000, seed=8).outcome_a)
    np.testing.assert_array_equal(outs[0], outs[1])


def test_discriminator_acceptance_decreases_with_threshold():
    src = SourceConfig(alpha_mode="uniform", amplitude_mode="fixed", amplitude_scale=1 / np.sqrt(0.9))
    fractions = []
    for thr in np.linspace(1.0, 1.9, 10):
        det = DetectorConfig(discriminator_threshold=thr)
        trials = run_experiment(make_config(source=src, detector=det), 100_000, seed=3)
        fractions.append(np.mean(trials.outcome_a != 0))
    assert all(b < a for a, b in zip(fractions, fractions[1:]))
    # noise-free oracle: the outcome fires iff |sin| >= thr - 1, so P = 1 - (2/pi) arcsin(thr - 1)
    expected = 1 - 2 / np.pi * np.arcsin(np.linspace(1.0, 1.9, 10) - 1.0)
    np.testing.assert_allclose(fractions, expected, atol=0.006)


@pytest.mark.parametrize("kwargs", [{"gain": 0.0}, {"noise_sigma": -1.0}, {"discriminator_threshold": -0.5}])
def test_detector_config_validation(kwargs):
    with pytest.raises(ValueError):
        DetectorConfig(**kwargs)
