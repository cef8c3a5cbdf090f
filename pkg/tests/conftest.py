import numpy as np
import pytest

import saedetect as sd

TINY_W = 60
RATE = 100.0


def tiny_scenario(seed, fault=None, rests=()):
    return sd.ScenarioSpec(
        duration_s=120.0,
        sample_rate_hz=RATE,
        baseline=40.0,
        periodic_components=((1.2, 0.9, 0.3), (0.5, 2.3, 1.1)),
        noise_sigma=0.25,
        rest_intervals=rests,
        fault=fault,
        rng_seed=seed,
    )


def tiny_fault():
    return sd.FaultSpec(onset_s=50.0, failure_s=110.0, drift_rate=0.02,
                        oscillation_gain=2.0, spike_rate_hz=0.3)


@pytest.fixture(scope="session")
def tiny_training_windows():
    series = [sd.generate(tiny_scenario(seed)) for seed in (7, 11, 13)]
    return np.vstack([[w.values for w in sd.segment(s, TINY_W)] for s in series])


@pytest.fixture(scope="session")
def tiny_model(tiny_training_windows):
    """Small but genuinely trained stack shared across test modules."""
    est = sd.StackedAutoencoder(epochs=40, learning_rate=0.1, random_state=1)
    est.fit(tiny_training_windows)
    return est


@pytest.fixture(scope="session")
def tiny_thresholds(tiny_model, tiny_training_windows):
    return sd.fit_thresholds(tiny_model.reconstruction_errors(tiny_training_windows))


@pytest.fixture(scope="session")
def tiny_rest(tiny_model):
    return sd.RestParams(0.0, sd.default_rest_tolerance(tiny_model.norm_stats_))
