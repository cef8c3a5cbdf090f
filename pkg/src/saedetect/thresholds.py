"""Traffic-light severity bands over reconstruction error.

Green/red boundaries come from the healthy training errors: green at a
high percentile (99.95 by default, nearest-rank), red at the maximum.
Errors at or below green are normal, between green and red worrying, and
above red critical. Resting windows bypass the model entirely and carry a
negative sentinel error so they can never be mistaken for anomalies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .validation import as_float_vector

RESTING_SENTINEL = -0.001
DEFAULT_PERCENTILE = 99.95


class TrafficLight(Enum):
    GREEN = "green"
    AMBER = "amber"
    RED = "red"
    RESTING = "resting"


# Severity order for run-length alarm logic; resting is outside the scale.
SEVERITY = {TrafficLight.GREEN: 0, TrafficLight.AMBER: 1, TrafficLight.RED: 2}


@dataclass(frozen=True)
class ThresholdSet:
    green: float
    red: float
    resting_sentinel: float = RESTING_SENTINEL

    def __post_init__(self):
        if not (0.0 <= self.green <= self.red):
            raise ValueError(
                f"thresholds must satisfy 0 <= green <= red, got green={self.green}, "
                f"red={self.red}"
            )
        if not (self.resting_sentinel < 0):
            raise ValueError("resting sentinel must be negative")


def nearest_rank(sorted_values: np.ndarray, percentile: float) -> float:
    """Nearest-rank percentile: element at rank ceil(p/100 * N), 1-indexed.

    The product is rounded to 9 decimals before the ceiling so float
    artifacts at exact integer ranks cannot shift the rank by one.
    """
    n = sorted_values.shape[0]
    rank = max(1, math.ceil(round(percentile * n / 100.0, 9)))
    return float(sorted_values[min(rank, n) - 1])


def fit_thresholds(healthy_errors, percentile: float = DEFAULT_PERCENTILE) -> ThresholdSet:
    """Fit the green/red boundaries from healthy reconstruction errors.

    Callers must filter resting sentinels out first; negative inputs are
    rejected. The percentile is configurable for stricter monitoring.
    """
    errors = as_float_vector(healthy_errors, "healthy_errors")
    if errors.shape[0] == 0:
        raise ValueError("cannot fit thresholds to an empty error set")
    if np.any(errors < 0):
        raise ValueError(
            "negative errors in threshold fit; resting sentinels must be filtered out"
        )
    if not (0.0 < percentile <= 100.0):
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    ordered = np.sort(errors)
    return ThresholdSet(green=nearest_rank(ordered, percentile), red=float(ordered[-1]))


def classify(error: float, thresholds: ThresholdSet) -> TrafficLight:
    """Map one reconstruction error (or the resting sentinel) to a band.

    Boundary ties go to the less severe band: exactly green is Green,
    exactly red is Amber. The sentinel is matched by exact equality; it is
    produced, never computed, so no epsilon is involved.
    """
    error = float(error)
    if math.isnan(error):
        raise ValueError("invalid reconstruction: error is NaN")
    if error == thresholds.resting_sentinel:
        return TrafficLight.RESTING
    if error <= thresholds.green:
        return TrafficLight.GREEN
    if error <= thresholds.red:
        return TrafficLight.AMBER
    return TrafficLight.RED


class TrafficLightClassifier(BaseEstimator):
    """Estimator-style wrapper: fit on healthy errors, predict band names.

    Parameters
    ----------
    percentile : float, default=99.95
        Nearest-rank percentile for the green boundary.

    Attributes
    ----------
    thresholds_ : ThresholdSet
        Fitted green/red boundaries.
    """

    def __init__(self, percentile: float = DEFAULT_PERCENTILE):
        self.percentile = percentile

    def fit(self, X, y=None):
        self.thresholds_ = fit_thresholds(np.ravel(np.asarray(X, dtype=float)), self.percentile)
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "thresholds_"):
            raise NotFittedError("TrafficLightClassifier must be fitted before predict")
        errors = np.ravel(np.asarray(X, dtype=float))
        return np.array([classify(e, self.thresholds_).value for e in errors], dtype=object)
