"""Scikit-learn style front end for the stacked autoencoder.

The estimator consumes a matrix of raw windows (one row per window), fits
the min-max scaling, the greedy encoder stack and the expansion decoder,
and exposes transform/reconstruct/score methods that compose with the
wider sklearn ecosystem (get_params, set_params, clone all work).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import nn, stack
from .signals import scale_from_unit, scale_to_unit
from .validation import as_float_matrix, check_finite


class StackedAutoencoder(BaseEstimator):
    """Greedy stacked autoencoder with a trained expansion decoder.

    Fit it on healthy windows only; anomaly scores are reconstruction
    errors in the scaled [0, 1] domain and grow when a window leaves the
    training distribution.

    Parameters
    ----------
    encoder_dims : sequence of int or None, default=None
        Strictly decreasing encoder widths. None selects the stock
        geometry for the window size (e.g. 300-200-120-70 for windows of
        500 samples).
    final_hidden : int or None, default=None
        Hidden width of the expansion decoder; None selects the stock
        value for the window size.
    learning_rate : float, default=0.01
    momentum : float, default=0.9
    epochs : int, default=200
        Per-stage epoch budget; stages also stop early once the epoch loss
        plateaus.
    batch_size : int, default=32
    random_state : int, default=0
        Seeds weight init and epoch shuffling; fits are bit-reproducible.
    early_stop_tol : float, default=1e-7
    early_stop_patience : int, default=10

    Attributes
    ----------
    model_ : stack.StackedModel
        The trained artifact (spec, encoder chain, decoder, scaling stats).
    spec_ : stack.StackSpec
    norm_stats_ : signals.NormStats
    stage_losses_ : list of list of float
        Epoch loss history per pretraining stage.
    decoder_losses_ : list of float
    n_features_in_ : int
        Window size seen at fit time.
    """

    def __init__(
        self,
        encoder_dims=None,
        final_hidden=None,
        learning_rate: float = 0.01,
        momentum: float = 0.9,
        epochs: int = 200,
        batch_size: int = 32,
        random_state: int = 0,
        early_stop_tol: float = 1e-7,
        early_stop_patience: int = 10,
    ):
        self.encoder_dims = encoder_dims
        self.final_hidden = final_hidden
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state
        self.early_stop_tol = early_stop_tol
        self.early_stop_patience = early_stop_patience

    def _build_spec(self, window_size: int) -> stack.StackSpec:
        if self.encoder_dims is None and self.final_hidden is None:
            return stack.default_spec(window_size)
        stock = stack.default_spec(window_size)
        dims = tuple(self.encoder_dims) if self.encoder_dims is not None else stock.encoder_dims
        hidden = self.final_hidden if self.final_hidden is not None else stock.final_hidden
        return stack.StackSpec(window_size, dims, hidden)

    def _train_config(self) -> nn.TrainConfig:
        return nn.TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            epochs=self.epochs,
            batch_size=self.batch_size,
            rng_seed=self.random_state,
            early_stop_tol=self.early_stop_tol,
            early_stop_patience=self.early_stop_patience,
        )

    def fit(self, X, y=None):
        """Fit scaling, encoder stack and decoder on raw healthy windows."""
        X = as_float_matrix(X, "X")
        check_finite(X, "X")
        if X.shape[0] == 0:
            raise ValueError("empty training set")
        spec = self._build_spec(X.shape[1])
        model, report = stack.fit_stacked_model(X, spec, self._train_config())
        self.model_ = model
        self.spec_ = model.spec
        self.norm_stats_ = model.norm_stats
        self.stage_losses_ = report.stage_losses
        self.decoder_losses_ = report.decoder_losses
        self.n_features_in_ = X.shape[1]
        return self

    def _check_windows(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = as_float_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"dimension mismatch: windows are {X.shape[1]} wide, model expects "
                f"{self.n_features_in_}"
            )
        return X

    def transform(self, X) -> np.ndarray:
        """Bottleneck feature codes for raw windows."""
        X = self._check_windows(X)
        return stack.encode(self.model_, scale_to_unit(X, self.norm_stats_))

    def reconstruct(self, X) -> np.ndarray:
        """Round-trip raw windows through the stack, back in raw units."""
        X = self._check_windows(X)
        rec = stack.reconstruct(self.model_, scale_to_unit(X, self.norm_stats_))
        return scale_from_unit(rec, self.norm_stats_)

    def reconstruction_errors(self, X) -> np.ndarray:
        """Anomaly score per window (mean squared error in scaled units)."""
        X = self._check_windows(X)
        Xn = scale_to_unit(X, self.norm_stats_)
        return np.array(
            [stack.reconstruction_error(self.model_, row) for row in Xn], dtype=float
        )
