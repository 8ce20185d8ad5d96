"""scikit-learn style wrapper around :func:`prae.model.train_prae`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .gates import MU_MAX, MU_MIN
from .model import (
    PraeConfig,
    classify,
    reconstruction_errors,
    score_in_sample,
    score_out_of_sample,
    train_prae,
)
from .nn import encode, forward


class PRAE(OutlierMixin, BaseEstimator):
    """Probabilistic robust autoencoder for unsupervised anomaly detection.

    Every training row owns a stochastic gate; rows whose gate closes are
    treated as anomalies. Labels follow the dataset convention: ``1`` marks
    an anomaly and ``0`` a normal row.

    Parameters
    ----------
    variant : {"l1", "l0", "ae"}
        Regularizer on the gates. ``"ae"`` trains a plain autoencoder.
    lam : float
        Reward per included sample; rows whose reconstruction error stays
        above ``lam`` get excluded.
    epochs, batch_size, learning_rate, gate_learning_rate :
        Optimisation settings. ``None`` picks the defaults documented on
        :class:`prae.model.PraeConfig`.
    hidden_widths : tuple of int
        Encoder hidden widths; the decoder mirrors them.
    latent_dim : int
    activation : {"leaky_relu", "tanh", "relu", "linear"}
    normalize_recon : bool
        Divide each reconstruction error by ``||x||^2``.
    thresh : float
        Gate value below which a training row is called an anomaly.
    random_state : int

    Attributes
    ----------
    model_ : PraeModel
    mu_ : ndarray of shape (n_samples,)
        Learned gate means.
    decision_scores_ : ndarray of shape (n_samples,)
        In-sample anomaly scores (``1 - clamp(mu)``, or the reconstruction
        error for ``variant="ae"``). Higher is more anomalous.
    labels_ : ndarray of shape (n_samples,)
        In-sample 0/1 predictions.
    training_log_ : list of dict
    """

    def __init__(
        self,
        variant="l1",
        lam=1.0,
        epochs=200,
        batch_size=None,
        learning_rate=None,
        gate_learning_rate=None,
        sigma=0.5,
        hidden_widths=(10, 10, 10, 10, 10),
        latent_dim=1,
        activation="leaky_relu",
        slope=0.01,
        normalize_recon=False,
        use_bias=True,
        thresh=0.1,
        mu_init=0.5,
        random_state=0,
    ):
        self.variant = variant
        self.lam = lam
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.gate_learning_rate = gate_learning_rate
        self.sigma = sigma
        self.hidden_widths = hidden_widths
        self.latent_dim = latent_dim
        self.activation = activation
        self.slope = slope
        self.normalize_recon = normalize_recon
        self.use_bias = use_bias
        self.thresh = thresh
        self.mu_init = mu_init
        self.random_state = random_state

    def _config(self) -> PraeConfig:
        return PraeConfig(
            variant=self.variant,
            lam=float(self.lam),
            epochs=int(self.epochs),
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            gate_learning_rate=self.gate_learning_rate,
            sigma=float(self.sigma),
            hidden_widths=tuple(self.hidden_widths),
            latent_dim=int(self.latent_dim),
            activation=self.activation,
            slope=float(self.slope),
            normalize_recon=bool(self.normalize_recon),
            use_bias=bool(self.use_bias),
            seed=int(self.random_state),
            thresh=float(self.thresh),
            mu_init=float(self.mu_init),
            mu_min=MU_MIN,
            mu_max=MU_MAX,
        )

    def fit(self, X, y=None):
        """Train on ``X``; ``y`` is ignored."""
        X = check_array(X, dtype=np.float64, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        self.model_ = train_prae(X, self._config())
        self.mu_ = self.model_.gates.mu.copy()
        self.training_log_ = list(self.model_.training_log)
        if self.variant == "ae":
            self.decision_scores_ = reconstruction_errors(self.model_.net, X, self.normalize_recon)
            self.labels_ = (self.decision_scores_ > self.lam).astype(int)
        else:
            scores = score_in_sample(self.model_)
            self.decision_scores_ = scores.scores
            self.labels_ = classify(scores, self.thresh).astype(int)
        return self

    def _validate(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, but PRAE was fitted with {self.n_features_in_}")
        return X

    def decision_function(self, X):
        """Out-of-sample anomaly score: reconstruction error of each row.

        Unlike scikit-learn's outlier detectors, higher means more anomalous.
        """
        X = self._validate(X)
        return score_out_of_sample(self.model_, X).scores

    def predict(self, X):
        """1 where the reconstruction error exceeds ``lam``, else 0."""
        return (self.decision_function(X) > self.lam).astype(int)

    def fit_predict(self, X, y=None):
        """In-sample labels from the gates of the fitted rows."""
        return self.fit(X).labels_

    def transform(self, X):
        """Latent codes of ``X``."""
        X = self._validate(X)
        return encode(self.model_.net, X)

    def reconstruct(self, X):
        X = self._validate(X)
        return forward(self.model_.net, X)[0]
