"""Experiment presets: generator settings plus a matching training config.

Each preset builds its dataset from a seed and returns the configuration
used to train on it, so one CLI call (or one acceptance test) reproduces a
whole experiment cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, gen_linear, gen_swiss_roll
from .metrics import MetricError, roc_auc, subspace_angle
from .model import PraeConfig, PraeModel, score_in_sample
from .oracle import linear_oracle_config, oracle_instance


@dataclass
class Preset:
    name: str
    description: str
    config: dict
    data: dict = field(default_factory=dict)
    lambdas: tuple = ()

    def make_config(self, seed: int = 0, **overrides) -> PraeConfig:
        return PraeConfig(**{**self.config, "seed": seed, **overrides})

    def make_data(self, seed: int = 0, **overrides) -> LabeledDataset:
        params = {**self.data, **overrides}
        kind = params.pop("kind")
        if kind == "linear":
            return gen_linear(seed=seed, **params)
        if kind == "swiss":
            return gen_swiss_roll(seed=seed, **params)
        raise ValueError(f"unknown data kind {kind!r}")

    def make_validation(self, train: LabeledDataset, seed: int, n: int | None = None) -> LabeledDataset:
        """Fresh samples from the training data's generator (same subspace for linear data)."""
        params = {**self.data}
        kind = params.pop("kind")
        if kind == "linear":
            if n is not None:
                params["N"] = n
            return gen_linear(seed=seed, basis=train.true_basis, **params)
        return gen_swiss_roll(seed=seed, **params)


# linear autoencoder for subspace data: no hidden layers, latent = subspace dim
_LINEAR_AE = dict(hidden_widths=(), activation="linear", learning_rate=1e-2, gate_learning_rate=1e-2)

_SWISS = dict(
    hidden_widths=(512, 256, 128, 64, 32),
    latent_dim=2,
    activation="tanh",
    normalize_recon=True,
    lam=0.01,
    epochs=400,
    batch_size=256,
    learning_rate=3e-4,
    gate_learning_rate=1e-2,
)

PRESETS = {
    "fig3": Preset(
        "fig3",
        "phase transition: N=200, 150 inliers on a 2-d subspace of R^100, 50 outliers",
        dict(_LINEAR_AE, latent_dim=2, epochs=3000),
        dict(kind="linear", N=200, D=100, d=2, r=0.25, noise_var=1e-8),
        lambdas=(0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0),
    ),
    "table1-sigma0.1": Preset(
        "table1-sigma0.1", "swiss roll with N(0, 0.1 I) outliers", dict(_SWISS), dict(kind="swiss", n_in=1000, n_out=200, sigma_n2=0.1)
    ),
    "table1-sigma1": Preset(
        "table1-sigma1", "swiss roll with N(0, I) outliers", dict(_SWISS), dict(kind="swiss", n_in=1000, n_out=200, sigma_n2=1.0)
    ),
    "table1-sigma10": Preset(
        "table1-sigma10", "swiss roll with N(0, 10 I) outliers", dict(_SWISS), dict(kind="swiss", n_in=1000, n_out=200, sigma_n2=10.0)
    ),
    "rsr": Preset(
        "rsr",
        "robust subspace recovery: N=2000 points in R^50, 5-d inlier subspace",
        dict(_LINEAR_AE, latent_dim=5, lam=0.1, epochs=300),
        dict(kind="linear", N=2000, D=50, d=5, r=0.5, noise_var=1e-8),
    ),
}

ORACLE_PRESET = dict(n=8, dim=3, intrinsic=1, lam=2.0)


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def oracle_case(seed: int, lam: float | None = None):
    """Data and config for one seed of the small oracle-equivalence instance."""
    p = ORACLE_PRESET
    lam = p["lam"] if lam is None else lam
    X, labels = oracle_instance(p["n"], p["dim"], p["intrinsic"], seed=seed)
    return X, labels, linear_oracle_config(p["intrinsic"], lam, seed=seed)


def selected_subspace(X, selected, d: int) -> np.ndarray:
    """Top-``d`` right singular vectors of the selected rows, as a ``D x d`` basis."""
    Xs = np.asarray(X, dtype=np.float64)[np.asarray(selected, dtype=bool)]
    if Xs.shape[0] < d:
        raise MetricError(f"only {Xs.shape[0]} rows selected, need at least {d} to span a {d}-d subspace")
    _, _, vt = np.linalg.svd(Xs, full_matrices=False)
    return vt[:d].T


def rsr_outcome(model: PraeModel, data: LabeledDataset) -> dict:
    """Recovery check: selected rows are all inliers and span the true subspace."""
    selected = model.gate_values() >= model.config.thresh
    only_inliers = bool(selected.any() and not np.any(selected & data.labels))
    d = data.true_basis.shape[1]
    try:
        angle, log_angle = subspace_angle(data.true_basis, selected_subspace(data.X, selected, d))
    except MetricError:
        angle, log_angle = float(np.pi / 2), float(np.log10(np.pi / 2))
    return {
        "only_inliers": only_inliers,
        "n_selected": int(selected.sum()),
        "n_inliers": int(np.sum(~data.labels)),
        "angle": angle,
        "log_angle": log_angle,
        "success": only_inliers and angle < 1e-2,
    }


def auc_outcome(model: PraeModel, data: LabeledDataset) -> dict:
    return {"auc": roc_auc(score_in_sample(model).scores, data.labels)}
