"""PRAE model, trainer, scoring and lambda heuristics.

The training objective on a mini-batch is::

    sum_i z[i] * r_i  -  lam * Reg(mu)

with ``z`` one realisation of the stochastic gates, ``r_i`` the squared
reconstruction error of sample ``i`` and ``Reg`` the exact expectation of
``||z||_0`` (variant ``"l0"``) or ``||z||_1`` (variant ``"l1"``) over the
batch. Variant ``"ae"`` is the plain autoencoder: gates fixed open, no
regularizer.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import gates as G
from .data import LabeledDataset
from .metrics import f1_score, max_f1
from .nn import (
    AdamState,
    ConfigurationError,
    DenseNet,
    RowAdamState,
    ShapeError,
    adam_step,
    backward,
    forward,
    init_dense_net,
    mirrored_specs,
    row_adam_step,
)

logger = logging.getLogger(__name__)

VARIANTS = ("l0", "l1", "ae")
DEFAULT_BATCH_CAP = 256
LR_FLOOR = 1e-3
LR_CAP = 1e-2


class TrainingError(RuntimeError):
    def __init__(self, message, epoch=None, sample=None):
        super().__init__(message)
        self.epoch = epoch
        self.sample = sample


@dataclass
class PraeConfig:
    variant: str = "l1"
    lam: float = 1.0
    epochs: int = 200
    batch_size: int | None = None
    learning_rate: float | None = None
    gate_learning_rate: float | None = None
    sigma: float = 0.5
    hidden_widths: tuple = (10, 10, 10, 10, 10)
    latent_dim: int = 1
    activation: str = "leaky_relu"
    slope: float = 0.01
    normalize_recon: bool = False
    use_bias: bool = True
    seed: int = 0
    thresh: float = 0.1
    mu_init: float = 0.5
    mu_min: float = G.MU_MIN
    mu_max: float = G.MU_MAX

    def __post_init__(self):
        self.hidden_widths = tuple(int(w) for w in self.hidden_widths)

    def validate(self, n_features: int | None = None) -> "PraeConfig":
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigurationError("batch_size must be positive")
        for name in ("learning_rate", "gate_learning_rate"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigurationError(f"{name} must be positive")
        if not self.sigma > 0:
            raise ConfigurationError("sigma must be positive")
        if self.latent_dim < 1 or any(w < 1 for w in self.hidden_widths):
            raise ConfigurationError("layer widths must be positive")
        if n_features is not None and self.latent_dim >= n_features:
            raise ConfigurationError(f"latent_dim={self.latent_dim} must be smaller than the input dimension {n_features}")
        if not self.mu_min < self.mu_max:
            raise ConfigurationError("mu_min must be below mu_max")
        return self

    def resolved_lr(self, n: int) -> float:
        if self.learning_rate is not None:
            return float(self.learning_rate)
        return float(np.clip(n * 1e-6, LR_FLOOR, LR_CAP))

    def resolved_gate_lr(self, n: int) -> float:
        if self.gate_learning_rate is not None:
            return float(self.gate_learning_rate)
        return self.resolved_lr(n)

    def resolved_batch(self, n: int) -> int:
        return int(min(n, self.batch_size or DEFAULT_BATCH_CAP))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_widths"] = list(self.hidden_widths)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PraeConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass
class PraeModel:
    net: DenseNet
    gates: G.GateBank
    config: PraeConfig
    training_log: list = field(default_factory=list)

    @property
    def n_samples(self) -> int:
        return self.gates.n

    def gate_values(self) -> np.ndarray:
        return G.deterministic_gate(self.gates.mu)


@dataclass
class AnomalyScores:
    scores: np.ndarray
    source: str  # "in_sample_gate" | "out_of_sample_recon"


@dataclass
class StepGradients:
    loss: float
    net_grads: list
    mu_grad: np.ndarray | None
    recon: np.ndarray


def init_model(X: np.ndarray, config: PraeConfig) -> PraeModel:
    X = np.asarray(X, dtype=np.float64)
    config.validate(X.shape[1])
    specs = mirrored_specs(X.shape[1], config.hidden_widths, config.latent_dim, config.activation, config.slope)
    init_seed, _, _ = np.random.SeedSequence(config.seed).spawn(3)
    net = init_dense_net(specs, config.latent_dim, np.random.default_rng(init_seed))
    mu_init = config.mu_max if config.variant == "ae" else config.mu_init
    bank = G.GateBank.initial(X.shape[0], config.sigma, mu_init, config.mu_min, config.mu_max)
    return PraeModel(net, bank, config)


def reconstruction_errors(net: DenseNet, X, normalize: bool = False) -> np.ndarray:
    """Per-row ``||x - x_hat||^2``, divided by ``||x||^2`` when ``normalize``."""
    recon, _ = forward(net, X)
    r = np.sum((recon - X) ** 2, axis=1)
    if normalize:
        r = r / _energy(X)
    return r


def _energy(X) -> np.ndarray:
    return np.maximum(np.sum(np.asarray(X) ** 2, axis=1), 1e-12)


def _net_grads(model: PraeModel, cache, out_grad) -> list:
    grads = backward(model.net, cache, out_grad)
    if not model.config.use_bias:
        # biases start at zero and stay there
        for g in grads[1::2]:
            g[...] = 0.0
    return grads


def step_gradients(model: PraeModel, X, rows, eps=None) -> StepGradients:
    """Loss and gradients on ``X[rows]`` for a fixed gate noise ``eps``.

    ``eps`` is ignored for the plain autoencoder variant.
    """
    cfg = model.config
    xb = X[rows]
    recon, cache = forward(model.net, xb)
    diff = recon - xb
    scale = 1.0 / _energy(xb) if cfg.normalize_recon else np.ones(xb.shape[0])
    r = np.sum(diff * diff, axis=1) * scale

    if cfg.variant == "ae":
        out_grad = 2.0 * diff * scale[:, None]
        return StepGradients(float(r.sum()), _net_grads(model, cache, out_grad), None, r)

    sample = G.gates_from_noise(model.gates.mu[rows], eps)
    reg = G.reg_l0 if cfg.variant == "l0" else G.reg_l1
    reg_value, reg_grad = reg(model.gates, cfg.lam, rows)
    loss = float(np.dot(sample.z, r)) - reg_value
    out_grad = 2.0 * diff * (sample.z * scale)[:, None]
    mu_grad = r * sample.pass_through - reg_grad
    return StepGradients(loss, _net_grads(model, cache, out_grad), mu_grad, r)


def prae_step(model: PraeModel, X, rows, adam: AdamState, mu_adam: RowAdamState | None, rng, epoch: int = 0) -> float:
    """One Monte-Carlo gradient step on the rows ``rows``; returns the batch loss."""
    rows = np.asarray(rows)
    eps = None
    if model.config.variant != "ae":
        eps = rng.normal(0.0, model.gates.sigma, size=rows.shape[0])
    with np.errstate(invalid="ignore", over="ignore"):
        # a non-finite loss is reported below with its epoch and sample
        sg = step_gradients(model, X, rows, eps)
    if not np.isfinite(sg.loss):
        bad = rows[np.flatnonzero(~np.isfinite(sg.recon))]
        sample = int(bad[0]) if bad.size else None
        raise TrainingError(f"non-finite loss at epoch {epoch} (sample {sample})", epoch, sample)
    adam_step(adam, model.net.parameters(), sg.net_grads)
    if sg.mu_grad is not None:
        row_adam_step(mu_adam, model.gates.mu, rows, sg.mu_grad)
        model.gates.clip()
    return sg.loss


def _as_matrix(data) -> np.ndarray:
    X = data.X if isinstance(data, LabeledDataset) else data
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"data must be 2-d, got shape {X.shape}")
    return X


def train_prae(data, config: PraeConfig, callback=None) -> PraeModel:
    """Train PRAE on all rows of ``data`` with shuffled mini-batches.

    Deterministic for a fixed ``config.seed``. ``callback(model, epoch)``,
    if given, runs after every epoch.
    """
    X = _as_matrix(data)
    if X.shape[0] < 2:
        raise ConfigurationError("training needs at least two rows")
    model = init_model(X, config)
    n = X.shape[0]
    lr = config.resolved_lr(n)
    batch = config.resolved_batch(n)
    _, shuffle_seed, noise_seed = np.random.SeedSequence(config.seed).spawn(3)
    shuffle_rng = np.random.default_rng(shuffle_seed)
    noise_rng = np.random.default_rng(noise_seed)
    adam = AdamState.like(model.net.parameters(), lr=lr)
    mu_adam = None if config.variant == "ae" else RowAdamState.like(model.gates.mu, lr=config.resolved_gate_lr(n))

    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch):
            total += prae_step(model, X, perm[start : start + batch], adam, mu_adam, noise_rng, epoch)
        gate = model.gate_values()
        model.training_log.append(
            {"epoch": epoch, "loss": total, "mean_gate": float(gate.mean()), "open_count": int(np.sum(gate >= config.thresh))}
        )
        if callback is not None:
            callback(model, epoch)
    if config.epochs:
        logger.debug("trained %d epochs, final log %s", config.epochs, model.training_log[-1])
    return model


def train_plain_ae(data, config: PraeConfig) -> PraeModel:
    """Plain autoencoder baseline: same trainer with gates fixed open and no regularizer."""
    cfg = PraeConfig(**{**config.to_dict(), "variant": "ae", "lam": 0.0})
    return train_prae(data, cfg)


def score_in_sample(model: PraeModel) -> AnomalyScores:
    """``1 - clamp(mu, 0, 1)``: higher means more anomalous."""
    if model.config.variant == "ae":
        raise ValueError("a plain autoencoder has no gates; score it by reconstruction error")
    return AnomalyScores(1.0 - model.gate_values(), "in_sample_gate")


def score_out_of_sample(model: PraeModel, new_data) -> AnomalyScores:
    X = _as_matrix(new_data)
    if X.shape[1] != model.net.input_dim:
        raise ShapeError(f"model expects {model.net.input_dim} columns, got {X.shape[1]}")
    return AnomalyScores(reconstruction_errors(model.net, X, model.config.normalize_recon), "out_of_sample_recon")


def classify(scores: AnomalyScores, thresh: float = 0.1) -> np.ndarray:
    """Outlier mask: gate value ``clamp(mu)`` strictly below ``thresh``."""
    s = scores.scores if isinstance(scores, AnomalyScores) else np.asarray(scores)
    return (1.0 - s) < thresh


def estimate_lambda_me(data) -> float:
    """Mean energy ``mean_i ||x_i||^2``; lambda below this value excludes the outliers."""
    X = _as_matrix(data)
    if X.shape[0] == 0:
        raise ValueError("empty data")
    return float(np.mean(np.sum(X**2, axis=1)))


def cell_seed(base_seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(base_seed, spawn_key=tuple(key)).generate_state(1)[0])


def lambda_sweep(train, val, lambda_grid, config: PraeConfig, repeats: int = 1, labels=None) -> list[dict]:
    """Train one model per (lambda, repeat) and record F1 and validation MSE.

    ``f1`` is the in-sample F1 of the ``clamp(mu) < thresh`` rule and
    ``max_f1`` the best F1 over all score thresholds; both are ``None``
    without labels. ``val_mse`` is the mean raw squared reconstruction
    error on ``val``.
    """
    grid = list(lambda_grid)
    if not grid:
        raise ValueError("lambda grid is empty")
    if repeats < 1:
        raise ValueError("repeats must be positive")
    if labels is None and isinstance(train, LabeledDataset):
        labels = train.labels
    X, X_val = _as_matrix(train), _as_matrix(val)
    me = estimate_lambda_me(X)
    rows = []
    for rep in range(repeats):
        for j, lam in enumerate(grid):
            cfg = PraeConfig(**{**config.to_dict(), "lam": float(lam), "seed": cell_seed(config.seed, rep, j)})
            model = train_prae(X, cfg)
            scores = score_in_sample(model)
            row = {"lambda": float(lam), "repeat": rep, "f1": None, "max_f1": None}
            if labels is not None and np.any(labels):
                row["f1"] = f1_score(classify(scores, cfg.thresh), labels)
                row["max_f1"] = max_f1(scores.scores, labels)[0]
            row["val_mse"] = float(np.mean(reconstruction_errors(model.net, X_val)))
            row["me_estimate"] = me
            row["open_count"] = int(np.sum(model.gate_values() >= cfg.thresh))
            rows.append(row)
    return rows
