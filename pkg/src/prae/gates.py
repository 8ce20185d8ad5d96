"""Per-sample stochastic gates ``z = clamp(mu + eps, 0, 1)`` with ``eps ~ N(0, sigma^2)``.

Closed-form expectations and the two regularizers (expected l0 and l1
norm of the gate vector) with their analytic gradients in ``mu``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

_SQRT2 = np.sqrt(2.0)
_SQRT2PI = np.sqrt(2.0 * np.pi)

MU_MIN = -1.0
MU_MAX = 2.0


def normal_cdf(x):
    """Standard normal CDF via the complementary error function (accurate in both tails)."""
    return 0.5 * erfc(-np.asarray(x, dtype=np.float64) / _SQRT2)


def normal_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-0.5 * x * x) / _SQRT2PI


@dataclass
class GateBank:
    mu: np.ndarray
    sigma: float = 0.5
    mu_min: float = MU_MIN
    mu_max: float = MU_MAX

    def __post_init__(self):
        self.mu = np.asarray(self.mu, dtype=np.float64)
        if self.mu.ndim != 1:
            raise ValueError("mu must be one-dimensional")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def initial(cls, n: int, sigma: float = 0.5, mu_init: float = 0.5, mu_min=MU_MIN, mu_max=MU_MAX) -> "GateBank":
        return cls(np.full(n, float(mu_init)), sigma, mu_min, mu_max)

    @property
    def n(self) -> int:
        return self.mu.shape[0]

    def clip(self) -> None:
        np.clip(self.mu, self.mu_min, self.mu_max, out=self.mu)


@dataclass
class GateSample:
    z: np.ndarray
    pass_through: np.ndarray
    eps: np.ndarray


def gates_from_noise(mu, eps) -> GateSample:
    u = np.asarray(mu, dtype=np.float64) + eps
    z = np.clip(u, 0.0, 1.0)
    return GateSample(z, (u > 0.0) & (u < 1.0), np.asarray(eps))


def sample_gates(bank: GateBank, rng, rows=None) -> GateSample:
    """Draw one gate realisation for all samples, or only for ``rows``."""
    rng = np.random.default_rng(rng)
    mu = bank.mu if rows is None else bank.mu[rows]
    eps = rng.normal(0.0, bank.sigma, size=mu.shape)
    return gates_from_noise(mu, eps)


def expected_gate(mu, sigma):
    """E[clamp(mu + eps, 0, 1)] in closed form."""
    mu = np.asarray(mu, dtype=np.float64)
    s = float(sigma)
    tail = s / _SQRT2PI * (np.exp(-(mu**2) / (2 * s * s)) - np.exp(-((1 - mu) ** 2) / (2 * s * s)))
    value = tail + (mu - 1) * normal_cdf((1 - mu) / s) - mu * normal_cdf(-mu / s) + 1.0
    # cancellation can leave the sum a few ulps outside [0, 1]
    return np.clip(value, 0.0, 1.0)


def expected_gate_grad(mu, sigma):
    """d E[z] / d mu, which equals P(0 < mu + eps < 1)."""
    mu = np.asarray(mu, dtype=np.float64)
    return normal_cdf((1 - mu) / sigma) - normal_cdf(-mu / sigma)


def open_probability(mu, sigma):
    """P(z > 0) = Phi(mu / sigma)."""
    return normal_cdf(np.asarray(mu, dtype=np.float64) / sigma)


def deterministic_gate(mu):
    return np.clip(mu, 0.0, 1.0)


def reg_l0(bank: GateBank, lam: float, rows=None):
    """``lam * E||z||_0`` and its gradient in mu (restricted to ``rows`` if given)."""
    mu = bank.mu if rows is None else bank.mu[rows]
    value = lam * float(np.sum(open_probability(mu, bank.sigma)))
    grad = lam * normal_pdf(mu / bank.sigma) / bank.sigma
    return value, grad


def reg_l1(bank: GateBank, lam: float, rows=None):
    """``lam * E||z||_1`` and its gradient in mu (restricted to ``rows`` if given)."""
    mu = bank.mu if rows is None else bank.mu[rows]
    value = lam * float(np.sum(expected_gate(mu, bank.sigma)))
    grad = lam * expected_gate_grad(mu, bank.sigma)
    return value, grad
