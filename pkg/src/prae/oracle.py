"""Exhaustive solver for the deterministic robust-AE objective with a linear AE.

For a fixed inclusion vector ``b`` the best rank-``k`` linear autoencoder on
the selected rows leaves the PCA residual (sum of trailing squared singular
values), so ``L_d(b) = residual(b) - lam * |b|`` can be minimized by
enumerating all ``2^N`` subsets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import PraeConfig, train_prae

MAX_ENUMERATION = 20
_CHUNK = 4096


class EnumerationTooLarge(ValueError):
    pass


@dataclass
class RaeOracleResult:
    best_b: np.ndarray
    best_loss: float
    all_subset_losses: list | None = None


@dataclass
class EquivalenceReport:
    prae_selection: np.ndarray
    oracle_selection: np.ndarray
    ld_prae: float
    ld_oracle: float
    match: bool
    gates: np.ndarray = field(repr=False, default=None)

    @property
    def gap(self) -> float:
        return self.ld_prae - self.ld_oracle

    def to_dict(self) -> dict:
        return {
            "match": bool(self.match),
            "prae_selection": self.prae_selection.astype(int).tolist(),
            "oracle_selection": self.oracle_selection.astype(int).tolist(),
            "ld_prae": self.ld_prae,
            "ld_oracle": self.ld_oracle,
            "gap": self.gap,
        }


def subset_residual(X, b, k: int, center: bool = False) -> float:
    """Squared distance of the selected rows to their best rank-``k`` (affine if ``center``) subspace."""
    Xs = np.asarray(X, dtype=np.float64)[np.asarray(b, dtype=bool)]
    if Xs.shape[0] == 0:
        return 0.0
    if center:
        Xs = Xs - Xs.mean(axis=0)
    s = np.linalg.svd(Xs, compute_uv=False)
    return float(np.sum(s[k:] ** 2))


def rae_loss(X, b, lam: float, k: int, center: bool = False) -> float:
    b = np.asarray(b, dtype=bool)
    return subset_residual(X, b, k, center) - lam * int(b.sum())


def _masks_to_b(masks: np.ndarray, n: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(n)) & 1).astype(np.float64)


def _chunk_residuals(X, K, B, k, center):
    """Residuals for every row of the 0/1 selection matrix ``B``."""
    n, D = X.shape
    counts = B.sum(axis=1)
    if D <= n:
        # feature-space Gram: sum_i b_i x_i x_i^T
        outer = np.einsum("ij,ik->ijk", X, X).reshape(n, D * D)
        gram = (B @ outer).reshape(-1, D, D)
        if center:
            s = B @ X
            safe = np.maximum(counts, 1.0)
            gram = gram - np.einsum("cj,ck->cjk", s, s) / safe[:, None, None]
    else:
        # sample-space Gram restricted to the selection
        if center:
            safe = np.maximum(counts, 1.0)
            C = B[:, :, None] * np.eye(n)[None] - np.einsum("ci,cj->cij", B, B) / safe[:, None, None]
        else:
            C = B[:, :, None] * np.eye(n)[None]
        gram = C @ K @ C
    ev = np.linalg.eigvalsh(gram)
    ev = np.clip(ev, 0.0, None)
    top = ev[:, ::-1][:, :k].sum(axis=1)
    return np.clip(ev.sum(axis=1) - top, 0.0, None)


def brute_force_rae_linear(X, lam: float, k: int, center: bool = False, keep_table: bool = False, max_n: int = MAX_ENUMERATION) -> RaeOracleResult:
    """Minimize ``residual(b) - lam * |b|`` over all ``b`` in ``{0,1}^N``.

    Losses within a small tolerance of the minimum count as ties; ties go
    to the smallest selection, then to the lexicographically smallest ``b``.
    """
    X = np.asarray(X, dtype=np.float64)
    n, D = X.shape
    if n > max_n:
        raise EnumerationTooLarge(f"refusing to enumerate 2^{n} subsets; at most {max_n} rows are supported")
    if not 0 < k < D:
        raise ValueError(f"k must satisfy 0 < k < D={D}, got {k}")
    K = X @ X.T
    total = 1 << n
    losses = np.empty(total)
    sizes = np.empty(total, dtype=np.int64)
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        B = _masks_to_b(masks, n)
        res = _chunk_residuals(X, K, B, k, center)
        sizes[masks] = B.sum(axis=1).astype(np.int64)
        losses[masks] = res - lam * sizes[masks]

    tol = 1e-9 * max(1.0, float(np.trace(K)), abs(lam) * n)
    tied = np.flatnonzero(losses <= losses.min() + tol)
    tied = tied[sizes[tied] == sizes[tied].min()]
    # lexicographic order on (b[0], b[1], ...) == order on bit-reversed masks
    b_tied = _masks_to_b(tied, n).astype(bool)
    order = np.lexsort(b_tied.T[::-1])
    best = tied[order[0]]
    best_b = _masks_to_b(np.array([best]), n)[0].astype(bool)
    table = None
    if keep_table:
        table = [(_masks_to_b(np.array([m]), n)[0].astype(bool), float(losses[m])) for m in range(total)]
    return RaeOracleResult(best_b, float(losses[best]), table)


def oracle_instance(n: int = 8, dim: int = 3, intrinsic: int = 1, n_out: int | None = None, outlier_norm: float = 3.0, seed=0):
    """Inliers exactly on a random ``intrinsic``-dim subspace, outliers in its orthogonal complement.

    Inlier coordinates have magnitudes in [2, 4] so the inlier subspace
    dominates; each outlier has squared residual ``outlier_norm**2``.
    Returns ``(X, labels)`` with ``labels`` True for outliers.
    """
    if intrinsic >= dim:
        raise ValueError("intrinsic dimension must be smaller than dim")
    rng = np.random.default_rng(seed)
    n_out = max(1, n // 4) if n_out is None else n_out
    n_in = n - n_out
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    basis, comp = q[:, :intrinsic], q[:, intrinsic:]
    coef = rng.uniform(2.0, 4.0, size=(n_in, intrinsic)) * rng.choice([-1.0, 1.0], size=(n_in, intrinsic))
    dirs = rng.normal(size=(n_out, dim - intrinsic))
    dirs *= outlier_norm / np.linalg.norm(dirs, axis=1, keepdims=True)
    X = np.vstack([coef @ basis.T, dirs @ comp.T])
    labels = np.r_[np.zeros(n_in, bool), np.ones(n_out, bool)]
    perm = rng.permutation(n)
    return X[perm], labels[perm]


def linear_oracle_config(k: int, lam: float, seed: int = 0, **overrides) -> PraeConfig:
    """Bias-free linear AE, the model class for which the origin-centred PCA residual is optimal."""
    base = dict(
        variant="l1", lam=lam, epochs=2000, learning_rate=0.2, gate_learning_rate=5e-2,
        hidden_widths=(), latent_dim=k, activation="linear", use_bias=False, seed=seed,
    )
    base.update(overrides)
    return PraeConfig(**base)


def equivalence_check(X, lam: float, k: int, config: PraeConfig | None = None, center: bool = False) -> EquivalenceReport:
    """Train PRAE with a linear AE and compare its gate selection with the exhaustive optimum."""
    X = np.asarray(X, dtype=np.float64)
    oracle = brute_force_rae_linear(X, lam, k, center)
    config = config or linear_oracle_config(k, lam)
    model = train_prae(X, config)
    gates = model.gate_values()
    selected = gates >= config.thresh
    ld_prae = rae_loss(X, selected, lam, k, center)
    return EquivalenceReport(selected, oracle.best_b, ld_prae, oracle.best_loss, bool(np.array_equal(selected, oracle.best_b)), gates)
