"""Synthetic generators, CSV I/O, standardization and splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import gammaln


class DataError(ValueError):
    pass


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray | None = None
    true_basis: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if self.X.ndim != 2:
            raise DataError(f"X must be 2-d, got shape {self.X.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=bool)
            if self.labels.shape != (self.X.shape[0],):
                raise DataError(f"labels must have length {self.X.shape[0]}, got {self.labels.shape}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def subset(self, rows) -> "LabeledDataset":
        return replace(self, X=self.X[rows], labels=None if self.labels is None else self.labels[rows])


def _mean_chi(d: int) -> float:
    # E||g|| for g ~ N(0, I_d)
    return float(np.sqrt(2.0) * np.exp(gammaln((d + 1) / 2) - gammaln(d / 2)))


def random_basis(D: int, d: int, rng) -> np.ndarray:
    """Orthonormal basis of the column space of a random Gaussian ``D x d`` matrix."""
    q, r = np.linalg.qr(rng.normal(size=(D, d)))
    return q * np.sign(np.diag(r))


def gen_linear(N: int, D: int, d: int, r: float = 0.0, noise_var: float = 1e-8, seed=0, basis=None) -> LabeledDataset:
    """Inliers on a random ``d``-dimensional subspace of R^D plus isotropic Gaussian outliers.

    Inliers are standard Gaussian points projected onto the subspace and
    rescaled so their expected norm is 1. Outliers are ``N(0, I/D)``, which
    gives them the same expected squared norm. Pass ``basis`` to draw more
    samples from the subspace of an existing dataset.
    """
    if d >= D:
        raise DataError(f"intrinsic dimension d={d} must be smaller than D={D}")
    if not 0 <= r < 1:
        raise DataError(f"outlier fraction must lie in [0, 1), got {r}")
    if noise_var < 0:
        raise DataError("noise_var must be non-negative")
    rng = np.random.default_rng(seed)
    if basis is None:
        basis = random_basis(D, d, rng)
    basis = np.asarray(basis, dtype=np.float64)
    if basis.shape != (D, d):
        raise DataError(f"basis must have shape ({D}, {d}), got {basis.shape}")

    n_out = int(np.floor(r * N))
    n_in = N - n_out
    g = rng.normal(size=(n_in, D))
    inliers = (g @ basis) @ basis.T / _mean_chi(d)
    outliers = rng.normal(0.0, np.sqrt(1.0 / D), size=(n_out, D))
    X = np.vstack([inliers, outliers]) + rng.normal(0.0, np.sqrt(noise_var), size=(N, D))
    labels = np.r_[np.zeros(n_in, bool), np.ones(n_out, bool)]
    perm = rng.permutation(N)
    meta = {"kind": "linear", "N": N, "D": D, "d": d, "r": r, "noise_var": noise_var, "seed": seed}
    return LabeledDataset(X[perm], labels[perm], basis, meta)


def swiss_roll_map(t, h) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    return np.column_stack([t * np.cos(t), np.broadcast_to(h, t.shape), t * np.sin(t)])


def gen_swiss_roll(n_in: int = 1000, n_out: int = 200, sigma_n2: float = 1.0, seed=0) -> LabeledDataset:
    """Narrow swiss roll in R^3 with ``N(0, sigma_n2 I_3)`` outliers."""
    if n_in < 0 or n_out < 0:
        raise DataError("sample counts must be non-negative")
    if not sigma_n2 > 0:
        raise DataError("sigma_n2 must be positive")
    rng = np.random.default_rng(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n_in)
    h = rng.uniform(0.0, 0.1, size=n_in)
    inliers = swiss_roll_map(t, h)
    outliers = rng.normal(0.0, np.sqrt(sigma_n2), size=(n_out, 3))
    X = np.vstack([inliers, outliers])
    labels = np.r_[np.zeros(n_in, bool), np.ones(n_out, bool)]
    perm = rng.permutation(n_in + n_out)
    meta = {"kind": "swiss", "n_in": n_in, "n_out": n_out, "sigma_n2": sigma_n2, "seed": seed}
    return LabeledDataset(X[perm], labels[perm], None, meta)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: str | None = None) -> LabeledDataset:
    """Read a comma-separated numeric table.

    A header is assumed when any cell of the first row is non-numeric.
    ``label_column`` (a header name, or a 0-based index for header-less
    files) is parsed as 0/1 and removed from ``X``.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: empty file")

    first = [c.strip() for c in rows[0]]
    has_header = not all(_is_number(c) for c in first)
    header = first if has_header else [f"f{j}" for j in range(len(first))]
    body = rows[1:] if has_header else rows
    offset = 2 if has_header else 1

    label_idx = None
    if label_column is not None:
        if label_column in header:
            label_idx = header.index(label_column)
        elif not has_header and str(label_column).isdigit() and int(label_column) < len(header):
            label_idx = int(label_column)
        else:
            raise DataError(f"{path}: label column {label_column!r} not found in header {header}")

    feature_cols = [j for j in range(len(header)) if j != label_idx]
    X = np.empty((len(body), len(feature_cols)))
    labels = np.empty(len(body), dtype=bool) if label_idx is not None else None
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + offset} has {len(row)} cells, expected {len(header)}")
        for k, j in enumerate(feature_cols):
            try:
                X[i, k] = float(row[j])
            except ValueError:
                raise DataError(f"{path}: non-numeric value {row[j]!r} at row {i + offset}, column {header[j]}") from None
        if label_idx is not None:
            cell = row[label_idx].strip()
            if cell not in ("0", "1", "0.0", "1.0"):
                raise DataError(f"{path}: label must be 0 or 1, got {cell!r} at row {i + offset}")
            labels[i] = float(cell) == 1.0
    meta = {"source": str(path), "columns": [header[j] for j in feature_cols]}
    return LabeledDataset(X, labels, None, meta)


def save_csv(data: LabeledDataset, path) -> None:
    """Write ``f0..f{D-1}`` columns (plus ``label`` when present) with round-trip float formatting."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"f{j}" for j in range(data.dim)]
        if data.labels is not None:
            header.append("label")
        w.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.X[i]]
            if data.labels is not None:
                row.append("1" if data.labels[i] else "0")
            w.writerow(row)


def save_matrix_csv(M, path) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([repr(float(v)) for v in row])


@dataclass
class StandardizeParams:
    mean: np.ndarray
    std: np.ndarray


STD_FLOOR = 1e-12


def standardize(X):
    X = np.asarray(X, dtype=np.float64)
    params = StandardizeParams(X.mean(axis=0), np.maximum(X.std(axis=0), STD_FLOOR))
    return apply_standardize(params, X), params


def apply_standardize(params: StandardizeParams, X):
    return (np.asarray(X, dtype=np.float64) - params.mean) / params.std


def split(data: LabeledDataset, holdout_fraction: float = 0.5, seed=0):
    """Shuffled train/holdout split; labels travel with their rows."""
    if not 0 < holdout_fraction < 1:
        raise DataError(f"holdout_fraction must lie in (0, 1), got {holdout_fraction}")
    perm = np.random.default_rng(seed).permutation(data.n)
    n_hold = int(round(holdout_fraction * data.n))
    return data.subset(np.sort(perm[n_hold:])), data.subset(np.sort(perm[:n_hold]))
