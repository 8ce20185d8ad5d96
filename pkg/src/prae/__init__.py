"""Probabilistic robust autoencoder (PRAE) for unsupervised anomaly detection."""

from .data import LabeledDataset, gen_linear, gen_swiss_roll, load_csv, save_csv, split, standardize
from .estimator import PRAE
from .gates import GateBank, expected_gate, open_probability, reg_l0, reg_l1
from .metrics import EvalReport, max_f1, roc_auc, roc_curve, subspace_angle
from .model import (
    PraeConfig,
    PraeModel,
    estimate_lambda_me,
    lambda_sweep,
    score_in_sample,
    score_out_of_sample,
    train_plain_ae,
    train_prae,
)
from .oracle import brute_force_rae_linear, equivalence_check

__version__ = "0.1.0"

__all__ = [
    "PRAE",
    "EvalReport",
    "GateBank",
    "LabeledDataset",
    "PraeConfig",
    "PraeModel",
    "brute_force_rae_linear",
    "equivalence_check",
    "estimate_lambda_me",
    "expected_gate",
    "gen_linear",
    "gen_swiss_roll",
    "lambda_sweep",
    "load_csv",
    "max_f1",
    "open_probability",
    "reg_l0",
    "reg_l1",
    "roc_auc",
    "roc_curve",
    "save_csv",
    "score_in_sample",
    "score_out_of_sample",
    "split",
    "standardize",
    "subspace_angle",
    "train_plain_ae",
    "train_prae",
]
