"""Command-line interface: ``prae synth|train|score|eval|sweep|oracle|run``.

Exit codes: 0 on success, 2 on usage errors (argparse), 1 on runtime
errors. ``PRAE_SEED`` sets the default ``--seed``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import data as D
from .metrics import MetricError, evaluate
from .model import (
    VARIANTS,
    PraeConfig,
    TrainingError,
    estimate_lambda_me,
    lambda_sweep,
    score_in_sample,
    score_out_of_sample,
    train_prae,
)
from .nn import ConfigurationError, ShapeError
from .oracle import EnumerationTooLarge, equivalence_check, linear_oracle_config, oracle_instance
from .persistence import ModelFileError, RunRecord, config_hash, dumps, load_model, save_model
from .presets import PRESETS, auc_outcome, get_preset, rsr_outcome

log = logging.getLogger("prae")

RUNTIME_ERRORS = (
    D.DataError,
    MetricError,
    ModelFileError,
    TrainingError,
    ConfigurationError,
    ShapeError,
    EnumerationTooLarge,
    OSError,
    ValueError,
)


def _default_seed() -> int:
    raw = os.environ.get("PRAE_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"prae: PRAE_SEED must be an integer, got {raw!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> tuple[int, ...]:
    if text.strip() in ("", "none"):
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def read_dataset(path, label_column: str | None = "label") -> D.LabeledDataset:
    """Load a CSV, treating ``label_column`` as labels only when the header has it."""
    if label_column is not None:
        with open(path, newline="", encoding="utf-8") as fh:
            header = next(csv.reader(fh), [])
        if label_column not in [h.strip() for h in header]:
            label_column = None
    return D.load_csv(path, label_column)


def _write_rows(path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("" if row.get(k) is None else row[k]) for k in columns})


def _config_from_args(args, n_features: int | None = None) -> PraeConfig:
    base = get_preset(args.preset).config if getattr(args, "preset", None) else {}
    cfg = dict(base)
    for key, attr in [
        ("variant", "variant"),
        ("lam", "lam"),
        ("epochs", "epochs"),
        ("learning_rate", "lr"),
        ("gate_learning_rate", "gate_lr"),
        ("batch_size", "batch_size"),
        ("hidden_widths", "arch"),
        ("latent_dim", "latent"),
        ("activation", "activation"),
        ("sigma", "sigma"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "normalize_recon", False):
        cfg["normalize_recon"] = True
    if getattr(args, "no_bias", False):
        cfg["use_bias"] = False
    cfg["seed"] = args.seed
    return PraeConfig(**cfg).validate(n_features)


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    if args.kind == "linear":
        r = args.r
        if args.outliers is not None:
            if not 0 <= args.outliers < args.n:
                raise D.DataError(f"--outliers must lie in [0, {args.n}), got {args.outliers}")
            r = args.outliers / args.n
        data = D.gen_linear(args.n, args.dim, args.intrinsic, r, args.noise_var, seed=args.seed)
        if args.basis_out:
            D.save_matrix_csv(data.true_basis, args.basis_out)
    else:
        data = D.gen_swiss_roll(args.n_in, args.n_out, args.sigma2, seed=args.seed)
    D.save_csv(data, args.out)
    print(f"N={data.n} D={data.dim} outlier_fraction={data.labels.mean():.4f} -> {args.out}")
    return 0


# ---------------------------------------------------------------- train


def cmd_train(args) -> int:
    data = read_dataset(args.data, args.label_column)
    X = data.X
    params = None
    if args.standardize:
        X, params = D.standardize(X)
    config = _config_from_args(args, X.shape[1])
    start = time.perf_counter()
    try:
        model = train_prae(X, config)
    except TrainingError as exc:
        raise TrainingError(f"training diverged: {exc}", exc.epoch, exc.sample) from None
    elapsed = time.perf_counter() - start
    save_model(model, args.model_out, params)

    final = model.training_log[-1] if model.training_log else {"loss": float("nan"), "open_count": model.n_samples}
    print(f"final_loss={final['loss']:.6g} open_gates={final['open_count']}/{model.n_samples} -> {args.model_out}")
    if args.record_out:
        metrics = {}
        if data.labels is not None and data.labels.any() and not data.labels.all() and config.variant != "ae":
            metrics = evaluate(score_in_sample(model).scores, data.labels).to_dict()
        RunRecord(config.seed, config_hash(config), metrics, model.training_log, elapsed).save(args.record_out)
    return 0


# ---------------------------------------------------------------- score


def cmd_score(args) -> int:
    model, params = load_model(args.model)
    data = read_dataset(args.data, args.label_column)
    if args.mode == "in":
        if data.n != model.n_samples:
            raise ValueError(
                f"in-sample scores exist only for the {model.n_samples} training rows, but the data has {data.n}; "
                "use --mode out for new samples"
            )
        scores = score_in_sample(model).scores
    else:
        X = data.X if params is None else D.apply_standardize(params, data.X)
        scores = score_out_of_sample(model, X).scores
    rows = [{"row_index": i, "score": repr(float(s))} for i, s in enumerate(scores)]
    _write_rows(args.out, rows, ["row_index", "score"])
    print(f"wrote {len(rows)} {args.mode}-sample scores -> {args.out}")
    return 0


# ---------------------------------------------------------------- eval


def _read_scores(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "score" not in reader.fieldnames:
            raise D.DataError(f"{path}: expected a 'score' column")
        return np.array([float(row["score"]) for row in reader])


def _read_labels(args) -> np.ndarray:
    if args.labels:
        data = D.load_csv(args.labels)
        return data.X[:, 0] == 1.0
    data = read_dataset(args.data, args.label_column)
    if data.labels is None:
        raise D.DataError(f"{args.data}: no {args.label_column!r} column to evaluate against")
    return data.labels


def cmd_eval(args) -> int:
    if not (args.data or args.labels):
        raise ValueError("pass --data (with a label column) or --labels")
    scores = _read_scores(args.scores)
    labels = _read_labels(args)
    basis_true = D.load_csv(args.basis_true).X if args.basis_true else None
    basis_est = D.load_csv(args.basis_est).X if args.basis_est else None
    report = evaluate(scores, labels, basis_true, basis_est)
    text = dumps(report.to_dict())
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- sweep


def cmd_sweep(args) -> int:
    if args.preset:
        preset = get_preset(args.preset)
        train = preset.make_data(seed=args.seed)
        val = preset.make_validation(train, seed=args.seed + 1) if train.true_basis is not None else None
        if val is None:
            train, val = D.split(train, args.val_fraction, seed=args.seed)
        lambdas = args.lambdas or list(preset.lambdas)
    else:
        if not args.data:
            raise ValueError("pass --data or --preset")
        data = read_dataset(args.data, args.label_column)
        if args.val_data:
            train, val = data, read_dataset(args.val_data, args.label_column)
        else:
            train, val = D.split(data, args.val_fraction, seed=args.seed)
        lambdas = args.lambdas
    if not lambdas:
        raise ValueError("empty lambda grid")
    config = _config_from_args(args, train.dim)
    print(f"ME={estimate_lambda_me(train.X):.6g}")
    rows = lambda_sweep(train, val, lambdas, config, repeats=args.repeats)
    rows.sort(key=lambda r: (r["lambda"], r["repeat"]))
    _write_rows(args.out, rows, ["lambda", "repeat", "f1", "max_f1", "val_mse", "me_estimate", "open_count"])
    for lam in sorted(set(r["lambda"] for r in rows)):
        cell = [r for r in rows if r["lambda"] == lam]
        f1 = [r["f1"] for r in cell if r["f1"] is not None]
        med_f1 = f"{np.median(f1):.4f}" if f1 else "n/a"
        print(f"lambda={lam:g} median_f1={med_f1} median_val_mse={np.median([r['val_mse'] for r in cell]):.6g}")
    return 0


# ---------------------------------------------------------------- oracle


def cmd_oracle(args) -> int:
    lam = 2.0 if args.lam is None else args.lam
    rows = []
    for rep in range(args.repeats):
        seed = args.seed + rep
        X, _ = oracle_instance(args.n, args.dim, args.intrinsic, seed=seed)
        cfg = linear_oracle_config(args.intrinsic, lam, seed=seed)
        if args.epochs is not None:
            cfg.epochs = args.epochs
        report = equivalence_check(X, lam, args.intrinsic, cfg)
        row = {"repeat": rep, "seed": seed, **report.to_dict()}
        rows.append(row)
        print(f"repeat={rep} match={row['match']} gap={report.gap:.3g}")
    rate = np.mean([r["match"] for r in rows])
    print(f"match_rate={rate:.3f} ({sum(r['match'] for r in rows)}/{len(rows)})")
    if args.out:
        Path(args.out).write_text(dumps({"lambda": lam, "match_rate": float(rate), "repeats": rows}), encoding="utf-8")
    return 0


# ---------------------------------------------------------------- run (preset experiments)


def cmd_run(args) -> int:
    preset = get_preset(args.preset)
    if preset.name == "fig3":
        raise ValueError("the fig3 preset is a lambda sweep; use `prae sweep --preset fig3`")
    overrides = {"r": args.r} if args.r is not None and preset.data["kind"] == "linear" else {}
    rows = []
    for rep in range(args.seeds):
        seed = args.seed + rep
        data = preset.make_data(seed=seed, **overrides)
        cfg = _config_from_args(argparse.Namespace(**{**vars(args), "seed": seed}), data.dim)
        model = train_prae(data.X, cfg)
        outcome = rsr_outcome(model, data) if data.true_basis is not None else auc_outcome(model, data)
        rows.append({"seed": seed, "variant": cfg.variant, **outcome})
        print(json.dumps(rows[-1], sort_keys=True))
    if "auc" in rows[0]:
        print(f"median_auc={np.median([r['auc'] for r in rows]):.4f}")
    else:
        print(f"successes={sum(r['success'] for r in rows)}/{len(rows)}")
    if args.out:
        _write_rows(args.out, rows, list(rows[0]))
    return 0


# ---------------------------------------------------------------- parser


def _add_training_args(p, defaults: bool = True):
    p.add_argument("--variant", choices=VARIANTS, default="l1" if defaults else None)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0 if defaults else None)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float, help="network learning rate (default: N*1e-6 clipped to [1e-3, 1e-2])")
    p.add_argument("--gate-lr", type=float, help="learning rate of the gate means (default: --lr)")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--arch", type=_ints, help="comma-separated hidden widths, e.g. 10,10,10,10,10")
    p.add_argument("--latent", type=int)
    p.add_argument("--activation", choices=("leaky_relu", "tanh", "relu", "linear"))
    p.add_argument("--sigma", type=float)
    p.add_argument("--normalize-recon", action="store_true")
    p.add_argument("--no-bias", action="store_true", help="train a bias-free network")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prae", description="Probabilistic robust autoencoder for anomaly detection.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    seed = _default_seed()

    p = sub.add_parser("synth", help="generate a synthetic dataset as CSV")
    p.add_argument("kind", choices=("linear", "swiss"))
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--intrinsic", type=int, default=2)
    p.add_argument("--outliers", type=int, help="number of outliers (linear); overrides --r")
    p.add_argument("--r", type=float, default=0.25, help="outlier fraction (linear)")
    p.add_argument("--noise-var", type=float, default=1e-8)
    p.add_argument("--basis-out", help="also write the true basis (linear)")
    p.add_argument("--n-in", type=int, default=1000)
    p.add_argument("--n-out", type=int, default=200)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model and save it as JSON")
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label", help="column excluded from features when present")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a preset's training config")
    _add_training_args(p, defaults=False)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--model-out", required=True)
    p.add_argument("--record-out", help="write a JSON run record")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("score", help="write per-row anomaly scores")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-column", default="label")
    p.add_argument("--mode", choices=("in", "out"), default="in")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="AUC, max-F1 and optional subspace angle")
    p.add_argument("--scores", required=True)
    p.add_argument("--data", help="CSV with a label column")
    p.add_argument("--labels", help="single-column 0/1 CSV")
    p.add_argument("--label-column", default="label")
    p.add_argument("--basis-true")
    p.add_argument("--basis-est")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="lambda sweep: F1 and validation MSE per lambda")
    p.add_argument("--data")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--label-column", default="label")
    p.add_argument("--val-data")
    p.add_argument("--val-fraction", type=float, default=0.5)
    p.add_argument("--lambdas", type=_floats)
    p.add_argument("--repeats", type=int, default=1)
    _add_training_args(p, defaults=False)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="compare PRAE with exhaustive search on a small linear instance")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--dim", type=int, default=3)
    p.add_argument("--intrinsic", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="run a preset experiment over several seeds")
    p.add_argument("--preset", required=True, choices=sorted(PRESETS))
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--r", type=float, help="outlier fraction for the rsr preset")
    _add_training_args(p, defaults=False)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except RUNTIME_ERRORS as exc:
        print(f"prae {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
