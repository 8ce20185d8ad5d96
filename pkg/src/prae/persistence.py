"""JSON model files and run records.

Floats are written with Python's shortest round-trip ``repr``, so
``load_model(save_model(m))`` reproduces every number exactly and
re-saving gives a byte-identical file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import StandardizeParams
from .gates import GateBank
from .model import PraeConfig, PraeModel
from .nn import DenseNet, Layer

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=False) + "\n"


def _matrix(a) -> list:
    return np.asarray(a, dtype=np.float64).tolist()


def model_to_dict(model: PraeModel, standardize: StandardizeParams | None = None) -> dict:
    net = model.net
    doc = {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "net": {
            "n_encoder": net.n_encoder,
            "layers": [
                {"W": _matrix(l.W), "b": _matrix(l.b), "activation": l.activation, "slope": float(l.slope)}
                for l in net.layers
            ],
        },
        "gates": {
            "mu": _matrix(model.gates.mu),
            "sigma": float(model.gates.sigma),
            "mu_min": float(model.gates.mu_min),
            "mu_max": float(model.gates.mu_max),
        },
        "standardize": None,
    }
    if standardize is not None:
        doc["standardize"] = {"mean": _matrix(standardize.mean), "std": _matrix(standardize.std)}
    return doc


def model_from_dict(doc: dict) -> tuple[PraeModel, StandardizeParams | None]:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model format_version {version!r}; expected {FORMAT_VERSION}")
    try:
        config = PraeConfig.from_dict(doc["config"])
        layers = []
        for spec in doc["net"]["layers"]:
            W = np.array(spec["W"], dtype=np.float64).reshape(len(spec["W"]), -1)
            layers.append(Layer(W, np.array(spec["b"], dtype=np.float64), spec["activation"], float(spec["slope"])))
        net = DenseNet(layers, int(doc["net"]["n_encoder"]))
        g = doc["gates"]
        bank = GateBank(np.array(g["mu"], dtype=np.float64), float(g["sigma"]), float(g["mu_min"]), float(g["mu_max"]))
        std = doc.get("standardize")
        params = None
        if std is not None:
            params = StandardizeParams(np.array(std["mean"], dtype=np.float64), np.array(std["std"], dtype=np.float64))
    except (KeyError, TypeError) as exc:
        raise ModelFileError(f"malformed model file: {exc}") from None
    return PraeModel(net, bank, config), params


def save_model(model: PraeModel, path, standardize: StandardizeParams | None = None) -> None:
    Path(path).write_text(dumps(model_to_dict(model, standardize)), encoding="utf-8")


def load_model(path) -> tuple[PraeModel, StandardizeParams | None]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(doc)


def config_hash(config: PraeConfig) -> str:
    return hashlib.sha256(dumps(config.to_dict()).encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    seed: int
    config_hash: str
    metrics: dict = field(default_factory=dict)
    training_log: list = field(default_factory=list)
    wall_clock: float = 0.0

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "config_hash": self.config_hash,
            "metrics": self.metrics,
            "training_log": self.training_log,
            "wall_clock": self.wall_clock,
        }

    def save(self, path) -> None:
        Path(path).write_text(dumps(self.to_dict()), encoding="utf-8")
