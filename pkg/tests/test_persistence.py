import numpy as np
import pytest

from prae.data import standardize
from prae.model import PraeConfig, train_prae
from prae.persistence import ModelFileError, RunRecord, config_hash, load_model, save_model


def _model():
    X = np.random.default_rng(0).normal(size=(15, 4))
    return train_prae(X, PraeConfig(hidden_widths=(3,), latent_dim=2, activation="tanh", epochs=4, seed=2)), X


def test_round_trip_exact_and_byte_identical(tmp_path):
    model, X = _model()
    _, params = standardize(X)
    save_model(model, tmp_path / "a.json", params)
    loaded, p2 = load_model(tmp_path / "a.json")
    for a, b in zip(model.net.parameters(), loaded.net.parameters()):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(model.gates.mu, loaded.gates.mu)
    np.testing.assert_array_equal(params.std, p2.std)
    assert loaded.config == model.config
    save_model(loaded, tmp_path / "b.json", p2)
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_bad_files(tmp_path):
    p = tmp_path / "m.json"
    p.write_text("not json")
    with pytest.raises(ModelFileError):
        load_model(p)
    p.write_text('{"format_version": 99}')
    with pytest.raises(ModelFileError, match="format_version"):
        load_model(p)
    p.write_text('{"format_version": 1}')
    with pytest.raises(ModelFileError, match="malformed"):
        load_model(p)


def test_run_record(tmp_path):
    model, _ = _model()
    rec = RunRecord(2, config_hash(model.config), {"auc": 0.5}, model.training_log, 0.1)
    rec.save(tmp_path / "r.json")
    assert '"config_hash"' in (tmp_path / "r.json").read_text()
    assert config_hash(model.config) == config_hash(PraeConfig.from_dict(model.config.to_dict()))
