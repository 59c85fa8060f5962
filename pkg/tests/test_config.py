import json

import pytest

from mmsense.config import DEFAULTS, config_hash, load_config
from mmsense.errors import ConfigError


def _write(tmp_path, obj) -> str:
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(obj))
    return str(path)


def test_defaults_returned_as_independent_copy():
    a = load_config(None)
    a["frame"]["sample_rate"] = 123.0
    b = load_config(None)
    assert b["frame"]["sample_rate"] == 1_000_000.0
    assert DEFAULTS["frame"]["sample_rate"] == 1_000_000.0


def test_partial_override_keeps_siblings(tmp_path):
    cfg = load_config(_write(tmp_path, {"channel": {"snr_db": 3.0}}))
    assert cfg["channel"]["snr_db"] == 3.0
    assert cfg["channel"]["offset_hz"] == 0.0  # untouched sibling
    assert cfg["grid"]["cit"] == 0.1


def test_shipped_protocol_constants():
    cfg = load_config(None)
    # the default experiment: 100 samples x 3 gestures x 2 scenarios = 600
    assert cfg["simulate"]["n_per_gesture"] * 3 * len(cfg["simulate"]["scenarios"]) == 600
    assert cfg["dataset"]["n_train_per_class"] == 50
    assert cfg["classifier"]["batch_size"] == 16
    assert cfg["grid"]["cit"] == 0.1
    assert cfg["burst"]["n_frames"] == 9000
    assert cfg["sweep"]["durations"] == [0.25, 0.5, 1.0, 1.5, 2.0]


def test_unknown_nested_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="grid"):
        load_config(_write(tmp_path, {"grid": {"citt": 0.2}}))


def test_type_enforcement(tmp_path):
    with pytest.raises(ConfigError, match="must be a number"):
        load_config(_write(tmp_path, {"channel": {"snr_db": "high"}}))
    with pytest.raises(ConfigError, match="must be a string"):
        load_config(_write(tmp_path, {"dataset": {"scenario": 1}}))
    with pytest.raises(ConfigError, match="must be a list"):
        load_config(_write(tmp_path, {"sweep": {"durations": 2.0}}))
    with pytest.raises(ConfigError, match="must be a section"):
        load_config(_write(tmp_path, {"frame": 216.0}))
    with pytest.raises(ConfigError, match="must be a number"):
        load_config(_write(tmp_path, {"channel": {"snr_db": True}}))


def test_non_object_json_rejected(tmp_path):
    with pytest.raises(ConfigError, match="JSON object"):
        load_config(_write(tmp_path, [1, 2, 3]))


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(str(path))


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.json"))


def test_hash_stable_and_sensitive(tmp_path):
    a = load_config(None)
    b = load_config(None)
    assert config_hash(a) == config_hash(b)
    assert len(config_hash(a)) == 64
    c = load_config(_write(tmp_path, {"channel": {"snr_db": 10.000001}}))
    assert config_hash(c) != config_hash(a)
