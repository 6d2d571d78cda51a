import json

import pytest

from pbvp.config import ConfigError, load_config, parse_config


def test_valid_config():
    cfg = parse_config({"linear": {"sigma": "sin(t)", "M": 1}})
    assert str(cfg.get("linear", "sigma")) == "sin(t)"
    assert cfg.get("linear", "mu", 0.0) == 0.0


@pytest.mark.parametrize(
    "data, message",
    [
        ({"linear": {"sigma": "sin(t)"}}, "linear.M: required"),
        ({"linear": {"sigma": "sin(t)", "M": -1}}, "linear.M"),
        ({"linear": {"sigma": "sin(t)", "M": 1, "bogus": 1}}, "linear.bogus"),
        ({"numerics": {"n": 17}}, "numerics.n"),
        ({"mystery": {}}, "mystery"),
        ({"linear": {"sigma": "sin(t", "M": 1}}, "linear.sigma"),
    ],
)
def test_invalid_configs(data, message):
    with pytest.raises(ConfigError, match=message.replace(".", r"\.")):
        parse_config(data)


def test_load_config_reports_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_shipped_configs_parse():
    from pathlib import Path

    for path in sorted((Path(__file__).parents[1] / "configs").glob("*.json")):
        load_config(path)
        json.loads(path.read_text())
