import json

from germlab.utils.config_manager import DEFAULTS, ConfigManager


def test_schema_defaults():
    config = ConfigManager.from_schema()
    assert config.get_value("order_settings.horizon") == 10000
    assert config.get_value("order_settings.compare_mode") == "auto"
    assert config.get_value("battery_settings.max_degree") == 3
    assert config.validate_config() == []


def test_missing_schema_falls_back_to_builtin_defaults(tmp_path):
    config = ConfigManager.from_schema(tmp_path / "absent.json")
    assert config.config == DEFAULTS
    assert config.config is not DEFAULTS


def test_get_value_with_missing_path():
    config = ConfigManager.from_schema()
    assert config.get_value("order_settings.nope", 7) == 7
    assert config.get_value("order_settings.horizon.deeper", "x") == "x"
    assert config.get_module_config("no_such_module") == {}


def test_merged_keeps_sibling_keys():
    config = ConfigManager.from_schema().merged({"order_settings": {"horizon": 50}})
    assert config.get_value("order_settings.horizon") == 50
    assert config.get_value("order_settings.nmax") == 1024


def test_load_override_file(tmp_path):
    path = tmp_path / "override.json"
    path.write_text(json.dumps({"triage_settings": {"prefix_length": 200}}), encoding="utf-8")
    config = ConfigManager.load(path)
    assert config.get_value("triage_settings.prefix_length") == 200
    assert ConfigManager.load().get_value("triage_settings.prefix_length") == 1000


def test_validate_reports_wrong_types():
    config = ConfigManager.from_schema().merged({"order_settings": {"horizon": "big", "nmax": True}})
    failures = config.validate_config()
    assert len(failures) == 2
    assert any("order_settings.horizon" in f for f in failures)
    assert any("order_settings.nmax" in f for f in failures)


def test_validate_reports_missing_required():
    failures = ConfigManager({}).validate_config({"a.b": {"type": int, "required": True}})
    assert failures == ["必需的配置项 a.b 不存在"]
