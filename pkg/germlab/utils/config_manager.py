# 配置管理器 - 从配置模式加载默认值、合并覆盖项并验证

import json
import logging
import pathlib
from typing import Any, Dict, List, TypeVar, Union

T = TypeVar("T")
logger = logging.getLogger("config_manager")

SCHEMA_PATH = pathlib.Path(__file__).resolve().parents[2] / "_conf_schema.json"

# 与 _conf_schema.json 一致的内置默认值，模式文件缺失时使用
DEFAULTS: Dict[str, Dict[str, Any]] = {
    "order_settings": {"horizon": 10000, "nmax": 1024, "compare_mode": "auto"},
    "battery_settings": {"max_degree": 3, "max_multiplier": 2},
    "minorant_settings": {"scan_factor": 8},
    "triage_settings": {"prefix_length": 1000},
    "output_settings": {"format": "lines"},
    "library_settings": {"autosave_seconds": 300, "chat_horizon_cap": 2000},
}

REQUIREMENTS: Dict[str, Dict[str, Any]] = {
    "order_settings.horizon": {"type": int, "required": True},
    "order_settings.nmax": {"type": int, "required": True},
    "order_settings.compare_mode": {"type": str},
    "battery_settings.max_degree": {"type": int},
    "battery_settings.max_multiplier": {"type": int},
    "minorant_settings.scan_factor": {"type": int},
    "triage_settings.prefix_length": {"type": int},
    "output_settings.format": {"type": str},
}


def _schema_defaults(schema: Dict[str, Any]) -> Dict[str, Any]:
    """递归提取模式中的 default 值"""
    result = {}
    for key, spec in schema.items():
        if not isinstance(spec, dict):
            continue
        if spec.get("type") == "object" and "items" in spec:
            result[key] = _schema_defaults(spec["items"])
        elif "default" in spec:
            result[key] = spec["default"]
    return result


def _deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


class ConfigManager:
    """配置管理器，用于加载和管理各种配置"""

    def __init__(self, config: Dict[str, Any]):
        """初始化配置管理器

        Args:
            config: 主配置字典
        """
        self.config = config

    @classmethod
    def from_schema(cls, path: Union[str, pathlib.Path, None] = None) -> "ConfigManager":
        """以配置模式文件中的默认值构造；文件不存在时退回内置默认值

        Args:
            path: 模式文件路径，默认为插件根目录下的 _conf_schema.json
        """
        schema_path = pathlib.Path(path) if path is not None else SCHEMA_PATH
        if not schema_path.exists():
            logger.debug(f"配置模式 {schema_path} 不存在，使用内置默认值")
            return cls(_deep_merge({}, DEFAULTS))
        with open(schema_path, "r", encoding="utf-8") as f:
            schema = json.load(f)
        return cls(_deep_merge(DEFAULTS, _schema_defaults(schema)))

    @classmethod
    def load(cls, override_file: Union[str, pathlib.Path, None] = None) -> "ConfigManager":
        """模式默认值叠加 JSON 覆盖文件"""
        manager = cls.from_schema()
        if override_file is None:
            return manager
        with open(override_file, "r", encoding="utf-8") as f:
            overrides = json.load(f)
        logger.info(f"已从 {override_file} 加载配置覆盖项")
        return manager.merged(overrides)

    def merged(self, overrides: Dict[str, Any]) -> "ConfigManager":
        """返回叠加覆盖项后的新配置管理器"""
        return ConfigManager(_deep_merge(self.config, overrides))

    def get_module_config(self, module_name: str) -> Dict[str, Any]:
        """获取指定模块的配置

        Args:
            module_name: 模块名称

        Returns:
            Dict[str, Any]: 模块配置，如果不存在则返回空字典
        """
        return self.config.get(module_name, {})

    def get_value(self, path: str, default: T = None) -> Union[T, Any]:
        """获取指定路径的配置值

        Args:
            path: 配置路径，使用点分隔，例如 "order_settings.horizon"
            default: 默认值

        Returns:
            配置值，如果不存在则返回默认值
        """
        current = self.config
        for part in path.split("."):
            if not isinstance(current, dict) or part not in current:
                return default
            current = current[part]
        return current

    def validate_config(self, requirements: Dict[str, Dict[str, Any]] = None) -> List[str]:
        """验证配置是否满足要求

        Args:
            requirements: 配置要求字典，格式为 {"path": {"type": type, "required": bool}}

        Returns:
            List[str]: 验证失败的配置项列表
        """
        failures = []

        for path, specs in (requirements or REQUIREMENTS).items():
            value = self.get_value(path)

            # 检查是否必需
            if specs.get("required", False) and value is None:
                failures.append(f"必需的配置项 {path} 不存在")
                continue

            # bool 是 int 的子类，单独排除
            if value is not None and "type" in specs:
                expected_type = specs["type"]
                if not isinstance(value, expected_type) or (expected_type is int and isinstance(value, bool)):
                    failures.append(
                        f"配置项 {path} 类型错误，预期 {expected_type.__name__}，实际为 {type(value).__name__}"
                    )

        for failure in failures:
            logger.warning(failure)
        return failures
