import logging

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "germlab",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("germlab")


@pytest.fixture(autouse=True)
def quiet_logging(caplog):
    caplog.set_level(logging.WARNING)
    yield


@pytest.fixture
def germ_file(tmp_path):
    """把芽定义文本写入临时文件并返回路径"""

    def write(text: str, name: str = "defs.germ"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write
