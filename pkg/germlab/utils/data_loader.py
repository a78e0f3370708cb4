# 单例模式数据读取器 - 芽库持久化与芽文件/网文件/采样文件读取

import asyncio
import csv
import datetime
import json
import logging
import pathlib
import traceback
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

from ..core.analysis import FuncSample
from ..core.errors import ParseError, UnknownGerm
from .dsl import Definition, NetFile, format_definition, parse_germ, parse_germ_file, parse_net_file

try:
    from astrbot.api import logger
except ImportError:
    logger = logging.getLogger("data_loader")

SAMPLE_HEADER = ["x_num", "x_den", "f_num", "f_den"]
PathLike = Union[str, pathlib.Path]


# ---------------------------------------------------------------- 文件读取


def read_germ_file(path: PathLike) -> List[Definition]:
    with open(path, "r", encoding="utf-8") as f:
        return parse_germ_file(f.read())


def read_net_file(path: PathLike) -> NetFile:
    with open(path, "r", encoding="utf-8") as f:
        return parse_net_file(f.read())


def read_sample_csv(path: PathLike, label: Optional[str] = None) -> FuncSample:
    """读取函数采样 CSV，表头为 x_num,x_den,f_num,f_den

    Raises:
        ParseError: 表头或数值格式错误
        InvalidSample: 缺少 x=0 行或 f(0) != 0
    """
    path = pathlib.Path(path)
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != SAMPLE_HEADER:
            raise ParseError(1, 1, ",".join(SAMPLE_HEADER), ",".join(header or []))
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            try:
                x_num, x_den, f_num, f_den = (int(cell) for cell in row)
                pairs.append((Fraction(x_num, x_den), Fraction(f_num, f_den)))
            except (ValueError, ZeroDivisionError):
                raise ParseError(reader.line_num, 1, "四个整数且分母非零", ",".join(row))
    logger.debug(f"从 {path} 读取 {len(pairs)} 个采样点")
    return FuncSample.from_points(pairs, label or path.stem)


# ---------------------------------------------------------------- 芽库


@dataclass
class LibraryEntry:
    text: str
    author: str
    timestamp: datetime.datetime


class GermLibrary:
    """具名芽定义的集合，保存 DSL 文本而不是求值后的对象"""

    def __init__(self):
        self.entries: Dict[str, LibraryEntry] = {}

    def define(self, name: str, text: str, author: str = "") -> Definition:
        """解析并登记一个定义；语法错误直接抛出 ParseError"""
        expr = parse_germ(text)
        definition = Definition(name, expr)
        self.entries[name] = LibraryEntry(format_definition(definition), author, datetime.datetime.now())
        logger.info(f"芽库登记定义 {name}")
        return definition

    def forget(self, name: str) -> None:
        if name not in self.entries:
            raise UnknownGerm(f"芽库中没有 {name}")
        del self.entries[name]

    def names(self) -> List[str]:
        return sorted(self.entries)

    def as_germ_file(self) -> str:
        return "".join(f"{self.entries[name].text}\n" for name in self.names())

    def definitions(self) -> List[Definition]:
        return parse_germ_file(self.as_germ_file())

    def get_data(self) -> Dict[str, Any]:
        return {
            name: {"text": e.text, "author": e.author, "timestamp": e.timestamp}
            for name, e in self.entries.items()
        }

    def set_data(self, entries: Dict[str, Dict[str, Any]]) -> None:
        self.entries = {}
        for name, record in entries.items():
            timestamp = record.get("timestamp", datetime.datetime.now())
            self.entries[name] = LibraryEntry(record.get("text", ""), record.get("author", ""), timestamp)


class DataLoader:
    """数据加载器, 单例模式"""

    _instance = None

    @classmethod
    def get_instance(cls, owner=None):
        if cls._instance is None and owner is not None:
            cls._instance = cls(owner)
        return cls._instance

    @classmethod
    def reset_instance(cls) -> None:
        cls._instance = None

    def __init__(self, owner):
        if DataLoader._instance is not None:
            raise RuntimeError("Please use get_instance() to access the instance.")
        self.owner = owner
        self.data_file: pathlib.Path = owner.data_file
        self.library: GermLibrary = owner.germ_library
        self.autosave_seconds: int = getattr(owner, "autosave_seconds", 300)

        self.save_data_task = None

        DataLoader._instance = self

    @property
    def export_file(self) -> pathlib.Path:
        return self.data_file.with_name("library.germ")

    def load_data_from_storage(self) -> None:
        try:
            if self.data_file.exists():
                with open(self.data_file, "r", encoding="utf-8") as f:
                    stored_data = json.load(f)

                entries = stored_data.get("germ_library", {})
                # 处理时间戳转换
                for name, record in entries.items():
                    if "timestamp" in record and isinstance(record["timestamp"], str):
                        try:
                            record["timestamp"] = datetime.datetime.fromisoformat(record["timestamp"])
                        except ValueError:
                            record["timestamp"] = datetime.datetime.now()
                self.library.set_data(entries)

            logger.info(f"成功从 {self.data_file} 加载芽库，共 {len(self.library.entries)} 个定义")
        except Exception as e:
            logger.error(f"从存储加载数据时发生错误: {str(e)}")
            logger.error(traceback.format_exc())

    def save_data_to_storage(self) -> None:
        """将芽库保存到本地存储，并导出为芽文件"""
        try:
            data_to_save = {"germ_library": self._prepare_records_for_save(self.library.get_data())}

            # 确保数据目录存在
            self.data_file.parent.mkdir(parents=True, exist_ok=True)

            with open(self.data_file, "w", encoding="utf-8") as f:
                json.dump(data_to_save, f, ensure_ascii=False, indent=2)
            with open(self.export_file, "w", encoding="utf-8") as f:
                f.write(self.library.as_germ_file())

            logger.info(f"芽库已保存到 {self.data_file}")
        except Exception as e:
            logger.error(f"保存数据到存储时发生错误: {str(e)}")
            logger.error(traceback.format_exc())

    def _prepare_records_for_save(self, records: Dict[str, Any]) -> Dict[str, Any]:
        """准备记录以便保存，将datetime对象转换为ISO格式字符串"""
        prepared_records = {}

        for key, value in records.items():
            if isinstance(value, dict):
                prepared_records[key] = self._prepare_records_for_save(value)
            elif isinstance(value, (datetime.datetime, datetime.date)):
                prepared_records[key] = value.isoformat()
            else:
                prepared_records[key] = value

        return prepared_records

    async def start_periodic_save(self) -> None:
        """启动定期保存数据的任务"""
        if self.save_data_task is not None:
            logger.warning("定期保存数据任务已在运行中")
            return

        logger.info("启动定期保存数据任务")
        self.save_data_task = asyncio.create_task(self._periodic_save_data())

    async def stop_periodic_save(self) -> None:
        """停止定期保存数据的任务"""
        if self.save_data_task is not None and not self.save_data_task.done():
            self.save_data_task.cancel()
            try:
                await self.save_data_task
            except asyncio.CancelledError:
                pass

            self.save_data_task = None
            logger.info("定期保存数据任务已取消")

    async def _periodic_save_data(self) -> None:
        """定期保存数据的异步任务"""
        try:
            while True:
                await asyncio.sleep(self.autosave_seconds)
                self.save_data_to_storage()
        except asyncio.CancelledError:
            self.save_data_to_storage()
            logger.info("定期保存数据任务已取消")
            raise
        except Exception as e:
            logger.error(f"定期保存数据任务发生错误: {str(e)}")
