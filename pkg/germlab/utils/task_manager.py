# 任务管理器 - 在后台线程中执行 germlab 命令并管理任务引用

import asyncio
import datetime
import io
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

logger = logging.getLogger("task_manager")

Runner = Callable[..., int]


@dataclass(frozen=True)
class CommandResult:
    task_id: str
    exit_code: int
    output: str
    elapsed_seconds: float


class TaskManager:
    """任务管理器，负责创建和管理异步任务"""

    def __init__(self, parent, runner: Optional[Runner] = None):
        """初始化任务管理器

        Args:
            parent: 父插件实例，用于管理任务引用
            runner: 命令执行函数 run_command(argv, stdout=...) -> 退出码，默认为 germlab CLI
        """
        self.parent = parent
        if runner is None:
            from .cli import run_command

            runner = run_command
        self.runner = runner

        # 确保任务存储字典存在
        if not hasattr(self.parent, "_command_tasks"):
            self.parent._command_tasks = {}

    @property
    def tasks(self) -> Dict[str, asyncio.Task]:
        return self.parent._command_tasks

    def _run_blocking(self, argv: List[str]) -> CommandResult:
        buffer = io.StringIO()
        started = datetime.datetime.now()
        code = self.runner(list(argv), stdout=buffer)
        elapsed = (datetime.datetime.now() - started).total_seconds()
        return CommandResult("", code, buffer.getvalue(), elapsed)

    async def run_command(self, task_id: str, argv: Sequence[str], timeout: Optional[float] = None) -> CommandResult:
        """在后台线程执行一条命令并等待结果

        Args:
            task_id: 任务唯一标识符
            argv: 命令行参数（不含程序名）
            timeout: 超时秒数，超时后任务被取消

        Returns:
            CommandResult: 退出码与标准输出
        """
        task = self.schedule_command(task_id, argv)
        try:
            result = await asyncio.wait_for(asyncio.shield(task), timeout)
        except asyncio.TimeoutError:
            self.cancel_task(task_id)
            logger.warning(f"任务 {task_id} 超时（{timeout} 秒）")
            raise
        return result

    def schedule_command(self, task_id: str, argv: Sequence[str]) -> asyncio.Task:
        """创建执行命令的任务并登记

        Args:
            task_id: 任务唯一标识符
            argv: 命令行参数

        Returns:
            asyncio.Task: 创建的任务对象
        """
        if task_id in self.tasks and not self.tasks[task_id].done():
            logger.warning(f"任务 {task_id} 仍在运行，先取消旧任务")
            self.cancel_task(task_id)

        async def command_task() -> CommandResult:
            try:
                result = await asyncio.to_thread(self._run_blocking, list(argv))
                logger.info(f"任务 {task_id} 完成，退出码 {result.exit_code}，耗时 {result.elapsed_seconds:.2f} 秒")
                return CommandResult(task_id, result.exit_code, result.output, result.elapsed_seconds)
            except asyncio.CancelledError:
                logger.info(f"任务 {task_id} 已被取消")
                raise
            except Exception as e:
                logger.error(f"任务 {task_id} 执行出错: {str(e)}")
                raise

        # 创建任务并存储
        task = asyncio.create_task(command_task())
        self.tasks[task_id] = task

        # 设置完成回调以清理任务引用
        def remove_task(t, tid=task_id):
            if self.tasks.get(tid) is t:
                self.tasks.pop(tid, None)

        task.add_done_callback(remove_task)
        logger.info(f"任务 {task_id} 已调度: germlab {' '.join(argv)}")
        return task

    def running(self) -> List[str]:
        return [tid for tid, task in self.tasks.items() if not task.done()]

    def cancel_all_tasks(self) -> None:
        """取消所有正在运行的任务"""
        for task_id, task in list(self.tasks.items()):
            if not task.done():
                task.cancel()
                logger.info(f"任务 {task_id} 已取消")

        self.tasks.clear()

    def cancel_task(self, task_id: str) -> bool:
        """取消指定ID的任务

        Args:
            task_id: 任务ID

        Returns:
            bool: 是否成功取消
        """
        task = self.tasks.get(task_id)
        if task is not None and not task.done():
            task.cancel()
            logger.info(f"任务 {task_id} 已取消")
            return True

        return False
