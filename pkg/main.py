# Description: germlab 插件，在聊天中定义芽并运行芽序判定、构造与收敛检查
from astrbot.api.star import Context, register, Star
from astrbot.api.event import AstrMessageEvent, filter
from astrbot.api import AstrBotConfig, logger
import asyncio
import os
import pathlib
import shlex
import traceback
from .germlab.core.errors import GermlabError
from .germlab.utils.config_manager import ConfigManager
from .germlab.utils.data_loader import DataLoader, GermLibrary
from .germlab.utils.task_manager import TaskManager

# 需要芽文件作为第一个位置参数的子命令
GERM_FILE_COMMANDS = {
    "eval", "validate", "compare", "equal", "triage", "class", "member", "witness", "triangle", "format",
}


@register(
    "germlab",
    "germlab",
    "0 处芽的精确算术与芽序判定实验室",
    "1.0.0",
)
class GermLab(Star):
    def __init__(self, context: Context, config: AstrBotConfig = None):
        super().__init__(context)
        # 基础配置：插件配置叠加在模式默认值之上
        self.config = ConfigManager.from_schema().merged(dict(config or {}))

        logger.info(f"收到的配置内容: {self.config.config}")

        # 设置数据存储路径
        self.data_dir = (
            pathlib.Path(os.path.dirname(os.path.abspath(__file__))) / "data"
        )
        self.data_file = self.data_dir / "germ_library.json"
        self.data_dir.mkdir(exist_ok=True)

        library_settings = self.config.get_module_config("library_settings")
        self.autosave_seconds = library_settings.get("autosave_seconds", 300)
        self.chat_horizon_cap = library_settings.get("chat_horizon_cap", 2000)

        # 芽库与数据加载器
        self.germ_library = GermLibrary()
        self.data_loader = DataLoader.get_instance(self)
        self.data_loader.load_data_from_storage()

        self.task_manager = TaskManager(self)

        # 启动定期保存数据任务
        asyncio.create_task(self.data_loader.start_periodic_save())

        logger.info(
            f"germlab 插件初始化完成，芽库定义 {len(self.germ_library.entries)} 个，"
            f"聊天视界上限 {self.chat_horizon_cap}，自动保存间隔 {self.autosave_seconds} 秒"
        )

    async def terminate(self):
        """插件被卸载/停用时调用"""
        logger.info("正在停止 germlab 插件...")
        self.task_manager.cancel_all_tasks()
        self.data_loader.save_data_to_storage()
        await self.data_loader.stop_periodic_save()

    def _cap_horizon(self, argv: list) -> list:
        """聊天中运行的命令视界不超过 chat_horizon_cap"""
        capped = list(argv)
        if "--horizon" in capped:
            i = capped.index("--horizon")
            if i + 1 < len(capped) and capped[i + 1].isdigit():
                capped[i + 1] = str(min(int(capped[i + 1]), self.chat_horizon_cap))
        else:
            capped += ["--horizon", str(self.chat_horizon_cap)]
        return capped

    @filter.command("germ_define")
    async def germ_define(self, event: AstrMessageEvent):
        """定义或覆盖一个芽：/germ_define name: expr"""
        text = event.message_str.partition("germ_define")[2].strip()
        name, _, expr = text.partition(":")
        name = name.strip()
        if not name or not expr.strip():
            yield event.plain_result("用法: /germ_define 名字: 表达式")
            return
        try:
            self.germ_library.define(name, expr.strip(), author=event.get_sender_id())
            self.data_loader.save_data_to_storage()
            yield event.plain_result(f"已定义 {self.germ_library.entries[name].text}")
        except GermlabError as e:
            yield event.plain_result(f"定义失败: {e}")

    @filter.command("germ_list")
    async def germ_list(self, event: AstrMessageEvent):
        """列出芽库中的定义"""
        if not self.germ_library.entries:
            yield event.plain_result("芽库为空")
            return
        yield event.plain_result(self.germ_library.as_germ_file().rstrip())

    @filter.command("germ_forget")
    async def germ_forget(self, event: AstrMessageEvent, name: str):
        """删除一个芽定义"""
        try:
            self.germ_library.forget(name)
            self.data_loader.save_data_to_storage()
            yield event.plain_result(f"已删除 {name}")
        except GermlabError as e:
            yield event.plain_result(str(e))

    @filter.command("germ_run")
    async def germ_run(self, event: AstrMessageEvent):
        """对芽库运行一条 germlab 命令：/germ_run compare a b --mode horizon"""
        argv = shlex.split(event.message_str.partition("germ_run")[2])
        if not argv:
            yield event.plain_result("用法: /germ_run <子命令> [参数…]")
            return

        # 芽库导出为芽文件后作为第一个位置参数
        self.data_loader.save_data_to_storage()
        if argv[0] in GERM_FILE_COMMANDS:
            argv = [argv[0], str(self.data_loader.export_file)] + argv[1:]
        argv = self._cap_horizon(argv)

        task_id = f"{event.unified_msg_origin}:{argv[0]}"
        try:
            result = await self.task_manager.run_command(task_id, argv, timeout=120)
        except asyncio.TimeoutError:
            yield event.plain_result("命令超时，已取消")
            return
        except Exception as e:
            logger.error(f"运行命令 {argv} 时出错: {str(e)}")
            logger.error(traceback.format_exc())
            yield event.plain_result(f"运行出错: {e}")
            return

        output = result.output.strip() or f"(无输出，退出码 {result.exit_code})"
        yield event.plain_result(output)
