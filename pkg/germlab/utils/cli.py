# 命令行 - germlab 子命令、判定行与 CSV 输出、退出码

import argparse
import logging
import pathlib
import sys
from typing import Dict, List, Optional, Sequence, TextIO

from ..core.analysis import (
    FuncSample,
    NetSpec,
    continuity_verdict,
    converge_check,
    default_battery,
    neighborhood_member,
    nonconvergence_witness,
    norm_profile,
    oscillation_profile,
    ultradist_triangle,
)
from ..core.errors import GermlabError, ParseError, UnknownGerm
from ..core.germ_core import ZERO_GERM, Germ, GridWindow, canonical_eq, is_zero, validate
from ..core.order_engine import CompareMode, arch_class_compare, compare_germwise, frechet_triage
from ..core.verdicts import OrderVerdict
from .builder import GermBuilder
from .config_manager import ConfigManager
from .data_loader import read_germ_file, read_net_file, read_sample_csv
from .dsl import format_definition

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_SEMANTIC = 1
EXIT_PARSE = 2


def verdict_line(kind: str, witness: Optional[int], horizon: int, **fields) -> str:
    """判定行：VERDICT kind=… witness=… horizon=… 其后按给定顺序追加字段"""
    parts = ["VERDICT", f"kind={kind}", f"witness={'-' if witness is None else witness}", f"horizon={horizon}"]
    parts.extend(f"{key}={value}" for key, value in fields.items())
    return " ".join(parts)


def order_line(verdict: OrderVerdict, **fields) -> str:
    lhs, rhs = verdict.ordered_labels()
    extra = {"lhs": lhs, "rhs": rhs}
    if verdict.is_certified():
        extra["certified"] = "true"
    extra.update(fields)
    return verdict_line(verdict.kind.value, verdict.witness_index, verdict.horizon, **extra)


def _format_value(value) -> str:
    return f"{value.numerator}/{value.denominator}"


class CommandContext:
    """一次命令调用的共享状态：配置、输出流与芽构建器"""

    def __init__(self, args: argparse.Namespace, out: TextIO):
        self.args = args
        self.out = out
        self.config = ConfigManager.load(getattr(args, "config", None))
        for failure in self.config.validate_config():
            logger.warning(failure)
        self._builders: Dict[str, GermBuilder] = {}

    def setting(self, flag: str, path: str, default):
        value = getattr(self.args, flag, None)
        return value if value is not None else self.config.get_value(path, default)

    @property
    def horizon(self) -> int:
        return int(self.setting("horizon", "order_settings.horizon", 10000))

    @property
    def nmax(self) -> int:
        return int(self.setting("nmax", "order_settings.nmax", 1024))

    @property
    def output_format(self) -> str:
        return self.setting("format", "output_settings.format", "lines")

    def builder(self, path: str) -> GermBuilder:
        if path not in self._builders:
            self._builders[path] = GermBuilder(
                read_germ_file(path),
                horizon=self.horizon,
                scan_factor=int(self.config.get_value("minorant_settings.scan_factor", 8)),
            )
        return self._builders[path]

    def germ(self, path: str, name: str) -> Germ:
        return self.builder(path).get(name)

    def window(self, *germs: Germ) -> GridWindow:
        starts = [g.start for g in germs if not is_zero(g)]
        stops = [g.stop for g in germs if g.stop is not None]
        first = self.args.start if getattr(self.args, "start", None) is not None else max(starts or [1])
        last = min([self.horizon] + stops)
        return GridWindow(first, max(first, last))

    def battery(self) -> List[Germ]:
        return default_battery(
            int(self.config.get_value("battery_settings.max_degree", 3)),
            int(self.config.get_value("battery_settings.max_multiplier", 2)),
        )

    def emit(self, line: str) -> None:
        self.out.write(line + "\n")

    def emit_values(self, germ: Germ, indices: Sequence[int]) -> None:
        if self.output_format == "csv":
            self.emit("j,num,den")
            for j in indices:
                v = germ.value(j)
                self.emit(f"{j},{v.numerator},{v.denominator}")
        else:
            for j in indices:
                self.emit(f"j={j} value={_format_value(germ.value(j))}")


def _parse_range(text: Optional[str], default_first: int, default_last: int) -> range:
    if text is None:
        return range(default_first, default_last + 1)
    try:
        first, last = (int(part) for part in text.split(".."))
    except ValueError:
        raise ParseError(1, 1, "A..B 形式的范围", text)
    return range(first, last + 1)


# ---------------------------------------------------------------- 子命令


def cmd_eval(ctx: CommandContext) -> int:
    germ = ctx.germ(ctx.args.file, ctx.args.name)
    first = ctx.args.start if ctx.args.start is not None else germ.start
    ctx.emit_values(germ, _parse_range(ctx.args.range, first, first + 9))
    return EXIT_OK


def cmd_validate(ctx: CommandContext) -> int:
    germ = ctx.germ(ctx.args.file, ctx.args.name)
    window = ctx.window(germ)
    report = validate(germ, window)
    ctx.emit(
        verdict_line(
            "VALID" if report.valid else "INVALID",
            report.first_violation,
            window.last,
            subject=germ.label,
            tier=report.tier.value,
            limit_threshold=report.limit_threshold if report.limit_threshold is not None else "-",
            limit_index=report.limit_index if report.limit_index is not None else "-",
        )
    )
    return EXIT_OK


def cmd_compare(ctx: CommandContext) -> int:
    a = ctx.germ(ctx.args.file, ctx.args.lhs)
    b = ctx.germ(ctx.args.file, ctx.args.rhs)
    mode = CompareMode(ctx.setting("mode", "order_settings.compare_mode", "auto"))
    ctx.emit(order_line(compare_germwise(a, b, ctx.window(a, b), mode)))
    return EXIT_OK


def cmd_equal(ctx: CommandContext) -> int:
    a = ctx.germ(ctx.args.file, ctx.args.lhs)
    b = ctx.germ(ctx.args.file, ctx.args.rhs)
    ctx.emit(order_line(canonical_eq(a, b, ctx.window(a, b))))
    return EXIT_OK


def cmd_triage(ctx: CommandContext) -> int:
    a = ctx.germ(ctx.args.file, ctx.args.lhs)
    b = ctx.germ(ctx.args.file, ctx.args.rhs)
    prefix = int(ctx.setting("prefix", "triage_settings.prefix_length", 1000))
    verdict = frechet_triage(a, b, prefix, ctx.args.start)
    ctx.emit(
        verdict_line(
            verdict.kind.value,
            verdict.cofinite_from,
            verdict.prefix[1],
            lhs=a.label,
            rhs=b.label,
            lt=verdict.evidence["lt"],
            eq=verdict.evidence["eq"],
            gt=verdict.evidence["gt"],
        )
    )
    return EXIT_OK


def cmd_class(ctx: CommandContext) -> int:
    a = ctx.germ(ctx.args.file, ctx.args.lhs)
    b = ctx.germ(ctx.args.file, ctx.args.rhs)
    verdict = arch_class_compare(a, b, ctx.window(a, b), ctx.nmax)
    ctx.emit(verdict_line(verdict.kind.value, verdict.n, verdict.horizon, lhs=a.label, rhs=b.label, nmax=verdict.n_cap))
    return EXIT_OK


def cmd_member(ctx: CommandContext) -> int:
    g = ctx.germ(ctx.args.file, ctx.args.name)
    test = ctx.germ(ctx.args.file, ctx.args.test)
    verdict = neighborhood_member(g, test, ctx.window(g, test))
    ctx.emit(order_line(verdict, member="true" if verdict.holds_lt() else "false"))
    return EXIT_OK


def cmd_norm(ctx: CommandContext) -> int:
    sample = read_sample_csv(ctx.args.sample)
    profile = norm_profile(sample)
    if is_zero(profile):
        ctx.emit(verdict_line("ZERO_GERM", None, sample.j_max, subject=sample.label))
        return EXIT_OK
    last = min(sample.j_max, ctx.horizon)
    first = ctx.args.start if ctx.args.start is not None else 1
    ctx.emit_values(profile, _parse_range(ctx.args.range, first, last))
    return EXIT_OK


def cmd_oscillation(ctx: CommandContext) -> int:
    sample = read_sample_csv(ctx.args.sample)
    s = ctx.germ(ctx.args.file, ctx.args.allowance)
    indices = _parse_range(ctx.args.range, max(1, s.start), min(sample.j_max, ctx.horizon))
    window = GridWindow(indices.start, indices.stop - 1)
    ctx.emit_values(oscillation_profile(sample, s, window), indices)
    return EXIT_OK


def cmd_continuity(ctx: CommandContext) -> int:
    sample = read_sample_csv(ctx.args.sample)
    if ctx.args.file is not None and ctx.args.tests:
        battery = [ctx.germ(ctx.args.file, name) for name in ctx.args.tests]
    else:
        battery = ctx.battery()
    first = ctx.args.start if ctx.args.start is not None else 1
    window = GridWindow(first, min(sample.j_max, ctx.horizon))
    verdict = continuity_verdict(sample, battery, window)
    fields = {"subject": verdict.subject}
    if "floor" in verdict.evidence:
        fields["floor"] = _format_value(verdict.evidence["floor"])
    ctx.emit(verdict_line(verdict.kind.value, verdict.witness_index, verdict.horizon, **fields))
    return EXIT_OK


def cmd_witness(ctx: CommandContext) -> int:
    seq = [ctx.germ(ctx.args.file, name) for name in ctx.args.names]
    p_star = nonconvergence_witness(seq, ctx.horizon)
    ctx.emit(verdict_line("WITNESS", p_star.start, ctx.horizon, subject=p_star.label, members=len(seq)))
    first = ctx.args.start if ctx.args.start is not None else p_star.start
    ctx.emit_values(p_star, _parse_range(ctx.args.range, first, first + 9))
    return EXIT_OK


def cmd_triangle(ctx: CommandContext) -> int:
    f, g, h = (ctx.germ(ctx.args.file, name) for name in (ctx.args.f, ctx.args.g, ctx.args.h))
    verdict = ultradist_triangle(f, g, h, ctx.window(f, g, h), ctx.nmax)
    ctx.emit(
        verdict_line(verdict.kind.value, verdict.witness_index, verdict.horizon, f=f.label, g=g.label, h=h.label)
    )
    return EXIT_OK


def cmd_format(ctx: CommandContext) -> int:
    for definition in read_germ_file(ctx.args.file):
        ctx.emit(format_definition(definition))
    return EXIT_OK


def _net_subject(ctx: CommandContext, builder: GermBuilder, samples: Dict[str, FuncSample], name: str):
    if name == "zero":
        return ZERO_GERM
    if name in samples:
        return samples[name]
    return builder.get(name)


def cmd_converge(ctx: CommandContext) -> int:
    net_path = pathlib.Path(ctx.args.net)
    net_file = read_net_file(net_path)
    definitions = list(net_file.definitions)
    if ctx.args.germs is not None:
        definitions.extend(read_germ_file(ctx.args.germs))
    builder = GermBuilder(definitions, horizon=ctx.horizon)
    samples = {
        name: read_sample_csv(net_path.parent / path, name) for name, path in net_file.samples.items()
    }
    battery = [builder.get(name) for name in net_file.tests] if net_file.tests else ctx.battery()
    nodes = tuple(net_file.nodes)
    for lower, upper in net_file.edges:
        if lower not in net_file.nodes or upper not in net_file.nodes:
            raise UnknownGerm(f"偏序边 {lower} < {upper} 引用了未声明的节点")
    net = NetSpec(
        nodes,
        tuple(net_file.edges),
        {node: _net_subject(ctx, builder, samples, ref) for node, ref in net_file.nodes.items()},
        _net_subject(ctx, builder, samples, net_file.target),
        tuple(battery),
        net_file.allow_profile_bound,
    )
    report = converge_check(net, ctx.horizon)
    for outcome in report.outcomes:
        if outcome.converges:
            ctx.emit(verdict_line("CONVERGES", outcome.j1, outcome.horizon, test=outcome.test, d0=outcome.d0))
        else:
            failures = ";".join(f"{f.candidate}:{f.node}@{f.index}" for f in outcome.failures)
            first_index = min(f.index for f in outcome.failures)
            ctx.emit(verdict_line("FAILS", first_index, outcome.horizon, test=outcome.test, failures=failures))
    overall = "CONVERGES" if report.converges else "FAILS"
    ctx.emit(verdict_line(overall, None, report.window.last, tests=len(report.outcomes)))
    return EXIT_OK


# ---------------------------------------------------------------- 参数解析


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--horizon", type=int, default=None, help="视界 H（默认 10000）")
    common.add_argument("--start", type=int, default=None, help="窗口起始下标（默认为芽的起点）")
    common.add_argument("--nmax", type=int, default=None, help="阿基米德类阶梯上限（默认 1024）")
    common.add_argument("--format", choices=["csv", "lines"], default=None, help="数值输出格式")
    common.add_argument("--config", default=None, help="JSON 配置覆盖文件")
    common.add_argument("--log-level", default="WARNING", help="日志级别，日志写到 stderr")

    parser = argparse.ArgumentParser(prog="germlab", description="0 处芽的精确算术与序判定")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = add("eval", cmd_eval, "在网格点上求值")
    p.add_argument("file")
    p.add_argument("name")
    p.add_argument("--range", default=None)

    p = add("validate", cmd_validate, "校验单调层级")
    p.add_argument("file")
    p.add_argument("name")

    for name, handler, help_text in (
        ("compare", cmd_compare, "芽序比较"),
        ("equal", cmd_equal, "芽相等判定"),
        ("triage", cmd_triage, "超滤子序的弗雷歇分诊"),
        ("class", cmd_class, "阿基米德类比较"),
    ):
        p = add(name, handler, help_text)
        p.add_argument("file")
        p.add_argument("lhs")
        p.add_argument("rhs")
        if name == "compare":
            p.add_argument("--mode", choices=[m.value for m in CompareMode], default=None)
        if name == "triage":
            p.add_argument("--prefix", type=int, default=None)

    p = add("member", cmd_member, "邻域成员判定 Λ(g) < test")
    p.add_argument("file")
    p.add_argument("name")
    p.add_argument("test")

    p = add("norm", cmd_norm, "采样的范数剖面")
    p.add_argument("sample")
    p.add_argument("--range", default=None)

    p = add("oscillation", cmd_oscillation, "采样的振幅剖面")
    p.add_argument("sample")
    p.add_argument("file")
    p.add_argument("allowance")
    p.add_argument("--range", default=None)

    p = add("continuity", cmd_continuity, "第二连续性判据")
    p.add_argument("sample")
    p.add_argument("file", nargs="?", default=None)
    p.add_argument("tests", nargs="*")

    p = add("witness", cmd_witness, "数列不收敛的对角见证")
    p.add_argument("file")
    p.add_argument("names", nargs="+")
    p.add_argument("--range", default=None)

    p = add("triangle", cmd_triangle, "强三角不等式检查")
    p.add_argument("file")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("h")

    p = add("format", cmd_format, "规范化输出芽文件")
    p.add_argument("file")

    p = add("converge", cmd_converge, "网收敛检查")
    p.add_argument("net")
    p.add_argument("--germs", default=None, help="额外的芽文件")

    return parser


def _configure_logging(level: str) -> None:
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(getattr(logging, str(level).upper(), logging.WARNING))


def run_command(argv: Sequence[str], stdout: Optional[TextIO] = None) -> int:
    """执行一条 germlab 命令

    Returns:
        int: 0 判定完成（包括 FAILS/MIXED 判定），1 语义或校验错误，2 语法错误
    """
    out = stdout if stdout is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as e:
        return EXIT_PARSE if e.code else EXIT_OK
    _configure_logging(args.log_level)

    try:
        return args.handler(CommandContext(args, out))
    except ParseError as e:
        logger.error(f"语法错误: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_PARSE
    except (GermlabError, OSError, ValueError, IndexError) as e:
        logger.error(f"命令 {args.command} 失败: {e}")
        sys.stderr.write(f"error: {e}\n")
        return EXIT_SEMANTIC


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))
