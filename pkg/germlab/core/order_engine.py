# 序引擎 - 芽偏序、数列芽的三种序与阿基米德类（赋值）序的判定

import logging
import math
from enum import Enum
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import NotCertifiable, PrefixTooShort
from .germ_core import (
    ExpGenerator,
    Germ,
    GridWindow,
    PLGerm,
    PolyGenerator,
    Rat,
    final_run_start,
    sign_sequence,
)
from .verdicts import (
    ArchClassKind,
    ArchClassVerdict,
    OrderKind,
    OrderVerdict,
    TriageKind,
    TriageVerdict,
)

logger = logging.getLogger("order_engine")

TRIAGE_TAIL_BLOCKS = 4


class CompareMode(Enum):
    AUTO = "auto"
    CERTIFIED_ONLY = "certified"
    HORIZON_ONLY = "horizon"


# ---------------------------------------------------------------- 视界扫描


def classify_signs(
    signs: Sequence[int], window: GridWindow, lhs: str = "lhs", rhs: str = "rhs"
) -> OrderVerdict:
    """由逐点符号序列给出视界判定

    j1 是末尾常值段的起点，即使符号在 [j1, last] 上恒定的最小下标。
    只有 j1 <= midpoint = first + (last - first) // 2 时才接受 j1 作为见证，
    给出 EQUAL_FROM 或 HOLDS_UPTO_LT；起点落在窗口后半内的常值段太短，不作为稳定尾部。
    此时后半窗口 [midpoint, last] 中两种严格符号都出现为 MIXED，
    否则为 FAILS_AT，见证是 j1 - 1（最后一个不满足的下标）。
    """
    j1 = final_run_start(signs, window.first)
    tail_sign = signs[-1]
    if j1 <= window.midpoint:
        if tail_sign == 0:
            return OrderVerdict(OrderKind.EQUAL_FROM, j1, window.last, lhs=lhs, rhs=rhs)
        return OrderVerdict(
            OrderKind.HOLDS_UPTO_LT, j1, window.last, swapped=tail_sign > 0, lhs=lhs, rhs=rhs
        )
    tail = signs[window.midpoint - window.first:]
    if -1 in tail and 1 in tail:
        return OrderVerdict(OrderKind.MIXED, j1, window.last, lhs=lhs, rhs=rhs)
    return OrderVerdict(OrderKind.FAILS_AT, j1 - 1, window.last, lhs=lhs, rhs=rhs)


def tail_below(lower: Sequence[Rat], upper: Sequence[Rat], window: GridWindow) -> bool:
    """lower < upper 是否在窗口上以稳定尾部成立"""
    signs = [(x > y) - (x < y) for x, y in zip(lower, upper)]
    return classify_signs(signs, window).holds_lt()


# ---------------------------------------------------------------- 认证比较


def _first_stable_below(a: PLGerm, b: PLGerm, safe: int, floor: int) -> int:
    """从已证明安全的下标 safe 向下扫描，返回 a < b 在 [j, ∞) 上成立的最小 j"""
    j = safe
    while j - 1 >= floor and a.code(j - 1) > b.code(j - 1):
        j -= 1
    return j


def _first_stable_equal(a: PLGerm, b: PLGerm, safe: int, floor: int) -> int:
    j = safe
    while j - 1 >= floor and a.code(j - 1) == b.code(j - 1):
        j -= 1
    return j


def _poly_crossover(diff: PolyGenerator) -> int:
    """差多项式最大实根之后的首个整数（无实根时为 1）"""
    intervals = diff.as_poly().intervals()
    if not intervals:
        return 1
    upper = max(Fraction(int(hi.p), int(hi.q)) for (_, hi), _ in intervals)
    return max(1, math.floor(upper) + 1)


def _exp_poly_crossover(exp: ExpGenerator, poly: PolyGenerator) -> int:
    """c·b^j > |P(j)| 从返回的下标起恒成立

    |P(j)| <= A·j^d（j >= 1），且 j >= 2d 时 b^j/j^d 单调递增。
    """
    d = max(poly.degree, 0)
    bound = sum(abs(c) for c in poly.coeffs)
    j = max(2 * d, 1)
    while exp(j) <= bound * j ** d:
        j += 1
    return j


def _certify(a: PLGerm, b: PLGerm) -> Tuple[int, int, str]:
    """给出 (最终符号, 安全下标, 证书描述)；符号为 sign(a - b)，即 sign(K_b - K_a)"""
    ga, gb = a.generator, b.generator
    if isinstance(ga, PolyGenerator) and isinstance(gb, PolyGenerator):
        diff = PolyGenerator(
            tuple(
                x - y
                for x, y in zip(
                    gb.coeffs + (0,) * (len(ga.coeffs) - len(gb.coeffs)),
                    ga.coeffs + (0,) * (len(gb.coeffs) - len(ga.coeffs)),
                )
            )
        )
        if diff.coeffs == (0,):
            return 0, 1, "identical integer polynomials"
        safe = _poly_crossover(diff)
        sign = 1 if diff.leading > 0 else -1
        return sign, safe, (
            f"K_b - K_a = {diff.describe()}, degree {diff.degree}, "
            f"leading coefficient {diff.leading}; largest real root below {safe}"
        )
    if isinstance(ga, ExpGenerator) and isinstance(gb, ExpGenerator):
        if ga == gb:
            return 0, 1, "identical exponential generators"
        if ga.b == gb.b:
            sign = 1 if gb.c > ga.c else -1
            return sign, 1, f"common base {ga.b}, coefficients {ga.c} vs {gb.c}"
        big, small = (ga, gb) if ga.b > gb.b else (gb, ga)
        j = 1
        while big(j) <= small(j):
            j += 1
        sign = -1 if big is ga else 1
        return sign, j, f"base {big.b} dominates base {small.b}; ratio increasing from {j}"
    if isinstance(ga, ExpGenerator) and isinstance(gb, PolyGenerator):
        return -1, _exp_poly_crossover(ga, gb), f"{ga.describe()} dominates degree {gb.degree}"
    if isinstance(ga, PolyGenerator) and isinstance(gb, ExpGenerator):
        return 1, _exp_poly_crossover(gb, ga), f"{gb.describe()} dominates degree {ga.degree}"
    raise NotCertifiable(f"{a.label} 与 {b.label} 的生成器不在可认证类中")


def _certified_compare(a: Germ, b: Germ, window: GridWindow) -> OrderVerdict:
    if not (isinstance(a, PLGerm) and isinstance(b, PLGerm) and a.certified_tail and b.certified_tail):
        raise NotCertifiable(f"{a.label} 与 {b.label} 不是可认证类的 PL 芽")
    a.require_window(window)
    b.require_window(window)
    sign, safe, certificate = _certify(a, b)
    floor = max(a.start, b.start, window.first)
    safe = max(safe, a.head_end, b.head_end, floor)
    if sign == 0:
        j1 = _first_stable_equal(a, b, safe, floor)
        return OrderVerdict(
            OrderKind.EQUAL_FROM, j1, window.last, certificate=certificate, lhs=a.label, rhs=b.label
        )
    if sign < 0:
        j1 = _first_stable_below(a, b, safe, floor)
    else:
        j1 = _first_stable_below(b, a, safe, floor)
    logger.debug(f"认证比较 {a.label} vs {b.label}: {certificate}，自 {j1} 起稳定")
    return OrderVerdict(
        OrderKind.CERTIFIED_LT,
        j1,
        window.last,
        certificate=certificate,
        swapped=sign > 0,
        lhs=a.label,
        rhs=b.label,
    )


def compare_germwise(
    a: Germ, b: Germ, window: GridWindow, mode: CompareMode = CompareMode.AUTO
) -> OrderVerdict:
    """比较两个芽的芽序

    AUTO 先尝试认证比较（多项式/指数生成器），否则扫描窗口寻找最小的稳定符号起点。

    Args:
        a: 左侧芽
        b: 右侧芽
        window: 比较窗口
        mode: 比较模式

    Returns:
        OrderVerdict: 判定，携带见证下标与视界

    Raises:
        IndexBeforeStart: 窗口早于起始下标
        NotCertifiable: CERTIFIED_ONLY 模式下生成器不可认证
    """
    if mode != CompareMode.HORIZON_ONLY:
        try:
            return _certified_compare(a, b, window)
        except NotCertifiable:
            if mode == CompareMode.CERTIFIED_ONLY:
                raise
    verdict = classify_signs(sign_sequence(a, b, window), window, a.label, b.label)
    logger.debug(f"视界比较 {a.label} vs {b.label}: {verdict.kind.value} @ {verdict.witness_index}")
    return verdict


# ---------------------------------------------------------------- 弗雷歇分诊


def frechet_triage(
    a: Germ, b: Germ, prefix_length: int, start: Optional[int] = None
) -> TriageVerdict:
    """对 {i : r_i < s_i} 在前缀上做弗雷歇分诊

    前缀后半（与 compare_germwise 的稳定尾部相同）被分成 4 个块；
    集合包含整个后半为余有限（所有自由超滤子），补集包含后半为全部不成立，
    每个块同时命中集合与补集时为依赖超滤子，其余为 INCONCLUSIVE。

    Raises:
        PrefixTooShort: 后半不足 4 个下标
    """
    first = max(a.start, b.start) if start is None else start
    window = GridWindow(first, first + prefix_length - 1)
    tail_first = window.midpoint
    tail_len = window.last - tail_first + 1
    if tail_len < TRIAGE_TAIL_BLOCKS:
        raise PrefixTooShort(f"前缀长度 {prefix_length} 不足以形成 {TRIAGE_TAIL_BLOCKS} 个尾块")

    signs = sign_sequence(a, b, window)
    evidence = {
        "lt": sum(1 for s in signs if s < 0),
        "eq": sum(1 for s in signs if s == 0),
        "gt": sum(1 for s in signs if s > 0),
    }
    tail = signs[tail_first - first:]
    prefix = (window.first, window.last)

    if all(s < 0 for s in tail):
        cofinite_from = final_run_start([s < 0 for s in signs], first)
        return TriageVerdict(TriageKind.ALL_FREE_ULTRAFILTERS, evidence, prefix, cofinite_from)
    if all(s >= 0 for s in tail):
        return TriageVerdict(TriageKind.NO_FREE_ULTRAFILTER, evidence, prefix)

    size = tail_len // TRIAGE_TAIL_BLOCKS
    bounds = [i * size for i in range(TRIAGE_TAIL_BLOCKS)] + [tail_len]
    blocks = [tail[bounds[i]:bounds[i + 1]] for i in range(TRIAGE_TAIL_BLOCKS)]
    if all(any(s < 0 for s in blk) and any(s >= 0 for s in blk) for blk in blocks):
        return TriageVerdict(TriageKind.DEPENDS_ON_ULTRAFILTER, evidence, prefix)
    logger.warning(f"{a.label} vs {b.label} 的分诊在前缀 {prefix} 上没有结论")
    return TriageVerdict(TriageKind.INCONCLUSIVE, evidence, prefix)


# ---------------------------------------------------------------- 阿基米德类


def class_ladder(n_cap: int) -> List[int]:
    """倍增阶梯 {1, 2, 4, …} ∪ {n_cap}"""
    ladder = []
    n = 1
    while n <= n_cap:
        ladder.append(n)
        n *= 2
    if ladder[-1] != n_cap:
        ladder.append(n_cap)
    return ladder


def arch_class_compare(a: Germ, b: Germ, window: GridWindow, n_cap: int) -> ArchClassVerdict:
    """比较两个正芽的阿基米德类

    SAME_CLASS(n)：阶梯上最小的 n 使 a < n·b 且 b < n·a；
    LOWER_CLASS：对阶梯上每个 n 都有 n·a < b；HIGHER_CLASS 对称；否则 UNRESOLVED。
    """
    if n_cap < 2:
        raise ValueError("n_cap 至少为 2")
    va = a.values(window)
    vb = b.values(window)
    ladder = class_ladder(n_cap)

    for n in ladder:
        if tail_below(va, [n * y for y in vb], window) and tail_below(vb, [n * x for x in va], window):
            return ArchClassVerdict(ArchClassKind.SAME_CLASS, n_cap, window.last, n)
    if all(tail_below([n * x for x in va], vb, window) for n in ladder):
        return ArchClassVerdict(ArchClassKind.LOWER_CLASS, n_cap, window.last)
    if all(tail_below([n * y for y in vb], va, window) for n in ladder):
        return ArchClassVerdict(ArchClassKind.HIGHER_CLASS, n_cap, window.last)
    logger.info(f"{a.label} 与 {b.label} 的阿基米德类在窗口 {window} 上无法判定")
    return ArchClassVerdict(ArchClassKind.UNRESOLVED, n_cap, window.last)
