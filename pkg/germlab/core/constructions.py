# 构造模块 - 复合、求逆/切换、逐点运算、PL 下界、对角下界与夹逼

import bisect
import logging
import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

from .errors import (
    AnchorsNotDecreasing,
    DivisionByZeroGerm,
    DomainMismatch,
    EmptyFamily,
    LimitUnverified,
    NotMonotone,
    NotStrictlyMonotone,
    TooFewAnchors,
)
from .germ_core import (
    ExpGenerator,
    FunctionGenerator,
    Germ,
    GridWindow,
    PLGerm,
    PolyGenerator,
    Rat,
    RatGerm,
    Tier,
    final_run_start,
    sign_sequence,
    validate,
)
from .order_engine import compare_germwise
from .verdicts import OrderVerdict

logger = logging.getLogger("constructions")

# 构造结果的重新校验窗口长度
VALIDATION_PROBE = 64
DEFAULT_SEARCH_HORIZON = 10000


def _probe_window(g: Germ, length: int = VALIDATION_PROBE) -> GridWindow:
    return g.default_window(g.start + length - 1)


def _require_strict(g: PLGerm) -> None:
    report = validate(g, _probe_window(g))
    if not report.valid:
        raise NotStrictlyMonotone(g.label, report.first_violation)


# ---------------------------------------------------------------- 锚点列


@dataclass(frozen=True)
class AnchorSeq:
    """严格递增的网格下标 j₁ < j₂ < …（点 r_k = 1/j_k 递减）

    head 给出有限前缀，tail(k) 给出 k > len(head) 的锚点；tail 为空时锚点列有限。
    """

    head: Tuple[int, ...] = ()
    tail: Optional[Callable[[int], int]] = field(default=None, compare=False)
    description: str = ""

    @property
    def count(self) -> Optional[int]:
        return len(self.head) if self.tail is None else None

    def index(self, k: int) -> int:
        """第 k 个锚点（从 1 开始）"""
        if k <= len(self.head):
            return self.head[k - 1]
        if self.tail is None:
            raise IndexError(k)
        return int(self.tail(k))

    def validate(self, probe: int = VALIDATION_PROBE) -> None:
        count = self.count
        if count is not None and count < 3:
            raise TooFewAnchors(f"锚点个数 {count} 少于 3")
        upto = count if count is not None else max(len(self.head), 0) + probe
        previous = None
        for k in range(1, upto + 1):
            current = self.index(k)
            if current < 1 or (previous is not None and current <= previous):
                raise AnchorsNotDecreasing(f"第 {k} 个锚点 {current} 不大于前一个 {previous}")
            previous = current

    def segment(self, j: int) -> int:
        """返回 k 使 j_k <= j < j_{k+1}"""
        lo, hi = 1, max(j - self.index(1) + 2, 2)
        if self.count is not None:
            hi = min(hi, self.count)
        # 不变量: index(lo) <= j；hi 为候选上界
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.index(mid) <= j:
                lo = mid
            else:
                hi = mid - 1
        return lo


# ---------------------------------------------------------------- 复合与求逆


def compose(p: PLGerm, q: PLGerm, horizon: int = DEFAULT_SEARCH_HORIZON) -> PLGerm:
    """复合 p∘q，编码为 j -> K_p(K_q(j))

    Raises:
        DomainMismatch: 在视界内找不到使 K_q(j) >= p.start 的起点
    """
    start = q.start
    while q.code(start) < p.start:
        start += 1
        if start > horizon:
            raise DomainMismatch(f"{q.label} 的取值在视界 {horizon} 内未进入 {p.label} 的定义域")

    label = f"({p.label} . {q.label})"
    gp, gq = p.generator, q.generator
    if not p.head and not q.head and isinstance(gp, PolyGenerator) and isinstance(gq, PolyGenerator):
        generator = gp.compose(gq)
    else:
        generator = FunctionGenerator(lambda j: p.code(q.code(j)), f"{gp.describe()} o {gq.describe()}")
    result = PLGerm(generator, start=start, label=label)
    _require_strict(result)
    logger.debug(f"复合 {label} 起始下标 {start}，生成器 {generator.describe()}")
    return result


def _anchor_before(p: PLGerm, i: int) -> int:
    """返回最大的 j 使 K(j) <= i（要求 i >= K(start)）"""
    lo = p.start
    step = 1
    hi = lo + step
    while p.code(hi) <= i:
        lo = hi
        step *= 2
        hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if p.code(mid) <= i:
            lo = mid
        else:
            hi = mid
    return lo


def invert(p: PLGerm, switch: bool = False) -> RatGerm:
    """逆芽：锚点 1/K(j) ↦ 1/j，锚点之间按 t 做精确仿射插值

    switch=True 时只做锚点转置（切换映射），锚点之间取常值 1/j，取值保持在 1/ℕ 中。

    Raises:
        NotStrictlyMonotone: p 不是严格单调
    """
    _require_strict(p)

    def profile(i: int) -> Rat:
        j = _anchor_before(p, i)
        k_lo = p.code(j)
        if i == k_lo or switch:
            return Fraction(1, j)
        k_hi = p.code(j + 1)
        t = Fraction(1, i)
        t_lo, t_hi = Fraction(1, k_hi), Fraction(1, k_lo)
        v_lo, v_hi = Fraction(1, j + 1), Fraction(1, j)
        return v_lo + (t - t_lo) * (v_hi - v_lo) / (t_hi - t_lo)

    name = "switch" if switch else "inv"
    tier = Tier.PSEUDO_MONOTONE if switch else Tier.STRICT_MONOTONE_CONTINUOUS_INTENT
    return RatGerm(profile, start=p.code(p.start), tier=tier, label=f"{name}({p.label})")


# ---------------------------------------------------------------- 逐点运算


class ArithOp(Enum):
    ADD = "+"
    MUL = "*"
    DIV = "/"
    SCALE = "scale"


def _common_domain(a: Germ, b: Germ) -> Tuple[int, Optional[int]]:
    start = max(a.start, b.start)
    stops = [s for s in (a.stop, b.stop) if s is not None]
    stop = min(stops) if stops else None
    if stop is not None and stop < start:
        raise DomainMismatch(f"{a.label} 与 {b.label} 的定义域不相交")
    return start, stop


def _retier(g: RatGerm) -> RatGerm:
    """按校验结果重新标注单调层级"""
    tier = validate(g, _probe_window(g)).tier
    return RatGerm(g.profile, g.start, tier, g.label, g.stop)


def _product_generator(a: PLGerm, b: PLGerm):
    ga, gb = a.generator, b.generator
    if not a.head and not b.head:
        if isinstance(ga, PolyGenerator) and isinstance(gb, PolyGenerator):
            return ga.times(gb)
        if isinstance(ga, ExpGenerator) and isinstance(gb, ExpGenerator):
            return ga.times(gb)
    return FunctionGenerator(lambda j: a.code(j) * b.code(j), f"({ga.describe()})*({gb.describe()})")


def arithmetic(
    op: ArithOp, a: Germ, b: Optional[Germ] = None, q: Optional[Rat] = None
) -> Union[PLGerm, RatGerm]:
    """网格上的逐点精确运算

    两个 PL 芽之积仍是 PL 芽（1/k · 1/k′ = 1/(kk′)）；其余结果为 RatGerm，层级经校验重算。

    Raises:
        DomainMismatch: 定义域不相交或缩放因子非正
        DivisionByZeroGerm: 除数在某个网格点为零（求值时）
    """
    if op == ArithOp.SCALE:
        if q is None or Fraction(q) <= 0:
            raise DomainMismatch(f"缩放因子 {q} 必须为正有理数")
        factor = Fraction(q)
        return _retier(
            RatGerm(lambda j: factor * a.value(j), a.start, Tier.GENERAL, f"scale({factor}, {a.label})", a.stop)
        )
    if b is None:
        raise DomainMismatch(f"运算 {op.value} 需要两个操作数")
    start, stop = _common_domain(a, b)
    label = f"({a.label} {op.value} {b.label})"

    if op == ArithOp.MUL and isinstance(a, PLGerm) and isinstance(b, PLGerm):
        return PLGerm(_product_generator(a, b), start=start, label=label, stop=stop)
    if op == ArithOp.ADD:
        profile = lambda j: a.value(j) + b.value(j)
    elif op == ArithOp.MUL:
        profile = lambda j: a.value(j) * b.value(j)
    else:
        def profile(j: int) -> Rat:
            divisor = b.value(j)
            if divisor == 0:
                raise DivisionByZeroGerm(f"{b.label} 在下标 {j} 处为零")
            return a.value(j) / divisor
    return _retier(RatGerm(profile, start, Tier.GENERAL, label, stop))


# ---------------------------------------------------------------- PL 下界


class _ThresholdAnchors:
    """m 首次降到 1/n 以下的网格下标（去重后严格递增），按需惰性扩展"""

    def __init__(self, m: Germ, limit: int):
        self.m = m
        self.limit = limit
        self.anchors: List[int] = []
        self._scanned = m.start - 1
        self._previous: Optional[Rat] = None
        self._lock = threading.Lock()

    def _scan_one(self) -> None:
        j = self._scanned + 1
        if j > self.limit or (self.m.stop is not None and j > self.m.stop):
            raise LimitUnverified(f"{self.m.label} 在下标 {self.limit} 之前没有越过足够多的阈值 1/n")
        v = self.m.value(j)
        if v <= 0:
            raise LimitUnverified(f"{self.m.label} 在下标 {j} 处非正")
        if self._previous is None:
            crossed = v < 1
        else:
            crossed = math.ceil(1 / self._previous) * v < 1
        if crossed:
            self.anchors.append(j)
        self._previous = v
        self._scanned = j

    def bracket(self, i: int) -> Tuple[int, List[int]]:
        """返回 s 与锚点列，使 a_s <= i < a_{s+1} 且 a_{s+3} 已知"""
        with self._lock:
            while len(self.anchors) < 2 or self.anchors[-1] <= i:
                self._scan_one()
            s = bisect.bisect_right(self.anchors, i) - 1
            if s < 0:
                raise DomainMismatch(f"下标 {i} 早于首个阈值锚点 {self.anchors[0]}")
            while len(self.anchors) < s + 4:
                self._scan_one()
            return s, list(self.anchors[s:s + 4])

    def first_anchor(self) -> int:
        with self._lock:
            while not self.anchors:
                self._scan_one()
            return self.anchors[0]


class _MinorantCodes:
    """ŵ 的整数编码 K(j) = max(⌈1/w̃(1/(j+1))⌉ + 1, K(j-1) + 1)，顺序记忆化"""

    def __init__(self, m: Germ, anchors: _ThresholdAnchors, start: int):
        self.m = m
        self.anchors = anchors
        self.start = start
        self.codes: List[int] = []
        self._lock = threading.Lock()

    def intermediate(self, i: int) -> Rat:
        """中间剖面 w̃ 在网格点 1/i 的值：w̃(a_s) = m(a_{s+2})，锚点间按 t 仿射插值"""
        s, (a0, a1, a2, a3) = self.anchors.bracket(i)
        w0 = self.m.value(a2)
        if i == a0:
            return w0
        w1 = self.m.value(a3)
        t, t0, t1 = Fraction(1, i), Fraction(1, a0), Fraction(1, a1)
        return w1 + (t - t1) * (w0 - w1) / (t0 - t1)

    def __call__(self, j: int) -> int:
        with self._lock:
            while len(self.codes) <= j - self.start:
                n = self.start + len(self.codes)
                code = math.ceil(1 / self.intermediate(n + 1)) + 1
                if self.codes:
                    code = max(code, self.codes[-1] + 1)
                self.codes.append(code)
            return self.codes[j - self.start]


@dataclass(frozen=True)
class MinorantResult:
    germ: PLGerm
    verified_from: int
    horizon: int


def minorize_to_pl(m: Germ, horizon: int, scan_factor: int = 8) -> MinorantResult:
    """构造 𝒫ℒ⁰ 中严格位于 m 之下的芽

    (i) 对每个阈值 1/n 取 m 首次降到其下的网格下标 a_j；
    (ii) 中间剖面 w̃(a_j) = m(a_{j+2})；
    (iii) 取整公式 ŵ(1/j) = 1/(⌈1/w̃(1/(j+1))⌉ + 1) 给出整数编码。

    Args:
        m: 伪单调芽
        horizon: 校验视界
        scan_factor: 惰性扩展锚点时允许扫描到 horizon 的倍数

    Returns:
        MinorantResult: ŵ 以及 ŵ < m 在 [verified_from, horizon] 上逐点成立的起点

    Raises:
        NotMonotone: m 在视界内不是非增的
        LimitUnverified: m 在扫描预算内没有降到足够多的阈值以下
    """
    window = m.default_window(horizon)
    report = validate(m, window)
    for check in report.checks:
        if check.name in ("nonincreasing", "strictly_decreasing", "strictly_increasing_codes") and not check.passed:
            raise NotMonotone(f"{m.label} 在下标 {check.first_violation} 处上升")
    if report.tier not in (Tier.PSEUDO_MONOTONE, Tier.STRICT_MONOTONE, Tier.STRICT_MONOTONE_CONTINUOUS_INTENT):
        raise NotMonotone(f"{m.label} 在窗口 {window} 上不是伪单调的")

    anchors = _ThresholdAnchors(m, (horizon + 1) * scan_factor)
    start = max(m.start, anchors.first_anchor() - 1)
    codes = _MinorantCodes(m, anchors, start)
    germ = PLGerm(FunctionGenerator(codes, f"minorant({m.label})"), start=start, label=f"minor({m.label})")

    check_window = GridWindow(start, max(horizon, start))
    pl_report = validate(germ, check_window)
    if not pl_report.valid:
        raise NotStrictlyMonotone(germ.label, pl_report.first_violation)
    signs = sign_sequence(germ, m, check_window)
    if signs[-1] < 0:
        verified_from = final_run_start(signs, check_window.first)
    else:
        verified_from = check_window.last + 1
    logger.info(f"{germ.label}: 自下标 {verified_from} 起严格位于 {m.label} 之下（视界 {horizon}）")
    return MinorantResult(germ, verified_from, check_window.last)


# ---------------------------------------------------------------- 对角下界


class PLFamily:
    """可重放的 PL 芽族：有限列表或按下标生成（记忆化）的流"""

    def __init__(
        self,
        members: Optional[Sequence[PLGerm]] = None,
        factory: Optional[Callable[[int], PLGerm]] = None,
        size: Optional[int] = None,
    ):
        if members is None and factory is None:
            raise EmptyFamily("芽族既没有成员也没有生成方式")
        self._members = list(members) if members is not None else []
        self._factory = factory
        self.size = len(self._members) if factory is None else size
        if self.size == 0:
            raise EmptyFamily("芽族为空")
        self._lock = threading.Lock()

    def member(self, index: int) -> PLGerm:
        """第 index 个成员（从 1 开始）"""
        if self.size is not None and index > self.size:
            raise IndexError(index)
        with self._lock:
            while len(self._members) < index:
                self._members.append(self._factory(len(self._members) + 1))
            return self._members[index - 1]


def diagonal_below(family: Union[PLFamily, Sequence[PLGerm]]) -> PLGerm:
    """对角下界：L(k) = max{K_j(k) : 1 <= j <= min(k, N)} + k

    对每个成员 j 与每个 k >= max(j, 成员起点)，对角芽在 k 处严格低于成员 j。

    Raises:
        EmptyFamily: 芽族为空
    """
    if not isinstance(family, PLFamily):
        if not family:
            raise EmptyFamily("芽族为空")
        family = PLFamily(members=family)
        for i in range(1, family.size + 1):
            _require_strict(family.member(i))

    def code(k: int) -> int:
        upto = k if family.size is None else min(k, family.size)
        best = 0
        for j in range(1, upto + 1):
            member = family.member(j)
            if member.start <= k:
                best = max(best, member.code(k))
        return best + k

    first = family.member(1)
    germ = PLGerm(FunctionGenerator(code, "diagonal"), start=first.start, label="diag")
    _require_strict(germ)
    logger.info(f"对角下界构造完成，族大小 {family.size or '∞'}，起始下标 {germ.start}")
    return germ


# ---------------------------------------------------------------- 夹逼


class PinchDirection(Enum):
    LOWER = "lower"
    UPPER = "upper"


def pinch(direction: PinchDirection, m0: Germ, anchors: AnchorSeq) -> RatGerm:
    """由沿锚点的界构造整体的芽界

    LOWER: u(r_k) = m0(r_{k+1})，在 [j_k, j_{k+1}) 上取常值；
    UPPER: o(r_k) = m0(r_{k-1})，在 (j_{k-1}, j_k] 上取常值，从第二个锚点开始。

    Raises:
        TooFewAnchors: 锚点少于 3 个
        AnchorsNotDecreasing: 锚点下标不严格递增
    """
    anchors.validate()
    first = anchors.index(1)
    if first < m0.start:
        raise DomainMismatch(f"首个锚点 {first} 早于 {m0.label} 的起点 {m0.start}")
    count = anchors.count

    if direction == PinchDirection.LOWER:
        stop = anchors.index(count) - 1 if count is not None else None

        def profile(j: int) -> Rat:
            return m0.value(anchors.index(anchors.segment(j) + 1))

        return RatGerm(profile, first, Tier.PSEUDO_MONOTONE, f"pinch(lower, {m0.label})", stop)

    stop = anchors.index(count) if count is not None else None

    def upper_profile(j: int) -> Rat:
        return m0.value(anchors.index(anchors.segment(j - 1)))

    return RatGerm(upper_profile, first + 1, Tier.PSEUDO_MONOTONE, f"pinch(upper, {m0.label})", stop)


# ---------------------------------------------------------------- 乘法开映射


def open_mult_radius(m: Germ, r: Germ) -> Germ:
    """半径 r̂ = m·r：任何 h < r̂ 都分解为 m·(h/m) 且 h/m < r"""
    return arithmetic(ArithOp.MUL, m, r)


@dataclass(frozen=True)
class FactorizationCheck:
    member: OrderVerdict
    quotient: OrderVerdict

    @property
    def factorizes(self) -> bool:
        return self.member.holds_lt() and self.quotient.holds_lt()


def check_factorization(m: Germ, r: Germ, h: Germ, window: GridWindow) -> FactorizationCheck:
    """检查 h < m·r 以及 h/m < r（均为芽序）"""
    radius = open_mult_radius(m, r)
    member = compare_germwise(h, radius, window)
    quotient = compare_germwise(arithmetic(ArithOp.DIV, h, m), r, window)
    return FactorizationCheck(member, quotient)
