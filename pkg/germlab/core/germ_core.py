# 芽核心模块 - 网格 {1/j} 上芽的精确表示、求值与校验

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple, Union

import sympy

from .errors import (
    DomainMismatch,
    IndexBeforeStart,
    IndexBeyondDomain,
    NonPositiveValue,
)
from .verdicts import OrderKind, OrderVerdict

logger = logging.getLogger("germ_core")

# 精确有理数，始终是既约形式且分母为正
Rat = Fraction

J = sympy.Symbol("j", integer=True, positive=True)


def rat(numerator: int, denominator: int = 1) -> Rat:
    return Fraction(numerator, denominator)


class Tier(Enum):
    """单调性层级；GENERAL 表示不声明任何单调性"""

    PSEUDO_MONOTONE = "PSEUDO_MONOTONE"
    STRICT_MONOTONE = "STRICT_MONOTONE"
    STRICT_MONOTONE_CONTINUOUS_INTENT = "STRICT_MONOTONE_CONTINUOUS_INTENT"
    GENERAL = "GENERAL"


STRICT_TIERS = (Tier.STRICT_MONOTONE, Tier.STRICT_MONOTONE_CONTINUOUS_INTENT)


@dataclass(frozen=True)
class GridWindow:
    """网格片段 {1/j : first <= j <= last}"""

    first: int
    last: int

    def __post_init__(self):
        if self.first > self.last:
            raise DomainMismatch(f"窗口 [{self.first}, {self.last}] 为空")

    def indices(self) -> range:
        return range(self.first, self.last + 1)

    @property
    def midpoint(self) -> int:
        """尾部判定的分界点：稳定段须从此处或更早开始"""
        return self.first + (self.last - self.first) // 2

    def __len__(self) -> int:
        return self.last - self.first + 1

    def __contains__(self, index: int) -> bool:
        return self.first <= index <= self.last

    def __str__(self) -> str:
        return f"[{self.first}, {self.last}]"


# ---------------------------------------------------------------- 生成器


class Generator(ABC):
    """整数编码生成器 j -> K(j)"""

    certified = False

    @abstractmethod
    def __call__(self, j: int) -> int:
        ...

    @abstractmethod
    def describe(self) -> str:
        ...


@dataclass(frozen=True)
class PolyGenerator(Generator):
    """整系数多项式，coeffs 按升幂排列"""

    coeffs: Tuple[int, ...]
    certified = True

    def __post_init__(self):
        trimmed = list(self.coeffs)
        while len(trimmed) > 1 and trimmed[-1] == 0:
            trimmed.pop()
        object.__setattr__(self, "coeffs", tuple(int(c) for c in trimmed) or (0,))

    def __call__(self, j: int) -> int:
        total = 0
        for c in reversed(self.coeffs):
            total = total * j + c
        return total

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> int:
        return self.coeffs[-1]

    def as_poly(self) -> sympy.Poly:
        return sympy.Poly(list(reversed(self.coeffs)), J)

    @classmethod
    def from_poly(cls, poly: sympy.Poly) -> "PolyGenerator":
        return cls(tuple(int(c) for c in reversed(poly.all_coeffs())))

    def compose(self, inner: "PolyGenerator") -> "PolyGenerator":
        return PolyGenerator.from_poly(self.as_poly().compose(inner.as_poly()))

    def times(self, other: "PolyGenerator") -> "PolyGenerator":
        return PolyGenerator.from_poly(self.as_poly() * other.as_poly())

    def describe(self) -> str:
        return str(self.as_poly().as_expr())


@dataclass(frozen=True)
class ExpGenerator(Generator):
    """c·b^j，c >= 1，b >= 2"""

    c: int
    b: int
    certified = True

    def __call__(self, j: int) -> int:
        return self.c * self.b ** j

    def times(self, other: "ExpGenerator") -> "ExpGenerator":
        return ExpGenerator(self.c * other.c, self.b * other.b)

    def describe(self) -> str:
        return f"{self.c}*{self.b}^j" if self.c != 1 else f"{self.b}^j"


@dataclass(frozen=True)
class FunctionGenerator(Generator):
    """不透明的纯函数生成器，只能做到视界判定"""

    fn: Callable[[int], int] = field(compare=False)
    description: str = "opaque"

    def __call__(self, j: int) -> int:
        return int(self.fn(j))

    def describe(self) -> str:
        return self.description


# ---------------------------------------------------------------- 芽


class Germ(ABC):
    """网格 {1/j} 尾部上的芽；start 为首个有定义的下标，stop 为可选的末下标"""

    label: str
    start: int
    stop: Optional[int]

    def check_index(self, j: int) -> None:
        if j < self.start:
            raise IndexBeforeStart(self.label, j, self.start)
        if self.stop is not None and j > self.stop:
            raise IndexBeyondDomain(self.label, j, self.stop)

    def value(self, j: int) -> Rat:
        """网格点 1/j 处的精确值"""
        self.check_index(j)
        return self._value(j)

    @abstractmethod
    def _value(self, j: int) -> Rat:
        ...

    def covers(self, window: GridWindow) -> bool:
        if window.first < self.start:
            return False
        return self.stop is None or window.last <= self.stop

    def require_window(self, window: GridWindow) -> None:
        self.check_index(window.first)
        self.check_index(window.last)

    def default_window(self, horizon: int) -> GridWindow:
        last = horizon if self.stop is None else min(horizon, self.stop)
        return GridWindow(self.start, max(last, self.start))

    def values(self, window: GridWindow) -> List[Rat]:
        self.require_window(window)
        return [self._value(j) for j in window.indices()]


@dataclass(frozen=True)
class PLGerm(Germ):
    """𝒫ℒ⁰ 芽：网格点 1/j 处取值 1/K(j)，head 覆盖生成器的有限前缀"""

    generator: Generator
    start: int = 1
    head: Tuple[int, ...] = ()
    label: str = "pl"
    stop: Optional[int] = None

    tier = Tier.STRICT_MONOTONE_CONTINUOUS_INTENT

    def code(self, j: int) -> int:
        self.check_index(j)
        return self._code(j)

    def _code(self, j: int) -> int:
        offset = j - self.start
        if offset < len(self.head):
            return self.head[offset]
        return self.generator(j)

    def _value(self, j: int) -> Rat:
        k = self._code(j)
        if k <= 0:
            raise NonPositiveValue(f"芽 {self.label} 在下标 {j} 处编码为 {k}")
        return Fraction(1, k)

    def codes(self, window: GridWindow) -> List[int]:
        self.require_window(window)
        return [self._code(j) for j in window.indices()]

    @property
    def head_end(self) -> int:
        """首个由生成器决定取值的下标"""
        return self.start + len(self.head)

    @property
    def certified_tail(self) -> bool:
        return self.generator.certified

    def embed(self) -> "RatGerm":
        """嵌入为 RatGerm，逐点保持取值"""
        return RatGerm(
            profile=self._value,
            start=self.start,
            tier=self.tier,
            label=self.label,
            stop=self.stop,
        )

    def relabel(self, label: str) -> "PLGerm":
        return PLGerm(self.generator, self.start, self.head, label, self.stop)


@dataclass(frozen=True)
class RatGerm(Germ):
    """一般（伪）单调芽，以网格上的精确有理剖面给出"""

    profile: Callable[[int], Rat] = field(compare=False)
    start: int = 1
    tier: Tier = Tier.GENERAL
    label: str = "rat"
    stop: Optional[int] = None

    def _value(self, j: int) -> Rat:
        return Fraction(self.profile(j))

    @classmethod
    def from_table(
        cls,
        values: Sequence[Rat],
        start: int,
        tier: Tier = Tier.GENERAL,
        label: str = "table",
    ) -> "RatGerm":
        table = tuple(Fraction(v) for v in values)
        return cls(
            profile=lambda j: table[j - start],
            start=start,
            tier=tier,
            label=label,
            stop=start + len(table) - 1,
        )

    def relabel(self, label: str) -> "RatGerm":
        return RatGerm(self.profile, self.start, self.tier, label, self.stop)


@dataclass(frozen=True)
class SeqGerm(Germ):
    """下标 ∞ 处严格递减正有理数列的芽"""

    terms: Callable[[int], Rat] = field(compare=False)
    start: int = 1
    label: str = "seq"
    stop: Optional[int] = None

    def _value(self, j: int) -> Rat:
        return Fraction(self.terms(j))


class ZeroGerm(Germ):
    """零芽哨兵；不属于任何单调层级"""

    label = "0"
    start = 1
    stop = None

    def _value(self, j: int) -> Rat:
        return Fraction(0)

    def __repr__(self) -> str:
        return "ZERO_GERM"


ZERO_GERM = ZeroGerm()

AnyGerm = Union[PLGerm, RatGerm, SeqGerm, ZeroGerm]


def is_zero(g: Germ) -> bool:
    return isinstance(g, ZeroGerm)


# ---------------------------------------------------------------- 操作


def eval_at(g: Germ, j: int) -> Rat:
    """返回芽在网格点 1/j（或数列第 j 项）的精确值

    Raises:
        IndexBeforeStart: j 早于起始下标
    """
    return g.value(j)


def sign_sequence(a: Germ, b: Germ, window: GridWindow) -> List[int]:
    """逐点符号 sign(a(j) - b(j))，两个 PL 芽直接比较整数编码"""
    if isinstance(a, PLGerm) and isinstance(b, PLGerm):
        ka = a.codes(window)
        kb = b.codes(window)
        return [(y > x) - (y < x) for x, y in zip(ka, kb)]
    va = a.values(window)
    vb = b.values(window)
    return [(x > y) - (x < y) for x, y in zip(va, vb)]


def final_run_start(signs: Sequence[int], first: int) -> int:
    """符号序列末尾常值段的起始下标"""
    idx = len(signs) - 1
    tail = signs[idx]
    while idx > 0 and signs[idx - 1] == tail:
        idx -= 1
    return first + idx


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    first_violation: Optional[int] = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    """校验报告：违例是报告内容而不是异常"""

    label: str
    window: GridWindow
    checks: Tuple[InvariantCheck, ...]
    tier: Tier
    limit_threshold: Optional[int] = None
    limit_index: Optional[int] = None

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_violation(self) -> Optional[int]:
        hits = [c.first_violation for c in self.checks if c.first_violation is not None]
        return min(hits) if hits else None

    def check(self, name: str) -> InvariantCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def limit_evidence(self) -> str:
        if self.limit_threshold is None:
            return "limit unverified"
        return f"dropped below 1/{self.limit_threshold} by index {self.limit_index}"


def _first_where(values: Sequence, first: int, bad: Callable[[int], bool]) -> Optional[int]:
    for offset in range(len(values)):
        if bad(offset):
            return first + offset
    return None


def _check(name: str, violation: Optional[int], detail: str) -> InvariantCheck:
    return InvariantCheck(name, violation is None, violation, detail if violation is not None else "")


def _limit_evidence(values: Sequence[Rat], first: int) -> Tuple[Optional[int], Optional[int]]:
    positive = [v for v in values if v > 0]
    if not positive:
        return None, None
    lowest = min(positive)
    threshold = math.ceil(1 / lowest) - 1
    if threshold < 1:
        return None, None
    bound = Fraction(1, threshold)
    for offset, v in enumerate(values):
        if 0 < v < bound:
            return threshold, first + offset
    return None, None


def _infer_tier(values: Sequence[Rat], strict_tier: Tier) -> Tier:
    pairs = list(zip(values, values[1:]))
    if all(y < x for x, y in pairs):
        return strict_tier
    if all(y <= x for x, y in pairs):
        return Tier.PSEUDO_MONOTONE
    return Tier.GENERAL


def validate(g: Germ, window: GridWindow) -> ValidationReport:
    """检查芽在窗口上的单调性/正性不变量，并给出趋于 0 的证据

    Args:
        g: 待校验的芽
        window: 检查窗口，须在芽的定义域内

    Returns:
        ValidationReport: 逐项检查结果、首个违例下标与极限证据
    """
    g.require_window(window)
    first = window.first
    checks: List[InvariantCheck] = []

    if is_zero(g):
        checks.append(_check("nonzero", first, "零芽不属于任何单调层级"))
        return ValidationReport(g.label, window, tuple(checks), Tier.GENERAL)

    if isinstance(g, PLGerm):
        codes = g.codes(window)
        bad_code = _first_where(codes, first, lambda i: codes[i] <= 0)
        checks.append(_check("positive_codes", bad_code, "K(j) 必须为正整数"))
        bad_step = _first_where(codes, first, lambda i: i > 0 and codes[i] <= codes[i - 1])
        checks.append(_check("strictly_increasing_codes", bad_step, "K(j+1) > K(j)"))
        values = [Fraction(1, k) if k > 0 else Fraction(0) for k in codes]
        tier = g.tier if bad_code is None and bad_step is None else _infer_tier(values, Tier.STRICT_MONOTONE)
    else:
        values = g.values(window)
        bad_value = _first_where(values, first, lambda i: values[i] <= 0)
        checks.append(_check("positive_values", bad_value, "取值必须为正"))
        declared = g.tier if isinstance(g, RatGerm) else Tier.STRICT_MONOTONE
        if declared == Tier.PSEUDO_MONOTONE:
            bad_step = _first_where(values, first, lambda i: i > 0 and values[i] > values[i - 1])
            checks.append(_check("nonincreasing", bad_step, "v(j+1) <= v(j)"))
        elif declared in STRICT_TIERS:
            bad_step = _first_where(values, first, lambda i: i > 0 and values[i] >= values[i - 1])
            checks.append(_check("strictly_decreasing", bad_step, "v(j+1) < v(j)"))
        if isinstance(g, RatGerm) and declared != Tier.GENERAL:
            bad_range = _first_where(values, first, lambda i: values[i] > 1)
            checks.append(_check("at_most_one", bad_range, "取值位于 (0,1]"))
        tier = _infer_tier(values, Tier.STRICT_MONOTONE)

    threshold, index = _limit_evidence(values, first)
    report = ValidationReport(g.label, window, tuple(checks), tier, threshold, index)
    if report.valid:
        logger.debug(f"芽 {g.label} 在窗口 {window} 上校验通过，{report.limit_evidence()}")
    else:
        logger.info(f"芽 {g.label} 在窗口 {window} 上首个违例下标为 {report.first_violation}")
    return report


def canonical_eq(a: Germ, b: Germ, window: GridWindow) -> OrderVerdict:
    """在窗口内判定芽相等：EQUAL_FROM(j₁) 取最小的 j₁，不对视界之外作断言

    Raises:
        IndexBeforeStart: 窗口早于任一芽的起始下标
    """
    signs = sign_sequence(a, b, window)
    if signs[-1] != 0:
        return OrderVerdict(
            OrderKind.DIFFER_THROUGHOUT, window.last, window.last, lhs=a.label, rhs=b.label
        )
    j1 = final_run_start(signs, window.first)
    return OrderVerdict(OrderKind.EQUAL_FROM, j1, window.last, lhs=a.label, rhs=b.label)
