# 判定结果类型 - 芽序、超滤子分诊、阿基米德类与分析判定的统一记录

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple


class OrderKind(Enum):
    CERTIFIED_LT = "CERTIFIED_LT"
    HOLDS_UPTO_LT = "HOLDS_UPTO_LT"
    FAILS_AT = "FAILS_AT"
    MIXED = "MIXED"
    EQUAL_FROM = "EQUAL_FROM"
    DIFFER_THROUGHOUT = "DIFFER_THROUGHOUT"


LT_KINDS = (OrderKind.CERTIFIED_LT, OrderKind.HOLDS_UPTO_LT)


@dataclass(frozen=True)
class OrderVerdict:
    """芽比较的判定

    swapped 为 True 表示严格关系的方向是 rhs < lhs；
    因此 LT 判定总可以读作 "较小者 < 较大者"，交换参数只翻转这个标志。
    """

    kind: OrderKind
    witness_index: int
    horizon: int
    certificate: Optional[str] = None
    swapped: bool = False
    lhs: str = "lhs"
    rhs: str = "rhs"

    def holds_lt(self) -> bool:
        """lhs < rhs 是否成立（认证或到视界为止）"""
        return self.kind in LT_KINDS and not self.swapped

    def holds_gt(self) -> bool:
        return self.kind in LT_KINDS and self.swapped

    def is_certified(self) -> bool:
        return self.certificate is not None

    def flipped(self) -> "OrderVerdict":
        """交换两个参数后的同一判定"""
        swapped = not self.swapped if self.kind in LT_KINDS else self.swapped
        return replace(self, swapped=swapped, lhs=self.rhs, rhs=self.lhs)

    def ordered_labels(self) -> Tuple[str, str]:
        """按严格关系方向排列的 (较小者, 较大者) 标签"""
        if self.swapped:
            return self.rhs, self.lhs
        return self.lhs, self.rhs


class TriageKind(Enum):
    ALL_FREE_ULTRAFILTERS = "ALL_FREE_ULTRAFILTERS"
    NO_FREE_ULTRAFILTER = "NO_FREE_ULTRAFILTER"
    DEPENDS_ON_ULTRAFILTER = "DEPENDS_ON_ULTRAFILTER"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class TriageVerdict:
    kind: TriageKind
    evidence: Dict[str, int]
    prefix: Tuple[int, int]
    cofinite_from: Optional[int] = None


class ArchClassKind(Enum):
    SAME_CLASS = "SAME_CLASS"
    LOWER_CLASS = "LOWER_CLASS"
    HIGHER_CLASS = "HIGHER_CLASS"
    UNRESOLVED = "UNRESOLVED"


@dataclass(frozen=True)
class ArchClassVerdict:
    kind: ArchClassKind
    n_cap: int
    horizon: int
    n: Optional[int] = None

    def class_at_most(self) -> bool:
        """lhs 的阿基米德类不高于 rhs"""
        return self.kind in (ArchClassKind.SAME_CLASS, ArchClassKind.LOWER_CLASS)


class VerdictKind(Enum):
    CONTINUOUS_AT_HORIZON = "CONTINUOUS_AT_HORIZON"
    DISCONTINUOUS_WITNESS = "DISCONTINUOUS_WITNESS"
    HOLDS_AT_HORIZON = "HOLDS_AT_HORIZON"
    VIOLATION = "VIOLATION"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class Verdict:
    """分析层（连续性、强三角不等式）的判定"""

    kind: VerdictKind
    horizon: int
    witness_index: Optional[int] = None
    subject: Optional[str] = None
    evidence: Dict[str, Any] = field(default_factory=dict)
