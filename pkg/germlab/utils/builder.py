# 构建器 - 把 DSL 语法树求值为芽对象，按名解析引用

import logging
from fractions import Fraction
from typing import Dict, List, Mapping, Optional

from ..core.constructions import (
    AnchorSeq,
    ArithOp,
    PinchDirection,
    arithmetic,
    compose,
    diagonal_below,
    invert,
    minorize_to_pl,
    pinch,
)
from ..core.errors import DomainMismatch, GermlabError, UnknownGerm
from ..core.germ_core import (
    FunctionGenerator,
    Germ,
    PLGerm,
    RatGerm,
    Tier,
    validate,
)
from .dsl import (
    AnchorList,
    Compose,
    Definition,
    Diag,
    GermExpr,
    Inv,
    Minor,
    Pinch,
    PlGen,
    Product,
    Quotient,
    RatGen,
    Ref,
    Scale,
    Sum,
    Switch,
    Table,
    classify_generator,
    eval_expr,
    format_expr,
)

logger = logging.getLogger("builder")

TIER_PROBE = 256


def _named(g: Germ, name: str) -> Germ:
    relabel = getattr(g, "relabel", None)
    return relabel(name) if relabel is not None else g


def _require_pl(g: Germ, operation: str) -> PLGerm:
    if not isinstance(g, PLGerm):
        raise DomainMismatch(f"{operation} 只对 PL 芽定义，{g.label} 不是 PL 芽")
    return g


def _rat_germ(profile_expr, label: str) -> RatGerm:
    germ = RatGerm(lambda j: eval_expr(profile_expr, {"j": j}), start=1, label=label)
    try:
        tier = validate(germ, germ.default_window(TIER_PROBE)).tier
    except GermlabError as e:
        logger.debug(f"{label} 的层级推断失败: {e}")
        tier = Tier.GENERAL
    return RatGerm(germ.profile, 1, tier, label)


class GermBuilder:
    """按名惰性构建芽；同名定义只构建一次，循环引用报 UnknownGerm"""

    def __init__(
        self,
        definitions: List[Definition],
        library: Optional[Mapping[str, Germ]] = None,
        horizon: int = 10000,
        scan_factor: int = 8,
    ):
        self.definitions: Dict[str, Definition] = {d.name: d for d in definitions}
        self.library = dict(library or {})
        self.horizon = horizon
        self.scan_factor = scan_factor
        self._built: Dict[str, Germ] = {}
        self._pending: List[str] = []

    def names(self) -> List[str]:
        return list(self.definitions)

    def get(self, name: str) -> Germ:
        """按名取芽

        Raises:
            UnknownGerm: 名字未定义或定义相互循环引用
        """
        if name in self._built:
            return self._built[name]
        if name in self._pending:
            raise UnknownGerm(f"芽 {name} 的定义循环引用: {' -> '.join(self._pending + [name])}")
        if name not in self.definitions:
            if name in self.library:
                return self.library[name]
            raise UnknownGerm(f"未定义的芽: {name}")
        self._pending.append(name)
        try:
            germ = _named(self.build(self.definitions[name].expr, name), name)
        finally:
            self._pending.pop()
        self._built[name] = germ
        logger.debug(f"已构建芽 {name}")
        return germ

    def build_all(self) -> Dict[str, Germ]:
        return {name: self.get(name) for name in self.definitions}

    def build(self, expr: GermExpr, label: str = "expr") -> Germ:
        if isinstance(expr, Ref):
            return self.get(expr.name)
        if isinstance(expr, PlGen):
            generator = classify_generator(expr.code)
            if generator is None:
                generator = FunctionGenerator(
                    lambda j, e=expr.code: int(eval_expr(e, {"j": j})), format_expr(expr.code)
                )
            return PLGerm(generator, start=1, label=label)
        if isinstance(expr, RatGen):
            return _rat_germ(expr.profile, label)
        if isinstance(expr, Table):
            if expr.tail is None:
                generator = FunctionGenerator(lambda j: 0, "none")
                stop = expr.start + len(expr.head) - 1
            else:
                generator = classify_generator(expr.tail)
                stop = None
            return PLGerm(generator, start=expr.start, head=expr.head, label=label, stop=stop)
        if isinstance(expr, Compose):
            outer = _require_pl(self.build(expr.outer), "复合")
            inner = _require_pl(self.build(expr.inner), "复合")
            return compose(outer, inner, self.horizon)
        if isinstance(expr, Product):
            return arithmetic(ArithOp.MUL, self.build(expr.left), self.build(expr.right))
        if isinstance(expr, Sum):
            return arithmetic(ArithOp.ADD, self.build(expr.left), self.build(expr.right))
        if isinstance(expr, Quotient):
            return arithmetic(ArithOp.DIV, self.build(expr.left), self.build(expr.right))
        if isinstance(expr, Scale):
            return arithmetic(ArithOp.SCALE, self.build(expr.operand), q=Fraction(expr.factor))
        if isinstance(expr, Inv):
            return invert(_require_pl(self.build(expr.operand), "求逆"))
        if isinstance(expr, Switch):
            return invert(_require_pl(self.build(expr.operand), "切换"), switch=True)
        if isinstance(expr, Diag):
            return diagonal_below([_require_pl(self.build(m), "对角下界") for m in expr.members])
        if isinstance(expr, Minor):
            return minorize_to_pl(self.build(expr.operand), self.horizon, self.scan_factor).germ
        if isinstance(expr, Pinch):
            if isinstance(expr.anchors, AnchorList):
                anchors = AnchorSeq(head=expr.anchors.indices)
            else:
                rule = expr.anchors.rule
                anchors = AnchorSeq(tail=lambda k: int(eval_expr(rule, {"k": k})), description=format_expr(rule))
            return pinch(PinchDirection(expr.direction), self.build(expr.operand), anchors)
        raise TypeError(f"未知的芽表达式节点: {expr!r}")
