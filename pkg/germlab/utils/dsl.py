# 芽 DSL - 词法/语法分析、抽象语法树、格式化输出与网文件解析

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import sympy

from ..core.errors import DivisionByZeroGerm, GermlabError, ParseError
from ..core.germ_core import J, ExpGenerator, Generator, PolyGenerator

logger = logging.getLogger("dsl")

KEYWORDS = frozenset(
    {"pl", "rat", "table", "inv", "switch", "diag", "minor", "pinch", "scale", "lower", "upper", "anchors",
     "start", "tail", "zero"}
)
SYMBOLS = ":{}()[],;=.*+/-^<"

Position = Tuple[int, int]


# ---------------------------------------------------------------- 算术表达式（生成器公式）


@dataclass(frozen=True)
class Num:
    value: int
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Position = field(default=(0, 0), compare=False)


Expr = Union[Num, Var, Neg, BinOp]

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PRECEDENCE[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def format_expr(e: Expr) -> str:
    """按优先级加最少括号；'+'/'-' 两侧留空格，'*'/'/'/'^' 紧贴"""
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        return f"-({inner})" if _prec(e.operand) < 3 else f"-{inner}"
    left, right = format_expr(e.left), format_expr(e.right)
    p = _PRECEDENCE[e.op]
    if e.op == "^":
        if _prec(e.left) <= p:
            left = f"({left})"
        if _prec(e.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    if e.op in "+-":
        return f"{left} {e.op} {right}"
    return f"{left}{e.op}{right}"


def eval_expr(e: Expr, env: Dict[str, int]) -> Fraction:
    """精确求值；'^' 的指数必须是整数"""
    if isinstance(e, Num):
        return Fraction(e.value)
    if isinstance(e, Var):
        return Fraction(env[e.name])
    if isinstance(e, Neg):
        return -eval_expr(e.operand, env)
    left = eval_expr(e.left, env)
    right = eval_expr(e.right, env)
    if e.op == "+":
        return left + right
    if e.op == "-":
        return left - right
    if e.op == "*":
        return left * right
    if e.op == "/":
        if right == 0:
            raise DivisionByZeroGerm(f"表达式 {format_expr(e)} 在 {env} 处除以零")
        return left / right
    if right.denominator != 1:
        raise GermlabError(f"指数 {right} 不是整数")
    if left == 0 and right < 0:
        raise DivisionByZeroGerm(f"表达式 {format_expr(e)} 在 {env} 处除以零")
    return left ** int(right)


def to_sympy(e: Expr) -> sympy.Expr:
    if isinstance(e, Num):
        return sympy.Integer(e.value)
    if isinstance(e, Var):
        return J
    if isinstance(e, Neg):
        return -to_sympy(e.operand)
    left, right = to_sympy(e.left), to_sympy(e.right)
    return {
        "+": lambda: left + right,
        "-": lambda: left - right,
        "*": lambda: left * right,
        "/": lambda: left / right,
        "^": lambda: left ** right,
    }[e.op]()


def classify_generator(e: Expr) -> Optional[Generator]:
    """识别可认证生成器：j 的整系数多项式或 c*b^j（c >= 1，b >= 2）；其余返回 None"""
    try:
        expanded = sympy.expand(to_sympy(e))
    except (ZeroDivisionError, TypeError, ValueError):
        return None
    if expanded.has(sympy.zoo, sympy.nan):
        return None
    if expanded.is_polynomial(J):
        poly = sympy.Poly(expanded, J)
        if all(c.is_integer for c in poly.all_coeffs()):
            return PolyGenerator.from_poly(poly)
        return None
    coefficient, rest = expanded.as_coeff_Mul()
    if (
        coefficient.is_Integer
        and coefficient >= 1
        and rest.is_Pow
        and rest.exp == J
        and rest.base.is_Integer
        and rest.base >= 2
    ):
        return ExpGenerator(int(coefficient), int(rest.base))
    return None


# ---------------------------------------------------------------- 芽表达式


@dataclass(frozen=True)
class PlGen:
    code: Expr
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class RatGen:
    profile: Expr
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Table:
    start: int
    head: Tuple[int, ...]
    tail: Optional[Expr] = None
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Ref:
    name: str
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Compose:
    outer: "GermExpr"
    inner: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Product:
    left: "GermExpr"
    right: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Sum:
    left: "GermExpr"
    right: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Quotient:
    left: "GermExpr"
    right: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Scale:
    factor: Fraction
    operand: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Inv:
    operand: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Switch:
    operand: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Diag:
    members: Tuple["GermExpr", ...]
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Minor:
    operand: "GermExpr"
    pos: Position = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class AnchorList:
    indices: Tuple[int, ...]


@dataclass(frozen=True)
class AnchorRule:
    rule: Expr


@dataclass(frozen=True)
class Pinch:
    direction: str
    operand: "GermExpr"
    anchors: Union[AnchorList, AnchorRule]
    pos: Position = field(default=(0, 0), compare=False)


GermExpr = Union[PlGen, RatGen, Table, Ref, Compose, Product, Sum, Quotient, Scale, Inv, Switch, Diag, Minor, Pinch]

_INFIX = {Compose: ".", Product: "*", Sum: "+", Quotient: "/"}


@dataclass(frozen=True)
class Definition:
    name: str
    expr: GermExpr
    pos: Position = field(default=(0, 0), compare=False)


def _format_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def format_germ(expr: GermExpr) -> str:
    """芽表达式的规范文本；二元芽运算总是加全括号"""
    if isinstance(expr, Ref):
        return expr.name
    if isinstance(expr, PlGen):
        return f"pl {{ k(j) = {format_expr(expr.code)} }}"
    if isinstance(expr, RatGen):
        return f"rat {{ v(j) = {format_expr(expr.profile)} }}"
    if isinstance(expr, Table):
        head = ", ".join(str(k) for k in expr.head)
        text = f"table {{ start = {expr.start}; [{head}]"
        if expr.tail is not None:
            text += f"; tail k(j) = {format_expr(expr.tail)}"
        return text + " }"
    if isinstance(expr, (Compose, Product, Sum, Quotient)):
        left, right = (expr.outer, expr.inner) if isinstance(expr, Compose) else (expr.left, expr.right)
        return f"({format_germ(left)} {_INFIX[type(expr)]} {format_germ(right)})"
    if isinstance(expr, Scale):
        return f"scale({_format_rational(expr.factor)}, {format_germ(expr.operand)})"
    if isinstance(expr, Inv):
        return f"inv({format_germ(expr.operand)})"
    if isinstance(expr, Switch):
        return f"switch({format_germ(expr.operand)})"
    if isinstance(expr, Minor):
        return f"minor({format_germ(expr.operand)})"
    if isinstance(expr, Diag):
        return f"diag({', '.join(format_germ(m) for m in expr.members)})"
    if isinstance(expr, Pinch):
        if isinstance(expr.anchors, AnchorList):
            anchors = "[" + ", ".join(str(a) for a in expr.anchors.indices) + "]"
        else:
            anchors = f"{{ a(k) = {format_expr(expr.anchors.rule)} }}"
        return f"pinch({expr.direction}, {format_germ(expr.operand)}, anchors = {anchors})"
    raise TypeError(f"未知的芽表达式节点: {expr!r}")


def format_definition(definition: Definition) -> str:
    return f"{definition.name}: {format_germ(definition.expr)}"


# ---------------------------------------------------------------- 词法分析


@dataclass(frozen=True)
class Token:
    kind: str  # NAME / INT / SYM / NEWLINE / EOF
    text: str
    line: int
    column: int


_TOKEN_RE = re.compile(r"(?P<ws>[ \t\r]+)|(?P<comment>#[^\n]*)|(?P<nl>\n)|(?P<int>\d+)|(?P<name>[A-Za-z_]\w*)")


def tokenize(text: str, line_offset: int = 0) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, pos = 1 + line_offset, 0, 0
    while pos < len(text):
        column = pos - line_start + 1
        ch = text[pos]
        if ch in SYMBOLS:
            tokens.append(Token("SYM", ch, line, column))
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(line, column, "记号", ch)
        kind = match.lastgroup
        if kind == "nl":
            tokens.append(Token("NEWLINE", "\n", line, column))
            line += 1
            line_start = match.end()
        elif kind == "int":
            tokens.append(Token("INT", match.group(), line, column))
        elif kind == "name":
            tokens.append(Token("NAME", match.group(), line, column))
        pos = match.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------- 语法分析


class Parser:
    """递归下降分析器；括号内的换行被忽略"""

    def __init__(self, text: str, line_offset: int = 0):
        self.tokens = tokenize(text, line_offset)
        self.index = 0
        self.depth = 0

    # 记号游标

    def peek(self) -> Token:
        token = self.tokens[self.index]
        while token.kind == "NEWLINE" and self.depth > 0:
            self.index += 1
            token = self.tokens[self.index]
        return token

    def advance(self) -> Token:
        token = self.peek()
        self.index += 1
        return token

    def error(self, expected: str) -> ParseError:
        token = self.peek()
        return ParseError(token.line, token.column, expected, token.text or "文件结束")

    def at(self, text: str) -> bool:
        token = self.peek()
        return token.kind in ("SYM", "NAME") and token.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(repr(text))
        token = self.advance()
        if text in "({[":
            self.depth += 1
        elif text in ")}]":
            self.depth -= 1
        return token

    def expect_int(self) -> int:
        token = self.peek()
        if token.kind != "INT":
            raise self.error("整数")
        self.advance()
        return int(token.text)

    def expect_name(self) -> Token:
        token = self.peek()
        if token.kind != "NAME" or token.text in KEYWORDS:
            raise self.error("芽名")
        return self.advance()

    def skip_newlines(self) -> None:
        while self.tokens[self.index].kind == "NEWLINE":
            self.index += 1

    # 文件与定义

    def parse_file(self) -> List[Definition]:
        definitions = []
        self.skip_newlines()
        while self.peek().kind != "EOF":
            definitions.append(self.parse_definition())
            token = self.peek()
            if token.kind not in ("NEWLINE", "EOF"):
                raise self.error("换行")
            self.skip_newlines()
        return definitions

    def parse_definition(self) -> Definition:
        name = self.expect_name()
        self.expect(":")
        expr = self.parse_expr()
        return Definition(name.text, expr, (name.line, name.column))

    # 芽表达式: sum := product ('+' product)*；product := compose (('*'|'/') compose)*；compose := atom ('.' atom)*

    def parse_expr(self) -> GermExpr:
        left = self.parse_product()
        while self.at("+"):
            token = self.advance()
            left = Sum(left, self.parse_product(), (token.line, token.column))
        return left

    def parse_product(self) -> GermExpr:
        left = self.parse_compose()
        while self.at("*") or self.at("/"):
            token = self.advance()
            right = self.parse_compose()
            node = Product if token.text == "*" else Quotient
            left = node(left, right, (token.line, token.column))
        return left

    def parse_compose(self) -> GermExpr:
        left = self.parse_atom()
        while self.at("."):
            token = self.advance()
            left = Compose(left, self.parse_atom(), (token.line, token.column))
        return left

    def parse_atom(self) -> GermExpr:
        token = self.peek()
        pos = (token.line, token.column)
        if self.at("("):
            self.expect("(")
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if token.kind != "NAME":
            raise self.error("芽表达式")
        word = token.text
        if word == "pl":
            self.advance()
            code = self.parse_formula("k", "j")
            if classify_generator(code) is None:
                raise ParseError(pos[0], pos[1], "j 的整系数多项式或 c*b^j", format_expr(code))
            return PlGen(code, pos)
        if word == "rat":
            self.advance()
            return RatGen(self.parse_formula("v", "j"), pos)
        if word == "table":
            self.advance()
            return self.parse_table(pos)
        if word in ("inv", "switch", "minor"):
            self.advance()
            self.expect("(")
            operand = self.parse_expr()
            self.expect(")")
            return {"inv": Inv, "switch": Switch, "minor": Minor}[word](operand, pos)
        if word == "diag":
            self.advance()
            self.expect("(")
            members = [self.parse_expr()]
            while self.at(","):
                self.advance()
                members.append(self.parse_expr())
            self.expect(")")
            return Diag(tuple(members), pos)
        if word == "scale":
            self.advance()
            self.expect("(")
            factor = self.parse_rational()
            self.expect(",")
            operand = self.parse_expr()
            self.expect(")")
            return Scale(factor, operand, pos)
        if word == "pinch":
            self.advance()
            return self.parse_pinch(pos)
        return Ref(self.expect_name().text, pos)

    def parse_formula(self, head: str, var: str) -> Expr:
        """'{' head '(' var ')' '=' 算术表达式 '}'"""
        self.expect("{")
        self.expect(head)
        self.expect("(")
        self.expect(var)
        self.expect(")")
        self.expect("=")
        expr = self.parse_arith(var)
        self.expect("}")
        return expr

    def parse_table(self, pos: Position) -> Table:
        self.expect("{")
        self.expect("start")
        self.expect("=")
        start = self.expect_int()
        self.expect(";")
        head = self.parse_int_list()
        tail = None
        if self.at(";"):
            self.advance()
            self.expect("tail")
            self.expect("k")
            self.expect("(")
            self.expect("j")
            self.expect(")")
            self.expect("=")
            tail = self.parse_arith("j")
            if classify_generator(tail) is None:
                raise ParseError(pos[0], pos[1], "j 的整系数多项式或 c*b^j", format_expr(tail))
        self.expect("}")
        return Table(start, head, tail, pos)

    def parse_int_list(self) -> Tuple[int, ...]:
        self.expect("[")
        values = [self.expect_int()]
        while self.at(","):
            self.advance()
            values.append(self.expect_int())
        self.expect("]")
        return tuple(values)

    def parse_rational(self) -> Fraction:
        numerator = self.expect_int()
        if self.at("/"):
            self.advance()
            denominator = self.expect_int()
            if denominator == 0:
                raise self.error("非零分母")
            return Fraction(numerator, denominator)
        return Fraction(numerator)

    def parse_pinch(self, pos: Position) -> Pinch:
        self.expect("(")
        token = self.peek()
        if token.text not in ("lower", "upper"):
            raise self.error("lower 或 upper")
        self.advance()
        self.expect(",")
        operand = self.parse_expr()
        self.expect(",")
        self.expect("anchors")
        self.expect("=")
        if self.at("["):
            anchors: Union[AnchorList, AnchorRule] = AnchorList(self.parse_int_list())
        else:
            anchors = AnchorRule(self.parse_formula("a", "k"))
        self.expect(")")
        return Pinch(token.text, operand, anchors, pos)

    # 算术: arith := term (('+'|'-') term)*；term := factor (('*'|'/') factor)*；
    # factor := '-' factor | power；power := primary ('^' factor)?

    def parse_arith(self, var: str) -> Expr:
        left = self.parse_term(var)
        while self.at("+") or self.at("-"):
            token = self.advance()
            left = BinOp(token.text, left, self.parse_term(var), (token.line, token.column))
        return left

    def parse_term(self, var: str) -> Expr:
        left = self.parse_factor(var)
        while self.at("*") or self.at("/"):
            token = self.advance()
            left = BinOp(token.text, left, self.parse_factor(var), (token.line, token.column))
        return left

    def parse_factor(self, var: str) -> Expr:
        if self.at("-"):
            token = self.advance()
            return Neg(self.parse_factor(var), (token.line, token.column))
        base = self.parse_primary(var)
        if self.at("^"):
            token = self.advance()
            return BinOp("^", base, self.parse_factor(var), (token.line, token.column))
        return base

    def parse_primary(self, var: str) -> Expr:
        token = self.peek()
        if token.kind == "INT":
            self.advance()
            return Num(int(token.text), (token.line, token.column))
        if token.kind == "NAME" and token.text == var:
            self.advance()
            return Var(var, (token.line, token.column))
        if self.at("("):
            self.expect("(")
            inner = self.parse_arith(var)
            self.expect(")")
            return inner
        raise self.error(f"整数、{var} 或 '('")


def parse_germ(text: str) -> GermExpr:
    """解析单个芽表达式，允许前导的 'name:'

    Raises:
        ParseError: 语法错误，携带行列位置
    """
    parser = Parser(text)
    parser.skip_newlines()
    token = parser.peek()
    following = parser.tokens[parser.index + 1] if parser.index + 1 < len(parser.tokens) else None
    if token.kind == "NAME" and following is not None and following.text == ":":
        expr = parser.parse_definition().expr
    else:
        expr = parser.parse_expr()
    parser.skip_newlines()
    if parser.peek().kind != "EOF":
        raise parser.error("表达式结束")
    return expr


def parse_germ_file(text: str, line_offset: int = 0) -> List[Definition]:
    """解析芽文件：每行一个 'name: expr'，'#' 起为注释"""
    definitions = Parser(text, line_offset).parse_file()
    seen = set()
    for definition in definitions:
        if definition.name in seen:
            line, column = definition.pos
            raise ParseError(line, column, "未重复的芽名", definition.name)
        seen.add(definition.name)
    logger.debug(f"解析出 {len(definitions)} 个芽定义")
    return definitions


# ---------------------------------------------------------------- 网文件


@dataclass
class NetFile:
    """网文件的语法结构：偏序边、节点赋值、目标、测试电池、采样与内联芽定义"""

    edges: List[Tuple[str, str]] = field(default_factory=list)
    nodes: Dict[str, str] = field(default_factory=dict)
    target: str = "zero"
    tests: List[str] = field(default_factory=list)
    samples: Dict[str, str] = field(default_factory=dict)
    definitions: List[Definition] = field(default_factory=list)
    allow_profile_bound: bool = False


_NAME = r"[A-Za-z_]\w*"
_NODE_RE = re.compile(rf"node\s+({_NAME})\s*=\s*({_NAME})\s*$")
_TARGET_RE = re.compile(rf"target\s*=\s*({_NAME})\s*$")
_TESTS_RE = re.compile(rf"tests\s*=\s*(.+)$")
_SAMPLE_RE = re.compile(rf"sample\s+({_NAME})\s*=\s*(\S+)\s*$")
_EDGE_RE = re.compile(rf"\s*({_NAME})\s*<\s*({_NAME})\s*$")
_BOUND_RE = re.compile(r"profile_bound\s*=\s*(true|false)\s*$")


def parse_net_file(text: str) -> NetFile:
    """解析网文件

    行格式：'poset: a < b, b < c'、'node x = g'、'target = g'、'tests = p, q'、
    'sample s = path.csv'、'profile_bound = true'，其余非空行按芽定义解析。
    """
    net = NetFile()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        column = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("poset:"):
            for part in stripped[len("poset:"):].split(","):
                if not part.strip():
                    continue
                match = _EDGE_RE.match(part)
                if match is None:
                    raise ParseError(number, column, "'a < b' 形式的边", part.strip())
                net.edges.append((match.group(1), match.group(2)))
        elif stripped.startswith("node "):
            match = _NODE_RE.match(stripped)
            if match is None:
                raise ParseError(number, column, "'node <名> = <芽名>'", stripped)
            net.nodes[match.group(1)] = match.group(2)
        elif re.match(r"target\s*=", stripped):
            match = _TARGET_RE.match(stripped)
            if match is None:
                raise ParseError(number, column, "'target = <芽名>'", stripped)
            net.target = match.group(1)
        elif re.match(r"tests\s*=", stripped):
            match = _TESTS_RE.match(stripped)
            names = [n.strip() for n in match.group(1).split(",")] if match else []
            if not names or not all(re.fullmatch(_NAME, n) for n in names):
                raise ParseError(number, column, "'tests = <名>, …'", stripped)
            net.tests.extend(names)
        elif stripped.startswith("sample "):
            match = _SAMPLE_RE.match(stripped)
            if match is None:
                raise ParseError(number, column, "'sample <名> = <路径>'", stripped)
            net.samples[match.group(1)] = match.group(2)
        elif re.match(r"profile_bound\s*=", stripped):
            match = _BOUND_RE.match(stripped)
            if match is None:
                raise ParseError(number, column, "'profile_bound = true|false'", stripped)
            net.allow_profile_bound = match.group(1) == "true"
        else:
            net.definitions.extend(parse_germ_file(line, line_offset=number - 1))
    return net
