# 异常定义 - germlab 所有可预期错误的统一层级

from typing import Optional


class GermlabError(Exception):
    """germlab 错误基类，CLI 捕获后以退出码 1 结束"""


class IndexBeforeStart(GermlabError):
    """访问的网格下标早于芽的起始下标"""

    def __init__(self, label: str, index: int, start: int):
        super().__init__(f"芽 {label} 在下标 {index} 处无定义（起始下标为 {start}）")
        self.label = label
        self.index = index
        self.start = start


class IndexBeyondDomain(GermlabError):
    """访问的网格下标超出有限定义域（例如采样分辨率或有限锚点列）"""

    def __init__(self, label: str, index: int, stop: int):
        super().__init__(f"芽 {label} 在下标 {index} 处无定义（定义域止于 {stop}）")
        self.label = label
        self.index = index
        self.stop = stop


class NotCertifiable(GermlabError):
    """生成器不在可认证类（整系数多项式或 c·b^j）中"""


class PrefixTooShort(GermlabError):
    """前缀过短，无法给出无穷性证据"""


class DomainMismatch(GermlabError):
    """运算对象的定义域无法对齐"""


class NotStrictlyMonotone(GermlabError):
    """要求严格单调的芽在检查窗口内出现违例"""

    def __init__(self, label: str, index: int):
        super().__init__(f"芽 {label} 在下标 {index} 处不满足严格单调")
        self.label = label
        self.index = index


class NotMonotone(GermlabError):
    """要求（伪）单调的芽在检查窗口内出现上升"""


class DivisionByZeroGerm(GermlabError):
    """除数芽在某个网格点取零"""


class LimitUnverified(GermlabError):
    """在扫描预算内没有观察到趋于 0 的证据"""


class EmptyFamily(GermlabError):
    """芽族为空"""


class AnchorsNotDecreasing(GermlabError):
    """锚点下标不是严格递增的（对应的点 1/j 不严格递减）"""


class TooFewAnchors(GermlabError):
    """锚点个数少于 3"""


class NotDirected(GermlabError):
    """网的指标集不是上定向的"""

    def __init__(self, first: str, second: str):
        super().__init__(f"节点 {first} 与 {second} 没有公共上界")
        self.first = first
        self.second = second


class WindowMismatch(GermlabError):
    """网中各芽或采样不在同一个窗口上"""


class SampleRequired(GermlabError):
    """需要精确采样才能计算差的范数剖面"""


class InvalidSample(GermlabError):
    """函数采样不合法（缺少 0 点或 f(0) != 0 等）"""


class NonPositiveValue(GermlabError):
    """芽在某个网格点取非正值（例如 PL 编码 K(j) <= 0）"""


class UnknownGerm(GermlabError):
    """引用了未定义的芽名"""


class ParseError(GermlabError):
    """芽 DSL 或网文件的语法错误，CLI 以退出码 2 结束"""

    def __init__(self, line: int, column: int, expected: str, found: Optional[str] = None):
        message = f"第 {line} 行第 {column} 列: 期望 {expected}"
        if found is not None:
            message += f"，实际为 {found!r}"
        super().__init__(message)
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
