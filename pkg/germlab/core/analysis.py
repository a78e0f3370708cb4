# 分析模块 - 范数/振幅剖面、连续性判定、网收敛与超度量层

import logging
from bisect import bisect_left, bisect_right
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from .constructions import ArithOp, arithmetic, diagonal_below, minorize_to_pl
from .errors import (
    DomainMismatch,
    InvalidSample,
    NotDirected,
    NotStrictlyMonotone,
    SampleRequired,
    WindowMismatch,
)
from .germ_core import (
    ZERO_GERM,
    ExpGenerator,
    Germ,
    GridWindow,
    PLGerm,
    PolyGenerator,
    Rat,
    RatGerm,
    Tier,
    is_zero,
    validate,
)
from .order_engine import arch_class_compare, class_ladder, compare_germwise
from .verdicts import ArchClassKind, OrderVerdict, Verdict, VerdictKind

logger = logging.getLogger("analysis")


# ---------------------------------------------------------------- 函数采样


@dataclass(frozen=True)
class FuncSample:
    """(ℝ,0)→(ℝ,0) 函数在有限有理点集上的精确采样，点按坐标升序排列"""

    points: Tuple[Rat, ...]
    values: Tuple[Rat, ...]
    symmetric: bool = True
    label: str = "f"

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise InvalidSample("采样点与取值个数不一致")
        if list(self.points) != sorted(set(self.points)):
            raise InvalidSample("采样点必须严格递增且互不相同")
        if any(abs(x) > 1 for x in self.points):
            raise InvalidSample("采样点必须位于 [-1, 1]")
        if Fraction(0) not in self.points:
            raise InvalidSample("采样必须包含点 0")
        if self.values[self.points.index(Fraction(0))] != 0:
            raise InvalidSample("f(0) 必须为 0")

    @classmethod
    def from_points(cls, pairs: Iterable[Tuple[Rat, Rat]], label: str = "f") -> "FuncSample":
        ordered = sorted((Fraction(x), Fraction(v)) for x, v in pairs)
        points = tuple(x for x, _ in ordered)
        symmetric = set(points) == {-x for x in points}
        return cls(points, tuple(v for _, v in ordered), symmetric, label)

    @classmethod
    def symmetric_grid(
        cls, fn: Callable[[Rat], Rat], j_max: int, j0: int = 1, label: str = "f"
    ) -> "FuncSample":
        """在 {±1/j, 0 : j0 <= j <= j_max} 上采样"""
        xs = [Fraction(0)]
        for j in range(j0, j_max + 1):
            xs.extend((Fraction(1, j), Fraction(-1, j)))
        return cls.from_points(((x, fn(x)) for x in xs), label)

    @classmethod
    def lattice(
        cls, fn: Callable[[Rat], Rat], denominator: int, radius: Rat = Fraction(1), label: str = "f"
    ) -> "FuncSample":
        """在等距格点 {k/denominator : |k/denominator| <= radius} 上采样"""
        span = int(Fraction(radius) * denominator)
        xs = [Fraction(k, denominator) for k in range(-span, span + 1)]
        return cls.from_points(((x, fn(x)) for x in xs), label)

    @property
    def j_max(self) -> int:
        """最小非零 |x| 对应的网格下标 ⌊1/min|x|⌋"""
        nonzero = [abs(x) for x in self.points if x != 0]
        if not nonzero:
            raise InvalidSample("采样中没有非零点")
        return int(1 / min(nonzero))

    def value_at(self, x: Rat) -> Rat:
        return self.values[self.points.index(Fraction(x))]

    def _combine(self, other: "FuncSample", op: Callable[[Rat, Rat], Rat], name: str) -> "FuncSample":
        if self.points != other.points:
            raise WindowMismatch(f"采样 {self.label} 与 {other.label} 的点集不同")
        values = tuple(op(x, y) for x, y in zip(self.values, other.values))
        return FuncSample(self.points, values, self.symmetric, f"({self.label} {name} {other.label})")

    def add(self, other: "FuncSample") -> "FuncSample":
        return self._combine(other, lambda x, y: x + y, "+")

    def sub(self, other: "FuncSample") -> "FuncSample":
        return self._combine(other, lambda x, y: x - y, "-")

    def mul(self, other: "FuncSample") -> "FuncSample":
        return self._combine(other, lambda x, y: x * y, "*")

    def scale(self, q: Rat) -> "FuncSample":
        factor = Fraction(q)
        return FuncSample(self.points, tuple(factor * v for v in self.values), self.symmetric, f"{factor}*{self.label}")


Subject = Union[Germ, FuncSample]


# ---------------------------------------------------------------- 剖面


def norm_profile(f: FuncSample) -> Germ:
    """范数剖面 Λ(f)(j) = max{|f(x)| : |x| <= 1/j}，j = 1..J_max；全零时返回零芽"""
    if all(v == 0 for v in f.values):
        logger.info(f"采样 {f.label} 恒为零，范数剖面为零芽")
        return ZERO_GERM
    j_max = f.j_max
    by_radius = sorted((abs(x), abs(v)) for x, v in zip(f.points, f.values))
    values = [Fraction(0)] * j_max
    pointer = 0
    running = Fraction(0)
    for j in range(j_max, 0, -1):
        bound = Fraction(1, j)
        while pointer < len(by_radius) and by_radius[pointer][0] <= bound:
            running = max(running, by_radius[pointer][1])
            pointer += 1
        values[j - 1] = running
    return RatGerm.from_table(values, start=1, tier=Tier.PSEUDO_MONOTONE, label=f"norm({f.label})")


def _window_max_oscillation(xs: Sequence[Rat], vs: Sequence[Rat], width: Rat) -> Rat:
    """有序点列上 |x - y| <= width 的点对的最大 |f(x) - f(y)|（单调队列滑窗）"""
    best = Fraction(0)
    highs: deque = deque()
    lows: deque = deque()
    left = 0
    for right in range(len(xs)):
        while highs and vs[highs[-1]] <= vs[right]:
            highs.pop()
        highs.append(right)
        while lows and vs[lows[-1]] >= vs[right]:
            lows.pop()
        lows.append(right)
        while xs[right] - xs[left] > width:
            left += 1
            if highs[0] < left:
                highs.popleft()
            if lows[0] < left:
                lows.popleft()
        best = max(best, vs[highs[0]] - vs[lows[0]])
    return best


def oscillation_profile(f: FuncSample, s: Germ, window: Optional[GridWindow] = None) -> RatGerm:
    """振幅剖面：球 |x| <= 1/j 内满足 |x - y| <= s(j) 的采样点对的最大 |f(x) - f(y)|

    Args:
        f: 函数采样
        s: 允许的点距芽（正）
        window: 计算的下标范围，默认为 [max(1, s.start), J_max]
    """
    if window is None:
        window = GridWindow(max(1, s.start), max(f.j_max, s.start))
    s.require_window(window)
    values = []
    for j in window.indices():
        radius = Fraction(1, j)
        lo = bisect_left(f.points, -radius)
        hi = bisect_right(f.points, radius)
        values.append(_window_max_oscillation(f.points[lo:hi], f.values[lo:hi], s.value(j)))
    return RatGerm.from_table(values, start=window.first, label=f"osc({f.label}, {s.label})")


def germ_profile(g: Germ, window: GridWindow) -> Germ:
    """芽的范数剖面：Λ(g)(j) = max{|g(k)| : j <= k <= window.last}"""
    if is_zero(g):
        return ZERO_GERM
    raw = [abs(v) for v in g.values(window)]
    running = Fraction(0)
    values = [Fraction(0)] * len(raw)
    for offset in range(len(raw) - 1, -1, -1):
        running = max(running, raw[offset])
        values[offset] = running
    if running == 0:
        return ZERO_GERM
    return RatGerm.from_table(values, start=window.first, tier=Tier.PSEUDO_MONOTONE, label=f"norm({g.label})")


def profile_of(subject: Subject, window: GridWindow) -> Germ:
    if isinstance(subject, FuncSample):
        return norm_profile(subject)
    return germ_profile(subject, window)


def difference_germ(x: Germ, y: Germ) -> RatGerm:
    """逐点差 x - y（一般取值有正有负）"""
    start = max(x.start, y.start)
    stops = [s for s in (x.stop, y.stop) if s is not None]
    return RatGerm(
        lambda j: x.value(j) - y.value(j), start, Tier.GENERAL, f"({x.label} - {y.label})", min(stops) if stops else None
    )


def _sum_profiles(p: Germ, q: Germ, window: GridWindow) -> Germ:
    if is_zero(p):
        return q
    if is_zero(q):
        return p
    values = [x + y for x, y in zip(p.values(window), q.values(window))]
    return RatGerm.from_table(values, window.first, Tier.PSEUDO_MONOTONE, f"({p.label} + {q.label})")


def difference_profile(x: Subject, y: Subject, window: GridWindow, allow_profile_bound: bool = False) -> Germ:
    """Λ(x - y)

    两个芽取网格差的滑动上确界，两个采样取逐点差；与零芽之差就是自身的剖面。
    芽与采样混合时只能用 Λ(x) + Λ(y) 作上界，必须显式允许。

    Raises:
        SampleRequired: 混合输入且未允许剖面上界
        WindowMismatch: 两个采样的点集不同
    """
    if isinstance(y, Germ) and is_zero(y):
        return profile_of(x, window)
    if isinstance(x, Germ) and is_zero(x):
        return profile_of(y, window)
    if isinstance(x, FuncSample) and isinstance(y, FuncSample):
        return norm_profile(x.sub(y))
    if isinstance(x, Germ) and isinstance(y, Germ):
        return germ_profile(difference_germ(x, y), window)
    if not allow_profile_bound:
        raise SampleRequired(f"{x.label} 与 {y.label} 一个是芽一个是采样，需要精确采样或显式允许剖面上界")
    logger.debug(f"用剖面和作为 Λ({x.label} - {y.label}) 的上界")
    return _sum_profiles(profile_of(x, window), profile_of(y, window), window)


def _pointwise_max(p: Germ, q: Germ, window: GridWindow) -> Germ:
    if is_zero(p):
        return q
    if is_zero(q):
        return p
    values = [max(x, y) for x, y in zip(p.values(window), q.values(window))]
    return RatGerm.from_table(values, window.first, Tier.PSEUDO_MONOTONE, f"max({p.label}, {q.label})")


# ---------------------------------------------------------------- 连续性


def _halve(p: Germ) -> RatGerm:
    return arithmetic(ArithOp.SCALE, p, q=Fraction(1, 2))


def continuity_verdict(f: FuncSample, battery: Sequence[Germ], window: GridWindow) -> Verdict:
    """第二连续性判据的视界版本

    对电池中每个 ρ，在 {ρ/2} ∪ 电池 ∪ 电池/2 中寻找 σ，使振幅剖面在窗口上严格低于 ρ。
    每个失败的 σ 取其失败下标（振幅 >= ρ）上的最大振幅，所有 σ 中的最小者记为下界。
    下界为正且不小于 ρ 在后半窗口 [midpoint, last] 上的最大值时给出 DISCONTINUOUS_WITNESS。
    σ 小于采样分辨率的下标看不到跳跃，不计入下界。

    Raises:
        WindowMismatch: 窗口超出采样分辨率 J_max
    """
    if not battery:
        raise DomainMismatch("测试电池为空")
    if window.last > f.j_max:
        raise WindowMismatch(f"窗口 {window} 超出采样 {f.label} 的分辨率 {f.j_max}")

    unresolved: List[str] = []
    for rho in battery:
        rho_values = rho.values(window)
        candidates = [_halve(rho), *battery, *(_halve(sigma) for sigma in battery)]
        floor: Optional[Rat] = None
        found = None
        for sigma in candidates:
            osc = oscillation_profile(f, sigma, window).values(window)
            if all(o < r for o, r in zip(osc, rho_values)):
                found = sigma
                break
            witness = max(o for o, r in zip(osc, rho_values) if o >= r)
            floor = witness if floor is None else min(floor, witness)
        if found is not None:
            logger.debug(f"ρ={rho.label} 由 σ={found.label} 满足")
            continue
        tail_ceiling = max(rho_values[window.midpoint - window.first :])
        if floor is not None and floor > 0 and floor >= tail_ceiling:
            logger.info(f"{f.label} 在 ρ={rho.label} 处不连续，振幅下界 {floor}")
            return Verdict(
                VerdictKind.DISCONTINUOUS_WITNESS,
                window.last,
                subject=rho.label,
                evidence={"floor": floor, "window": str(window)},
            )
        unresolved.append(rho.label)

    if unresolved:
        logger.warning(f"{f.label} 的连续性在窗口 {window} 上无结论: {', '.join(unresolved)}")
        return Verdict(VerdictKind.INCONCLUSIVE, window.last, subject=f.label, evidence={"unresolved": unresolved})
    return Verdict(VerdictKind.CONTINUOUS_AT_HORIZON, window.last, subject=f.label)


def neighborhood_member(g: Subject, test: Germ, window: GridWindow) -> OrderVerdict:
    """Λ(g) < test（芽序）即 g 属于该测试芽的邻域"""
    profile = profile_of(g, window)
    return compare_germwise(profile, test, window)


# ---------------------------------------------------------------- 网收敛


def default_battery(max_degree: int = 3, max_multiplier: int = 2) -> List[PLGerm]:
    """默认测试电池 {j^d : d = 1..D} ∪ {c·2^j : c = 1..C}"""
    battery = []
    for d in range(1, max_degree + 1):
        coeffs = tuple([0] * d + [1])
        battery.append(PLGerm(PolyGenerator(coeffs), label="j" if d == 1 else f"j^{d}"))
    for c in range(1, max_multiplier + 1):
        generator = ExpGenerator(c, 2)
        battery.append(PLGerm(generator, label=generator.describe()))
    return battery


@dataclass(frozen=True)
class NetSpec:
    """有限上定向偏序上的网 d ↦ f_d"""

    nodes: Tuple[str, ...]
    edges: Tuple[Tuple[str, str], ...]
    assignment: Mapping[str, Subject] = field(compare=False)
    target: Subject = field(default=ZERO_GERM, compare=False)
    battery: Tuple[Germ, ...] = field(default=(), compare=False)
    allow_profile_bound: bool = False

    def closure(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.nodes)
        for lower, upper in self.edges:
            if lower not in self.assignment or upper not in self.assignment:
                raise DomainMismatch(f"边 {lower} < {upper} 引用了未赋值的节点")
            graph.add_edge(lower, upper)
        return nx.transitive_closure(graph, reflexive=True)

    def upper_sets(self) -> Dict[str, frozenset]:
        """每个节点的闭上集 {d : d >= d0}"""
        closure = self.closure()
        return {node: frozenset(closure.successors(node)) | {node} for node in self.nodes}

    def validate(self) -> Dict[str, frozenset]:
        """检查上定向性与电池，返回闭上集

        Raises:
            NotDirected: 存在两个节点没有公共上界
            NotStrictlyMonotone: 电池成员不是严格单调的 PL 芽
        """
        missing = [node for node in self.nodes if node not in self.assignment]
        if missing:
            raise DomainMismatch(f"节点未赋值: {', '.join(missing)}")
        uppers = self.upper_sets()
        for i, first in enumerate(self.nodes):
            for second in self.nodes[i + 1:]:
                if not uppers[first] & uppers[second]:
                    raise NotDirected(first, second)
        for test in self.battery:
            if isinstance(test, PLGerm):
                report = validate(test, test.default_window(test.start + 63))
                if not report.valid:
                    raise NotStrictlyMonotone(test.label, report.first_violation)
        return uppers


@dataclass(frozen=True)
class NodeFailure:
    candidate: str
    node: str
    index: int


@dataclass(frozen=True)
class BatteryOutcome:
    test: str
    converges: bool
    horizon: int
    d0: Optional[str] = None
    j1: Optional[int] = None
    failures: Tuple[NodeFailure, ...] = ()


@dataclass(frozen=True)
class ConvergenceReport:
    outcomes: Tuple[BatteryOutcome, ...]
    window: GridWindow

    @property
    def converges(self) -> bool:
        return all(o.converges for o in self.outcomes)


def _net_window(net: NetSpec, horizon: int) -> GridWindow:
    starts, stops = [1], [horizon]
    for subject in (*net.assignment.values(), net.target, *net.battery):
        if isinstance(subject, FuncSample):
            stops.append(subject.j_max)
        elif not is_zero(subject):
            starts.append(subject.start)
            if subject.stop is not None:
                stops.append(subject.stop)
    first, last = max(starts), min(stops)
    if first > last:
        raise WindowMismatch(f"网的各成员没有公共窗口（起点 {first}，终点 {last}）")
    return GridWindow(first, last)


def converge_check(net: NetSpec, horizon: int) -> ConvergenceReport:
    """对电池中每个测试芽 p，寻找 d0 使其闭上集中每个 d 都满足 Λ(f_d - target) < p

    候选 d0 中取闭上集最大者（同样大小按声明顺序），j1 为上集内各判定见证的最大值；
    找不到时对每个候选报告一个失败节点及其失败下标。

    Raises:
        NotDirected: 指标集不是上定向的
        WindowMismatch: 各成员没有公共窗口
    """
    uppers = net.validate()
    window = _net_window(net, horizon)
    profiles = {
        node: difference_profile(net.assignment[node], net.target, window, net.allow_profile_bound)
        for node in net.nodes
    }
    ranked = sorted(net.nodes, key=lambda node: (-len(uppers[node]), net.nodes.index(node)))

    outcomes = []
    for test in net.battery:
        verdicts = {node: compare_germwise(profiles[node], test, window) for node in net.nodes}
        passing = {node for node, v in verdicts.items() if v.holds_lt()}
        chosen = next((node for node in ranked if uppers[node] <= passing), None)
        if chosen is not None:
            j1 = max(verdicts[node].witness_index for node in uppers[chosen])
            outcomes.append(BatteryOutcome(test.label, True, window.last, chosen, j1))
            logger.info(f"测试 {test.label}: 自节点 {chosen} 起收敛，j1={j1}")
            continue
        failures = []
        for candidate in net.nodes:
            node = next(n for n in net.nodes if n in uppers[candidate] and n not in passing)
            failures.append(NodeFailure(candidate, node, verdicts[node].witness_index))
        outcomes.append(BatteryOutcome(test.label, False, window.last, failures=tuple(failures)))
        logger.info(f"测试 {test.label}: 没有任何候选 d0 满足尾部条件")
    return ConvergenceReport(tuple(outcomes), window)


def chain_net(
    seq: Sequence[Subject], battery: Sequence[Germ], target: Subject = ZERO_GERM, prefix: str = "n"
) -> NetSpec:
    """数列作为全序链 n1 < n2 < … 上的网"""
    if not seq:
        raise DomainMismatch("数列为空")
    nodes = tuple(f"{prefix}{i}" for i in range(1, len(seq) + 1))
    edges = tuple(zip(nodes, nodes[1:]))
    return NetSpec(nodes, edges, dict(zip(nodes, seq)), target, tuple(battery))


def _product(x: Subject, y: Subject) -> Subject:
    if isinstance(x, FuncSample) and isinstance(y, FuncSample):
        return x.mul(y)
    if isinstance(x, Germ) and isinstance(y, Germ):
        if is_zero(x) or is_zero(y):
            return ZERO_GERM
        return arithmetic(ArithOp.MUL, x, y)
    raise SampleRequired(f"{x.label} 与 {y.label} 的乘积需要两个同类对象")


def product_net(net_f: NetSpec, net_g: NetSpec, battery: Optional[Sequence[Germ]] = None) -> NetSpec:
    """同一指标集上两个网的逐点乘积网，目标为两目标之积"""
    if net_f.nodes != net_g.nodes or set(net_f.edges) != set(net_g.edges):
        raise DomainMismatch("两个网的指标集不同")
    assignment = {node: _product(net_f.assignment[node], net_g.assignment[node]) for node in net_f.nodes}
    target = _product(net_f.target, net_g.target)
    tests = tuple(battery) if battery is not None else product_battery(net_f.battery)
    return NetSpec(net_f.nodes, net_f.edges, assignment, target, tests, net_f.allow_profile_bound)


def product_battery(battery: Sequence[Germ]) -> Tuple[Germ, ...]:
    """两两乘积 {p·q : p, q ∈ B}（无序对，含 p = q）"""
    products = []
    for i, p in enumerate(battery):
        for q in battery[i:]:
            products.append(arithmetic(ArithOp.MUL, p, q))
    return tuple(products)


def nonconvergence_witness(seq: Sequence[Germ], horizon: int) -> PLGerm:
    """对角见证 p*：严格低于数列中每个芽（先取 PL 下界），因此没有数列收敛到零芽

    Raises:
        EmptyFamily: 数列为空
    """
    members = []
    for g in seq:
        if isinstance(g, PLGerm):
            members.append(g)
        else:
            members.append(minorize_to_pl(g, horizon).germ)
    return diagonal_below(members).relabel("p*")


# ---------------------------------------------------------------- 超度量


def ultradist_triangle(f: Germ, g: Germ, h: Germ, window: GridWindow, n_cap: int) -> Verdict:
    """强三角不等式：Λ(f-h) 的阿基米德类不高于 max(Λ(f-g), Λ(g-h)) 的类"""
    d_fh = difference_profile(f, h, window)
    dominant = _pointwise_max(difference_profile(f, g, window), difference_profile(g, h, window), window)
    tail_window = GridWindow(window.midpoint, window.last)

    if is_zero(d_fh) or all(v == 0 for v in d_fh.values(tail_window)):
        return Verdict(VerdictKind.HOLDS_AT_HORIZON, window.last, subject="triangle", evidence={"class": "zero"})
    if is_zero(dominant) or all(v == 0 for v in dominant.values(tail_window)):
        logger.error(f"强三角不等式违例: Λ({f.label}-{h.label}) 非零而其余两差为零")
        return Verdict(VerdictKind.VIOLATION, window.last, window.last, "triangle")

    verdict = arch_class_compare(d_fh, dominant, window, n_cap)
    evidence = {"class": verdict.kind.value, "n": verdict.n}
    if verdict.class_at_most():
        return Verdict(VerdictKind.HOLDS_AT_HORIZON, window.last, subject="triangle", evidence=evidence)
    if verdict.kind == ArchClassKind.UNRESOLVED:
        lower = d_fh.values(window)
        upper = dominant.values(window)
        tail = slice(window.midpoint - window.first, None)
        for n in class_ladder(n_cap):
            if all(x <= n * y for x, y in zip(lower[tail], upper[tail])):
                evidence["n"] = n
                return Verdict(VerdictKind.HOLDS_AT_HORIZON, window.last, subject="triangle", evidence=evidence)
    logger.error(f"强三角不等式在窗口 {window} 上违例: {evidence}")
    return Verdict(VerdictKind.VIOLATION, window.last, window.midpoint, "triangle", evidence)
