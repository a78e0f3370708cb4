from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from germlab.core.constructions import (
    AnchorSeq,
    ArithOp,
    PinchDirection,
    PLFamily,
    arithmetic,
    check_factorization,
    compose,
    diagonal_below,
    invert,
    minorize_to_pl,
    open_mult_radius,
    pinch,
)
from germlab.core.errors import (
    AnchorsNotDecreasing,
    DivisionByZeroGerm,
    DomainMismatch,
    EmptyFamily,
    LimitUnverified,
    NotMonotone,
    NotStrictlyMonotone,
    TooFewAnchors,
)
from germlab.core.germ_core import (
    GridWindow,
    PLGerm,
    PolyGenerator,
    RatGerm,
    Tier,
    canonical_eq,
    validate,
)
from germlab.core.order_engine import compare_germwise
from germlab.core.verdicts import OrderKind
from tests.strategies import anchor_lists, certified_germs, plateau_germs, poly, poly_germs, rat

# ---------------------------------------------------------------- 复合


def test_compose_polynomials():
    composed = compose(poly(0, 0, 1, label="sq"), poly(0, 2, label="dbl"))
    assert isinstance(composed.generator, PolyGenerator)
    assert composed.generator.coeffs == (0, 0, 4)
    assert composed.label == "(sq . dbl)"


def test_compose_with_identity():
    q = poly(1, 3, label="q")
    verdict = canonical_eq(compose(poly(0, 1), q), q, GridWindow(1, 50))
    assert verdict.kind == OrderKind.EQUAL_FROM and verdict.witness_index == 1


def test_compose_shifts_start_into_outer_domain():
    outer = poly(0, 1, start=5, label="late")
    assert compose(outer, poly(0, 1)).start == 5


def test_compose_domain_mismatch():
    with pytest.raises(DomainMismatch):
        compose(poly(0, 1, start=10 ** 6), poly(0, 1), horizon=100)


@given(poly_germs(label="a"), poly_germs(label="b"), poly_germs(label="c"))
def test_compose_is_associative(a, b, c):
    left = compose(compose(a, b), c)
    right = compose(a, compose(b, c))
    window = GridWindow(1, 6)
    assert left.codes(window) == right.codes(window)


@given(poly_germs(label="a"), poly_germs(label="b"), poly_germs(label="c"))
def test_right_composition_preserves_order(a, b, c):
    window = GridWindow(1, 60)
    verdict = compare_germwise(a, b, window)
    assume(verdict.kind == OrderKind.CERTIFIED_LT)
    if verdict.swapped:
        a, b = b, a
    composed = compare_germwise(compose(a, c), compose(b, c), GridWindow(1, 40))
    assert composed.holds_lt()
    reindexed = next(j for j in range(1, 200) if c.code(j) >= verdict.witness_index)
    assert composed.witness_index <= reindexed


# ---------------------------------------------------------------- 求逆与切换


def test_invert_linear_germ_at_anchor():
    assert invert(poly(0, 2)).value(4) == Fraction(1, 2)


def test_invert_interpolates_between_anchors():
    inv = invert(poly(0, 0, 1))
    assert inv.value(6) == Fraction(2, 5)
    assert inv.value(9) == Fraction(1, 3)
    assert inv.start == 1


def test_switch_is_piecewise_constant():
    sw = invert(poly(0, 0, 1), switch=True)
    assert sw.value(6) == Fraction(1, 2)
    assert sw.value(8) == Fraction(1, 2)
    assert sw.tier == Tier.PSEUDO_MONOTONE


@given(certified_germs())
def test_inverse_swaps_anchor_values(p):
    inv = invert(p)
    for j in range(1, 8):
        assert inv.value(p.code(j)) == Fraction(1, j)


def test_invert_requires_strict_monotonicity():
    flat = PLGerm(PolyGenerator((10,)), label="flat")
    with pytest.raises(NotStrictlyMonotone):
        invert(flat)


# ---------------------------------------------------------------- 逐点运算


def test_product_of_pl_germs_stays_pl():
    product = arithmetic(ArithOp.MUL, poly(0, 1), poly(0, 0, 1))
    assert isinstance(product, PLGerm)
    assert product.generator.coeffs == (0, 0, 0, 1)


def test_sum_and_quotient():
    one_over_j = rat(lambda j: Fraction(1, j))
    total = arithmetic(ArithOp.ADD, one_over_j, one_over_j)
    assert total.value(4) == Fraction(1, 2)
    assert total.tier == Tier.STRICT_MONOTONE
    quotient = arithmetic(ArithOp.DIV, rat(lambda j: Fraction(1, j ** 3)), one_over_j)
    assert quotient.value(5) == Fraction(1, 25)


def test_scale_requires_positive_factor():
    with pytest.raises(DomainMismatch):
        arithmetic(ArithOp.SCALE, poly(0, 1), q=Fraction(0))


def test_division_by_a_vanishing_germ():
    vanishing = rat(lambda j: Fraction(0) if j == 3 else Fraction(1, j))
    with pytest.raises(DivisionByZeroGerm):
        arithmetic(ArithOp.DIV, poly(0, 1), vanishing).value(3)


def test_disjoint_domains():
    early = RatGerm.from_table([Fraction(1), Fraction(1, 2)], start=1)
    with pytest.raises(DomainMismatch):
        arithmetic(ArithOp.ADD, early, poly(0, 1, start=5))


# ---------------------------------------------------------------- PL 下界


def test_minorant_of_reciprocal():
    result = minorize_to_pl(rat(lambda j: Fraction(1, j), label="m"), horizon=300)
    assert [result.germ.code(j) for j in range(1, 51)] == [j + 4 for j in range(1, 51)]
    assert result.verified_from == 1


def test_minorant_of_geometric_decay():
    result = minorize_to_pl(rat(lambda j: Fraction(1, 2 ** j), label="m"), horizon=60)
    assert [result.germ.code(j) for j in range(1, 21)] == [2 ** (j + 3) + 1 for j in range(1, 21)]


def test_minorant_rejects_increasing_germ():
    with pytest.raises(NotMonotone):
        minorize_to_pl(rat(lambda j: Fraction(j, j + 1)), horizon=50)


def test_minorant_needs_limit_zero():
    with pytest.raises(LimitUnverified):
        minorize_to_pl(rat(lambda j: Fraction(1, 2)), horizon=50)


@given(plateau_germs())
def test_minorant_lies_strictly_below(m):
    result = minorize_to_pl(m, horizon=120)
    window = GridWindow(result.germ.start, 120)
    assert validate(result.germ, window).valid
    assert all(result.germ.value(j) < m.value(j) for j in window.indices())
    assert result.verified_from == result.germ.start


# ---------------------------------------------------------------- 对角下界


def test_diagonal_of_shift_stream():
    family = PLFamily(factory=lambda i: poly(i, 1, label=f"k+{i}"))
    diag = diagonal_below(family)
    assert [diag.code(k) for k in range(1, 51)] == [3 * k for k in range(1, 51)]


def test_diagonal_of_finite_family():
    diag = diagonal_below([poly(1, 1), poly(2, 1), poly(3, 1)])
    assert [diag.code(k) for k in range(3, 30)] == [2 * k + 3 for k in range(3, 30)]
    assert diag.code(1) == 3


def test_diagonal_of_singleton_and_powers():
    assert diagonal_below([poly(0, 1)]).code(7) == 14
    powers = diagonal_below([poly(0, 1), poly(0, 0, 1), poly(0, 0, 0, 1)])
    assert powers.code(1) == 2
    assert powers.code(2) == 6
    assert powers.code(5) == 130


def test_diagonal_of_empty_family():
    with pytest.raises(EmptyFamily):
        diagonal_below([])


@given(st.lists(certified_germs(), min_size=1, max_size=8))
def test_diagonal_is_below_every_member(members):
    diag = diagonal_below(members)
    for j, member in enumerate(members, start=1):
        for k in range(max(j, member.start), 60):
            assert diag.code(k) > member.code(k)


# ---------------------------------------------------------------- 夹逼


def test_pinch_lower_and_upper():
    m0 = rat(lambda j: Fraction(1, j), label="m0")
    anchors = AnchorSeq(head=tuple(range(1, 11)))
    lower = pinch(PinchDirection.LOWER, m0, anchors)
    upper = pinch(PinchDirection.UPPER, m0, anchors)
    assert [lower.value(k) for k in range(1, 10)] == [Fraction(1, k + 1) for k in range(1, 10)]
    assert lower.stop == 9
    assert [upper.value(k) for k in range(2, 11)] == [Fraction(1, k - 1) for k in range(2, 11)]
    assert upper.start == 2


def test_pinch_with_infinite_anchor_rule():
    m0 = rat(lambda j: Fraction(1, j))
    lower = pinch(PinchDirection.LOWER, m0, AnchorSeq(tail=lambda k: 2 * k))
    assert lower.value(2) == Fraction(1, 4)
    assert lower.value(5) == Fraction(1, 6)


def test_pinch_anchor_errors():
    m0 = rat(lambda j: Fraction(1, j))
    with pytest.raises(TooFewAnchors):
        pinch(PinchDirection.LOWER, m0, AnchorSeq(head=(1, 2)))
    with pytest.raises(AnchorsNotDecreasing):
        pinch(PinchDirection.LOWER, m0, AnchorSeq(head=(1, 3, 2)))


@given(certified_germs(label="m"), anchor_lists(), st.integers(2, 5))
def test_pinch_lower_bound_is_sound(m, anchors, d):
    m0 = arithmetic(ArithOp.SCALE, m, q=Fraction(d - 1, d))
    lower = pinch(PinchDirection.LOWER, m0, AnchorSeq(head=anchors))
    for j in range(anchors[0], anchors[-1]):
        assert m.value(j) > lower.value(j)


@given(certified_germs(label="m"), anchor_lists(), st.integers(2, 5))
def test_pinch_upper_bound_is_sound(m, anchors, d):
    m0 = arithmetic(ArithOp.SCALE, m, q=Fraction(d + 1, d))
    upper = pinch(PinchDirection.UPPER, m0, AnchorSeq(head=anchors))
    for j in range(anchors[0] + 1, anchors[-1] + 1):
        assert m.value(j) < upper.value(j)


def bumped_at_anchors(m0, anchors, upward):
    """与 m0 在锚点外重合、只在锚点处移动的非增芽"""
    marks = set(anchors)

    def value(j):
        if j not in marks:
            return m0.value(j)
        if upward:
            return (m0.value(j) + m0.value(j - 1)) / 2 if j > m0.start else 2 * m0.value(j)
        return (m0.value(j) + m0.value(j + 1)) / 2

    return rat(value, label="m")


@given(certified_germs(label="m0"), anchor_lists())
def test_pinch_lower_holds_when_only_anchors_exceed(m0, anchors):
    m = bumped_at_anchors(m0, anchors, upward=True)
    lower = pinch(PinchDirection.LOWER, m0, AnchorSeq(head=anchors))
    for j in range(anchors[0], anchors[-1]):
        assert lower.value(j) < m.value(j)
    off_anchor = [j for j in range(anchors[0], anchors[-1]) if j not in anchors]
    assert all(m.value(j) == m0.value(j) for j in off_anchor)


@given(certified_germs(label="m0"), anchor_lists())
def test_pinch_upper_holds_when_only_anchors_fall_below(m0, anchors):
    m = bumped_at_anchors(m0, anchors, upward=False)
    upper = pinch(PinchDirection.UPPER, m0, AnchorSeq(head=anchors))
    for j in range(anchors[0] + 1, anchors[-1] + 1):
        assert upper.value(j) > m.value(j)


# ---------------------------------------------------------------- 乘法开映射


def test_open_mult_radius_is_product():
    radius = open_mult_radius(poly(0, 1), poly(0, 0, 0, 1))
    assert radius.generator.coeffs == (0, 0, 0, 0, 1)


def test_factorization_below_radius():
    m, r = poly(0, 1, label="m"), poly(0, 1, label="r")
    h = rat(lambda j: Fraction(1, 2 * j * j), label="h")
    check = check_factorization(m, r, h, GridWindow(1, 100))
    assert check.factorizes
    assert check.member.kind == OrderKind.HOLDS_UPTO_LT


def test_radius_itself_does_not_factorize():
    m, r = poly(0, 1), poly(0, 1)
    check = check_factorization(m, r, open_mult_radius(m, r), GridWindow(1, 100))
    assert not check.factorizes
