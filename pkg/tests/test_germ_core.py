from fractions import Fraction

import pytest

from germlab.core.errors import DomainMismatch, IndexBeforeStart, IndexBeyondDomain, NonPositiveValue
from germlab.core.germ_core import (
    ZERO_GERM,
    GridWindow,
    PLGerm,
    PolyGenerator,
    RatGerm,
    SeqGerm,
    Tier,
    canonical_eq,
    eval_at,
    final_run_start,
    sign_sequence,
    validate,
)
from germlab.core.verdicts import OrderKind
from tests.strategies import exp, poly, rat


def test_pl_values_are_unit_fractions():
    g = poly(0, 0, 1)
    assert [g.value(j) for j in range(1, 5)] == [Fraction(1), Fraction(1, 4), Fraction(1, 9), Fraction(1, 16)]
    assert g.code(7) == 49


def test_head_overrides_generator():
    g = poly(0, 1, start=2, head=(5, 6))
    assert g.codes(GridWindow(2, 6)) == [5, 6, 4, 5, 6]
    assert g.head_end == 4


def test_index_before_start_and_beyond_domain():
    g = poly(0, 1, start=3)
    with pytest.raises(IndexBeforeStart):
        eval_at(g, 2)
    table = RatGerm.from_table([Fraction(1, 2), Fraction(1, 3)], start=4)
    assert table.value(5) == Fraction(1, 3)
    with pytest.raises(IndexBeyondDomain):
        table.value(6)


def test_nonpositive_code_raises_on_evaluation():
    with pytest.raises(NonPositiveValue):
        poly(-5, 1).value(1)


def test_seq_germ_terms():
    s = SeqGerm(lambda i: Fraction(1, 2 ** i))
    assert s.value(3) == Fraction(1, 8)


def test_empty_window_rejected():
    with pytest.raises(DomainMismatch):
        GridWindow(5, 4)
    assert GridWindow(1, 100).midpoint == 50


def test_sign_sequence_compares_codes():
    assert sign_sequence(poly(0, 0, 1), poly(0, 2), GridWindow(1, 4)) == [1, 0, -1, -1]
    assert final_run_start([1, 0, -1, -1], 1) == 3


def test_validate_reports_first_violation_index():
    g = PLGerm(PolyGenerator((2, 1)), head=(1, 3, 2, 5))
    report = validate(g, GridWindow(1, 10))
    assert not report.valid
    assert report.check("strictly_increasing_codes").first_violation == 3
    assert report.check("positive_codes").passed
    assert report.first_violation == 3


def test_validate_negative_code():
    report = validate(poly(-5, 1), GridWindow(1, 10))
    assert report.check("positive_codes").first_violation == 1


def test_validate_declared_pseudo_monotone():
    bumped = rat(lambda j: Fraction(1, 2) if j == 4 else Fraction(1, j), tier=Tier.PSEUDO_MONOTONE)
    report = validate(bumped, GridWindow(1, 20))
    assert report.check("nonincreasing").first_violation == 4
    assert report.tier == Tier.GENERAL


def test_validate_values_above_one():
    g = rat(lambda j: Fraction(2, j), tier=Tier.STRICT_MONOTONE)
    report = validate(g, GridWindow(1, 10))
    assert report.check("at_most_one").first_violation == 1
    assert report.check("strictly_decreasing").passed


def test_validate_zero_germ():
    report = validate(ZERO_GERM, GridWindow(1, 10))
    assert not report.valid
    assert report.first_violation == 1


@pytest.mark.parametrize(
    "germ, tier",
    [
        (rat(lambda j: Fraction(1, j)), Tier.STRICT_MONOTONE),
        (rat(lambda j: Fraction(1, (j + 1) // 2)), Tier.PSEUDO_MONOTONE),
        (rat(lambda j: Fraction(1, j) if j % 2 else Fraction(1, 2 * j)), Tier.GENERAL),
    ],
)
def test_tier_inference(germ, tier):
    assert validate(germ, GridWindow(1, 50)).tier == tier


def test_pl_germ_keeps_declared_tier():
    assert validate(exp(1, 2), GridWindow(1, 30)).tier == Tier.STRICT_MONOTONE_CONTINUOUS_INTENT


def test_limit_evidence():
    report = validate(rat(lambda j: Fraction(1, j)), GridWindow(1, 100))
    assert (report.limit_threshold, report.limit_index) == (99, 100)
    constant = validate(rat(lambda j: Fraction(1)), GridWindow(1, 10))
    assert constant.limit_threshold is None
    assert constant.limit_evidence() == "limit unverified"


def test_canonical_eq_finds_smallest_index():
    a = poly(0, 1, head=(5,), label="a")
    b = poly(0, 1, label="b")
    verdict = canonical_eq(a, b, GridWindow(1, 50))
    assert verdict.kind == OrderKind.EQUAL_FROM
    assert verdict.witness_index == 2


def test_canonical_eq_differs():
    verdict = canonical_eq(poly(0, 1), poly(1, 1), GridWindow(1, 50))
    assert verdict.kind == OrderKind.DIFFER_THROUGHOUT


def test_embed_preserves_values():
    g = poly(1, 3)
    e = g.embed()
    assert all(e.value(j) == g.value(j) for j in range(1, 30))
    assert g.relabel("z").label == "z"
