from .analysis import (
    FuncSample,
    NetSpec,
    chain_net,
    continuity_verdict,
    converge_check,
    default_battery,
    difference_profile,
    neighborhood_member,
    nonconvergence_witness,
    norm_profile,
    oscillation_profile,
    product_battery,
    product_net,
    ultradist_triangle,
)
from .constructions import (
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
from .errors import GermlabError
from .germ_core import (
    ZERO_GERM,
    ExpGenerator,
    FunctionGenerator,
    GridWindow,
    PLGerm,
    PolyGenerator,
    RatGerm,
    SeqGerm,
    Tier,
    canonical_eq,
    eval_at,
    validate,
)
from .order_engine import CompareMode, arch_class_compare, compare_germwise, frechet_triage

__all__ = [
    "AnchorSeq",
    "ArithOp",
    "CompareMode",
    "ExpGenerator",
    "FuncSample",
    "FunctionGenerator",
    "GermlabError",
    "GridWindow",
    "NetSpec",
    "PLFamily",
    "PLGerm",
    "PinchDirection",
    "PolyGenerator",
    "RatGerm",
    "SeqGerm",
    "Tier",
    "ZERO_GERM",
    "arch_class_compare",
    "arithmetic",
    "canonical_eq",
    "chain_net",
    "check_factorization",
    "compare_germwise",
    "compose",
    "continuity_verdict",
    "converge_check",
    "default_battery",
    "diagonal_below",
    "difference_profile",
    "eval_at",
    "frechet_triage",
    "invert",
    "minorize_to_pl",
    "neighborhood_member",
    "nonconvergence_witness",
    "norm_profile",
    "open_mult_radius",
    "oscillation_profile",
    "pinch",
    "product_battery",
    "product_net",
    "ultradist_triangle",
    "validate",
]
