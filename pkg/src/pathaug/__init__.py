"""Toolkit for the path augmentation problem: exact solvers, the approximation
pipeline, and the factor-revealing analysis around it."""

from .core import (
    Link,
    Multigraph,
    PapInstance,
    block_decompose,
    bridges,
    contract,
    derive_instance,
    from_text,
    link,
    link_classes,
    verify_solution,
)
from .starting import (
    TARGET_RATIO,
    CreditLedger,
    WorkingSolution,
    check_invariants,
    credits,
    starting_solution,
)

__all__ = [
    "Link",
    "Multigraph",
    "PapInstance",
    "TARGET_RATIO",
    "CreditLedger",
    "WorkingSolution",
    "block_decompose",
    "bridges",
    "check_invariants",
    "contract",
    "credits",
    "derive_instance",
    "from_text",
    "link",
    "link_classes",
    "starting_solution",
    "verify_solution",
]
