"""Closed-form generalization-bound calculators.

For learning from question-labeled data with a rho-Lipschitz rewritten
loss bounded by C_L, the excess classification error is bounded, with
probability 1 - delta over n samples, by a Rademacher-complexity term
plus a concentration term.  The which-one bound decreases monotonically
in the item count I; the is-in bound is symmetric in I <-> K-I and
smallest at I = K/2.

The concentration constant of the which-one bound uses K^2+(I-2)K-I^2+1;
the "+1" follows the full derivation (the compact statement's "-1" does
not survive the algebra).

``rad_sum`` is the summed per-class Rademacher complexity, supplied by
the caller or bounded via ``kernel_rademacher_bound`` (r * Lambda / sqrt(n)
for a kernel model with feature-norm radius r and weight-norm cap Lambda).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .labeling import QuestionType

__all__ = [
    "BoundInputs",
    "KernelBoundInputs",
    "rademacher_coeff",
    "error_bound_whichone",
    "error_bound_isin",
    "kernel_rademacher_bound",
]


@dataclass(frozen=True)
class BoundInputs:
    K: int
    I: int
    rho: float
    c_l: float
    delta: float
    n: int
    rad_sum: float

    def __post_init__(self) -> None:
        if not 1 <= self.I <= self.K - 1:
            raise ValueError(f"question item count {self.I} outside 1..{self.K - 1}")
        if self.rho <= 0 or self.c_l <= 0 or self.n < 1 or self.rad_sum < 0:
            raise ValueError("rho, c_l must be positive; n >= 1; rad_sum >= 0")
        if not 0 < self.delta < 1:
            raise ValueError(f"confidence parameter delta must be in (0,1), got {self.delta}")


@dataclass(frozen=True)
class KernelBoundInputs:
    r: float
    lam: float
    n: int

    def __post_init__(self) -> None:
        if self.r < 0 or self.lam < 0 or self.n < 1:
            raise ValueError("need r >= 0, lam >= 0, n >= 1")


def rademacher_coeff(qtype: QuestionType, K: int, I: int, rho: float) -> float:
    """Multiplier carrying the loss-class complexity back to the per-class
    discriminant classes: sqrt(2) rho K^2 (K-1) over I(2K-I-1) for which-one,
    over 2I(K-I) for is-in."""
    if not 1 <= I <= K - 1:
        raise ValueError(f"question item count {I} outside 1..{K - 1}")
    qtype = QuestionType.parse(qtype)
    num = math.sqrt(2.0) * rho * K * K * (K - 1)
    if qtype is QuestionType.WHICH_ONE:
        return num / (I * (2 * K - I - 1))
    return num / (2 * I * (K - I))


def error_bound_whichone(inp: BoundInputs) -> float:
    """Excess-error bound for which-one learning."""
    K, I = inp.K, inp.I
    complexity = (
        4.0 * math.sqrt(2.0) * inp.rho * K * K * (K - 1)
        / (I * (2 * K - I - 1))
        * inp.rad_sum
    )
    concentration = (
        (K - I) * (K * K + (I - 2) * K - I * I + 1)
        / (I * (2 * K - I - 1))
        * inp.c_l
        * math.sqrt(2.0 * math.log(2.0 / inp.delta) / inp.n)
    )
    return complexity + concentration


def error_bound_isin(inp: BoundInputs) -> float:
    """Excess-error bound for is-in learning; symmetric in I <-> K-I."""
    K, I = inp.K, inp.I
    complexity = (
        math.sqrt(2.0) * inp.rho * K * K * (K - 1) / (I * (K - I)) * inp.rad_sum
    )
    concentration = (
        K * (K - 1)
        / (2.0 * min(I, K - I))
        * inp.c_l
        * math.sqrt(2.0 * math.log(2.0 / inp.delta) / inp.n)
    )
    return complexity + concentration


def kernel_rademacher_bound(inp: KernelBoundInputs) -> float:
    """Per-class Rademacher complexity bound r * Lambda / sqrt(n) for a
    norm-capped linear-in-parameter kernel model."""
    return inp.r * inp.lam / math.sqrt(inp.n)
