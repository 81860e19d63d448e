"""Class-set arithmetic: label subsets, complements, and subset enumeration.

Classes are 1-based ids in {1, ..., K}.  Label subsets are canonical
(sorted, duplicate-free, nonempty) and hashable, so they can key pmf
dictionaries directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator

import numpy as np

from .errors import CapacityError

# Exhaustive enumeration (pmfs, oracles) is capped; simulation has no cap.
MAX_ENUMERATION_CLASSES = 24
MAX_BINOMIAL_N = 64


@dataclass(frozen=True)
class ClassSpace:
    """The total class set {1, ..., K}."""

    K: int

    def __post_init__(self) -> None:
        if not isinstance(self.K, int) or self.K < 2:
            raise ValueError(f"class count must be an integer >= 2, got {self.K!r}")

    def contains(self, class_id: int) -> bool:
        return 1 <= class_id <= self.K

    def validate_class(self, class_id: int) -> None:
        if not isinstance(class_id, (int, np.integer)) or not self.contains(int(class_id)):
            raise ValueError(f"class id {class_id!r} is not in 1..{self.K}")

    def validate_subset(self, subset: "LabelSubset") -> None:
        if subset.classes[-1] > self.K:
            raise ValueError(
                f"subset {subset} contains class ids above K={self.K}"
            )

    def full_subset(self) -> "LabelSubset":
        return LabelSubset(range(1, self.K + 1))


class LabelSubset:
    """A nonempty sorted set of class ids.

    Houses ordinary labels (size 1), assigned answer labels, question sets,
    and candidate labels alike.  Equality and hashing are structural.
    """

    __slots__ = ("classes",)

    def __init__(self, classes: Iterable[int]):
        canon = tuple(sorted({int(c) for c in classes}))
        if not canon:
            raise ValueError("label subset must be nonempty")
        if canon[0] < 1:
            raise ValueError(f"class ids must be >= 1, got {canon[0]}")
        object.__setattr__(self, "classes", canon)

    def __setattr__(self, name, value):
        raise AttributeError("LabelSubset is immutable")

    def __iter__(self) -> Iterator[int]:
        return iter(self.classes)

    def __len__(self) -> int:
        return len(self.classes)

    def __contains__(self, class_id: int) -> bool:
        return class_id in self.classes

    def __eq__(self, other) -> bool:
        return isinstance(other, LabelSubset) and self.classes == other.classes

    def __hash__(self) -> int:
        return hash(self.classes)

    def __repr__(self) -> str:
        return f"LabelSubset({list(self.classes)})"

    def mask(self) -> int:
        """Bitmask with bit (c-1) set for every class c in the subset."""
        m = 0
        for c in self.classes:
            m |= 1 << (c - 1)
        return m

    @classmethod
    def from_mask(cls, mask: int) -> "LabelSubset":
        if mask <= 0:
            raise ValueError("mask must have at least one bit set")
        return cls(i + 1 for i in range(mask.bit_length()) if (mask >> i) & 1)


def binomial(n: int, k: int) -> int:
    """Exact C(n, k) for 0 <= k <= n <= 64."""
    if not (0 <= k <= n <= MAX_BINOMIAL_N):
        raise ValueError(f"binomial({n}, {k}) outside supported range 0 <= k <= n <= {MAX_BINOMIAL_N}")
    return math.comb(n, k)


def enumerate_subsets(space: ClassSpace, size: int) -> list[LabelSubset]:
    """All C(K, size) subsets of {1..K} of the given size, lexicographically."""
    if space.K > MAX_ENUMERATION_CLASSES:
        raise CapacityError(
            f"exhaustive enumeration is capped at K={MAX_ENUMERATION_CLASSES}, got K={space.K}"
        )
    if not 1 <= size <= space.K:
        raise ValueError(f"subset size {size} outside 1..{space.K}")
    return [LabelSubset(c) for c in combinations(range(1, space.K + 1), size)]


def complement(space: ClassSpace, subset: LabelSubset) -> LabelSubset:
    """The complement of a proper subset within {1..K}."""
    space.validate_subset(subset)
    if len(subset) >= space.K:
        raise ValueError("complement of the full class set would be empty")
    members = set(subset.classes)
    return LabelSubset(c for c in range(1, space.K + 1) if c not in members)
