"""The three-step question-and-answer labeling procedure.

Step 1 draws a uniform question class set Q of size I.  Step 2 poses one
of two questions about an instance X: "which one in Q is X?" or
"is X in Q?".  Step 3 converts the annotator's answer into the assigned
label set:

  which_one, answered with class z in Q   -> {z}
  which_one, answered "not included"      -> complement of Q
  is_in, answered "yes"                   -> Q
  is_in, answered "no"                    -> complement of Q

The annotator always answers according to the single class Z it infers
for the instance, so Z is a member of every assigned label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import backend
from .combinatorics import ClassSpace, LabelSubset, complement
from .errors import MissingGroundTruthError, ProtocolViolationError
from .rng import CounterRng

__all__ = [
    "QuestionType",
    "QuestionSpec",
    "Answer",
    "AnnotatorModel",
    "LabelingEvent",
    "draw_question_set",
    "answer_question",
    "assign_label",
    "simulate_arrays",
    "simulate_dataset",
    "label_sizes",
]


class QuestionType(enum.Enum):
    WHICH_ONE = "which_one"
    IS_IN = "is_in"

    @classmethod
    def parse(cls, value: "QuestionType | str") -> "QuestionType":
        if isinstance(value, cls):
            return value
        for qt in cls:
            if qt.value == value:
                return qt
        raise ValueError(f"unknown question type {value!r}")


@dataclass(frozen=True)
class QuestionSpec:
    """Question type plus the number of question items I (1 <= I <= K-1)."""

    qtype: QuestionType
    items: int
    space: ClassSpace

    def __post_init__(self) -> None:
        if not 1 <= self.items <= self.space.K - 1:
            raise ValueError(
                f"question item count {self.items} outside 1..{self.space.K - 1}"
            )


class AnswerKind(enum.Enum):
    CHOSE = "chose"
    NOT_INCLUDED = "not_included"
    YES = "yes"
    NO = "no"


@dataclass(frozen=True)
class Answer:
    """One annotator answer; ``chosen`` is set only for CHOSE."""

    kind: AnswerKind
    chosen: int | None = None

    def __post_init__(self) -> None:
        if self.kind is AnswerKind.CHOSE and self.chosen is None:
            raise ValueError("a 'chose' answer needs the chosen class id")
        if self.kind is not AnswerKind.CHOSE and self.chosen is not None:
            raise ValueError(f"{self.kind.value!r} answers carry no class id")

    @classmethod
    def chose(cls, class_id: int) -> "Answer":
        return cls(AnswerKind.CHOSE, int(class_id))

    @classmethod
    def not_included(cls) -> "Answer":
        return cls(AnswerKind.NOT_INCLUDED)

    @classmethod
    def yes(cls) -> "Answer":
        return cls(AnswerKind.YES)

    @classmethod
    def no(cls) -> "Answer":
        return cls(AnswerKind.NO)


@dataclass(frozen=True)
class AnnotatorModel:
    """What the annotator infers for each instance.

    Deterministic: ``classes`` maps instance id -> the class it reads off
    (ground-truth labels in the experiments).  Stochastic: ``posterior``
    is a length-K distribution and the inferred class is drawn from it,
    independently per instance.
    """

    space: ClassSpace
    classes: Mapping[str, int] | None = None
    posterior: np.ndarray | None = None

    def __post_init__(self) -> None:
        if (self.classes is None) == (self.posterior is None):
            raise ValueError("provide exactly one of classes= or posterior=")
        if self.posterior is not None:
            p = np.asarray(self.posterior, dtype=np.float64)
            if p.shape != (self.space.K,) or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError("posterior must be a length-K point on the simplex")
            object.__setattr__(self, "posterior", p)

    @classmethod
    def deterministic(cls, space: ClassSpace, classes: Mapping[str, int]) -> "AnnotatorModel":
        return cls(space=space, classes=dict(classes))

    @classmethod
    def stochastic(cls, space: ClassSpace, posterior) -> "AnnotatorModel":
        return cls(space=space, posterior=np.asarray(posterior, dtype=np.float64))

    def class_for(self, instance_id: str) -> int:
        assert self.classes is not None
        try:
            z = int(self.classes[instance_id])
        except KeyError:
            raise MissingGroundTruthError(
                f"annotator has no class for instance {instance_id!r}"
            ) from None
        self.space.validate_class(z)
        return z


@dataclass(frozen=True)
class LabelingEvent:
    """One completed annotation: question, answer, and the assigned label."""

    instance_id: str
    qtype: QuestionType
    items: int
    question_set: LabelSubset
    answer: Answer
    qa_label: LabelSubset
    seed: int


def draw_question_set(rng: CounterRng, spec: QuestionSpec) -> LabelSubset:
    """Uniform draw from the size-I subsets of {1..K}, consuming I rng draws."""
    K, I = spec.space.K, spec.items
    arr = list(range(1, K + 1))
    for j in range(I):
        r = j + rng.next_below(K - j)
        arr[j], arr[r] = arr[r], arr[j]
    return LabelSubset(arr[:I])


def answer_question(z: int, qtype: QuestionType, q: LabelSubset, space: ClassSpace) -> Answer:
    """Step 3, answering: the annotator compares its inferred class z to Q."""
    space.validate_class(z)
    if len(q) >= space.K:
        raise ValueError("question set must be a proper subset of the class set")
    if qtype is QuestionType.WHICH_ONE:
        return Answer.chose(z) if z in q else Answer.not_included()
    return Answer.yes() if z in q else Answer.no()


def assign_label(
    qtype: QuestionType, q: LabelSubset, a: Answer, space: ClassSpace
) -> LabelSubset:
    """Step 3, labeling: convert (question set, answer) into the label set."""
    if qtype is QuestionType.WHICH_ONE:
        if a.kind is AnswerKind.CHOSE:
            if a.chosen not in q:
                raise ProtocolViolationError(
                    f"chose({a.chosen}) but {a.chosen} is not in the question set {q}"
                )
            return LabelSubset([a.chosen])
        if a.kind is AnswerKind.NOT_INCLUDED:
            return complement(space, q)
        raise ProtocolViolationError(f"{a.kind.value!r} is not a which-one answer")
    if a.kind is AnswerKind.YES:
        return q
    if a.kind is AnswerKind.NO:
        return complement(space, q)
    raise ProtocolViolationError(f"{a.kind.value!r} is not an is-in answer")


def simulate_arrays(
    seed: int,
    spec: QuestionSpec,
    annotator: AnnotatorModel,
    n: int,
    ground_truth: np.ndarray | None = None,
    start: int = 0,
    kernel_backend: str | None = None,
) -> dict[str, np.ndarray]:
    """Batched simulation of n labeling events, as arrays.

    Returns question sets (n, I) int32, inferred classes z (n,), a yes/chose
    indicator, and the assigned labels as uint64 bitmasks.  Instance i uses
    the rng stream ``instance_key(seed, start + i)``, so results are
    independent of batching and identical across kernel backends.

    For a deterministic annotator pass ``ground_truth`` (1-based int array,
    one class per instance); the mapping in ``annotator.classes`` is not
    consulted on this path.
    """
    K, I = spec.space.K, spec.items
    kern = backend.get_kernels(kernel_backend)
    useed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    qsets = kern.draw_question_sets(useed, start, n, K, I)
    if annotator.posterior is not None:
        cdf = np.cumsum(annotator.posterior)
        z = kern.draw_annotator_classes(useed, start, n, K, cdf)
    else:
        if ground_truth is None:
            raise MissingGroundTruthError(
                "deterministic annotator needs ground_truth= on the array path"
            )
        z = np.asarray(ground_truth, dtype=np.int32)
        if z.shape != (n,):
            raise ValueError(f"ground_truth must have shape ({n},)")
        if z.min() < 1 or z.max() > K:
            raise ValueError("ground_truth classes must lie in 1..K")

    one = np.uint64(1)
    q_masks = np.bitwise_or.reduce(one << (qsets.astype(np.uint64) - one), axis=1)
    full_mask = np.uint64((1 << K) - 1)
    z_masks = one << (z.astype(np.uint64) - one)
    z_in_q = (q_masks & z_masks) != 0

    if spec.qtype is QuestionType.WHICH_ONE:
        label_masks = np.where(z_in_q, z_masks, full_mask & ~q_masks)
    else:
        label_masks = np.where(z_in_q, q_masks, full_mask & ~q_masks)

    return {
        "question_sets": qsets,
        "z": z,
        "z_in_q": z_in_q,
        "label_masks": label_masks.astype(np.uint64),
    }


def _answer_for(qtype: QuestionType, z_in_q: bool, z: int) -> Answer:
    if qtype is QuestionType.WHICH_ONE:
        return Answer.chose(z) if z_in_q else Answer.not_included()
    return Answer.yes() if z_in_q else Answer.no()


def simulate_dataset(
    seed: int,
    spec: QuestionSpec,
    annotator: AnnotatorModel,
    instance_ids: Sequence[str],
    kernel_backend: str | None = None,
) -> list[LabelingEvent]:
    """One labeling event per instance, reproducible from the seed alone."""
    n = len(instance_ids)
    gt = None
    if annotator.classes is not None:
        gt = np.array([annotator.class_for(i) for i in instance_ids], dtype=np.int32)
    arrays = simulate_arrays(
        seed, spec, annotator, n, ground_truth=gt, kernel_backend=kernel_backend
    )
    events = []
    for i, instance_id in enumerate(instance_ids):
        q = LabelSubset(arrays["question_sets"][i])
        z = int(arrays["z"][i])
        ans = _answer_for(spec.qtype, bool(arrays["z_in_q"][i]), z)
        label = LabelSubset.from_mask(int(arrays["label_masks"][i]))
        events.append(
            LabelingEvent(
                instance_id=instance_id,
                qtype=spec.qtype,
                items=spec.items,
                question_set=q,
                answer=ans,
                qa_label=label,
                seed=seed,
            )
        )
    return events


def label_sizes(label_masks: Iterable[int]) -> np.ndarray:
    """Popcount of each label bitmask."""
    masks = np.asarray(label_masks, dtype=np.uint64)
    return np.bitwise_count(masks).astype(np.int64)
