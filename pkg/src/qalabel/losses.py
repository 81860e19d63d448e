"""Base losses and the rewritten losses for set-valued labels.

The ordinary classification risk E[L(f(X), Y)] equals the expectation,
under the label-set pmf of either questioning procedure, of

    L_rw(f, s) = sum_{y in s} L(f, y) - coeff * sum_{y not in s} L(f, y)

with the procedure-specific coefficient

    which-one: (K-I)(K-I-1) / (I(2K-I-1))
    is-in:     (2I^2 + K^2 - K(2I+1)) / (2I(K-I))

so minimizing the empirical mean of L_rw over labeled events is an
unbiased surrogate for ordinary risk minimization.  The rewritten loss
can be negative; clipping it would break the unbiasedness, so values are
kept as-is.

The default base loss is the mean absolute error between the softmax
output and the one-hot target, which on the simplex equals 2(1 - f_y).
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from . import backend
from .combinatorics import ClassSpace, LabelSubset
from .generative import LabelPmf, check_posterior, isin_pmf, whichone_pmf
from .labeling import LabelingEvent, QuestionType

__all__ = [
    "mae",
    "cross_entropy",
    "check_scores",
    "coeff_whichone",
    "coeff_isin",
    "qa_coeff",
    "valid_label_sizes",
    "qa_loss",
    "rewritten_loss_of_pmf",
    "exact_risk_identity_check",
    "empirical_qa_risk",
    "empirical_qa_risk_arrays",
    "empirical_test_risk",
    "mae_matrix",
]

BaseLoss = Callable[[np.ndarray, int], float]

_SCORE_TOL = 1e-9


def check_scores(scores, K: int) -> np.ndarray:
    """Validate a classifier output: K nonnegative entries summing to 1."""
    f = np.asarray(scores, dtype=np.float64)
    if f.shape != (K,):
        raise ValueError(f"score vector must have shape ({K},), got {f.shape}")
    if (f < 0).any() or abs(f.sum() - 1.0) > _SCORE_TOL:
        raise ValueError("scores must be nonnegative and sum to 1 within 1e-9")
    return f


def mae(scores, y: int) -> float:
    """Mean absolute error sum_k |f_k - onehot(y)_k|."""
    f = np.asarray(scores, dtype=np.float64)
    if not 1 <= y <= f.shape[0]:
        raise ValueError(f"class id {y} outside 1..{f.shape[0]}")
    target = np.zeros_like(f)
    target[y - 1] = 1.0
    return float(np.abs(f - target).sum())


def cross_entropy(scores, y: int, eps: float = 1e-12) -> float:
    """Alternative base loss; unbounded, so not used for the bound analysis."""
    f = np.asarray(scores, dtype=np.float64)
    if not 1 <= y <= f.shape[0]:
        raise ValueError(f"class id {y} outside 1..{f.shape[0]}")
    return float(-math.log(max(f[y - 1], eps)))


def coeff_whichone(K: int, I: int) -> float:
    """Negative-term coefficient of the which-one rewritten loss."""
    if not 1 <= I <= K - 1:
        raise ValueError(f"question item count {I} outside 1..{K - 1}")
    return (K - I) * (K - I - 1) / (I * (2 * K - I - 1))


def coeff_isin(K: int, I: int) -> float:
    """Negative-term coefficient of the is-in rewritten loss."""
    if not 1 <= I <= K - 1:
        raise ValueError(f"question item count {I} outside 1..{K - 1}")
    return (2 * I * I + K * K - K * (2 * I + 1)) / (2 * I * (K - I))


def qa_coeff(qtype: QuestionType, K: int, I: int) -> float:
    qtype = QuestionType.parse(qtype)
    return coeff_whichone(K, I) if qtype is QuestionType.WHICH_ONE else coeff_isin(K, I)


def valid_label_sizes(qtype: QuestionType, K: int, I: int) -> set[int]:
    """Label-set sizes a procedure can assign: {1, K-I} or {I, K-I}."""
    qtype = QuestionType.parse(qtype)
    if qtype is QuestionType.WHICH_ONE:
        return {1, K - I}
    return {I, K - I}


def qa_loss(
    qtype: QuestionType,
    scores,
    qa_label: LabelSubset,
    K: int,
    I: int,
    base: BaseLoss = mae,
) -> float:
    """Rewritten loss of one prediction against one assigned label set."""
    qtype = QuestionType.parse(qtype)
    f = check_scores(scores, K)
    if len(qa_label) not in valid_label_sizes(qtype, K, I):
        raise ValueError(
            f"label size {len(qa_label)} invalid for {qtype.value} with K={K}, I={I}"
        )
    coeff = qa_coeff(qtype, K, I)
    inside = math.fsum(base(f, y) for y in qa_label)
    outside = math.fsum(base(f, y) for y in range(1, K + 1) if y not in qa_label)
    return inside - coeff * outside


def rewritten_loss_of_pmf(
    pmf: LabelPmf, losses_per_class: Sequence[float], coeff: float
) -> float:
    """Expectation of the rewritten loss under a label pmf, for fixed
    per-class base losses."""
    K = pmf.space.K
    L = np.asarray(losses_per_class, dtype=np.float64)
    total = float(L.sum())
    acc = 0.0
    for s, m in pmf.entries.items():
        inside = math.fsum(L[y - 1] for y in s)
        acc += m * (inside - coeff * (total - inside))
    return acc


def exact_risk_identity_check(
    qtype: QuestionType,
    posterior,
    losses_per_class: Sequence[float],
    I: int,
    space: ClassSpace,
) -> tuple[float, float]:
    """Both sides of the risk identity, by exhaustive enumeration.

    Returns (ordinary risk sum_y p_y L_y, expected rewritten loss under the
    procedure pmf); the two coincide for every posterior and loss vector.
    """
    qtype = QuestionType.parse(qtype)
    K = space.K
    p = check_posterior(posterior, K)
    L = np.asarray(losses_per_class, dtype=np.float64)
    if L.shape != (K,):
        raise ValueError(f"need {K} per-class losses, got shape {L.shape}")
    ordinary = float(np.dot(p, L))
    if qtype is QuestionType.WHICH_ONE:
        pmf = whichone_pmf(p, I, space)
    else:
        pmf = isin_pmf(p, I, space)
    rewritten = rewritten_loss_of_pmf(pmf, L, qa_coeff(qtype, K, I))
    return ordinary, rewritten


def empirical_qa_risk(
    predict: Callable[[str], np.ndarray],
    events: Sequence[LabelingEvent],
    qtype: QuestionType,
    I: int,
    K: int,
    base: BaseLoss = mae,
) -> float:
    """Mean rewritten loss of ``predict`` over labeled events."""
    qtype = QuestionType.parse(qtype)
    if not events:
        raise ValueError("empirical risk needs at least one event")
    for e in events:
        if e.qtype is not qtype or e.items != I:
            raise ValueError(
                f"event {e.instance_id!r} has ({e.qtype.value}, I={e.items}), "
                f"expected ({qtype.value}, I={I})"
            )
    values = [
        qa_loss(qtype, predict(e.instance_id), e.qa_label, K, I, base) for e in events
    ]
    return math.fsum(values) / len(values)


def mae_matrix(scores: np.ndarray) -> np.ndarray:
    """(n, K) matrix of MAE values of each row against each class."""
    f = np.asarray(scores, dtype=np.float64)
    row_sums = np.abs(f).sum(axis=1, keepdims=True)
    # |f - e_y|_1 = sum_k |f_k| - |f_y| + |f_y - 1|
    return row_sums - np.abs(f) + np.abs(f - 1.0)


def membership_matrix(label_masks: Iterable[int], K: int) -> np.ndarray:
    """(n, K) 0/1 matrix: entry [i, k] says class k+1 is in label i."""
    masks = np.asarray(label_masks, dtype=np.uint64)
    bits = np.arange(K, dtype=np.uint64)
    return ((masks[:, None] >> bits) & np.uint64(1)).astype(np.uint8)


def empirical_qa_risk_arrays(
    scores: np.ndarray,
    label_masks: np.ndarray,
    qtype: QuestionType,
    I: int,
    K: int,
    kernel_backend: str | None = None,
) -> float:
    """Batched empirical rewritten MAE risk from score rows and label bitmasks."""
    if len(label_masks) == 0:
        raise ValueError("empirical risk needs at least one event")
    kern = backend.get_kernels(kernel_backend)
    member = membership_matrix(label_masks, K)
    values = kern.qa_loss_values(mae_matrix(scores), member, qa_coeff(qtype, K, I))
    return float(values.mean())


def empirical_test_risk(
    predict: Callable[[str], np.ndarray],
    pairs: Sequence[tuple[str, int]],
    base: BaseLoss = mae,
) -> float:
    """Mean base loss over (instance id, ordinary label) test pairs."""
    if not pairs:
        raise ValueError("test risk needs at least one labeled pair")
    return math.fsum(base(predict(i), y) for i, y in pairs) / len(pairs)
