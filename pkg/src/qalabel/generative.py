"""Closed-form generative models of set-valued labels, and their inverses.

For a class posterior p(y|x) and question item count I, the labeling
procedure induces an exact pmf over the assigned label sets:

  which-one:  singleton {y} gets (I/K) p(y|x); each size-(K-I) set s gets
              (1/C(K,I)) * sum_{y in s} p(y|x)
  is-in:      every set s in B_I union B_{K-I} gets
              (1/C(K,I)) * sum_{y in s} p(y|x)

When the two support branches coincide (which-one at I = K-1, is-in at
2I = K) the masses accumulate on the shared keys, which is what makes the
pmf normalize.  ``oracle_pmf`` recomputes everything by brute force over
all (inferred class, question set) pairs and is the test oracle for the
closed forms.

A recipient who spreads belief uniformly over the received label set ends
up with a beta-mixture of the true posterior and uniform noise:
beta = I/(K-1) for which-one, 1/(K-1) for is-in, and (K-N)/(N(K-1)) for
size-N candidate labels, so which-one at I matches candidate labeling at
N = K/(I+1) and is-in matches N = K/2.

The pmfs are linear in the posterior and invertible: ``invert_to_posterior``
recovers p(y|x) from the per-class inclusion masses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import ClassSpace, LabelSubset, binomial, enumerate_subsets
from .errors import InconsistentPmfError
from .labeling import QuestionType, answer_question, assign_label

__all__ = [
    "LabelPmf",
    "check_posterior",
    "whichone_pmf",
    "isin_pmf",
    "conditional_pmf",
    "oracle_pmf",
    "ReceiverConfidence",
    "receiver_confidence",
    "receiver_marginal_from_pmf",
    "candidate_pmf",
    "candidate_beta",
    "receiver_confidence_candidate",
    "invert_to_posterior",
]

_MASS_TOL = 1e-12


def check_posterior(probs, K: int) -> np.ndarray:
    """Validate and return a length-K class posterior as float64."""
    p = np.asarray(probs, dtype=np.float64)
    if p.shape != (K,):
        raise ValueError(f"posterior must have shape ({K},), got {p.shape}")
    if (p < 0).any():
        raise ValueError("posterior entries must be nonnegative")
    if abs(p.sum() - 1.0) > _MASS_TOL:
        raise ValueError(f"posterior mass {p.sum()!r} is not 1 within {_MASS_TOL}")
    return p


@dataclass
class LabelPmf:
    """A sparse pmf over label subsets.

    ``procedure`` is one of "which_one", "is_in", "candidate", "ordinary";
    ``items`` is I for the question procedures and N for candidate labels.
    """

    space: ClassSpace
    procedure: str
    items: int | None
    entries: dict[LabelSubset, float] = field(default_factory=dict)

    def add(self, subset: LabelSubset, mass: float) -> None:
        self.entries[subset] = self.entries.get(subset, 0.0) + mass

    def mass(self, subset: LabelSubset) -> float:
        return self.entries.get(subset, 0.0)

    def total_mass(self) -> float:
        return math.fsum(self.entries.values())

    def support_sizes(self) -> set[int]:
        return {len(s) for s in self.entries}

    def validate(self) -> None:
        if any(m < -_MASS_TOL for m in self.entries.values()):
            raise ValueError("pmf has a negative mass")
        if abs(self.total_mass() - 1.0) > _MASS_TOL:
            raise ValueError(f"pmf mass {self.total_mass()!r} is not 1 within {_MASS_TOL}")

    def inclusion_mass(self, class_id: int) -> float:
        """Total mass of label sets containing the class."""
        return math.fsum(m for s, m in self.entries.items() if class_id in s)

    def to_json_dict(self) -> dict:
        return {
            "procedure": self.procedure,
            "K": self.space.K,
            "I": self.items,
            "entries": [
                {"label": list(s.classes), "p": m}
                for s, m in sorted(self.entries.items(), key=lambda kv: kv[0].classes)
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "LabelPmf":
        pmf = cls(
            space=ClassSpace(int(data["K"])),
            procedure=str(data["procedure"]),
            items=None if data.get("I") is None else int(data["I"]),
        )
        for entry in data["entries"]:
            pmf.add(LabelSubset(entry["label"]), float(entry["p"]))
        return pmf


def _validate_items(K: int, I: int) -> None:
    if not 1 <= I <= K - 1:
        raise ValueError(f"question item count {I} outside 1..{K - 1}")


def whichone_pmf(posterior, I: int, space: ClassSpace) -> LabelPmf:
    """Label pmf induced by which-one questioning with I items."""
    K = space.K
    _validate_items(K, I)
    p = check_posterior(posterior, K)
    pmf = LabelPmf(space, QuestionType.WHICH_ONE.value, I)
    singleton_coeff = I / K
    for y in range(1, K + 1):
        pmf.add(LabelSubset([y]), singleton_coeff * p[y - 1])
    complement_coeff = 1.0 / binomial(K, I)
    for s in enumerate_subsets(space, K - I):
        pmf.add(s, complement_coeff * math.fsum(p[y - 1] for y in s))
    return pmf


def isin_pmf(posterior, I: int, space: ClassSpace) -> LabelPmf:
    """Label pmf induced by is-in questioning with I items.

    Symmetric in I <-> K-I: asking about Q or about its complement assigns
    the same label sets with the same probabilities.
    """
    K = space.K
    _validate_items(K, I)
    p = check_posterior(posterior, K)
    pmf = LabelPmf(space, QuestionType.IS_IN.value, I)
    coeff = 1.0 / binomial(K, I)
    sizes = [I] if I == K - I else sorted((I, K - I))
    for size in sizes:
        both_branches = size == I == K - I
        for s in enumerate_subsets(space, size):
            mass = coeff * math.fsum(p[y - 1] for y in s)
            pmf.add(s, 2.0 * mass if both_branches else mass)
    return pmf


def conditional_pmf(
    qtype: QuestionType, z: int, I: int, space: ClassSpace
) -> LabelPmf:
    """Label pmf conditioned on the annotator inferring class z.

    which-one: {z} gets I/K; the complement of each question set avoiding z
    gets 1/C(K,I).  is-in: each question set containing z gets 1/C(K,I);
    complements of question sets avoiding z get the same.
    """
    K = space.K
    _validate_items(K, I)
    space.validate_class(z)
    qtype = QuestionType.parse(qtype)
    pmf = LabelPmf(space, qtype.value, I)
    inv_c = 1.0 / binomial(K, I)
    if qtype is QuestionType.WHICH_ONE:
        pmf.add(LabelSubset([z]), I / K)
        for s in enumerate_subsets(space, K - I):
            if z in s:  # label = Y\q with z not in q
                pmf.add(s, inv_c)
    else:
        for s in enumerate_subsets(space, I):
            if z in s:
                pmf.add(s, inv_c)
        for s in enumerate_subsets(space, K - I):
            if z in s:
                pmf.add(s, inv_c)
    return pmf


def oracle_pmf(qtype: QuestionType, posterior, I: int, space: ClassSpace) -> LabelPmf:
    """Brute-force pmf: enumerate every (z, Q) pair, weight by p(z|x)/C(K,I),
    and push each pair through the actual answering and labeling rules.

    Test oracle for the closed forms; exhaustive, so K is capped.
    """
    K = space.K
    _validate_items(K, I)
    qtype = QuestionType.parse(qtype)
    p = check_posterior(posterior, K)
    weight_q = 1.0 / binomial(K, I)
    pmf = LabelPmf(space, qtype.value, I)
    for q in enumerate_subsets(space, I):
        for z in range(1, K + 1):
            a = answer_question(z, qtype, q, space)
            label = assign_label(qtype, q, a, space)
            pmf.add(label, p[z - 1] * weight_q)
    return pmf


@dataclass(frozen=True)
class ReceiverConfidence:
    """Belief over single classes that a label recipient can reconstruct:
    a beta-mixture of the annotator's posterior with uniform noise."""

    beta: float
    mixture: np.ndarray


def _beta_mixture(beta: float, posterior: np.ndarray, K: int) -> np.ndarray:
    return beta * posterior + (1.0 - beta) / K


def receiver_confidence(
    qtype: QuestionType, posterior, I: int, space: ClassSpace
) -> ReceiverConfidence:
    """Recipient belief under uniform spreading over the received label set."""
    K = space.K
    _validate_items(K, I)
    qtype = QuestionType.parse(qtype)
    p = check_posterior(posterior, K)
    beta = I / (K - 1) if qtype is QuestionType.WHICH_ONE else 1.0 / (K - 1)
    return ReceiverConfidence(beta=beta, mixture=_beta_mixture(beta, p, K))


def receiver_marginal_from_pmf(pmf: LabelPmf) -> np.ndarray:
    """Direct computation of the recipient belief from a label pmf:
    Pr{alpha} = sum_s P(s) 1(alpha in s) / |s|.  Cross-checks the mixture."""
    K = pmf.space.K
    out = np.zeros(K)
    for s, m in pmf.entries.items():
        share = m / len(s)
        for y in s:
            out[y - 1] += share
    return out


def candidate_pmf(posterior, N: int, space: ClassSpace) -> LabelPmf:
    """Size-N candidate-label pmf: each size-N set s gets
    (1/C(K-1,N-1)) * sum_{y in s} p(y|x).  N = K-1 is complementary labeling."""
    K = space.K
    if not 1 <= N <= K - 1:
        raise ValueError(f"candidate size {N} outside 1..{K - 1}")
    p = check_posterior(posterior, K)
    coeff = 1.0 / binomial(K - 1, N - 1)
    pmf = LabelPmf(space, "candidate", N)
    for s in enumerate_subsets(space, N):
        pmf.add(s, coeff * math.fsum(p[y - 1] for y in s))
    return pmf


def candidate_beta(K: int, N: int) -> float:
    if not 1 <= N <= K - 1:
        raise ValueError(f"candidate size {N} outside 1..{K - 1}")
    return (K - N) / (N * (K - 1))


def receiver_confidence_candidate(posterior, N: int, space: ClassSpace) -> ReceiverConfidence:
    K = space.K
    p = check_posterior(posterior, K)
    beta = candidate_beta(K, N)
    return ReceiverConfidence(beta=beta, mixture=_beta_mixture(beta, p, K))


def invert_to_posterior(
    qtype: QuestionType, pmf: LabelPmf, I: int, tol: float = 1e-9
) -> np.ndarray:
    """Recover the class posterior from a question-procedure label pmf.

    With m_y the total pmf mass of label sets containing y:

      which-one: p(y|x) = K(K-1)/(I(2K-I-1)) m_y - (K-I)(K-I-1)/(I(2K-I-1))
      is-in:     p(y|x) = K(K-1)/(2I(K-I)) m_y + 1 - K(K-1)/(2I(K-I))

    Entries within ``tol`` of [0, 1] are clamped; anything farther off the
    simplex raises InconsistentPmfError.  The default tol suits exact pmfs;
    pass a looser one for empirical frequencies.
    """
    K = pmf.space.K
    _validate_items(K, I)
    qtype = QuestionType.parse(qtype)
    if pmf.procedure != qtype.value:
        raise ValueError(f"pmf procedure {pmf.procedure!r} does not match {qtype.value!r}")
    inclusion = np.array([pmf.inclusion_mass(y) for y in range(1, K + 1)])
    if qtype is QuestionType.WHICH_ONE:
        scale = K * (K - 1) / (I * (2 * K - I - 1))
        offset = -(K - I) * (K - I - 1) / (I * (2 * K - I - 1))
    else:
        scale = K * (K - 1) / (2 * I * (K - I))
        offset = 1.0 - scale
    p = scale * inclusion + offset
    if (p < -tol).any() or (p > 1.0 + tol).any():
        raise InconsistentPmfError(
            f"inverted posterior {p} leaves [0,1] by more than {tol}"
        )
    return np.clip(p, 0.0, 1.0)
