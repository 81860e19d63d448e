"""Self-contained numerical verification of the label models.

Each check exhausts a (K, I, question-type) grid with batches of random
posteriors and reports the worst deviation between two independent routes
to the same quantity:

  closed-form pmfs        vs  brute-force enumeration over (z, Q) pairs
  ordinary risk           vs  expected rewritten loss (unbiasedness)
  posterior               vs  inversion of its own label pmf (round-trip)
  beta-mixture confidence vs  direct marginal of the pmf
  conditional pmfs        vs  their posterior-weighted mixture

``run_verification`` is what the CLI's verify command executes; the exit
status is 0 only if every check stays within tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import losses
from .combinatorics import ClassSpace
from .generative import (
    candidate_beta,
    conditional_pmf,
    invert_to_posterior,
    isin_pmf,
    oracle_pmf,
    receiver_confidence,
    receiver_marginal_from_pmf,
    whichone_pmf,
)
from .labeling import QuestionType
from .rng import uniform_array

__all__ = ["CheckResult", "random_posteriors", "run_verification"]


@dataclass
class CheckResult:
    name: str
    cases: int
    max_deviation: float
    tolerance: float
    worst_case: str

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name}: max deviation {self.max_deviation:.3e} "
            f"(tolerance {self.tolerance:.0e}, {self.cases} cases, worst at {self.worst_case})"
        )


def random_posteriors(K: int, count: int, seed: int) -> np.ndarray:
    """Uniform draws from the K-simplex (normalized unit exponentials)."""
    u = uniform_array(seed, 41 + K, (count, K))
    e = -np.log(np.maximum(u, 1e-300))
    return e / e.sum(axis=1, keepdims=True)


def _grid(k_values: Iterable[int]):
    for K in k_values:
        for I in range(1, K):
            for qtype in QuestionType:
                yield K, I, qtype


def _pmf_for(qtype: QuestionType, p: np.ndarray, I: int, space: ClassSpace):
    if qtype is QuestionType.WHICH_ONE:
        return whichone_pmf(p, I, space)
    return isin_pmf(p, I, space)


def check_closed_form_vs_oracle(
    k_values: Sequence[int], n_posteriors: int, seed: int
) -> CheckResult:
    worst, worst_case, cases = 0.0, "-", 0
    for K, I, qtype in _grid(k_values):
        space = ClassSpace(K)
        for pi, p in enumerate(random_posteriors(K, n_posteriors, seed)):
            closed = _pmf_for(qtype, p, I, space)
            brute = oracle_pmf(qtype, p, I, space)
            keys = set(closed.entries) | set(brute.entries)
            dev = max(abs(closed.mass(s) - brute.mass(s)) for s in keys)
            dev = max(dev, abs(closed.total_mass() - 1.0))
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, posterior #{pi}"
    return CheckResult("closed-form pmf vs enumeration oracle", cases, worst, 1e-12, worst_case)


def check_unbiasedness(k_values: Sequence[int], n_draws: int, seed: int) -> CheckResult:
    worst, worst_case, cases = 0.0, "-", 0
    for K, I, qtype in _grid(k_values):
        space = ClassSpace(K)
        posteriors = random_posteriors(K, n_draws, seed)
        loss_vectors = 2.0 * uniform_array(seed, 61 + K, (n_draws, K))
        for pi in range(n_draws):
            lhs, rhs = losses.exact_risk_identity_check(
                qtype, posteriors[pi], loss_vectors[pi], I, space
            )
            dev = abs(lhs - rhs)
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, draw #{pi}"
    return CheckResult("risk-rewriting unbiasedness", cases, worst, 1e-10, worst_case)


def check_inversion_roundtrip(
    k_values: Sequence[int], n_posteriors: int, seed: int
) -> CheckResult:
    worst, worst_case, cases = 0.0, "-", 0
    for K, I, qtype in _grid(k_values):
        space = ClassSpace(K)
        for pi, p in enumerate(random_posteriors(K, n_posteriors, seed)):
            pmf = _pmf_for(qtype, p, I, space)
            recovered = invert_to_posterior(qtype, pmf, I)
            dev = float(np.abs(recovered - p).max())
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, posterior #{pi}"
    return CheckResult("posterior inversion round-trip", cases, worst, 1e-12, worst_case)


def check_receiver_mixture(
    k_values: Sequence[int], n_posteriors: int, seed: int
) -> CheckResult:
    worst, worst_case, cases = 0.0, "-", 0
    for K, I, qtype in _grid(k_values):
        space = ClassSpace(K)
        expected_beta = I / (K - 1) if qtype is QuestionType.WHICH_ONE else 1.0 / (K - 1)
        for pi, p in enumerate(random_posteriors(K, n_posteriors, seed)):
            conf = receiver_confidence(qtype, p, I, space)
            direct = receiver_marginal_from_pmf(_pmf_for(qtype, p, I, space))
            dev = float(np.abs(conf.mixture - direct).max())
            dev = max(dev, abs(conf.beta - expected_beta))
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, posterior #{pi}"
    # candidate-label equivalences, where the matching size is integral
    for K in k_values:
        for I in range(1, K):
            if K % (I + 1) == 0:
                dev = abs(I / (K - 1) - candidate_beta(K, K // (I + 1)))
                cases += 1
                if dev > worst:
                    worst, worst_case = dev, f"K={K}, I={I}, which_one vs candidate"
        if K % 2 == 0:
            dev = abs(1.0 / (K - 1) - candidate_beta(K, K // 2))
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, is_in vs candidate"
    return CheckResult("receiver-confidence mixture", cases, worst, 1e-12, worst_case)


def check_conditional_marginalization(
    k_values: Sequence[int], n_posteriors: int, seed: int
) -> CheckResult:
    worst, worst_case, cases = 0.0, "-", 0
    for K, I, qtype in _grid(k_values):
        space = ClassSpace(K)
        conditionals = [conditional_pmf(qtype, z, I, space) for z in range(1, K + 1)]
        for cond in conditionals:
            dev = abs(cond.total_mass() - 1.0)
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, conditional mass"
        for pi, p in enumerate(random_posteriors(K, n_posteriors, seed)):
            direct = _pmf_for(qtype, p, I, space)
            keys = set(direct.entries)
            for cond in conditionals:
                keys |= set(cond.entries)
            dev = max(
                abs(
                    math.fsum(p[z - 1] * conditionals[z - 1].mass(s) for z in range(1, K + 1))
                    - direct.mass(s)
                )
                for s in keys
            )
            cases += 1
            if dev > worst:
                worst, worst_case = dev, f"K={K}, I={I}, {qtype.value}, posterior #{pi}"
    return CheckResult("conditional pmf marginalization", cases, worst, 1e-12, worst_case)


def run_verification(
    k_values: Sequence[int] = (2, 3, 4, 5, 6),
    n_posteriors: int = 100,
    seed: int = 20240901,
) -> list[CheckResult]:
    k_values = sorted(set(int(k) for k in k_values))
    if any(k < 2 for k in k_values):
        raise ValueError("verification needs K >= 2")
    return [
        check_closed_form_vs_oracle(k_values, n_posteriors, seed),
        check_unbiasedness(k_values, min(n_posteriors, 50), seed),
        check_inversion_roundtrip(k_values, n_posteriors, seed),
        check_receiver_mixture(k_values, n_posteriors, seed),
        check_conditional_marginalization(k_values, min(n_posteriors, 25), seed),
    ]
