import json
import math

import numpy as np
import pytest

from qalabel.combinatorics import ClassSpace, LabelSubset
from qalabel.errors import CapacityError, InconsistentPmfError
from qalabel.generative import (
    LabelPmf,
    candidate_beta,
    candidate_pmf,
    check_posterior,
    conditional_pmf,
    invert_to_posterior,
    isin_pmf,
    oracle_pmf,
    receiver_confidence,
    receiver_confidence_candidate,
    receiver_marginal_from_pmf,
    whichone_pmf,
)
from qalabel.labeling import QuestionType
from qalabel.verification import random_posteriors

S3 = ClassSpace(3)
P532 = np.array([0.5, 0.3, 0.2])


def grid(k_values=(2, 3, 4, 5, 6)):
    for K in k_values:
        for I in range(1, K):
            yield K, I


def test_whichone_uniform_k3():
    pmf = whichone_pmf(np.ones(3) / 3, 1, S3)
    for y in (1, 2, 3):
        assert pmf.mass(LabelSubset([y])) == pytest.approx(1 / 9, abs=1e-15)
    for pair in ((1, 2), (1, 3), (2, 3)):
        assert pmf.mass(LabelSubset(pair)) == pytest.approx(2 / 9, abs=1e-15)


def test_whichone_nonuniform_example():
    pmf = whichone_pmf(P532, 1, S3)
    assert pmf.mass(LabelSubset([1])) == pytest.approx(1 / 6, abs=1e-15)
    assert pmf.mass(LabelSubset([2, 3])) == pytest.approx(1 / 6, abs=1e-15)


def test_whichone_full_items_is_ordinary_labeling():
    # I = K-1: both branches are singletons and the masses merge to p(y|x)
    for K in (2, 3, 5, 10):
        space = ClassSpace(K)
        p = random_posteriors(K, 1, 7)[0]
        pmf = whichone_pmf(p, K - 1, space)
        assert set(pmf.support_sizes()) == {1}
        for y in range(1, K + 1):
            assert pmf.mass(LabelSubset([y])) == pytest.approx(p[y - 1], abs=1e-12)


def test_isin_uniform_k4_merged_channels():
    # 2I = K: the two answer branches land on the same size-2 sets
    pmf = isin_pmf(np.ones(4) / 4, 2, ClassSpace(4))
    assert len(pmf.entries) == 6
    for s, m in pmf.entries.items():
        assert m == pytest.approx(1 / 6, abs=1e-15)


def test_isin_nonuniform_example():
    pmf = isin_pmf(P532, 1, S3)
    assert pmf.mass(LabelSubset([1])) == pytest.approx(1 / 6, abs=1e-15)
    assert pmf.mass(LabelSubset([1, 2])) == pytest.approx(0.8 / 3, abs=1e-15)


def test_isin_complement_symmetry_exact():
    for K, I in grid((4, 5, 6, 7)):
        space = ClassSpace(K)
        p = random_posteriors(K, 1, K * 100 + I)[0]
        a = isin_pmf(p, I, space)
        b = isin_pmf(p, K - I, space)
        assert a.entries == b.entries  # bitwise identical construction


def test_pmf_mass_and_support():
    for K, I in grid():
        space = ClassSpace(K)
        p = random_posteriors(K, 1, K * 10 + I)[0]
        for pmf, sizes in (
            (whichone_pmf(p, I, space), {1, K - I}),
            (isin_pmf(p, I, space), {I, K - I}),
        ):
            pmf.validate()
            assert pmf.support_sizes() <= sizes


def test_closed_forms_match_oracle():
    for K, I in grid((2, 3, 4, 5)):
        space = ClassSpace(K)
        for pi, p in enumerate(random_posteriors(K, 10, K * 1000 + I)):
            for qtype, closed in (
                (QuestionType.WHICH_ONE, whichone_pmf(p, I, space)),
                (QuestionType.IS_IN, isin_pmf(p, I, space)),
            ):
                brute = oracle_pmf(qtype, p, I, space)
                keys = set(closed.entries) | set(brute.entries)
                dev = max(abs(closed.mass(s) - brute.mass(s)) for s in keys)
                assert dev < 1e-12, (K, I, qtype, pi, dev)


def test_oracle_uniform_posterior_is_class_symmetric():
    pmf = oracle_pmf(QuestionType.WHICH_ONE, np.ones(5) / 5, 2, ClassSpace(5))
    by_size = {}
    for s, m in pmf.entries.items():
        by_size.setdefault(len(s), set()).add(round(m, 14))
    for size, masses in by_size.items():
        assert len(masses) == 1  # same mass for every subset of a size


def test_oracle_capacity_cap():
    with pytest.raises(CapacityError):
        oracle_pmf(QuestionType.WHICH_ONE, np.ones(25) / 25, 1, ClassSpace(25))


def test_conditional_pmf_known_values():
    pmf = conditional_pmf(QuestionType.WHICH_ONE, 1, 1, S3)
    assert pmf.mass(LabelSubset([1])) == pytest.approx(1 / 3, abs=1e-15)
    assert pmf.mass(LabelSubset([1, 2])) == pytest.approx(1 / 3, abs=1e-15)
    assert pmf.mass(LabelSubset([1, 3])) == pytest.approx(1 / 3, abs=1e-15)
    assert pmf.mass(LabelSubset([2, 3])) == 0.0


def test_conditional_pmf_normalizes():
    for K, I in grid((3, 4, 6)):
        space = ClassSpace(K)
        for qtype in QuestionType:
            for z in range(1, K + 1):
                pmf = conditional_pmf(qtype, z, I, space)
                assert pmf.total_mass() == pytest.approx(1.0, abs=1e-12)
                assert all(z in s for s in pmf.entries)


def test_conditional_marginalization_reproduces_pmf():
    for K, I in grid((3, 4, 5)):
        space = ClassSpace(K)
        p = random_posteriors(K, 1, K * 7 + I)[0]
        for qtype, direct in (
            (QuestionType.WHICH_ONE, whichone_pmf(p, I, space)),
            (QuestionType.IS_IN, isin_pmf(p, I, space)),
        ):
            conds = [conditional_pmf(qtype, z, I, space) for z in range(1, K + 1)]
            keys = set(direct.entries)
            for c in conds:
                keys |= set(c.entries)
            for s in keys:
                mixed = math.fsum(p[z - 1] * conds[z - 1].mass(s) for z in range(1, K + 1))
                assert mixed == pytest.approx(direct.mass(s), abs=1e-12)


def test_receiver_confidence_betas():
    space = ClassSpace(10)
    p = random_posteriors(10, 1, 5)[0]
    assert receiver_confidence(QuestionType.WHICH_ONE, p, 3, space).beta == pytest.approx(1 / 3)
    for I in range(1, 10):
        assert receiver_confidence(QuestionType.IS_IN, p, I, space).beta == pytest.approx(1 / 9)
    conf = receiver_confidence(QuestionType.WHICH_ONE, p, 9, space)
    assert conf.beta == pytest.approx(1.0)
    np.testing.assert_allclose(conf.mixture, p, atol=1e-15)


def test_receiver_mixture_matches_direct_marginal():
    for K, I in grid((3, 4, 5, 6)):
        space = ClassSpace(K)
        for p in random_posteriors(K, 5, K * 31 + I):
            for qtype, pmf in (
                (QuestionType.WHICH_ONE, whichone_pmf(p, I, space)),
                (QuestionType.IS_IN, isin_pmf(p, I, space)),
            ):
                conf = receiver_confidence(qtype, p, I, space)
                direct = receiver_marginal_from_pmf(pmf)
                np.testing.assert_allclose(conf.mixture, direct, atol=1e-12)


def test_candidate_pmf_boundary_cases():
    space = ClassSpace(5)
    p = random_posteriors(5, 1, 77)[0]
    # N=1 reduces to ordinary labeling
    pmf1 = candidate_pmf(p, 1, space)
    for y in range(1, 6):
        assert pmf1.mass(LabelSubset([y])) == pytest.approx(p[y - 1], abs=1e-15)
    # N=K-1 is the complementary-label model: mass (1 - p_j)/(K-1) on Y\{j}
    pmfc = candidate_pmf(p, 4, space)
    for j in range(1, 6):
        s = LabelSubset([c for c in range(1, 6) if c != j])
        assert pmfc.mass(s) == pytest.approx((1 - p[j - 1]) / 4, abs=1e-14)
    pmfc.validate()


def test_candidate_beta_equivalences():
    # which-one at I matches candidate labeling at N = K/(I+1)
    assert candidate_beta(10, 2) == pytest.approx(4 / 9)
    assert receiver_confidence(
        QuestionType.WHICH_ONE, np.ones(10) / 10, 4, ClassSpace(10)
    ).beta == pytest.approx(4 / 9)
    for K in range(2, 13):
        for I in range(1, K):
            if K % (I + 1) == 0:
                assert candidate_beta(K, K // (I + 1)) == pytest.approx(I / (K - 1), abs=1e-15)
        if K % 2 == 0:
            assert candidate_beta(K, K // 2) == pytest.approx(1 / (K - 1), abs=1e-15)


def test_receiver_confidence_candidate_mixture():
    space = ClassSpace(6)
    p = random_posteriors(6, 1, 3)[0]
    conf = receiver_confidence_candidate(p, 3, space)
    direct = receiver_marginal_from_pmf(candidate_pmf(p, 3, space))
    np.testing.assert_allclose(conf.mixture, direct, atol=1e-12)


def test_inversion_round_trip():
    for K, I in grid((3, 4, 5, 6)):
        space = ClassSpace(K)
        for p in random_posteriors(K, 5, K * 13 + I):
            rec_w = invert_to_posterior(QuestionType.WHICH_ONE, whichone_pmf(p, I, space), I)
            rec_i = invert_to_posterior(QuestionType.IS_IN, isin_pmf(p, I, space), I)
            np.testing.assert_allclose(rec_w, p, atol=1e-12)
            np.testing.assert_allclose(rec_i, p, atol=1e-12)


def test_inversion_uniform_round_trip():
    space = ClassSpace(7)
    u = np.ones(7) / 7
    rec = invert_to_posterior(QuestionType.WHICH_ONE, whichone_pmf(u, 2, space), 2)
    np.testing.assert_allclose(rec, u, atol=1e-14)


def test_inversion_rejects_inconsistent_pmf():
    space = ClassSpace(4)
    pmf = whichone_pmf(np.array([0.94, 0.03, 0.02, 0.01]), 1, space)
    # shift mass between keys: still a pmf, but off the model manifold
    a, b = LabelSubset([1]), LabelSubset([2])
    pmf.entries[a] += 0.22
    pmf.entries[b] -= 0.22
    with pytest.raises(InconsistentPmfError):
        invert_to_posterior(QuestionType.WHICH_ONE, pmf, 1)


def test_inversion_checks_procedure_match():
    space = ClassSpace(4)
    pmf = whichone_pmf(np.ones(4) / 4, 1, space)
    with pytest.raises(ValueError):
        invert_to_posterior(QuestionType.IS_IN, pmf, 1)


def test_pmf_json_round_trip():
    pmf = isin_pmf(P532, 1, S3)
    data = pmf.to_json_dict()
    assert data["procedure"] == "is_in" and data["K"] == 3 and data["I"] == 1
    text = json.dumps(data)
    back = LabelPmf.from_json_dict(json.loads(text))
    assert back.entries == pmf.entries
    assert back.space.K == 3


def test_check_posterior_validation():
    with pytest.raises(ValueError):
        check_posterior([0.5, 0.6], 2)
    with pytest.raises(ValueError):
        check_posterior([0.5, -0.1, 0.6], 3)
    with pytest.raises(ValueError):
        check_posterior([0.5, 0.5], 3)
