import math

import pytest

from qalabel.bounds import (
    BoundInputs,
    KernelBoundInputs,
    error_bound_isin,
    error_bound_whichone,
    kernel_rademacher_bound,
    rademacher_coeff,
)
from qalabel.labeling import QuestionType


def inputs(K=10, I=1, rho=1.0, c_l=2.0, delta=0.05, n=10000, rad_sum=0.1):
    return BoundInputs(K=K, I=I, rho=rho, c_l=c_l, delta=delta, n=n, rad_sum=rad_sum)


def test_rademacher_coeff_values():
    # K=10, I=9, rho=1: sqrt(2) * 100 * 9 / (9 * (20-9-1)) = 10 sqrt(2)
    got = rademacher_coeff(QuestionType.WHICH_ONE, 10, 9, 1.0)
    assert got == pytest.approx(10.0 * math.sqrt(2.0), abs=1e-12)
    got = rademacher_coeff(QuestionType.IS_IN, 10, 5, 1.0)
    assert got == pytest.approx(math.sqrt(2.0) * 900 / 50, abs=1e-12)
    with pytest.raises(ValueError):
        rademacher_coeff(QuestionType.WHICH_ONE, 10, 10, 1.0)


def test_rademacher_coeff_monotone_and_symmetric():
    wo = [rademacher_coeff(QuestionType.WHICH_ONE, 10, I, 1.0) for I in range(1, 10)]
    assert all(a > b for a, b in zip(wo, wo[1:]))
    for I in range(1, 10):
        assert rademacher_coeff(QuestionType.IS_IN, 10, I, 1.0) == pytest.approx(
            rademacher_coeff(QuestionType.IS_IN, 10, 10 - I, 1.0), abs=1e-12
        )


def test_whichone_bound_independent_transcription():
    # second, differently grouped transcription of both terms
    inp = inputs(K=10, I=9)
    K, I = 10, 9
    first = (4 * math.sqrt(2) * inp.rho * K * K * (K - 1)) * inp.rad_sum / (I * (2 * K - I - 1))
    second = (
        inp.c_l
        * math.sqrt(2 * math.log(2 / inp.delta) / inp.n)
        * ((K - I) / (I * (2 * K - I - 1)))
        * (K * K + (I - 2) * K - I * I + 1)
    )
    assert error_bound_whichone(inp) == pytest.approx(first + second, rel=1e-14)


def test_whichone_bound_strictly_decreasing_in_items():
    vals = [error_bound_whichone(inputs(I=I)) for I in range(1, 10)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_whichone_bound_extremes():
    # no complexity and huge n: bound collapses toward zero
    tiny = error_bound_whichone(inputs(I=5, rad_sum=0.0, n=10**12))
    assert 0 < tiny < 1e-4
    for K in range(3, 21):
        hi = error_bound_whichone(inputs(K=K, I=1))
        lo = error_bound_whichone(inputs(K=K, I=K - 1))
        assert lo < hi


def test_isin_bound_independent_transcription():
    inp = inputs(K=10, I=3)
    K, I = 10, 3
    first = math.sqrt(2) * inp.rho * (K * K) * (K - 1) * inp.rad_sum / (I * (K - I))
    second = (
        0.5 * K * (K - 1) / min(I, K - I)
        * inp.c_l
        * math.sqrt(2 * math.log(2 / inp.delta) / inp.n)
    )
    assert error_bound_isin(inp) == pytest.approx(first + second, rel=1e-14)


def test_isin_bound_minimized_at_half_and_symmetric():
    vals = {I: error_bound_isin(inputs(I=I)) for I in range(1, 10)}
    assert min(vals, key=vals.get) == 5
    for I in range(1, 10):
        assert vals[I] == pytest.approx(vals[10 - I], rel=1e-14)


def test_bounds_monotone_in_nuisance_parameters():
    base = inputs(I=4)
    for bound in (error_bound_whichone, error_bound_isin):
        b0 = bound(base)
        assert bound(inputs(I=4, rho=2.0)) > b0
        assert bound(inputs(I=4, c_l=4.0)) > b0
        assert bound(inputs(I=4, rad_sum=0.2)) > b0
        assert bound(inputs(I=4, n=40000)) < b0


def test_kernel_bound():
    assert kernel_rademacher_bound(KernelBoundInputs(r=1.0, lam=1.0, n=100)) == pytest.approx(0.1)
    assert kernel_rademacher_bound(KernelBoundInputs(r=0.0, lam=5.0, n=10)) == 0.0
    quarter = kernel_rademacher_bound(KernelBoundInputs(r=1.0, lam=1.0, n=2500))
    tenth = kernel_rademacher_bound(KernelBoundInputs(r=1.0, lam=1.0, n=10000))
    assert tenth == pytest.approx(quarter / 2, rel=1e-14)


def test_bound_inputs_validation():
    with pytest.raises(ValueError):
        inputs(I=0)
    with pytest.raises(ValueError):
        inputs(delta=1.0)
    with pytest.raises(ValueError):
        BoundInputs(K=5, I=1, rho=0.0, c_l=1.0, delta=0.1, n=10, rad_sum=0.0)
    with pytest.raises(ValueError):
        KernelBoundInputs(r=-1.0, lam=1.0, n=10)
