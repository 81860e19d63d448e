import os
import subprocess
import sys

import numpy as np
import pytest

from qalabel import backend
from qalabel.combinatorics import ClassSpace
from qalabel.labeling import AnnotatorModel, QuestionSpec, QuestionType, simulate_arrays
from qalabel.losses import mae_matrix, membership_matrix

HAS_NUMBA = backend.numba_available()
needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba unavailable")


def test_numpy_backend_always_available():
    kern = backend.get_kernels("numpy")
    q = kern.draw_question_sets(np.uint64(5), 0, 10, 6, 2)
    assert q.shape == (10, 2)
    assert (np.diff(q, axis=1) > 0).all()


@needs_numba
def test_draw_kernels_identical_across_backends():
    for K, I in ((5, 2), (10, 9), (12, 5)):
        for seed in (0, 7, 2**63 + 11):  # includes a seed beyond int64
            a = backend.get_kernels("numpy").draw_question_sets(np.uint64(seed), 3, 500, K, I)
            b = backend.get_kernels("numba").draw_question_sets(np.uint64(seed), 3, 500, K, I)
            np.testing.assert_array_equal(a, b)
        cdf = np.cumsum(np.arange(1, K + 1) / (K * (K + 1) / 2))
        za = backend.get_kernels("numpy").draw_annotator_classes(np.uint64(9), 0, 500, K, cdf)
        zb = backend.get_kernels("numba").draw_annotator_classes(np.uint64(9), 0, 500, K, cdf)
        np.testing.assert_array_equal(za, zb)


@needs_numba
def test_simulation_identical_across_backends():
    space = ClassSpace(8)
    spec = QuestionSpec(QuestionType.IS_IN, 3, space)
    ann = AnnotatorModel.stochastic(space, np.ones(8) / 8)
    a = simulate_arrays(321, spec, ann, 2000, kernel_backend="numpy")
    b = simulate_arrays(321, spec, ann, 2000, kernel_backend="numba")
    for key in a:
        np.testing.assert_array_equal(a[key], b[key])


@needs_numba
def test_loss_kernels_agree_across_backends():
    rng = np.random.default_rng(3)
    n, K = 400, 7
    raw = rng.uniform(size=(n, K))
    scores = raw / raw.sum(axis=1, keepdims=True)
    masks = (rng.integers(1, 2**K, size=n)).astype(np.uint64)
    member = membership_matrix(masks, K)
    base = mae_matrix(scores)
    for coeff in (0.0, 0.5, 1.25):
        va = backend.get_kernels("numpy").qa_loss_values(base, member, coeff)
        vb = backend.get_kernels("numba").qa_loss_values(base, member, coeff)
        np.testing.assert_allclose(va, vb, rtol=1e-13, atol=1e-15)
        ga = backend.get_kernels("numpy").qa_score_grad(scores, member, coeff)
        gb = backend.get_kernels("numba").qa_score_grad(scores, member, coeff)
        np.testing.assert_allclose(ga, gb, rtol=1e-13, atol=1e-15)


def test_env_flag_selects_backend():
    code = "from qalabel import backend; print(backend.active_backend())"
    env = dict(os.environ, QALABEL_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.stdout.strip() == "numpy"
    env["QALABEL_BACKEND"] = "bogus"
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True
    )
    assert out.returncode != 0


def test_unknown_backend_argument():
    with pytest.raises(ValueError):
        backend.get_kernels("fortran")
