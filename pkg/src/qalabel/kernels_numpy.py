"""Vectorized numpy kernels for the hot inner loops.

These are the fallback twins of the numba kernels in ``kernels_numba``;
both consume the same counter-RNG streams (see ``rng``) and produce
identical integer outputs, so simulations do not depend on which backend
is active.
"""

from __future__ import annotations

import numpy as np

from .rng import instance_keys, units_at


def draw_question_sets(seed: int, start: int, n: int, K: int, I: int) -> np.ndarray:
    """Uniform size-I subsets of {1..K} for instances start..start+n-1.

    Partial Fisher-Yates over the class list, one swap per draw; returns a
    sorted (n, I) int32 array of 1-based class ids.
    """
    keys = instance_keys(seed, start, n)
    arr = np.tile(np.arange(1, K + 1, dtype=np.int32), (n, 1))
    rows = np.arange(n)
    for j in range(I):
        u = units_at(keys, j)
        r = j + (u * (K - j)).astype(np.int64)
        picked = arr[rows, r]
        arr[rows, r] = arr[:, j]
        arr[:, j] = picked
    return np.sort(arr[:, :I], axis=1)


def draw_annotator_classes(seed: int, start: int, n: int, K: int, cdf: np.ndarray) -> np.ndarray:
    """Classes inferred by a stochastic annotator, one per instance.

    Inverse-CDF draws at counter slot K-1 of each instance stream (the slot
    after every possible question-set draw).  ``cdf`` is the cumulative
    posterior; returns 1-based int32 ids.
    """
    keys = instance_keys(seed, start, n)
    u = units_at(keys, K - 1)
    z = np.searchsorted(cdf, u, side="right")
    return (np.minimum(z, K - 1) + 1).astype(np.int32)


def qa_loss_values(base_losses: np.ndarray, member: np.ndarray, coeff: float) -> np.ndarray:
    """Per-event rewritten loss: sum of base losses inside the assigned label
    minus ``coeff`` times the sum outside it.

    ``base_losses`` is (n, K) with entry [i, k] the base loss of event i
    against class k+1; ``member`` is the (n, K) 0/1 label membership matrix.
    """
    w = np.where(member != 0, 1.0, -coeff)
    return (w * base_losses).sum(axis=1)


def qa_score_grad(scores: np.ndarray, member: np.ndarray, coeff: float) -> np.ndarray:
    """Gradient of the rewritten MAE loss w.r.t. the softmax scores.

    d/df_k sum_y w_y |f - onehot(y)|_1 = w_k sign(f_k - 1) + (W - w_k) sign(f_k)
    with w_y = 1 inside the label and -coeff outside, W = sum_y w_y.
    sign(0) = 0, the MAE subgradient convention.
    """
    w = np.where(member != 0, 1.0, -coeff)
    wsum = w.sum(axis=1, keepdims=True)
    return w * np.sign(scores - 1.0) + (wsum - w) * np.sign(scores)
