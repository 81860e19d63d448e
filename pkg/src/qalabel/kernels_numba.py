"""numba twins of the kernels in ``kernels_numpy``.

Same counter-RNG streams, same arithmetic, explicit loops instead of
vectorized ops.  Importing this module requires numba; the backend
selector falls back to the numpy twins when it is unavailable.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_U_GAMMA1 = np.uint64(0x9E3779B97F4A7C15)
_U_GAMMA2 = np.uint64(0xD1B54A32D192ED03)
_U_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U_M2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV_2_53 = 1.0 / (1 << 53)


@njit(cache=True)
def _mix64(x):
    x = (x ^ (x >> _U30)) * _U_M1
    x = (x ^ (x >> _U27)) * _U_M2
    return x ^ (x >> _U31)


@njit(cache=True)
def _instance_key(seed, index):
    return _mix64(seed + np.uint64(index + 1) * _U_GAMMA1)


@njit(cache=True)
def _unit(key, counter):
    raw = _mix64(key + np.uint64(counter + 1) * _U_GAMMA2)
    return np.float64(raw >> _U11) * _INV_2_53


@njit(cache=True)
def draw_question_sets(seed, start, n, K, I):
    useed = np.uint64(seed)
    out = np.empty((n, I), dtype=np.int32)
    arr = np.empty(K, dtype=np.int32)
    for i in range(n):
        key = _instance_key(useed, start + i)
        for k in range(K):
            arr[k] = k + 1
        for j in range(I):
            u = _unit(key, j)
            r = j + np.int64(u * (K - j))
            tmp = arr[r]
            arr[r] = arr[j]
            arr[j] = tmp
        for j in range(1, I):  # insertion sort of the drawn prefix
            v = arr[j]
            k = j - 1
            while k >= 0 and arr[k] > v:
                arr[k + 1] = arr[k]
                k -= 1
            arr[k + 1] = v
        for j in range(I):
            out[i, j] = arr[j]
    return out


@njit(cache=True)
def draw_annotator_classes(seed, start, n, K, cdf):
    useed = np.uint64(seed)
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        key = _instance_key(useed, start + i)
        u = _unit(key, K - 1)
        z = 0
        while z < K - 1 and u >= cdf[z]:
            z += 1
        out[i] = z + 1
    return out


@njit(cache=True)
def qa_loss_values(base_losses, member, coeff):
    n, K = base_losses.shape
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        s = 0.0
        for k in range(K):
            w = 1.0 if member[i, k] != 0 else -coeff
            s += w * base_losses[i, k]
        out[i] = s
    return out


@njit(cache=True)
def qa_score_grad(scores, member, coeff):
    n, K = scores.shape
    out = np.empty((n, K), dtype=np.float64)
    for i in range(n):
        wsum = 0.0
        for k in range(K):
            wsum += 1.0 if member[i, k] != 0 else -coeff
        for k in range(K):
            w = 1.0 if member[i, k] != 0 else -coeff
            out[i, k] = w * np.sign(scores[i, k] - 1.0) + (wsum - w) * np.sign(scores[i, k])
    return out
