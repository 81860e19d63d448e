"""One-hidden-layer softmax classifier trained on set-valued labels.

forward: softmax(w2' relu(w1' x + b1) + b2).  The training loss is the
rewritten MAE loss of ``losses`` evaluated against the assigned label
sets; with qtype=None the loop trains on ordinary singleton labels with
plain MAE (the which-one coefficient vanishes at I=K-1, so those two
paths produce bit-identical trajectories).

Everything is float64 and driven by the counter RNG, so a (seed, config,
data) triple reproduces parameters exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .labeling import QuestionType
from .losses import mae_matrix, membership_matrix, qa_coeff, valid_label_sizes
from .rng import derive_seed, permutation, uniform_array

__all__ = [
    "MlpParams",
    "TrainConfig",
    "AdamState",
    "init_params",
    "forward",
    "loss_and_grad",
    "adam_step",
    "train",
    "evaluate",
    "save_params",
    "load_params",
]

PARAMS_MAGIC = b"QAMLP1"

_INIT_TAGS = {"w1": 11, "w2": 12}
_SHUFFLE_TAG = 21


@dataclass
class MlpParams:
    w1: np.ndarray  # (d, H)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (H, K)
    b2: np.ndarray  # (K,)

    @property
    def dims(self) -> tuple[int, int, int]:
        d, H = self.w1.shape
        K = self.w2.shape[1]
        return d, H, K

    def copy(self) -> "MlpParams":
        return MlpParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


@dataclass
class TrainConfig:
    qtype: QuestionType | None = QuestionType.WHICH_ONE  # None = ordinary labels
    items: int = 1
    hidden: int = 500
    epochs: int = 800
    batch_size: int = 500
    learning_rate: float = 1e-2
    weight_decay: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    repetitions: int = 5

    def __post_init__(self) -> None:
        if self.qtype is not None:
            self.qtype = QuestionType.parse(self.qtype)
        for name in ("hidden", "epochs", "batch_size", "repetitions"):
            if getattr(self, name) < (0 if name == "epochs" else 1):
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ValueError("learning_rate must be positive, weight_decay nonnegative")


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def for_params(cls, params: MlpParams) -> "AdamState":
        zeros = {k: np.zeros_like(a) for k, a in params.as_dict().items()}
        return cls(m=zeros, v={k: np.zeros_like(a) for k, a in params.as_dict().items()})


def init_params(seed: int, d: int, hidden: int, K: int) -> MlpParams:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""

    def glorot(tag: int, fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        u = uniform_array(seed, tag, (fan_in, fan_out))
        return (2.0 * u - 1.0) * limit

    return MlpParams(
        w1=glorot(_INIT_TAGS["w1"], d, hidden),
        b1=np.zeros(hidden),
        w2=glorot(_INIT_TAGS["w2"], hidden, K),
        b2=np.zeros(K),
    )


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Softmax scores for a single feature vector or a batch of rows."""
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.shape[1] != params.w1.shape[0]:
        raise ValueError(
            f"feature dimension {X.shape[1]} does not match model d={params.w1.shape[0]}"
        )
    hidden = np.maximum(X @ params.w1 + params.b1, 0.0)
    scores = _softmax(hidden @ params.w2 + params.b2)
    return scores[0] if single else scores


def _forward_cached(params: MlpParams, X: np.ndarray):
    pre = X @ params.w1 + params.b1
    hidden = np.maximum(pre, 0.0)
    scores = _softmax(hidden @ params.w2 + params.b2)
    return pre, hidden, scores


def loss_and_grad(
    params: MlpParams,
    X: np.ndarray,
    label_masks: np.ndarray,
    qtype: QuestionType | None,
    I: int,
    kernel_backend: str | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean rewritten MAE loss over the batch and its exact gradient.

    ``label_masks`` are uint64 label bitmasks; for qtype=None they must be
    singletons (ordinary labels) and the loss is plain MAE.  Weight decay
    is not included here; it is added in ``adam_step``.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    d, H, K = params.dims
    pre, hidden, scores = _forward_cached(params, X)

    member = membership_matrix(label_masks, K)
    if qtype is None:
        if not (member.sum(axis=1) == 1).all():
            raise ValueError("ordinary training needs singleton labels")
        target = member.astype(np.float64)
        loss = float(np.abs(scores - target).sum(axis=1).mean())
        g_scores = np.sign(scores - target) / n
    else:
        qtype = QuestionType.parse(qtype)
        sizes = member.sum(axis=1)
        allowed = valid_label_sizes(qtype, K, I)
        if not np.isin(sizes, sorted(allowed)).all():
            bad = sizes[~np.isin(sizes, sorted(allowed))][0]
            raise ValueError(
                f"label size {bad} invalid for {qtype.value} with K={K}, I={I}"
            )
        coeff = qa_coeff(qtype, K, I)
        kern = backend.get_kernels(kernel_backend)
        loss = float(kern.qa_loss_values(mae_matrix(scores), member, coeff).mean())
        g_scores = kern.qa_score_grad(scores, member, coeff) / n

    # softmax backward: dlogits_k = f_k (g_k - sum_j g_j f_j)
    dlogits = scores * (g_scores - (g_scores * scores).sum(axis=1, keepdims=True))
    dw2 = hidden.T @ dlogits
    db2 = dlogits.sum(axis=0)
    dhidden = dlogits @ params.w2.T
    dpre = dhidden * (pre > 0.0)
    dw1 = X.T @ dpre
    db1 = dpre.sum(axis=0)
    return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}


def adam_step(
    params: MlpParams,
    grads: dict[str, np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[MlpParams, AdamState]:
    """Standard Adam with bias correction; weight decay enters as an L2 term
    added to the gradient before the moment updates."""
    state.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    bias1 = 1.0 - b1**state.step
    bias2 = 1.0 - b2**state.step
    for name, p in params.as_dict().items():
        g = grads[name] + cfg.weight_decay * p
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / bias1
        v_hat = state.v[name] / bias2
        p -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return params, state


def train(
    features: np.ndarray,
    label_masks: np.ndarray,
    cfg: TrainConfig,
    test_features: np.ndarray | None = None,
    test_labels: np.ndarray | None = None,
    n_classes: int | None = None,
    params: MlpParams | None = None,
    on_epoch_end: Callable[[int, MlpParams], None] | None = None,
    kernel_backend: str | None = None,
) -> tuple[MlpParams, list[dict]]:
    """Mini-batch training loop; returns final params and per-epoch metrics.

    Metrics rows carry epoch, train risk (mean batch loss over the epoch),
    and test MAE/accuracy when a test set is supplied (NaN otherwise).
    ``n_classes`` pins K; when omitted it is inferred from the label masks.
    """
    X = np.asarray(features, dtype=np.float64)
    masks = np.asarray(label_masks, dtype=np.uint64)
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty training set")
    if masks.shape != (n,):
        raise ValueError(f"need one label mask per row, got {masks.shape} for n={n}")
    K = n_classes or int(max(int(m).bit_length() for m in masks))
    if test_labels is not None:
        K = max(K, int(np.max(test_labels)))
    if params is None:
        params = init_params(cfg.seed, X.shape[1], cfg.hidden, K)
    else:
        params = params.copy()
        K = params.dims[2]
    state = AdamState.for_params(params)
    shuffle_seed = derive_seed(cfg.seed, _SHUFFLE_TAG)

    metrics: list[dict] = []
    for epoch in range(cfg.epochs):
        order = permutation(shuffle_seed, epoch, n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, grads = loss_and_grad(
                params, X[idx], masks[idx], cfg.qtype, cfg.items, kernel_backend
            )
            params, state = adam_step(params, grads, state, cfg)
            epoch_loss += loss * len(idx)
        row = {"epoch": epoch, "train_qa_risk": epoch_loss / n}
        if test_features is not None and test_labels is not None:
            test_mae, test_acc = evaluate(params, test_features, test_labels)
            row["test_mae"] = test_mae
            row["test_accuracy"] = test_acc
        else:
            row["test_mae"] = float("nan")
            row["test_accuracy"] = float("nan")
        metrics.append(row)
        if on_epoch_end is not None:
            on_epoch_end(epoch, params)
    return params, metrics


def evaluate(params: MlpParams, features: np.ndarray, labels: np.ndarray) -> tuple[float, float]:
    """(mean MAE against one-hot targets, argmax accuracy) on a labeled set.

    Argmax ties break toward the lowest class id.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty test set")
    if y.shape != (X.shape[0],):
        raise ValueError("need one label per test row")
    scores = forward(params, X)
    K = scores.shape[1]
    if y.min() < 1 or y.max() > K:
        raise ValueError(f"test labels must lie in 1..{K}")
    onehot = np.zeros_like(scores)
    onehot[np.arange(len(y)), y - 1] = 1.0
    test_mae = float(np.abs(scores - onehot).sum(axis=1).mean())
    accuracy = float((scores.argmax(axis=1) + 1 == y).mean())
    return test_mae, accuracy


def save_params(path, params: MlpParams) -> None:
    """Flat binary format: magic, d/H/K as little-endian int32, then
    row-major little-endian float64 for w1, b1, w2, b2."""
    d, H, K = params.dims
    with open(path, "wb") as fh:
        fh.write(PARAMS_MAGIC)
        fh.write(struct.pack("<iii", d, H, K))
        for arr in (params.w1, params.b1, params.w2, params.b2):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_params(path) -> MlpParams:
    with open(path, "rb") as fh:
        magic = fh.read(len(PARAMS_MAGIC))
        if magic != PARAMS_MAGIC:
            raise ValueError(f"bad params file magic {magic!r}")
        d, H, K = struct.unpack("<iii", fh.read(12))
        def read(shape):
            count = int(np.prod(shape))
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise ValueError("truncated params file")
            return np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)

        return MlpParams(w1=read((d, H)), b1=read((H,)), w2=read((H, K)), b2=read((K,)))
