"""Dataset ingestion and the labeling-event store.

IDX image/label files (the MNIST family's container format) are read
big-endian, gzip sniffed by magic bytes; pixels are scaled to [0, 1] and
the 0-based digit labels shifted to the 1-based class ids used everywhere
else.  Labeling events persist as append-only JSONL, one object per line,
validated against the answering rules on read.
"""

from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np
from filelock import FileLock

from .combinatorics import ClassSpace, LabelSubset
from .errors import EventStoreError, IdxFormatError
from .labeling import Answer, AnswerKind, LabelingEvent, QuestionType, assign_label
from .rng import CounterRng, uniform_array

__all__ = [
    "ImageDataset",
    "load_idx",
    "write_idx",
    "subsample_per_class",
    "synthetic_blobs",
    "StoredEvent",
    "append_events",
    "read_events",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801
_GZIP_MAGIC = b"\x1f\x8b"


@dataclass
class ImageDataset:
    """Flattened instances with ordinary labels: features in [0,1], 1-based labels."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int32
    K: int
    source: str = ""

    def __post_init__(self) -> None:
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("feature/label counts differ")
        if len(self.labels) and (self.labels.min() < 1 or self.labels.max() > self.K):
            raise ValueError(f"labels must lie in 1..{self.K}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def instance_ids(self) -> list[str]:
        return [str(i) for i in range(self.n)]


def _read_file(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == _GZIP_MAGIC:
        return gzip.decompress(raw)
    return raw


def _read_be32(buf: bytes, offset: int, path, what: str) -> int:
    if offset + 4 > len(buf):
        raise IdxFormatError(f"{path}: truncated while reading {what} at byte {offset}")
    return struct.unpack_from(">i", buf, offset)[0]


def load_idx(images_path, labels_path) -> ImageDataset:
    """Read an IDX image file and its label file into a dataset."""
    img_buf = _read_file(images_path)
    magic = _read_be32(img_buf, 0, images_path, "magic")
    if magic != IDX_IMAGE_MAGIC:
        raise IdxFormatError(
            f"{images_path}: bad image magic 0x{magic:08x} at byte 0, expected 0x{IDX_IMAGE_MAGIC:08x}"
        )
    n = _read_be32(img_buf, 4, images_path, "image count")
    rows = _read_be32(img_buf, 8, images_path, "row count")
    cols = _read_be32(img_buf, 12, images_path, "column count")
    expected = 16 + n * rows * cols
    if len(img_buf) < expected:
        raise IdxFormatError(
            f"{images_path}: truncated pixel data at byte {len(img_buf)}, expected {expected} bytes"
        )
    pixels = np.frombuffer(img_buf, dtype=np.uint8, count=n * rows * cols, offset=16)

    lab_buf = _read_file(labels_path)
    magic = _read_be32(lab_buf, 0, labels_path, "magic")
    if magic != IDX_LABEL_MAGIC:
        raise IdxFormatError(
            f"{labels_path}: bad label magic 0x{magic:08x} at byte 0, expected 0x{IDX_LABEL_MAGIC:08x}"
        )
    n_labels = _read_be32(lab_buf, 4, labels_path, "label count")
    if n_labels != n:
        raise IdxFormatError(
            f"{labels_path}: label count {n_labels} does not match image count {n}"
        )
    if len(lab_buf) < 8 + n:
        raise IdxFormatError(
            f"{labels_path}: truncated label data at byte {len(lab_buf)}, expected {8 + n} bytes"
        )
    raw_labels = np.frombuffer(lab_buf, dtype=np.uint8, count=n, offset=8)

    features = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    labels = raw_labels.astype(np.int32) + 1
    return ImageDataset(
        features=features,
        labels=labels,
        K=int(labels.max()) if n else 0,
        source=f"idx:{images_path}",
    )


def write_idx(images_path, labels_path, pixels: np.ndarray, labels: np.ndarray) -> None:
    """Write uint8 images (n, rows, cols) and 0-based uint8 labels as IDX files.

    Fixture writer; ``load_idx`` of the output round-trips byte-exactly.
    """
    pixels = np.asarray(pixels, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = pixels.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">iiii", IDX_IMAGE_MAGIC, n, rows, cols))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">ii", IDX_LABEL_MAGIC, n))
        fh.write(labels.tobytes())


def subsample_per_class(ds: ImageDataset, per_class: int, rng: CounterRng) -> ImageDataset:
    """Uniform sample without replacement of ``per_class`` instances from
    every class; deterministic given the rng state."""
    chosen: list[np.ndarray] = []
    for k in range(1, ds.K + 1):
        idx = np.flatnonzero(ds.labels == k)
        if len(idx) < per_class:
            raise ValueError(
                f"class {k} has only {len(idx)} instances, need {per_class}"
            )
        pool = idx.copy()
        for j in range(per_class):
            r = j + rng.next_below(len(pool) - j)
            pool[j], pool[r] = pool[r], pool[j]
        chosen.append(np.sort(pool[:per_class]))
    take = np.concatenate(chosen)
    return ImageDataset(
        features=ds.features[take],
        labels=ds.labels[take],
        K=ds.K,
        source=f"{ds.source}|subsample{per_class}",
    )


def synthetic_blobs(
    K: int, d: int, per_class: int, separation: float, seed: int
) -> ImageDataset:
    """Gaussian clusters with pairwise-separated means, as a stand-in dataset.

    For K <= d the means sit on scaled coordinate axes (exact pairwise
    distance = separation); otherwise they are random directions of the
    same norm.  Features are affinely mapped to [0, 1] (clipping only the
    +-4 sigma tails), preserving class structure.
    """
    if K < 2 or d < 2:
        raise ValueError("need K >= 2 and d >= 2")
    scale = separation / np.sqrt(2.0)
    if K <= d:
        means = np.zeros((K, d))
        means[np.arange(K), np.arange(K)] = scale
    else:
        u = uniform_array(seed, 31, (K, d))
        g = _gauss_from_uniform_pairs(u, uniform_array(seed, 32, (K, d)))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        means = scale * g / np.where(norms > 0, norms, 1.0)

    u1 = uniform_array(seed, 33, (K * per_class, d))
    u2 = uniform_array(seed, 34, (K * per_class, d))
    noise = _gauss_from_uniform_pairs(u1, u2)
    labels = np.repeat(np.arange(1, K + 1), per_class).astype(np.int32)
    raw = means[labels - 1] + noise

    lo = means.min() - 4.0
    hi = means.max() + 4.0
    features = np.clip((raw - lo) / (hi - lo), 0.0, 1.0)
    return ImageDataset(
        features=features, labels=labels, K=K, source=f"blobs:K={K},d={d},sep={separation}"
    )


def _gauss_from_uniform_pairs(u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
    """Box-Muller on two uniform arrays of the same shape."""
    r = np.sqrt(-2.0 * np.log(np.maximum(u1, 1e-300)))
    return r * np.cos(2.0 * np.pi * u2)


@dataclass(frozen=True)
class StoredEvent:
    """Wire form of one labeling event, one JSON object per store line."""

    instance_id: str
    qtype: str
    items: int
    question_set: tuple[int, ...]
    answer: dict
    qa_label: tuple[int, ...]
    seed: int
    timestamp: str
    origin: str  # "simulated" | "human"

    @classmethod
    def from_event(
        cls, event: LabelingEvent, origin: str = "simulated", timestamp: str | None = None
    ) -> "StoredEvent":
        answer: dict = {"kind": event.answer.kind.value}
        if event.answer.chosen is not None:
            answer["chosen"] = event.answer.chosen
        return cls(
            instance_id=event.instance_id,
            qtype=event.qtype.value,
            items=event.items,
            question_set=event.question_set.classes,
            answer=answer,
            qa_label=event.qa_label.classes,
            seed=event.seed,
            timestamp=timestamp or _now_rfc3339(),
            origin=origin,
        )

    def to_event(self) -> LabelingEvent:
        return LabelingEvent(
            instance_id=self.instance_id,
            qtype=QuestionType.parse(self.qtype),
            items=self.items,
            question_set=LabelSubset(self.question_set),
            answer=Answer(AnswerKind(self.answer["kind"]), self.answer.get("chosen")),
            qa_label=LabelSubset(self.qa_label),
            seed=self.seed,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "instance_id": self.instance_id,
                "qtype": self.qtype,
                "I": self.items,
                "question_set": list(self.question_set),
                "answer": self.answer,
                "qa_label": list(self.qa_label),
                "seed": self.seed,
                "timestamp": self.timestamp,
                "origin": self.origin,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "StoredEvent":
        data = json.loads(line)
        return cls(
            instance_id=str(data["instance_id"]),
            qtype=str(data["qtype"]),
            items=int(data["I"]),
            question_set=tuple(int(c) for c in data["question_set"]),
            answer=dict(data["answer"]),
            qa_label=tuple(int(c) for c in data["qa_label"]),
            seed=int(data["seed"]),
            timestamp=str(data["timestamp"]),
            origin=str(data["origin"]),
        )


def _now_rfc3339() -> str:
    return datetime.now(timezone.utc).isoformat()


def validate_stored_event(stored: StoredEvent, space: ClassSpace | None = None) -> None:
    """Check a stored event against the answering rules.

    With a class space the expected label is recomputed outright; without
    one, complement labels are checked structurally (disjoint from the
    question set and together contiguous from class 1).
    """
    try:
        event = stored.to_event()
    except (ValueError, KeyError) as exc:
        raise EventStoreError(f"unparseable event: {exc}") from exc
    if len(event.question_set) != event.items:
        raise EventStoreError(
            f"question set size {len(event.question_set)} does not match I={event.items}"
        )
    kind = event.answer.kind
    if event.qtype is QuestionType.WHICH_ONE and kind not in (
        AnswerKind.CHOSE,
        AnswerKind.NOT_INCLUDED,
    ):
        raise EventStoreError(f"{kind.value!r} is not a which-one answer")
    if event.qtype is QuestionType.IS_IN and kind not in (AnswerKind.YES, AnswerKind.NO):
        raise EventStoreError(f"{kind.value!r} is not an is-in answer")

    if space is not None:
        try:
            expected = assign_label(event.qtype, event.question_set, event.answer, space)
        except ValueError as exc:
            raise EventStoreError(str(exc)) from exc
        if expected != event.qa_label:
            raise EventStoreError(
                f"label {list(event.qa_label.classes)} inconsistent with question "
                f"{list(event.question_set.classes)} and answer {kind.value!r}"
            )
        return

    q, label = set(event.question_set.classes), event.qa_label.classes
    if kind is AnswerKind.CHOSE:
        if len(label) != 1 or label[0] != event.answer.chosen or label[0] not in q:
            raise EventStoreError(
                f"chose({event.answer.chosen}) but label is {list(label)} "
                f"or class not offered"
            )
    elif kind is AnswerKind.YES:
        if set(label) != q:
            raise EventStoreError(f"'yes' label {list(label)} differs from question set")
    else:  # complement labels
        union = q | set(label)
        if q & set(label) or union != set(range(1, len(union) + 1)):
            raise EventStoreError(
                f"complement label {list(label)} inconsistent with question {sorted(q)}"
            )


def append_events(
    store_path,
    events: Iterable[LabelingEvent] | Iterable[StoredEvent],
    origin: str = "simulated",
) -> int:
    """Append events to a JSONL store under an advisory file lock."""
    path = Path(store_path)
    rows = []
    for e in events:
        stored = e if isinstance(e, StoredEvent) else StoredEvent.from_event(e, origin)
        rows.append(stored.to_json())
    with FileLock(str(path) + ".lock"):
        with open(path, "a", encoding="utf-8") as fh:
            for row in rows:
                fh.write(row + "\n")
    return len(rows)


def read_events(store_path, space: ClassSpace | None = None) -> list[StoredEvent]:
    """Read and validate every line of a JSONL store; malformed or
    rule-violating lines raise with their 1-based line number."""
    out = []
    with open(store_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                stored = StoredEvent.from_json(line)
            except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                raise EventStoreError(f"{store_path}:{lineno}: malformed line: {exc}") from exc
            try:
                validate_stored_event(stored, space)
            except EventStoreError as exc:
                raise EventStoreError(f"{store_path}:{lineno}: {exc}") from exc
            out.append(stored)
    return out
