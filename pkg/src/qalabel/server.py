"""Annotation service: serve questions to a human annotator over HTTP.

A session walks a seeded shuffle of a dataset.  For each instance the
service draws a uniform question class set, freezes it until the instance
is answered (GET is idempotent), converts the answer to a label with the
same rules as the simulator, and appends a human-origin event to the
JSONL store.

``AnnotationService`` holds all state and is directly driveable in tests;
``create_app`` wires it to FastAPI endpoints:

  POST /api/session   {qtype, I, dataset?, seed?} -> 201 {session_id}
  GET  /api/question?session=...                  -> payload | 204
  POST /api/answer    {session, instance_id, answer} -> {qa_label}
  GET  /api/stats?session=...
"""

from __future__ import annotations

import base64
import io
import math
import threading
import uuid
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .combinatorics import ClassSpace, LabelSubset
from .data_io import ImageDataset, append_events
from .errors import ProtocolViolationError
from .labeling import (
    Answer,
    AnswerKind,
    LabelingEvent,
    QuestionSpec,
    QuestionType,
    assign_label,
    draw_question_set,
)
from .rng import CounterRng, derive_seed, permutation

__all__ = ["AnnotationService", "SessionNotFound", "AlreadyAnswered", "create_app"]


class SessionNotFound(KeyError):
    pass


class DatasetNotFound(KeyError):
    pass


class InstanceNotFound(KeyError):
    pass


class AlreadyAnswered(ValueError):
    pass


def _png_base64(pixels: np.ndarray) -> str:
    """Grayscale PNG of a flat [0,1] feature row (square if possible)."""
    from PIL import Image

    d = pixels.shape[0]
    side = int(math.isqrt(d))
    shape = (side, side) if side * side == d else (1, d)
    img = Image.fromarray((pixels.reshape(shape) * 255).astype(np.uint8), mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


@dataclass
class _Session:
    session_id: str
    spec: QuestionSpec
    dataset_name: str
    seed: int
    order: np.ndarray
    cursor: int = 0
    issued: dict | None = None  # frozen payload for the current instance
    answered: int = 0
    histogram: Counter = field(default_factory=Counter)
    done_instances: set = field(default_factory=set)
    lock: threading.Lock = field(default_factory=threading.Lock)


class AnnotationService:
    """Session book-keeping, question issuing, and event persistence."""

    def __init__(
        self,
        datasets: dict[str, ImageDataset],
        store_path,
        seed: int = 0,
        include_images: bool = True,
        store_batch: int = 1,
    ):
        self.datasets = dict(datasets)
        self.store_path = store_path
        self.seed = seed
        self.include_images = include_images
        self.store_batch = max(1, int(store_batch))
        self._sessions: dict[str, _Session] = {}
        self._registry_lock = threading.Lock()
        self._store_lock = threading.Lock()
        self._pending: list[LabelingEvent] = []
        self._session_counter = 0

    def create_session(
        self,
        qtype: str,
        items: int,
        dataset: str = "default",
        seed: int | None = None,
    ) -> str:
        if dataset not in self.datasets:
            raise DatasetNotFound(f"unknown dataset {dataset!r}")
        ds = self.datasets[dataset]
        spec = QuestionSpec(QuestionType.parse(qtype), int(items), ClassSpace(ds.K))
        with self._registry_lock:
            self._session_counter += 1
            counter = self._session_counter
        session_seed = seed if seed is not None else derive_seed(self.seed, 500 + counter)
        order = permutation(session_seed, 1, ds.n)
        session = _Session(
            session_id=uuid.uuid4().hex,
            spec=spec,
            dataset_name=dataset,
            seed=session_seed,
            order=order,
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session
        return session.session_id

    def _get(self, session_id: str) -> _Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise SessionNotFound(f"unknown session {session_id!r}") from None

    def get_question(self, session_id: str) -> dict | None:
        """The pending question payload, or None when the queue is exhausted.

        Repeated calls before an answer return the same frozen payload.
        """
        session = self._get(session_id)
        ds = self.datasets[session.dataset_name]
        with session.lock:
            if session.issued is not None:
                return session.issued
            if session.cursor >= ds.n:
                return None
            position = session.cursor
            row = int(session.order[position])
            rng = CounterRng(session.seed).for_instance(position)
            q = draw_question_set(rng, session.spec)
            payload = {
                "instance_id": str(row),
                "qtype": session.spec.qtype.value,
                "I": session.spec.items,
                "question_classes": list(q.classes),
            }
            if self.include_images:
                payload["image"] = _png_base64(ds.features[row])
            session.issued = payload
            return payload

    def submit_answer(self, session_id: str, instance_id: str, answer: dict) -> list[int]:
        """Convert an answer into a label, persist the event, advance the queue."""
        session = self._get(session_id)
        with session.lock:
            issued = session.issued
            if issued is None or issued["instance_id"] != instance_id:
                if instance_id in session.done_instances:
                    raise AlreadyAnswered(f"instance {instance_id!r} already answered")
                raise InstanceNotFound(
                    f"instance {instance_id!r} is not currently issued in this session"
                )
            spec = session.spec
            kind_value = answer.get("kind")
            try:
                kind = AnswerKind(kind_value)
            except ValueError:
                raise ProtocolViolationError(f"unknown answer kind {kind_value!r}") from None
            if spec.qtype is QuestionType.WHICH_ONE and kind not in (
                AnswerKind.CHOSE,
                AnswerKind.NOT_INCLUDED,
            ):
                raise ProtocolViolationError(
                    f"{kind.value!r} is not a which-one answer"
                )
            if spec.qtype is QuestionType.IS_IN and kind not in (
                AnswerKind.YES,
                AnswerKind.NO,
            ):
                raise ProtocolViolationError(f"{kind.value!r} is not an is-in answer")
            chosen = answer.get("chosen")
            if kind is AnswerKind.CHOSE and chosen is None:
                raise ProtocolViolationError("a 'chose' answer needs a class id")
            ans = Answer(kind, int(chosen) if kind is AnswerKind.CHOSE else None)
            q = LabelSubset(issued["question_classes"])
            label = assign_label(spec.qtype, q, ans, spec.space)

            event = LabelingEvent(
                instance_id=instance_id,
                qtype=spec.qtype,
                items=spec.items,
                question_set=q,
                answer=ans,
                qa_label=label,
                seed=session.seed,
            )
            self._persist(event)
            session.done_instances.add(instance_id)
            session.histogram[len(label)] += 1
            session.answered += 1
            session.cursor += 1
            session.issued = None
            return list(label.classes)

    def _persist(self, event: LabelingEvent) -> None:
        """Append one human event; writes are serialized process-wide and,
        above store_batch=1, buffered until the batch fills or flush()."""
        with self._store_lock:
            self._pending.append(event)
            if len(self._pending) >= self.store_batch:
                append_events(self.store_path, self._pending, origin="human")
                self._pending = []

    def flush(self) -> None:
        with self._store_lock:
            if self._pending:
                append_events(self.store_path, self._pending, origin="human")
                self._pending = []

    def stats(self, session_id: str) -> dict:
        session = self._get(session_id)
        ds = self.datasets[session.dataset_name]
        with session.lock:
            return {
                "answered": session.answered,
                "remaining": ds.n - session.answered,
                "label_size_histogram": {
                    str(k): v for k, v in sorted(session.histogram.items())
                },
            }


try:
    from pydantic import BaseModel as _BaseModel

    class SessionRequest(_BaseModel):
        qtype: str
        I: int
        dataset: str = "default"
        seed: int | None = None

    class AnswerRequest(_BaseModel):
        session: str
        instance_id: str
        answer: dict
except ImportError:  # pragma: no cover - pydantic ships with fastapi
    SessionRequest = AnswerRequest = None


def create_app(service: AnnotationService, cors_origin: str = "*"):
    from fastapi import FastAPI, HTTPException, Response
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="qalabel annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/api/session", status_code=201)
    def create_session(req: SessionRequest):
        try:
            session_id = service.create_session(req.qtype, req.I, req.dataset, req.seed)
        except DatasetNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"session_id": session_id}

    @app.get("/api/question")
    def get_question(session: str):
        try:
            payload = service.get_question(session)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if payload is None:
            return Response(status_code=204)
        return payload

    @app.post("/api/answer")
    def submit_answer(req: AnswerRequest):
        try:
            label = service.submit_answer(req.session, req.instance_id, req.answer)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except InstanceNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except AlreadyAnswered as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ProtocolViolationError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"qa_label": label}

    @app.get("/api/stats")
    def get_stats(session: str):
        try:
            return service.stats(session)
        except SessionNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    return app
