import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy import stats

from qalabel.combinatorics import ClassSpace, LabelSubset
from qalabel.data_io import ImageDataset, read_events, synthetic_blobs
from qalabel.labeling import AnnotatorModel, QuestionSpec, QuestionType
from qalabel.server import AnnotationService, create_app


def tiny_dataset(n_per_class=5, K=4, d=9):
    return synthetic_blobs(K, d, n_per_class, 2.0, seed=77)


@pytest.fixture
def service(tmp_path):
    ds = tiny_dataset()
    return AnnotationService(
        datasets={"default": ds}, store_path=tmp_path / "events.jsonl", seed=123
    )


@pytest.fixture
def client(service):
    return TestClient(create_app(service))


def test_session_lifecycle(client):
    resp = client.post("/api/session", json={"qtype": "which_one", "I": 2})
    assert resp.status_code == 201
    token = resp.json()["session_id"]

    q = client.get("/api/question", params={"session": token})
    assert q.status_code == 200
    payload = q.json()
    assert len(payload["question_classes"]) == 2
    assert payload["qtype"] == "which_one"
    base64.b64decode(payload["image"])  # valid base64 PNG bytes

    # idempotent until answered
    again = client.get("/api/question", params={"session": token}).json()
    assert again == payload

    chosen = payload["question_classes"][0]
    a = client.post(
        "/api/answer",
        json={
            "session": token,
            "instance_id": payload["instance_id"],
            "answer": {"kind": "chose", "chosen": chosen},
        },
    )
    assert a.status_code == 200
    assert a.json()["qa_label"] == [chosen]

    stats_resp = client.get("/api/stats", params={"session": token}).json()
    assert stats_resp["answered"] == 1
    assert stats_resp["remaining"] == 19
    assert stats_resp["label_size_histogram"] == {"1": 1}


def test_session_validation(client):
    assert client.post("/api/session", json={"qtype": "which_one", "I": 4}).status_code == 400
    assert client.post("/api/session", json={"qtype": "nope", "I": 1}).status_code == 400
    assert (
        client.post("/api/session", json={"qtype": "is_in", "I": 1, "dataset": "zzz"}).status_code
        == 404
    )
    assert client.get("/api/question", params={"session": "bogus"}).status_code == 404
    assert client.get("/api/stats", params={"session": "bogus"}).status_code == 404


def test_same_seed_same_instance_order(client):
    t1 = client.post("/api/session", json={"qtype": "is_in", "I": 1, "seed": 55}).json()["session_id"]
    t2 = client.post("/api/session", json={"qtype": "is_in", "I": 1, "seed": 55}).json()["session_id"]
    q1 = client.get("/api/question", params={"session": t1}).json()
    q2 = client.get("/api/question", params={"session": t2}).json()
    assert q1["instance_id"] == q2["instance_id"]
    assert q1["question_classes"] == q2["question_classes"]


def test_answer_error_codes(client):
    token = client.post("/api/session", json={"qtype": "which_one", "I": 2}).json()["session_id"]
    payload = client.get("/api/question", params={"session": token}).json()
    iid = payload["instance_id"]
    not_offered = next(
        c for c in range(1, 5) if c not in payload["question_classes"]
    )
    # z outside the issued question set
    r = client.post(
        "/api/answer",
        json={"session": token, "instance_id": iid, "answer": {"kind": "chose", "chosen": not_offered}},
    )
    assert r.status_code == 422
    # wrong variant for the question type
    r = client.post(
        "/api/answer",
        json={"session": token, "instance_id": iid, "answer": {"kind": "yes"}},
    )
    assert r.status_code == 422
    # valid answer, then answering the same instance again -> conflict
    ok = client.post(
        "/api/answer",
        json={"session": token, "instance_id": iid, "answer": {"kind": "not_included"}},
    )
    assert ok.status_code == 200
    assert len(ok.json()["qa_label"]) == 2  # K - I
    dup = client.post(
        "/api/answer",
        json={"session": token, "instance_id": iid, "answer": {"kind": "not_included"}},
    )
    assert dup.status_code == 409
    # unknown instance id
    r = client.post(
        "/api/answer",
        json={"session": token, "instance_id": "999", "answer": {"kind": "not_included"}},
    )
    assert r.status_code == 404
    assert client.post(
        "/api/answer",
        json={"session": "zzz", "instance_id": "0", "answer": {"kind": "yes"}},
    ).status_code == 404


def test_queue_exhaustion_and_histogram(client, service, tmp_path):
    ds = service.datasets["default"]
    token = client.post("/api/session", json={"qtype": "which_one", "I": 3}).json()["session_id"]
    answered = 0
    while True:
        q = client.get("/api/question", params={"session": token})
        if q.status_code == 204:
            break
        payload = q.json()
        z = int(ds.labels[int(payload["instance_id"])])
        if z in payload["question_classes"]:
            answer = {"kind": "chose", "chosen": z}
        else:
            answer = {"kind": "not_included"}
        r = client.post(
            "/api/answer",
            json={"session": token, "instance_id": payload["instance_id"], "answer": answer},
        )
        assert r.status_code == 200
        label = r.json()["qa_label"]
        assert z in label
        answered += 1
    assert answered == ds.n
    hist = client.get("/api/stats", params={"session": token}).json()["label_size_histogram"]
    assert set(hist) <= {"1", "1"} | {str(ds.K - 3)}
    stored = read_events(service.store_path, ClassSpace(ds.K))
    assert len(stored) == ds.n
    assert all(e.origin == "human" for e in stored)


def test_is_in_flow(client):
    token = client.post("/api/session", json={"qtype": "is_in", "I": 2}).json()["session_id"]
    payload = client.get("/api/question", params={"session": token}).json()
    r = client.post(
        "/api/answer",
        json={"session": token, "instance_id": payload["instance_id"], "answer": {"kind": "yes"}},
    )
    assert r.status_code == 200
    assert r.json()["qa_label"] == payload["question_classes"]


def test_question_class_marginal_frequency(tmp_path):
    # over many sessions, each class appears in the first question set
    # with probability I/K
    K, I, sessions = 5, 2, 4000
    ds = ImageDataset(
        features=np.linspace(0, 1, 12 * 3).reshape(12, 3),
        labels=np.tile(np.arange(1, 5, dtype=np.int32), 3),
        K=K,
    )
    service = AnnotationService(
        datasets={"default": ds},
        store_path=tmp_path / "e.jsonl",
        seed=5,
        include_images=False,
    )
    counts = np.zeros(K)
    for _ in range(sessions):
        token = service.create_session("which_one", I)
        payload = service.get_question(token)
        for c in payload["question_classes"]:
            counts[c - 1] += 1
    p = I / K
    se = np.sqrt(p * (1 - p) / sessions)
    assert np.abs(counts / sessions - p).max() <= 3 * se


def test_scripted_annotator_matches_simulation(tmp_path):
    # ground-truth-driven answers through the service should be statistically
    # indistinguishable from the batched simulator (chi-square, p > 0.01)
    K, I, n = 6, 2, 100_000
    rng = np.random.default_rng(17)
    labels = rng.integers(1, K + 1, size=n).astype(np.int32)
    ds = ImageDataset(
        features=np.zeros((n, 2)), labels=labels, K=K
    )
    service = AnnotationService(
        datasets={"default": ds},
        store_path=tmp_path / "human.jsonl",
        seed=31,
        include_images=False,
        store_batch=2000,
    )
    token = service.create_session("which_one", I, seed=8899)
    service_counts: dict[tuple, int] = {}
    while True:
        payload = service.get_question(token)
        if payload is None:
            break
        z = int(labels[int(payload["instance_id"])])
        if z in payload["question_classes"]:
            answer = {"kind": "chose", "chosen": z}
        else:
            answer = {"kind": "not_included"}
        label = tuple(service.submit_answer(token, payload["instance_id"], answer))
        service_counts[label] = service_counts.get(label, 0) + 1
    service.flush()

    space = ClassSpace(K)
    spec = QuestionSpec(QuestionType.WHICH_ONE, I, space)
    ann = AnnotatorModel.deterministic(space, {})
    from qalabel.labeling import simulate_arrays

    sim = simulate_arrays(777, spec, ann, n, ground_truth=labels)
    sim_counts: dict[tuple, int] = {}
    for mask in sim["label_masks"]:
        label = LabelSubset.from_mask(int(mask)).classes
        sim_counts[label] = sim_counts.get(label, 0) + 1

    keys = sorted(set(service_counts) | set(sim_counts))
    table = np.array(
        [[service_counts.get(k, 0) for k in keys], [sim_counts.get(k, 0) for k in keys]]
    )
    chi2, p, dof, _ = stats.chi2_contingency(table)
    assert p > 0.01, (chi2, p, dof)
    # every persisted human event passes the step-3 validation
    stored = read_events(service.store_path, space)
    assert len(stored) == n
