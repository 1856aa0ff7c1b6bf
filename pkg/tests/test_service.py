"""HTTP service tests: every endpoint, success and error paths.

The service is a thin wrapper, so most tests cross-check responses against
direct library calls made with the same seeds.
"""

import json

import pytest
from fastapi.testclient import TestClient

import gridroute
from gridroute import evaluation, oracle, trainer
from gridroute.evaluation import EvalConfig, GreedyLandmarkPolicy, RandomPolicy
from gridroute.problems import GeneratorConfig, generate, instance_from_doc, instance_to_doc
from gridroute.net import checkpoint_from_doc
from gridroute.service.app import app, create_app

TINY_TRAIN = {
    "num_problems": 2,
    "episodes_per_problem": 3,
    "max_steps": 12,
    "learn_start": 40,
    "batch_size": 8,
    "replay_capacity": 200,
    "target_sync_interval": 25,
    "hidden_sizes": [16, 16],
    "epsilon": {"start": 1.0, "end": 0.1, "episodes": 4},
    "heuristic": {"start": 0.5, "end": 0.1, "episodes": 4},
    "master_seed": 7,
}


def jsonify(doc):
    """Normalize tuples/lists the way a JSON round trip does."""
    return json.loads(json.dumps(doc))


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def default_doc(client):
    resp = client.post("/instances/generate", json={"seed": 0})
    assert resp.status_code == 200
    return resp.json()["instances"][0]


@pytest.fixture(scope="module")
def tiny_train_body(client):
    resp = client.post("/train", json={"config": TINY_TRAIN})
    assert resp.status_code == 200
    return resp.json()


def test_health_reports_ok_and_version(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "version": gridroute.__version__}


def test_create_app_builds_independent_instances():
    other = TestClient(create_app())
    assert other.get("/health").json()["status"] == "ok"


def test_generate_default_request_yields_one_valid_instance(default_doc):
    inst = instance_from_doc(default_doc)
    assert inst.rows == 7 and inst.cols == 7
    assert inst.depot == 24
    assert len(inst.landmarks) == 5
    assert inst.num_agents == 3
    assert inst.name == "seed-0"


def test_generate_count_seeds_consecutively(client):
    resp = client.post("/instances/generate", json={"count": 3, "seed": 10})
    assert resp.status_code == 200
    docs = resp.json()["instances"]
    assert len(docs) == 3
    base = GeneratorConfig()
    for j, doc in enumerate(docs):
        expected = instance_to_doc(generate(base.with_seed(10 + j)))
        assert doc == jsonify(expected)
        assert doc["name"] == f"seed-{10 + j}"
    again = client.post("/instances/generate", json={"count": 3, "seed": 10})
    assert again.json()["instances"] == docs


def test_generate_rejects_bad_count_and_extra_fields(client):
    assert client.post("/instances/generate", json={"count": 0}).status_code == 422
    assert client.post("/instances/generate", json={"count": 20_000}).status_code == 422
    assert client.post("/instances/generate", json={"bogus": 1}).status_code == 422


def test_generate_surfaces_board_validation_as_422(client):
    resp = client.post("/instances/generate", json={"depot": 8})
    assert resp.status_code == 422
    body = resp.json()
    assert body["error"] == "validation"
    assert "depot" in body["detail"]


def test_validate_echoes_canonical_doc(client, default_doc):
    resp = client.post("/instances/validate", json={"instance": default_doc})
    assert resp.status_code == 200
    body = resp.json()
    assert body["valid"] is True
    assert body["instance"] == default_doc


def test_validate_rejects_broken_instance(client, default_doc):
    broken = dict(default_doc)
    broken["depot"] = broken["walls"][0]
    resp = client.post("/instances/validate", json={"instance": broken})
    assert resp.status_code == 422
    assert resp.json()["error"] == "validation"


def test_solve_matches_direct_oracle(client, default_doc):
    inst = instance_from_doc(default_doc)
    expected = oracle.solve_exact(inst).to_doc(inst)
    resp = client.post("/solve", json={"instance": default_doc})
    assert resp.status_code == 200
    body = resp.json()
    assert body["total_distance"] == expected["total_distance"]
    assert body["agent_orders"] == jsonify(expected["agent_orders"])
    assert body["agent_routes"] == jsonify(expected["agent_routes"])
    assert body["instance"] == "seed-0"
    assert body["elapsed_ms"] >= 0.0


def test_solve_schema_error_is_plain_422(client):
    resp = client.post("/solve", json={})
    assert resp.status_code == 422
    assert "error" not in resp.json()


def test_train_tiny_config_reports_metrics_checkpoint_summary(tiny_train_body):
    body = tiny_train_body
    lines = body["metrics_csv"].splitlines()
    assert lines[0] == ",".join(trainer.METRICS_COLUMNS)
    assert len(lines) == 1 + 6
    network, adam, metadata = checkpoint_from_doc(body["checkpoint"])
    assert network.layer_sizes == (13, 16, 16, 12)
    assert adam.t > 0
    assert metadata["master_seed"] == 7
    summary = body["summary"]
    assert summary["episodes"] == 6
    assert 0.0 <= summary["success_rate_last_100"] <= 1.0
    assert 0 < summary["mean_steps_last_100"] <= 12
    assert summary["elapsed_seconds"] > 0.0


def test_train_matches_direct_run_and_is_deterministic(client, tiny_train_body):
    direct = trainer.run_schedule(trainer.config_from_doc(TINY_TRAIN))
    assert tiny_train_body["metrics_csv"] == direct.metrics_csv()
    assert tiny_train_body["checkpoint"] == jsonify(direct.checkpoint_doc())
    again = client.post("/train", json={"config": TINY_TRAIN}).json()
    assert again["metrics_csv"] == tiny_train_body["metrics_csv"]
    assert again["checkpoint"] == tiny_train_body["checkpoint"]


def test_train_rejects_unknown_config_field(client):
    resp = client.post("/train", json={"config": {"bogus": 1}})
    assert resp.status_code == 422
    body = resp.json()
    assert body["error"] == "validation"
    assert "unknown fields" in body["detail"]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_train_numerical_failure_returns_rescue_payload(client):
    config = dict(TINY_TRAIN)
    config["learning_rate"] = 1e300
    resp = client.post("/train", json={"config": config})
    assert resp.status_code == 500
    body = resp.json()
    assert body["error"] == "numerical"
    assert body["detail"]
    assert set(body["checkpoint"]["params"]) == {"W1", "b1", "W2", "b2", "W3", "b3"}
    assert body["metrics_csv"].splitlines()[0] == ",".join(trainer.METRICS_COLUMNS)


def test_rollout_greedy_matches_direct_call(client, default_doc):
    resp = client.post(
        "/rollout",
        json={"instance": default_doc, "policy": "greedy-landmark", "seed": 3},
    )
    assert resp.status_code == 200
    doc = resp.json()["trace"]
    inst = instance_from_doc(default_doc)
    direct = evaluation.rollout(GreedyLandmarkPolicy(), inst, 50, 3)
    assert doc == jsonify(evaluation.trace_to_doc(direct))
    trace = evaluation.trace_from_doc(doc)
    assert trace.steps <= 50


def test_rollout_network_policy_uses_checkpoint(client, default_doc, tiny_train_body):
    resp = client.post(
        "/rollout",
        json={
            "instance": default_doc,
            "policy": "network",
            "checkpoint": tiny_train_body["checkpoint"],
            "seed": 1,
        },
    )
    assert resp.status_code == 200
    trace = evaluation.trace_from_doc(resp.json()["trace"])
    assert trace.steps <= 50
    assert isinstance(trace.success, bool)


def test_rollout_network_without_checkpoint_is_422(client, default_doc):
    resp = client.post("/rollout", json={"instance": default_doc, "policy": "network"})
    assert resp.status_code == 422
    body = resp.json()
    assert body["error"] == "validation"
    assert "requires a checkpoint" in body["detail"]


def test_rollout_unknown_policy_is_422(client, default_doc):
    resp = client.post("/rollout", json={"instance": default_doc, "policy": "alphabeta"})
    assert resp.status_code == 422
    assert "unknown policy" in resp.json()["detail"]


def test_evaluate_requires_exactly_one_of_instances_or_count(client, default_doc):
    both = client.post(
        "/evaluate",
        json={"policy": "random", "instances": [default_doc], "count": 2},
    )
    neither = client.post("/evaluate", json={"policy": "random"})
    for resp in (both, neither):
        assert resp.status_code == 422
        assert "provide exactly one" in resp.json()["detail"]


def test_evaluate_explicit_instances_matches_direct_suite(client):
    gen = client.post("/instances/generate", json={"count": 3, "seed": 50})
    docs = gen.json()["instances"]
    resp = client.post("/evaluate", json={"policy": "greedy-landmark", "instances": docs})
    assert resp.status_code == 200
    body = resp.json()
    instances = [instance_from_doc(d) for d in docs]
    direct = evaluation.evaluate_suite(GreedyLandmarkPolicy(), instances, EvalConfig())
    assert body["rows_csv"] == direct.rows_to_csv()
    assert body["report"] == jsonify(direct.to_doc())
    assert body["report"]["aggregates"]["num_instances"] == 3


def test_evaluate_count_path_uses_unseen_instances(client):
    resp = client.post(
        "/evaluate",
        json={"policy": "random", "count": 4, "trainer_config": TINY_TRAIN},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["report"]["aggregates"]["num_instances"] == 4
    config = trainer.config_from_doc(TINY_TRAIN)
    seen = [inst.landmarks for inst in trainer.training_instances(config)]
    unseen = evaluation.unseen_instances(4, config.generator, 0, seen)
    direct = evaluation.evaluate_suite(RandomPolicy(), unseen, EvalConfig())
    assert body["rows_csv"] == direct.rows_to_csv()
    assert body["rows_csv"].splitlines()[1].startswith("eval-00,")


def test_render_frames_and_summary(client, default_doc):
    rolled = client.post(
        "/rollout", json={"instance": default_doc, "policy": "greedy-landmark"}
    )
    trace_doc = rolled.json()["trace"]
    frames = client.post("/render", json={"trace": trace_doc})
    assert frames.status_code == 200
    assert "step 0 (reset)" in frames.json()["text"]
    assert "termination:" in frames.json()["text"]
    summary = client.post("/render", json={"trace": trace_doc, "mode": "summary"})
    assert summary.status_code == 200
    assert "agent 0:" in summary.json()["text"]
    bad_mode = client.post("/render", json={"trace": trace_doc, "mode": "movie"})
    assert bad_mode.status_code == 422


def test_render_rejects_tampered_trace(client, default_doc):
    rolled = client.post(
        "/rollout", json={"instance": default_doc, "policy": "greedy-landmark"}
    )
    trace_doc = rolled.json()["trace"]
    trace_doc["reward_sum"] = trace_doc["reward_sum"] + 0.5
    resp = client.post("/render", json={"trace": trace_doc})
    assert resp.status_code == 422
    assert "reward_sum" in resp.json()["detail"]
