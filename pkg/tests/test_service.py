"""HTTP service: schemas, phase machine, idempotency, and SSE."""
from __future__ import annotations

import json
import threading
import time

import jsonschema
import pytest
from fastapi.testclient import TestClient

from liftparse.catalog import Catalog
from liftparse.service import SCHEMAS, create_app
from liftparse.session import NOT_SURE_MESSAGE

CATALOG = Catalog.load()


def _validate(payload, schema_name):
    jsonschema.validate(payload, SCHEMAS[schema_name])


def _names(session_payload):
    task = session_payload["task"]
    return (
        CATALOG[task["target"]].display_name,
        CATALOG[task["destination"]].display_name,
    )


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def _new_session(client, task_type="PickAndPlace", seed=3, episodes=2):
    r = client.post(
        "/sessions",
        json={"task_type": task_type, "seed": seed, "episodes": episodes},
    )
    assert r.status_code == 200
    return r.json()


def _say(client, sid, text, request_id=None):
    body = {"text": text}
    if request_id:
        body["request_id"] = request_id
    return client.post(f"/sessions/{sid}/utterance", json=body)


def _wait_for_phase(client, sid, phase, timeout=90.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/sessions/{sid}/state").json()
        if state["phase"] == phase:
            return state
        time.sleep(0.1)
    raise AssertionError(f"session never reached phase {phase!r}")


class TestCreationAndErrors:
    def test_create_session_matches_schema(self, client):
        payload = _new_session(client)
        _validate(payload, "session")
        assert payload["phase"] == "interaction"
        assert payload["episode_index"] == 1
        assert payload["task"]["instruction"]

    def test_unknown_task_type_is_400(self, client):
        r = client.post("/sessions", json={"task_type": "FoldLaundry"})
        assert r.status_code == 400

    def test_malformed_body_is_422(self, client):
        assert client.post("/sessions", json={"seed": 1}).status_code == 422

    def test_unknown_session_is_404(self, client):
        for method, path in [
            ("get", "/sessions/nope/state"),
            ("get", "/sessions/nope/metrics"),
            ("get", "/sessions/nope/log"),
            ("post", "/sessions/nope/abandon"),
        ]:
            assert getattr(client, method)(path).status_code == 404
        assert _say(client, "nope", "hello").status_code == 404
        r = client.post("/sessions/nope/teaching", json={"annotations": []})
        assert r.status_code == 404


class TestUtterances:
    def test_refusal_payload(self, client):
        sess = _new_session(client)
        r = _say(client, sess["session_id"], "defragment the pantry")
        assert r.status_code == 200
        payload = r.json()
        _validate(payload, "utterance")
        assert payload["response_kind"] == "not_sure"
        assert payload["message"] == NOT_SURE_MESSAGE
        assert payload["program"] is None
        assert payload["rendered_actions"] == []
        assert payload["world_delta"] == {"objects": []}
        assert payload["goal_reached"] is False

    def test_executed_payload_and_world_delta(self, client):
        sess = _new_session(client)
        sid = sess["session_id"]
        t, _ = _names(sess)
        payload = _say(client, sid, f"go to the {t}").json()
        _validate(payload, "utterance")
        assert payload["response_kind"] == "executed"
        assert payload["message"] is None
        assert payload["program"].startswith("GOTO")
        assert payload["rendered_actions"] == [f"go to the {t}"]
        assert payload["world_delta"]["agent_position"]

        pick = _say(client, sid, f"pick up the {t}").json()
        assert pick["world_delta"]["held"] is not None
        changed_ids = {o["id"] for o in pick["world_delta"]["objects"]}
        assert pick["world_delta"]["held"] in changed_ids

    def test_metrics_endpoint_matches_schema(self, client):
        sess = _new_session(client)
        payload = client.get(f"/sessions/{sess['session_id']}/metrics").json()
        _validate(payload, "metrics")
        assert payload["examples_taught"][0] == 44
        assert payload["version"] == 1


class TestIdempotency:
    def test_utterance_replay_returns_cached_response(self, client):
        sess = _new_session(client)
        sid = sess["session_id"]
        t, _ = _names(sess)
        first = _say(client, sid, f"go to the {t}", request_id="abc").json()
        replay = _say(client, sid, f"go to the {t}", request_id="abc").json()
        assert first == replay
        log = client.get(f"/sessions/{sid}/log").json()["turns"]
        assert len(log) == 1  # the replay did not create a second turn


@pytest.fixture(scope="module")
def flow(client):
    """One complete two-episode run, with an SSE listener attached."""
    sess = _new_session(client, seed=3, episodes=2)
    sid = sess["session_id"]
    events: list[tuple[str, dict]] = []
    done = threading.Event()

    def listen():
        name = None
        with client.stream("GET", f"/sessions/{sid}/events") as resp:
            for line in resp.iter_lines():
                if line.startswith("event:"):
                    name = line.split(":", 1)[1].strip()
                elif line.startswith("data:") and name:
                    events.append((name, json.loads(line.split(":", 1)[1])))
        done.set()

    thread = threading.Thread(target=listen, daemon=True)
    thread.start()
    time.sleep(0.3)

    record: dict = {"session": sess}
    t, d = _names(sess)
    record["refused"] = _say(client, sid, f"bring the {t} to the {d}").json()
    _say(client, sid, f"go to the {t} and pick it up")
    record["goal"] = _say(
        client, sid, f"go to the {d} and put the {t} on the {d}"
    ).json()

    record["wrong_phase"] = _say(client, sid, "hello")
    record["bad_teaching"] = client.post(
        f"/sessions/{sid}/teaching",
        json={"annotations": [{"target_turn": 1, "span": [2, 2]}]},
    )
    record["state_after_bad"] = client.get(f"/sessions/{sid}/state").json()

    r = client.post(
        f"/sessions/{sid}/teaching",
        json={
            "annotations": [{"target_turn": 0, "span": [1, 2]}],
            "request_id": "teach-1",
        },
    )
    record["teaching"] = r.json()
    record["teaching_replay"] = client.post(
        f"/sessions/{sid}/teaching",
        json={
            "annotations": [{"target_turn": 0, "span": [1, 2]}],
            "request_id": "teach-1",
        },
    ).json()

    record["ep2_state"] = _wait_for_phase(client, sid, "interaction")
    record["metrics_after"] = client.get(f"/sessions/{sid}/metrics").json()

    t2, d2 = _names(record["ep2_state"])
    record["ep2_names"] = (t2, d2)
    record["one_shot"] = _say(client, sid, f"bring the {t2} to the {d2}").json()

    # close out: teach nothing, retraining bumps the version, run ends
    client.post(f"/sessions/{sid}/teaching", json={"annotations": []})
    record["final_state"] = _wait_for_phase(client, sid, "done")
    record["log"] = client.get(f"/sessions/{sid}/log").json()

    assert done.wait(timeout=30), "SSE stream did not close on done"
    record["events"] = list(events)
    return record

class TestFullFlow:
    def test_goal_flips_session_into_teaching(self, flow):
        _validate(flow["goal"], "utterance")
        assert flow["goal"]["goal_reached"] is True
        assert flow["goal"]["phase"] == "teaching"
        teachable = flow["goal"]["teachable"]
        assert [t["turn"] for t in teachable] == [0]
        assert len(teachable[0]["following"]) == 2
        assert all(t["rendered_actions"] for t in teachable[0]["following"])

    def test_utterance_during_teaching_is_409(self, flow):
        assert flow["wrong_phase"].status_code == 409

    def test_invalid_span_is_422_and_keeps_phase(self, flow):
        assert flow["bad_teaching"].status_code == 422
        assert "not refused" in flow["bad_teaching"].json()["detail"]
        assert flow["state_after_bad"]["phase"] == "teaching"

    def test_teaching_response_and_replay(self, flow):
        _validate(flow["teaching"], "teaching")
        assert flow["teaching"]["accepted"] == 1
        assert flow["teaching"]["retraining_started"] is True
        assert flow["teaching"]["phase"] == "retraining"
        assert flow["teaching_replay"] == flow["teaching"]

    def test_retraining_grew_the_dataset(self, flow):
        _validate(flow["metrics_after"], "metrics")
        assert flow["metrics_after"]["version"] == 2
        assert flow["metrics_after"]["examples_taught"][:2] == [44, 45]

    def test_second_episode_regenerates_task(self, flow):
        assert flow["ep2_state"]["episode_index"] == 2
        _validate(flow["ep2_state"], "session")

    def test_taught_template_one_shots_episode_two(self, flow):
        payload = flow["one_shot"]
        assert payload["response_kind"] == "executed"
        assert len(payload["rendered_actions"]) == 4
        assert payload["goal_reached"] is True
        t2, _ = flow["ep2_names"]
        assert t2 in payload["rendered_actions"][0]

    def test_run_ends_after_last_episode(self, flow):
        assert flow["final_state"]["phase"] == "done"
        assert flow["final_state"]["episode_index"] == 2

    def test_log_labels_turns_with_episodes(self, flow):
        turns = flow["log"]["turns"]
        assert [t["episode"] for t in turns] == [1, 1, 1, 2]
        assert turns[0]["program"] is None

    def test_sse_stream_narrates_the_run(self, flow):
        events = flow["events"]
        names = [name for name, _ in events]
        assert names[0] == "phase"
        assert events[0][1]["phase"] == "interaction"

        turns = [data for name, data in events if name == "turn"]
        assert [t["response_kind"] for t in turns] == [
            "not_sure",
            "executed",
            "executed",
            "executed",
        ]

        phases = [data["phase"] for name, data in events if name == "phase"]
        assert phases == [
            "interaction",  # initial snapshot
            "teaching",
            "retraining",
            "interaction",  # episode 2
            "teaching",
            "retraining",
            "done",
        ]

        progress = [data for name, data in events if name == "retraining_progress"]
        finals = [p for p in progress if p.get("stage") == "done"]
        assert [p["version"] for p in finals] == [2, 3]
        assert finals[0]["examples"] == 45
        assert finals[1]["examples"] == 45  # teaching nothing adds nothing


class TestAbandon:
    def test_abandon_last_episode_finishes_run(self, client):
        sess = _new_session(client, episodes=1)
        sid = sess["session_id"]
        r = client.post(f"/sessions/{sid}/abandon")
        assert r.status_code == 200
        assert r.json() == {"phase": "done", "episode_index": 1}
        assert _say(client, sid, "hello").status_code == 409

    def test_abandon_midrun_starts_next_episode(self, client):
        sess = _new_session(client, episodes=3)
        sid = sess["session_id"]
        r = client.post(f"/sessions/{sid}/abandon").json()
        assert r == {"phase": "interaction", "episode_index": 2}
        state = client.get(f"/sessions/{sid}/state").json()
        assert state["episode_index"] == 2
        assert state["task"]["task_type"] == sess["task"]["task_type"]


class TestStaticClient:
    def test_static_dir_served_at_root(self, tmp_path):
        (tmp_path / "index.html").write_text("<title>client</title>")
        (tmp_path / "app.js").write_text("export {};")
        with TestClient(create_app(static_dir=tmp_path)) as c:
            root = c.get("/")
            assert root.status_code == 200
            assert "<title>client</title>" in root.text
            assert c.get("/app.js").text == "export {};"
            # API routes keep precedence over the static mount.
            assert c.post("/sessions", json={"task_type": "FoldLaundry"}).status_code == 400

    def test_without_static_dir_root_is_404(self, client):
        assert client.get("/").status_code == 404
