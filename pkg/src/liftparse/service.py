"""HTTP service exposing sessions to the web client and scripted users.

Each API session owns one user model and walks a fixed phase machine:
interaction (submit utterances) → teaching (annotate refused turns) →
retraining (runs off the request path, progress over SSE) → interaction
with the next generated task, until the final episode flips it to done.
"""
from __future__ import annotations

import json
import queue
import threading
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .bootstrap import load_seed_model
from .catalog import Catalog
from .session import (
    NOT_SURE_MESSAGE,
    InvalidSpan,
    Session,
    TeachingAnnotation,
)
from .tasks import TASK_TYPES, task_instruction
from .world import WorldState, render_action

DEFAULT_EPISODES = 5

PHASE_INTERACTION = "interaction"
PHASE_TEACHING = "teaching"
PHASE_RETRAINING = "retraining"
PHASE_DONE = "done"


class CreateSessionRequest(BaseModel):
    task_type: str
    seed: int = 0
    episodes: int = DEFAULT_EPISODES


class UtteranceRequest(BaseModel):
    text: str
    request_id: "str | None" = None


class AnnotationPayload(BaseModel):
    target_turn: int
    span: tuple[int, int]


class TeachingRequest(BaseModel):
    annotations: list[AnnotationPayload] = []
    request_id: "str | None" = None


class _EventBus:
    """Fan-out of session events to any number of SSE subscribers."""

    def __init__(self) -> None:
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, event: str, data: dict) -> None:
        with self._lock:
            for q in self._subscribers:
                q.put((event, data))


@dataclass
class ApiSession:
    session_id: str
    session: Session
    episodes_total: int
    phase: str = PHASE_INTERACTION
    lock: threading.Lock = field(default_factory=threading.Lock)
    bus: _EventBus = field(default_factory=_EventBus)
    responses: dict[str, dict] = field(default_factory=dict)

    @property
    def episode_index(self) -> int:
        return len(self.session.episodes)

    def set_phase(self, phase: str) -> None:
        self.phase = phase
        self.bus.publish(
            "phase",
            {"phase": phase, "episode_index": self.episode_index},
        )


def _world_json(state: WorldState) -> dict:
    return state.to_json()


def _world_delta(before: WorldState, after: WorldState) -> dict:
    """Objects and agent fields that changed; enough to animate the UI."""
    prior = {o.id: o for o in before.objects}
    changed = [
        o.to_json()
        for o in after.objects
        if prior.get(o.id) != o
    ]
    delta: dict = {"objects": changed}
    if before.agent_position != after.agent_position:
        delta["agent_position"] = list(after.agent_position)
    if before.held != after.held:
        delta["held"] = after.held
    return delta


def _task_json(api: ApiSession) -> dict:
    task = api.session.task
    payload = task.to_json()
    payload["instruction"] = task_instruction(task, api.session.model.catalog)
    return payload


def _session_json(api: ApiSession) -> dict:
    return {
        "session_id": api.session_id,
        "user_id": api.session.user_id,
        "task_type": api.session.task_type,
        "episode_index": api.episode_index,
        "episodes_total": api.episodes_total,
        "phase": api.phase,
        "task": _task_json(api),
        "world": _world_json(api.session.state),
    }


def _teachable_json(api: ApiSession) -> list[dict]:
    turns = api.session.turns
    out = []
    for idx in api.session.collect_teachable():
        followers = [
            {
                "turn": t.index,
                "utterance": t.utterance,
                "rendered_actions": [
                    render_action(a, api.session.model.catalog)
                    for a in t.executed_actions
                ],
            }
            for t in turns[idx + 1 :]
            if t.executed_actions
        ]
        out.append(
            {
                "turn": idx,
                "utterance": turns[idx].utterance,
                "following": followers,
            }
        )
    return out


def create_app(
    seed_checkpoint=None,
    catalog_path=None,
    data_dir=None,
    episodes: int = DEFAULT_EPISODES,
    static_dir=None,
) -> FastAPI:
    app = FastAPI(title="decomposition-teaching service")
    catalog = Catalog.load(catalog_path)
    registry: dict[str, ApiSession] = {}
    registry_lock = threading.Lock()
    app.state.registry = registry
    app.state.data_dir = data_dir

    def get_api(session_id: str) -> ApiSession:
        api = registry.get(session_id)
        if api is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return api

    def require_phase(api: ApiSession, phase: str) -> None:
        if api.phase != phase:
            raise HTTPException(
                status_code=409,
                detail=f"session is in phase {api.phase!r}, not {phase!r}",
            )

    @app.post("/sessions")
    def create_session(body: CreateSessionRequest):
        if body.task_type not in TASK_TYPES:
            raise HTTPException(
                status_code=400,
                detail=f"unknown task type {body.task_type!r}",
            )
        model = load_seed_model(seed_checkpoint, catalog=catalog)
        session = Session(
            model,
            body.task_type,
            seed=body.seed,
            user_id=f"user-{uuid.uuid4().hex[:8]}",
        )
        session.start_episode()
        api = ApiSession(
            session_id=uuid.uuid4().hex,
            session=session,
            episodes_total=body.episodes,
        )
        with registry_lock:
            registry[api.session_id] = api
        return _session_json(api)

    @app.get("/sessions/{session_id}/state")
    def get_state(session_id: str):
        api = get_api(session_id)
        with api.lock:
            payload = _session_json(api)
            payload["goal_reached"] = api.session.goal_reached()
            payload["metrics"] = api.session.metrics().to_json()
            if api.phase == PHASE_TEACHING:
                payload["teachable"] = _teachable_json(api)
            return payload

    @app.post("/sessions/{session_id}/utterance")
    def post_utterance(session_id: str, body: UtteranceRequest):
        api = get_api(session_id)
        with api.lock:
            if body.request_id and body.request_id in api.responses:
                return api.responses[body.request_id]
            require_phase(api, PHASE_INTERACTION)
            before = api.session.state
            turn, messages = api.session.submit_utterance(body.text)
            goal = api.session.goal_reached()
            payload = {
                "response_kind": "not_sure" if turn.not_sure else "executed",
                "message": NOT_SURE_MESSAGE if turn.not_sure else None,
                "turn": turn.index,
                "program": None if turn.not_sure else turn.program.to_text(),
                "rendered_actions": [
                    render_action(a, api.session.model.catalog)
                    for a in turn.executed_actions
                ],
                "error": turn.error,
                "world_delta": _world_delta(before, api.session.state),
                "goal_reached": goal,
                "metrics": api.session.metrics().to_json(),
                "phase": api.phase,
            }
            api.bus.publish(
                "turn",
                {
                    "turn": turn.index,
                    "utterance": body.text,
                    "response_kind": payload["response_kind"],
                },
            )
            if goal:
                api.session.finish_episode()
                api.set_phase(PHASE_TEACHING)
                payload["phase"] = api.phase
                payload["teachable"] = _teachable_json(api)
            if body.request_id:
                api.responses[body.request_id] = payload
            return payload

    @app.post("/sessions/{session_id}/abandon")
    def abandon_episode(session_id: str):
        api = get_api(session_id)
        with api.lock:
            require_phase(api, PHASE_INTERACTION)
            api.session.finish_episode()
            _advance(api)
            return {"phase": api.phase, "episode_index": api.episode_index}

    def _advance(api: ApiSession) -> None:
        """Move to the next episode, or close out the run."""
        if api.episode_index >= api.episodes_total:
            api.set_phase(PHASE_DONE)
        else:
            api.session.start_episode()
            api.set_phase(PHASE_INTERACTION)

    @app.post("/sessions/{session_id}/teaching")
    def post_teaching(session_id: str, body: TeachingRequest):
        api = get_api(session_id)
        with api.lock:
            if body.request_id and body.request_id in api.responses:
                return api.responses[body.request_id]
            require_phase(api, PHASE_TEACHING)
            annotations = [
                TeachingAnnotation(target_turn=a.target_turn, span=tuple(a.span))
                for a in body.annotations
            ]
            try:
                examples = api.session.apply_teaching(annotations)
            except InvalidSpan as exc:
                raise HTTPException(status_code=422, detail=str(exc))
            api.set_phase(PHASE_RETRAINING)
            payload = {
                "accepted": len(examples),
                "retraining_started": True,
                "phase": api.phase,
            }
            if body.request_id:
                api.responses[body.request_id] = payload

        def job() -> None:
            def progress(stage: str) -> None:
                api.bus.publish("retraining_progress", {"stage": stage})

            api.session.retrain_with(examples, progress=progress)
            api.bus.publish(
                "retraining_progress",
                {
                    "stage": "done",
                    "version": api.session.model.version,
                    "examples": len(api.session.model.dataset),
                },
            )
            with api.lock:
                _advance(api)

        threading.Thread(target=job, daemon=True).start()
        return payload

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        api = get_api(session_id)
        with api.lock:
            payload = api.session.metrics().to_json()
            payload["version"] = api.session.model.version
            return payload

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str):
        api = get_api(session_id)
        with api.lock:
            return {
                "turns": [
                    dict(t.to_json(), episode=ep.index)
                    for ep in api.session.episodes
                    for t in ep.turns
                ]
            }

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str):
        api = get_api(session_id)
        q = api.bus.subscribe()

        def stream():
            try:
                yield _sse("phase", {
                    "phase": api.phase,
                    "episode_index": api.episode_index,
                })
                idle = 0
                while idle < 600:  # give up after ~10 min of silence
                    try:
                        event, data = q.get(timeout=1.0)
                        idle = 0
                        yield _sse(event, data)
                        if event == "phase" and data.get("phase") == PHASE_DONE:
                            break
                    except queue.Empty:
                        idle += 1
                        yield ": keep-alive\n\n"
            finally:
                api.bus.unsubscribe(q)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if static_dir is not None:
        # The web client; mounted last so API routes keep precedence.
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app


def _sse(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


# The documented response shapes; tests validate live payloads against
# these, and the web client is written to exactly this contract.
SCHEMAS: dict[str, dict] = {
    "session": {
        "type": "object",
        "required": [
            "session_id",
            "user_id",
            "task_type",
            "episode_index",
            "episodes_total",
            "phase",
            "task",
            "world",
        ],
        "properties": {
            "session_id": {"type": "string"},
            "user_id": {"type": "string"},
            "task_type": {"type": "string"},
            "episode_index": {"type": "integer", "minimum": 1},
            "episodes_total": {"type": "integer", "minimum": 1},
            "phase": {
                "type": "string",
                "enum": [
                    PHASE_INTERACTION,
                    PHASE_TEACHING,
                    PHASE_RETRAINING,
                    PHASE_DONE,
                ],
            },
            "task": {"type": "object"},
            "world": {"type": "object"},
        },
    },
    "utterance": {
        "type": "object",
        "required": [
            "response_kind",
            "turn",
            "rendered_actions",
            "world_delta",
            "goal_reached",
            "metrics",
            "phase",
        ],
        "properties": {
            "response_kind": {
                "type": "string",
                "enum": ["executed", "not_sure"],
            },
            "message": {"type": ["string", "null"]},
            "turn": {"type": "integer", "minimum": 0},
            "program": {"type": ["string", "null"]},
            "rendered_actions": {
                "type": "array",
                "items": {"type": "string"},
            },
            "error": {"type": ["string", "null"]},
            "world_delta": {
                "type": "object",
                "required": ["objects"],
                "properties": {
                    "objects": {"type": "array", "items": {"type": "object"}},
                    "agent_position": {
                        "type": "array",
                        "items": {"type": "integer"},
                    },
                    "held": {"type": ["string", "null"]},
                },
            },
            "goal_reached": {"type": "boolean"},
            "metrics": {"$ref": "#/definitions/metrics"},
            "phase": {"type": "string"},
            "teachable": {"type": "array"},
        },
        "definitions": {
            "metrics": {
                "type": "object",
                "required": [
                    "examples_taught",
                    "per_turn_complexity",
                    "normalized_episode_length",
                ],
                "properties": {
                    "examples_taught": {
                        "type": "array",
                        "items": {"type": "integer"},
                    },
                    "per_turn_complexity": {
                        "type": "array",
                        "items": {"type": "number"},
                    },
                    "normalized_episode_length": {
                        "type": "array",
                        "items": {"type": "number"},
                    },
                },
            }
        },
    },
    "teaching": {
        "type": "object",
        "required": ["accepted", "retraining_started", "phase"],
        "properties": {
            "accepted": {"type": "integer", "minimum": 0},
            "retraining_started": {"type": "boolean"},
            "phase": {"type": "string"},
        },
    },
    "metrics": {
        "type": "object",
        "required": [
            "examples_taught",
            "per_turn_complexity",
            "normalized_episode_length",
            "version",
        ],
        "properties": {
            "examples_taught": {"type": "array", "items": {"type": "integer"}},
            "per_turn_complexity": {
                "type": "array",
                "items": {"type": "number"},
            },
            "normalized_episode_length": {
                "type": "array",
                "items": {"type": "number"},
            },
            "version": {"type": "integer", "minimum": 1},
        },
    },
}
