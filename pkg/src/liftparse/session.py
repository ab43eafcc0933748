"""Episode loop: interaction logging, teaching, retraining, and metrics.

A session pairs one user's model with a sequence of generated tasks.
During an episode the user submits utterances that are interpreted and
executed turn by turn; afterwards, refused utterances can be taught by
pointing at the contiguous span of actions that accomplished them, and
the model retrains on its whole history before the next episode starts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog
from .entity import lift_example
from .nn.pair import PairEmbeddingClassifier
from .nn.rerank import ProgramReranker, program_tokens
from .nn.serialize import load_params, save_params
from .parser import (
    ExemplarStore,
    ParserConfig,
    StoreEntry,
    calibrate_threshold,
    preprocess,
)
from .pipeline import CandidateSet, interpret, state_features
from .programs import LiftedProgram, PrimitiveAction, Program
from .tasks import Task, check_goal, generate_task
from .world import ExecError, WorldState, execute, render_action

NOT_SURE_MESSAGE = "I'm sorry - I don't understand!"


class InvalidSpan(ValueError):
    """A teaching span that is out of order, gappy, or covers a refusal."""


@dataclass(frozen=True)
class DataExample:
    """One lifted training example; the unit the store and trainer see."""

    utterance: str
    lifted_tokens: tuple[str, ...]
    lifted_program: LiftedProgram
    source: str = "seed"

    @property
    def processed(self) -> tuple[str, ...]:
        return preprocess(self.lifted_tokens)

    @property
    def key(self) -> tuple[str, str]:
        return (" ".join(self.lifted_tokens), self.lifted_program.to_text())

    def to_json(self) -> dict:
        return {
            "utterance": self.utterance,
            "lifted_tokens": list(self.lifted_tokens),
            "program": self.lifted_program.to_text(),
            "slot_count": self.lifted_program.slot_count,
            "source": self.source,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "DataExample":
        return cls(
            utterance=payload["utterance"],
            lifted_tokens=tuple(payload["lifted_tokens"]),
            lifted_program=LiftedProgram.from_text(
                payload["program"], slot_count=payload["slot_count"]
            ),
            source=payload.get("source", "seed"),
        )


@dataclass(frozen=True)
class TaughtExample:
    """A grounded (utterance, program) pair plus the state it was said in."""

    utterance: str
    program: Program
    state_before: WorldState


@dataclass(frozen=True)
class InteractionTurn:
    """One utterance and everything that happened because of it."""

    index: int
    utterance: str
    program: Program
    state_before: WorldState
    executed_actions: tuple[PrimitiveAction, ...] = ()
    error: "str | None" = None
    candidates: CandidateSet = field(default_factory=CandidateSet)

    @property
    def not_sure(self) -> bool:
        return self.program.not_sure

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "utterance": self.utterance,
            "program": None if self.program.not_sure else self.program.to_text(),
            "executed": [a.to_text() for a in self.executed_actions],
            "error": self.error,
            "state_before": self.state_before.to_json(),
            "candidates": [
                {
                    "program": c.program.to_text(),
                    "distance": c.distance,
                    "exemplar_ids": list(c.exemplar_ids),
                }
                for c in self.candidates.candidates
            ],
        }


@dataclass(frozen=True)
class TeachingAnnotation:
    """Maps a refused turn to the inclusive span of turns that solved it."""

    target_turn: int
    span: tuple[int, int]


@dataclass(frozen=True)
class SessionMetrics:
    """Per-episode series; the first examples_taught entry is the seed base."""

    examples_taught: tuple[int, ...]
    per_turn_complexity: tuple[float, ...]
    normalized_episode_length: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "examples_taught": list(self.examples_taught),
            "per_turn_complexity": list(self.per_turn_complexity),
            "normalized_episode_length": list(self.normalized_episode_length),
        }


@dataclass
class EpisodeRecord:
    index: int
    seed: int
    task: Task
    initial_state: WorldState
    turns: list[InteractionTurn] = field(default_factory=list)
    completed: bool = False
    examples_after: "int | None" = None


@dataclass
class UserModel:
    """Everything learned for one user: examples, parser, and reranker."""

    classifier: PairEmbeddingClassifier
    reranker: ProgramReranker
    dataset: list[DataExample]
    store: ExemplarStore
    catalog: Catalog
    version: int
    config: ParserConfig = field(default_factory=ParserConfig)

    @property
    def tau(self) -> float:
        return self.store.tau

    def interpret(self, utterance: str, state: WorldState):
        return interpret(utterance, state, self)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        arrays = {
            f"pair.{k}": v for k, v in self.classifier.param_arrays().items()
        }
        arrays.update(
            {f"rerank.{k}": v for k, v in self.reranker.param_arrays().items()}
        )
        save_params(
            directory / "params.bin",
            arrays,
            meta={
                "pair": _jsonable_params(self.classifier),
                "rerank": _jsonable_params(self.reranker),
            },
        )
        self.store.save(directory)
        with open(directory / "dataset.jsonl", "w") as fh:
            for ex in self.dataset:
                fh.write(json.dumps(ex.to_json()) + "\n")
        with open(directory / "meta.json", "w") as fh:
            json.dump(
                {
                    "version": self.version,
                    "tau": self.store.tau,
                    "examples": len(self.dataset),
                },
                fh,
                indent=2,
            )

    @classmethod
    def load(cls, directory, catalog: "Catalog | None" = None) -> "UserModel":
        directory = Path(directory)
        catalog = catalog or Catalog.load()
        with open(directory / "meta.json") as fh:
            meta = json.load(fh)
        arrays, params_meta = load_params(directory / "params.bin")
        classifier = PairEmbeddingClassifier(**params_meta["pair"])
        classifier.load_param_arrays(
            {
                k[len("pair.") :]: v
                for k, v in arrays.items()
                if k.startswith("pair.")
            }
        )
        reranker = ProgramReranker(**params_meta["rerank"])
        reranker.load_param_arrays(
            {
                k[len("rerank.") :]: v
                for k, v in arrays.items()
                if k.startswith("rerank.")
            }
        )
        dataset = []
        with open(directory / "dataset.jsonl") as fh:
            for line in fh:
                if line.strip():
                    dataset.append(DataExample.from_json(json.loads(line)))
        store = ExemplarStore.load(directory, version=meta["version"])
        return cls(
            classifier=classifier,
            reranker=reranker,
            dataset=dataset,
            store=store,
            catalog=catalog,
            version=meta["version"],
            config=store.config,
        )


def _jsonable_params(estimator) -> dict:
    out = {}
    for key, value in estimator.get_params().items():
        if value is None or isinstance(value, (int, float, str, bool)):
            out[key] = value
    return out


def fit_model(
    dataset: list[DataExample],
    catalog: Catalog,
    version: int,
    config: "ParserConfig | None" = None,
    reranker_turns: "list[InteractionTurn] | None" = None,
    progress=None,
) -> UserModel:
    """Train a complete UserModel from scratch on a dataset.

    Used both by the offline bootstrap (seed examples, no turns) and by
    per-user retraining (full history plus logged turns for the
    reranker).  Deterministic: fixed seeds, fresh parameters each call.
    ``progress`` is called with a stage name as each stage begins.
    """

    def report(stage: str) -> None:
        if progress is not None:
            progress(stage)

    config = config or ParserConfig()
    X = [ex.processed for ex in dataset]
    keys = [ex.lifted_program.to_text() for ex in dataset]
    report("training classifier")
    classifier = PairEmbeddingClassifier().fit(X, keys)
    report("calibrating threshold")
    embeddings = classifier.embed(X)
    tau = calibrate_threshold(embeddings, keys, config)
    report("rebuilding index")
    entries = [
        StoreEntry(
            tokens=ex.lifted_tokens,
            processed=ex.processed,
            program=ex.lifted_program,
            source=ex.source,
            example_id=i,
        )
        for i, ex in enumerate(dataset)
    ]
    store = ExemplarStore.build(entries, embeddings, tau, version, config)
    model = UserModel(
        classifier=classifier,
        reranker=ProgramReranker().fit([]),
        dataset=list(dataset),
        store=store,
        catalog=catalog,
        version=version,
        config=config,
    )
    report("training reranker")
    tuples = _reranker_tuples(model, reranker_turns or [])
    if tuples:
        model.reranker = ProgramReranker().fit(tuples)
    return model


def _reranker_tuples(model: UserModel, turns: list[InteractionTurn]) -> list:
    """Re-parse logged utterances; the executed program is the gold label.

    Turns whose fresh candidate set no longer contains what was executed
    are skipped rather than aborting training.
    """
    tuples = []
    for turn in turns:
        if turn.not_sure or not turn.executed_actions:
            continue
        gold = Program(actions=turn.executed_actions).to_text()
        _, cands = interpret(turn.utterance, turn.state_before, model)
        gold_idx = next(
            (
                i
                for i, c in enumerate(cands.candidates)
                if c.program.to_text() == gold
            ),
            None,
        )
        if gold_idx is None:
            continue
        tuples.append(
            (
                list(cands.utterance_tokens),
                [program_tokens(c.program) for c in cands.candidates],
                state_features(turn.state_before, cands.grounding, model.catalog),
                gold_idx,
            )
        )
    return tuples


def lift_taught(example: TaughtExample, catalog: Catalog) -> DataExample:
    lifted_u, lifted_p = lift_example(
        example.utterance,
        example.program,
        example.state_before,
        catalog.lexicon,
        catalog,
        catalog.max_phrase_words,
    )
    return DataExample(
        utterance=example.utterance,
        lifted_tokens=lifted_u.tokens,
        lifted_program=lifted_p,
        source="taught",
    )


def retrain(
    model: UserModel,
    new_examples: list[TaughtExample],
    logged_turns: "list[InteractionTurn] | None" = None,
    progress=None,
) -> UserModel:
    """Fold taught examples into the dataset and refit everything.

    The input model is never mutated; callers swap in the result, so a
    training failure leaves the old model serving.  The version advances
    exactly once per call, even with nothing new to learn.
    """
    if progress is not None:
        progress("lifting examples")
    dataset = list(model.dataset)
    seen = {ex.key for ex in dataset}
    for taught in new_examples:
        lifted = lift_taught(taught, model.catalog)
        if lifted.key in seen:
            continue
        seen.add(lifted.key)
        dataset.append(lifted)
    return fit_model(
        dataset,
        model.catalog,
        version=model.version + 1,
        config=model.config,
        reranker_turns=logged_turns or [],
        progress=progress,
    )


def collect_teachable(turns: list[InteractionTurn]) -> list[int]:
    """Refused turns worth teaching: some action followed them."""
    out = []
    for i, turn in enumerate(turns):
        if not turn.not_sure:
            continue
        if any(t.executed_actions for t in turns[i + 1 :]):
            out.append(i)
    return out


def apply_teaching(
    turns: list[InteractionTurn],
    annotations: list[TeachingAnnotation],
    dataset: list[DataExample],
    catalog: Catalog,
) -> list[TaughtExample]:
    """Turn span annotations into new grounded examples.

    The taught program is the concatenation of what the span's turns
    actually executed.  Examples whose lifted form already exists in the
    dataset (or repeats within this batch) are dropped.
    """
    spans: list[tuple[int, int]] = []
    for ann in annotations:
        start, end = ann.span
        if not (0 <= ann.target_turn < len(turns)):
            raise InvalidSpan(f"target turn {ann.target_turn} out of range")
        if not turns[ann.target_turn].not_sure:
            raise InvalidSpan(f"turn {ann.target_turn} was not refused")
        if start <= ann.target_turn:
            raise InvalidSpan("span must start after the refused turn")
        if end < start or end >= len(turns):
            raise InvalidSpan(f"span {ann.span} out of range")
        for k in range(start, end + 1):
            if turns[k].not_sure:
                raise InvalidSpan(f"span covers refused turn {k}")
        for other in spans:
            if start <= other[1] and other[0] <= end:
                raise InvalidSpan("teaching spans may not overlap")
        spans.append((start, end))

    existing = {ex.key for ex in dataset}
    out: list[TaughtExample] = []
    for ann in annotations:
        start, end = ann.span
        actions: list[PrimitiveAction] = []
        for k in range(start, end + 1):
            actions.extend(turns[k].executed_actions)
        if not actions:
            raise InvalidSpan("span contains no executed actions")
        target = turns[ann.target_turn]
        taught = TaughtExample(
            utterance=target.utterance,
            program=Program(actions=tuple(actions)),
            state_before=target.state_before,
        )
        key = lift_taught(taught, catalog).key
        if key in existing:
            continue
        existing.add(key)
        out.append(taught)
    return out


def compute_metrics(
    episodes: list[EpisodeRecord], initial_examples: int
) -> SessionMetrics:
    examples = [initial_examples]
    complexity = []
    lengths = []
    for ep in episodes:
        examples.append(
            ep.examples_after if ep.examples_after is not None else examples[-1]
        )
        if ep.turns:
            complexity.append(
                sum(t.program.complexity for t in ep.turns) / len(ep.turns)
            )
        else:
            complexity.append(0.0)
        lengths.append(len(ep.turns) / ep.task.min_primitives)
    return SessionMetrics(
        examples_taught=tuple(examples),
        per_turn_complexity=tuple(complexity),
        normalized_episode_length=tuple(lengths),
    )


class Session:
    """One user's run of consecutive episodes on a single task type."""

    def __init__(
        self,
        model: UserModel,
        task_type: str,
        seed: int,
        user_id: str = "local",
    ):
        self.model = model
        self.task_type = task_type
        self.base_seed = seed
        self.user_id = user_id
        self.episodes: list[EpisodeRecord] = []
        self.state: "WorldState | None" = None
        self.task: "Task | None" = None
        self._active = False
        self.initial_examples = len(model.dataset)

    def episode_seed(self, index: int) -> int:
        return self.base_seed * 1000 + index

    def start_episode(self) -> EpisodeRecord:
        if self._active:
            raise RuntimeError("an episode is already active")
        index = len(self.episodes) + 1
        seed = self.episode_seed(index)
        world, task = generate_task(self.task_type, seed, self.model.catalog)
        record = EpisodeRecord(
            index=index, seed=seed, task=task, initial_state=world
        )
        self.episodes.append(record)
        self.state = world
        self.task = task
        self._active = True
        return record

    @property
    def current_episode(self) -> EpisodeRecord:
        if not self.episodes:
            raise RuntimeError("no episode started")
        return self.episodes[-1]

    @property
    def turns(self) -> list[InteractionTurn]:
        return self.current_episode.turns

    def all_turns(self) -> list[InteractionTurn]:
        return [t for ep in self.episodes for t in ep.turns]

    def submit_utterance(self, text: str) -> tuple[InteractionTurn, list[str]]:
        """Interpret and execute one utterance; returns the turn + messages."""
        if not self._active:
            raise RuntimeError("no active episode")
        state_before = self.state
        program, candidates = self.model.interpret(text, state_before)
        executed: list[PrimitiveAction] = []
        error: "str | None" = None
        messages: list[str] = []
        if program.not_sure:
            messages.append(NOT_SURE_MESSAGE)
        else:
            state = state_before
            for action in program.actions:
                try:
                    state = execute(state, action, self.model.catalog)
                except ExecError as exc:
                    error = str(exc)
                    messages.append(f"(stopped: {error})")
                    break
                executed.append(action)
                messages.append(render_action(action, self.model.catalog))
            self.state = state
        turn = InteractionTurn(
            index=len(self.turns),
            utterance=text,
            program=program,
            state_before=state_before,
            executed_actions=tuple(executed),
            error=error,
            candidates=candidates,
        )
        self.turns.append(turn)
        return turn, messages

    def goal_reached(self) -> bool:
        if self.state is None or self.task is None:
            return False
        return check_goal(self.state, self.task, self.model.catalog)

    def finish_episode(self) -> EpisodeRecord:
        record = self.current_episode
        record.completed = self.goal_reached()
        self._active = False
        return record

    def collect_teachable(self) -> list[int]:
        return collect_teachable(self.turns)

    def apply_teaching(
        self, annotations: list[TeachingAnnotation]
    ) -> list[TaughtExample]:
        """Validate annotations against the current episode's log."""
        return apply_teaching(
            self.turns, annotations, self.model.dataset, self.model.catalog
        )

    def retrain_with(
        self, examples: list[TaughtExample], progress=None
    ) -> UserModel:
        """Retrain on full history plus the taught examples; swap in."""
        self.model = retrain(self.model, examples, self.all_turns(), progress)
        self.current_episode.examples_after = len(self.model.dataset)
        return self.model

    def teach_and_retrain(
        self, annotations: list[TeachingAnnotation]
    ) -> tuple[int, UserModel]:
        """Apply annotations, retrain on full history, swap the model in."""
        examples = self.apply_teaching(annotations)
        self.retrain_with(examples)
        return len(examples), self.model

    def metrics(self) -> SessionMetrics:
        return compute_metrics(self.episodes, self.initial_examples)

    def save_log(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            for ep in self.episodes:
                for turn in ep.turns:
                    row = turn.to_json()
                    row["episode"] = ep.index
                    fh.write(json.dumps(row) + "\n")
