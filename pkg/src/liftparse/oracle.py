"""A deterministic scripted user that exercises the whole teaching loop.

The oracle plays the way study participants did: it opens each episode
with a high-level command, decomposes it into seed-coverable steps when
the system refuses, teaches the refused utterance after the episode,
and leads with the taught command (re-grounded to the new episode's
objects) from then on.  Its transcripts are reproducible bit for bit,
so any deviation points at the system, not the script.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import Catalog
from .session import (
    Session,
    SessionMetrics,
    TeachingAnnotation,
    UserModel,
)
from .tasks import TASK_TYPES, Task

# Novel high-level commands no seed exemplar covers: the refusal battery.
# Each names a process or object outside the primitive vocabulary; none
# contains "and", so each is retrieved as a single substring.
NOVEL_PROBES: tuple[str, ...] = (
    "wash the coffee mug",
    "rinse the plate under the faucet",
    "tidy up the coffee table",
    "sweep the floor under the dining table",
    "boil some water for the pasta",
    "vacuum the living room floor",
    "dust the shelf in the corner",
    "slice the bread for breakfast",
    "warm up the soup on the stove",
    "make me a cup of coffee",
    "water the plant by the window",
)


class ProtocolStuck(RuntimeError):
    """The oracle could not finish a task it has a script for."""


@dataclass(frozen=True)
class OracleScript:
    """Utterance templates for one task type; {t}/{d}/{v} are filled in.

    ``decomposition`` implements the high-level command step by step and
    becomes the taught span; ``finish`` completes the task afterwards.
    Both stay within seed-coverable phrasing.
    """

    high_level: str
    decomposition: tuple[str, ...]
    finish: tuple[str, ...] = ()


SCRIPTS: dict[str, OracleScript] = {
    "PickAndPlace": OracleScript(
        high_level="bring the {t} to the {d}",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the {d} and put the {t} on the {d}",
        ),
    ),
    "PickTwoAndPlace": OracleScript(
        high_level="stock the {d} with the {t}",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the {d} and put the {t} on the {d}",
            "go to the {t} and pick it up",
            "go to the {d} and put the {t} on the {d}",
        ),
    ),
    "LookAtInLight": OracleScript(
        high_level="examine the {t} under the lamp",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the lamp and turn on the lamp",
        ),
    ),
    "NestedPickAndPlace": OracleScript(
        high_level="nest the {t} in the {v} on the {d}",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the {v} and put the {t} in the {v}",
            "pick up the {v}",
            "go to the {d} and put the {v} on the {d}",
        ),
    ),
    "PickCleanPlace": OracleScript(
        high_level="wash the {t}",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the sink and put it inside",
            "turn on the faucet",
            "turn off the faucet",
        ),
        finish=(
            "pick up the {t}",
            "go to the {d} and put the {t} on the {d}",
        ),
    ),
    "PickHeatPlace": OracleScript(
        high_level="heat the {t}",
        decomposition=(
            "go to the {t} and pick it up",
            "go to the microwave and open it",
            "put the {t} in the microwave",
            "turn on the microwave",
        ),
        finish=(
            "pick up the {t}",
            "go to the {d} and put the {t} on the {d}",
        ),
    ),
    "PickCoolPlace": OracleScript(
        high_level="chill the {t}",
        decomposition=(
            "go to the cabinet and open it",
            "pick up the {t}",
            "go to the fridge and open it",
            "put the {t} in the fridge and close the fridge",
            "open the fridge and pick up the {t}",
            "close the fridge",
        ),
        finish=("go to the {d} and put the {t} on the {d}",),
    ),
}


@dataclass
class ProtocolResult:
    task_type: str
    seed: int
    metrics: SessionMetrics
    transcript: list[dict] = field(default_factory=list)
    session: "Session | None" = None

    def save(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{self.task_type}_seed{self.seed}"
        with open(out_dir / f"{stem}_transcript.jsonl", "w") as fh:
            for row in self.transcript:
                fh.write(json.dumps(row) + "\n")
        with open(out_dir / f"{stem}_metrics.json", "w") as fh:
            json.dump(self.metrics.to_json(), fh, indent=2)


def _task_names(
    task: Task, catalog: Catalog, alternate: bool
) -> dict[str, str]:
    def name(type_name: "str | None") -> str:
        if type_name is None:
            return ""
        names = catalog[type_name].typical_names
        return names[1] if alternate and len(names) > 1 else names[0]

    return {"t": name(task.target), "d": name(task.destination), "v": name(task.via)}


def run_protocol(
    task_type: str,
    episodes: int = 5,
    seed: int = 0,
    model: "UserModel | None" = None,
    lexical_variation: bool = False,
) -> ProtocolResult:
    """Play the scripted user for a run of consecutive episodes.

    Raises ProtocolStuck if a scripted utterance is refused, the goal is
    not reached, or an episode exceeds ten times the primitive budget.
    """
    if task_type not in TASK_TYPES:
        raise ValueError(f"unknown task type {task_type!r}")
    script = SCRIPTS[task_type]
    if model is None:
        from .bootstrap import load_seed_model

        model = load_seed_model()
    session = Session(model, task_type, seed=seed, user_id=f"oracle-{seed}")
    transcript: list[dict] = []

    for episode in range(1, episodes + 1):
        record = session.start_episode()
        budget = 10 * record.task.min_primitives
        # Synonym substitution only probes reuse, so it starts after the
        # template was taught under the primary name.
        names = _task_names(
            record.task, model.catalog, lexical_variation and episode > 1
        )

        def say(template: str, must_parse: bool) -> bool:
            text = template.format(**names)
            if len(session.turns) >= budget:
                raise ProtocolStuck(
                    f"{task_type} episode {episode}: budget of "
                    f"{budget} utterances exhausted"
                )
            turn, messages = session.submit_utterance(text)
            transcript.append(
                {
                    "episode": episode,
                    "turn": turn.index,
                    "utterance": text,
                    "program": None
                    if turn.not_sure
                    else turn.program.to_text(),
                    "messages": messages,
                }
            )
            if turn.not_sure and must_parse:
                raise ProtocolStuck(
                    f"{task_type} episode {episode}: scripted utterance "
                    f"{text!r} was refused"
                )
            if turn.error:
                raise ProtocolStuck(
                    f"{task_type} episode {episode}: execution stopped "
                    f"({turn.error})"
                )
            return not turn.not_sure

        taught_span: "tuple[int, int] | None" = None
        if not say(script.high_level, must_parse=False):
            start = len(session.turns)
            for template in script.decomposition:
                say(template, must_parse=True)
            taught_span = (start, len(session.turns) - 1)
        for template in script.finish:
            say(template, must_parse=True)
        if not session.goal_reached():
            raise ProtocolStuck(
                f"{task_type} episode {episode}: goal not reached"
            )
        session.finish_episode()
        annotations = (
            [TeachingAnnotation(target_turn=0, span=taught_span)]
            if taught_span
            else []
        )
        session.teach_and_retrain(annotations)

    return ProtocolResult(
        task_type=task_type,
        seed=seed,
        metrics=session.metrics(),
        transcript=transcript,
        session=session,
    )


METRIC_NAMES = (
    "examples_taught",
    "per_turn_complexity",
    "normalized_episode_length",
)


def write_metrics_csv(results: "list[ProtocolResult]", path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task_type", "seed", "episode", *METRIC_NAMES])
        for res in results:
            m = res.metrics
            for i, (complexity, length) in enumerate(
                zip(m.per_turn_complexity, m.normalized_episode_length)
            ):
                writer.writerow(
                    [
                        res.task_type,
                        res.seed,
                        i + 1,
                        m.examples_taught[i + 1],
                        f"{complexity:.6f}",
                        f"{length:.6f}",
                    ]
                )


def emit_plots(results: "list[ProtocolResult]", out_dir) -> list[Path]:
    """Three-panel metric chart plus a CSV; deterministic output bytes."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "liftparse"
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    csv_path = out_dir / "metrics.csv"
    write_metrics_csv(results, csv_path)

    titles = {
        "examples_taught": "Examples taught",
        "per_turn_complexity": "Per-turn program complexity",
        "normalized_episode_length": "Normalized episode length",
    }
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, metric in zip(axes, METRIC_NAMES):
        for res in results:
            m = res.metrics
            if metric == "examples_taught":
                xs = list(range(len(m.examples_taught)))
                ys = list(m.examples_taught)
            else:
                ys = list(getattr(m, metric))
                xs = list(range(1, len(ys) + 1))
            ax.plot(xs, ys, marker="o", label=f"{res.task_type} (seed {res.seed})")
        ax.set_xlabel("episode")
        ax.set_title(titles[metric])
        ax.grid(True, alpha=0.3)
    if results:
        axes[0].legend(fontsize=7)
    fig.tight_layout()
    svg_path = out_dir / "metrics.svg"
    fig.savefig(svg_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return [svg_path, csv_path]
