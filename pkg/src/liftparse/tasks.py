"""Task sampling, goal predicates, and reference solutions.

Each task type carries the length of its shortest known solution
(``min_primitives``); ``reference_solution`` produces a script of exactly
that length, which the tests replay to prove every sampled world is
solvable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import Catalog
from .programs import PrimitiveAction
from .world import ObjectInstance, WorldState

TASK_TYPES: tuple[str, ...] = (
    "PickAndPlace",
    "PickTwoAndPlace",
    "LookAtInLight",
    "NestedPickAndPlace",
    "PickCleanPlace",
    "PickHeatPlace",
    "PickCoolPlace",
)

MIN_PRIMITIVES: dict[str, int] = {
    "PickAndPlace": 4,
    "PickTwoAndPlace": 8,
    "LookAtInLight": 4,
    "NestedPickAndPlace": 7,
    "PickCleanPlace": 8,
    "PickHeatPlace": 9,
    "PickCoolPlace": 12,
}

_N_DISTRACTORS = 3


@dataclass(frozen=True)
class Task:
    task_type: str
    target: str
    destination: str
    via: "str | None" = None

    def __post_init__(self) -> None:
        if self.task_type not in TASK_TYPES:
            raise ValueError(f"unknown task type {self.task_type!r}")

    @property
    def min_primitives(self) -> int:
        return MIN_PRIMITIVES[self.task_type]

    def to_json(self) -> dict:
        return {
            "task_type": self.task_type,
            "target": self.target,
            "destination": self.destination,
            "via": self.via,
            "min_primitives": self.min_primitives,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "Task":
        return cls(
            task_type=payload["task_type"],
            target=payload["target"],
            destination=payload["destination"],
            via=payload.get("via"),
        )


def task_instruction(task: Task, catalog: Catalog) -> str:
    """One-sentence description shown to the user at episode start."""
    t = catalog[task.target].display_name
    d = catalog[task.destination].display_name
    if task.task_type == "PickAndPlace":
        return f"Put the {t} on the {d}."
    if task.task_type == "PickTwoAndPlace":
        return f"Put two {t}s on the {d}."
    if task.task_type == "LookAtInLight":
        return f"Hold the {t} up to the lit desk lamp."
    if task.task_type == "NestedPickAndPlace":
        m = catalog[task.via].display_name
        return f"Put the {t} in the {m}, then put the {m} on the {d}."
    if task.task_type == "PickCleanPlace":
        return f"Wash the {t} in the sink, then put it on the {d}."
    if task.task_type == "PickHeatPlace":
        return f"Heat the {t} in the microwave, then put it on the {d}."
    return (
        f"Chill the {t} from the cabinet in the fridge, put it on the {d}, "
        f"and leave the fridge closed."
    )


def generate_task(
    task_type: str, seed: int, catalog: Catalog
) -> tuple[WorldState, Task]:
    """Sample a solvable world and task deterministically from the seed."""
    if task_type not in TASK_TYPES:
        raise ValueError(f"unknown task type {task_type!r}")
    rng = np.random.default_rng([seed, TASK_TYPES.index(task_type)])
    pools = catalog.task_pools[task_type]
    target = pools["targets"][int(rng.integers(len(pools["targets"])))]
    destination = pools["destinations"][
        int(rng.integers(len(pools["destinations"])))
    ]
    via = None
    if task_type == "NestedPickAndPlace":
        via = pools["via"][int(rng.integers(len(pools["via"])))]
    task = Task(task_type=task_type, target=target, destination=destination, via=via)

    involved = {target, destination, via} - {None}
    distractor_pool = [
        t.name for t in catalog.pickables() if t.name not in involved
    ]
    picks = rng.permutation(len(distractor_pool))[:_N_DISTRACTORS]
    distractors = [distractor_pool[int(i)] for i in picks]

    fixtures = catalog.fixtures()
    n = catalog.grid_size
    cells = [(int(x), int(y)) for x in range(n) for y in range(n)]
    order = rng.permutation(len(cells))
    cell_iter = iter(cells[int(i)] for i in order)

    objects: list[ObjectInstance] = []
    counters: dict[str, int] = {}

    def spawn(type_name: str, position, **flags) -> ObjectInstance:
        k = counters.get(type_name, 0)
        counters[type_name] = k + 1
        inst = ObjectInstance(
            id=f"{type_name.lower()}_{k}",
            type_name=type_name,
            position=position,
            **flags,
        )
        objects.append(inst)
        return inst

    sink_pos = None
    for ft in fixtures:
        if ft.name == "Faucet":
            continue  # placed on the sink below
        pos = next(cell_iter)
        spawn(ft.name, pos)
        if ft.name == "Sink":
            sink_pos = pos
    spawn("Faucet", sink_pos)

    by_type = {o.type_name: o for o in objects}

    n_targets = 2 if task_type == "PickTwoAndPlace" else 1
    for _ in range(n_targets):
        if task_type == "PickCoolPlace":
            cab = by_type["Cabinet"]
            spawn(target, cab.position, contained_in=cab.id)
        elif task_type == "PickCleanPlace":
            spawn(target, next(cell_iter), dirty=True)
        else:
            spawn(target, next(cell_iter))
    if via is not None:
        spawn(via, next(cell_iter))
    for d in distractors:
        spawn(d, next(cell_iter))

    agent_pos = next(cell_iter)
    state = WorldState(
        grid_size=n, agent_position=agent_pos, objects=tuple(objects)
    )
    return state, task


def check_goal(state: WorldState, task: Task, catalog: Catalog) -> bool:
    dest_ids = {o.id for o in state.instances_of(task.destination)}
    targets = state.instances_of(task.target)

    if task.task_type == "PickAndPlace":
        return any(o.contained_in in dest_ids for o in targets)
    if task.task_type == "PickTwoAndPlace":
        placed = [o for o in targets if o.contained_in in dest_ids]
        return len(placed) >= 2
    if task.task_type == "LookAtInLight":
        lamps_on = any(o.toggled for o in state.instances_of("DeskLamp"))
        held = state.held_object()
        return lamps_on and held is not None and held.type_name == task.target
    if task.task_type == "NestedPickAndPlace":
        via_ids = {o.id for o in state.instances_of(task.via)}
        inner = any(o.contained_in in via_ids for o in targets)
        outer = any(
            o.contained_in in dest_ids for o in state.instances_of(task.via)
        )
        return inner and outer
    if task.task_type == "PickCleanPlace":
        return any(
            not o.dirty and o.contained_in in dest_ids for o in targets
        )
    if task.task_type == "PickHeatPlace":
        return any(o.hot and o.contained_in in dest_ids for o in targets)
    if task.task_type == "PickCoolPlace":
        fridges_closed = all(
            not o.open for o in state.instances_of("Fridge")
        )
        return fridges_closed and any(
            o.cold and o.contained_in in dest_ids for o in targets
        )
    raise ValueError(f"unknown task type {task.task_type!r}")


def reference_solution(task: Task) -> list[PrimitiveAction]:
    """Shortest known action script; length equals ``task.min_primitives``."""
    A = PrimitiveAction
    t, d = task.target, task.destination
    if task.task_type == "PickAndPlace":
        return [A("GOTO", (t,)), A("PICKUP", (t,)), A("GOTO", (d,)), A("PUT", (t, d))]
    if task.task_type == "PickTwoAndPlace":
        leg = [A("GOTO", (t,)), A("PICKUP", (t,)), A("GOTO", (d,)), A("PUT", (t, d))]
        return leg + leg
    if task.task_type == "LookAtInLight":
        return [
            A("GOTO", (t,)),
            A("PICKUP", (t,)),
            A("GOTO", ("DeskLamp",)),
            A("TOGGLE", ("DeskLamp",)),
        ]
    if task.task_type == "NestedPickAndPlace":
        m = task.via
        return [
            A("GOTO", (t,)),
            A("PICKUP", (t,)),
            A("GOTO", (m,)),
            A("PUT", (t, m)),
            A("PICKUP", (m,)),
            A("GOTO", (d,)),
            A("PUT", (m, d)),
        ]
    if task.task_type == "PickCleanPlace":
        return [
            A("GOTO", (t,)),
            A("PICKUP", (t,)),
            A("GOTO", ("Sink",)),
            A("PUT", (t, "Sink")),
            A("TOGGLE", ("Faucet",)),
            A("PICKUP", (t,)),
            A("GOTO", (d,)),
            A("PUT", (t, d)),
        ]
    if task.task_type == "PickHeatPlace":
        return [
            A("GOTO", (t,)),
            A("PICKUP", (t,)),
            A("GOTO", ("Microwave",)),
            A("OPEN", ("Microwave",)),
            A("PUT", (t, "Microwave")),
            A("TOGGLE", ("Microwave",)),
            A("PICKUP", (t,)),
            A("GOTO", (d,)),
            A("PUT", (t, d)),
        ]
    if task.task_type == "PickCoolPlace":
        return [
            A("GOTO", ("Cabinet",)),
            A("OPEN", ("Cabinet",)),
            A("PICKUP", (t,)),
            A("GOTO", ("Fridge",)),
            A("OPEN", ("Fridge",)),
            A("PUT", (t, "Fridge")),
            A("CLOSE", ("Fridge",)),
            A("OPEN", ("Fridge",)),
            A("PICKUP", (t,)),
            A("CLOSE", ("Fridge",)),
            A("GOTO", (d,)),
            A("PUT", (t, d)),
        ]
    raise ValueError(f"unknown task type {task.task_type!r}")
