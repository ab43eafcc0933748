"""Grid-world household simulator.

States are value objects: ``execute`` returns a new state and never
mutates its input.  Action argument types are bound to concrete object
instances at execution time by physical distance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .catalog import Catalog
from .programs import PrimitiveAction

Position = tuple[int, int]


class ExecError(Exception):
    """Base class for action execution failures."""


class NoSuchObject(ExecError):
    def __init__(self, type_name: str):
        super().__init__(f"no reachable instance of {type_name}")
        self.type_name = type_name


class PreconditionViolated(ExecError):
    def __init__(self, kind: str, detail: str):
        super().__init__(f"{kind}: {detail}")
        self.kind = kind
        self.detail = detail


@dataclass(frozen=True)
class ObjectInstance:
    id: str
    type_name: str
    position: Position
    visible: bool = True
    toggled: bool = False
    open: bool = False
    is_held: bool = False
    dirty: bool = False
    hot: bool = False
    cold: bool = False
    contained_in: "str | None" = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "type": self.type_name,
            "position": list(self.position),
            "visible": self.visible,
            "toggled": self.toggled,
            "open": self.open,
            "is_held": self.is_held,
            "dirty": self.dirty,
            "hot": self.hot,
            "cold": self.cold,
            "contained_in": self.contained_in,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ObjectInstance":
        return cls(
            id=payload["id"],
            type_name=payload["type"],
            position=tuple(payload["position"]),
            visible=payload.get("visible", True),
            toggled=payload.get("toggled", False),
            open=payload.get("open", False),
            is_held=payload.get("is_held", False),
            dirty=payload.get("dirty", False),
            hot=payload.get("hot", False),
            cold=payload.get("cold", False),
            contained_in=payload.get("contained_in"),
        )


@dataclass(frozen=True)
class WorldState:
    grid_size: int
    agent_position: Position
    objects: tuple[ObjectInstance, ...]
    held: "str | None" = None
    step: int = 0
    _index: dict = field(default=None, compare=False, repr=False, init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_index", {o.id: o for o in self.objects})
        if len(self._index) != len(self.objects):
            raise ValueError("duplicate object ids in world state")

    def obj(self, obj_id: str) -> ObjectInstance:
        return self._index[obj_id]

    def instances_of(self, type_name: str) -> list[ObjectInstance]:
        return [o for o in self.objects if o.type_name == type_name]

    def held_object(self) -> "ObjectInstance | None":
        return self._index[self.held] if self.held else None

    def contents_of(self, obj_id: str) -> list[ObjectInstance]:
        return [o for o in self.objects if o.contained_in == obj_id]

    def with_objects(self, updated: dict[str, ObjectInstance], **kwargs) -> "WorldState":
        objs = tuple(updated.get(o.id, o) for o in self.objects)
        fields = {"objects": objs, "step": self.step + 1}
        fields.update(kwargs)
        return replace(self, **fields)

    def to_json(self) -> dict:
        return {
            "grid_size": self.grid_size,
            "agent_position": list(self.agent_position),
            "held": self.held,
            "step": self.step,
            "objects": [o.to_json() for o in self.objects],
        }

    @classmethod
    def from_json(cls, payload: dict) -> "WorldState":
        return cls(
            grid_size=payload["grid_size"],
            agent_position=tuple(payload["agent_position"]),
            objects=tuple(ObjectInstance.from_json(o) for o in payload["objects"]),
            held=payload.get("held"),
            step=payload.get("step", 0),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "WorldState":
        return cls.from_json(json.loads(text))


def chebyshev(a: Position, b: Position) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def nearest_instance(
    state: WorldState,
    type_names: "list[str] | tuple[str, ...] | str",
    exclude: "set[str] | None" = None,
) -> "ObjectInstance | None":
    """Closest visible instance of any given type, ties broken by id.

    Distance is Chebyshev from the agent, so diagonal adjacency counts.
    """
    if isinstance(type_names, str):
        type_names = [type_names]
    wanted = set(type_names)
    best: "ObjectInstance | None" = None
    best_key: "tuple[int, str] | None" = None
    for o in state.objects:
        if o.type_name not in wanted or not o.visible:
            continue
        if exclude and o.id in exclude:
            continue
        key = (chebyshev(state.agent_position, o.position), o.id)
        if best_key is None or key < best_key:
            best, best_key = o, key
    return best


def _bind_instance(
    state: WorldState,
    type_name: str,
    prefer_uncontained: bool,
    exclude: "set[str] | None" = None,
) -> "ObjectInstance | None":
    # GOTO/PICKUP prefer free-standing instances so that a second instance
    # of a type can be fetched after the first was stowed.
    if prefer_uncontained:
        free = [
            o
            for o in state.objects
            if o.type_name == type_name
            and o.visible
            and o.contained_in is None
            and not o.is_held
            and not (exclude and o.id in exclude)
        ]
        if free:
            key = lambda o: (chebyshev(state.agent_position, o.position), o.id)
            return min(free, key=key)
    return nearest_instance(state, type_name, exclude=exclude)


def _adjacent(state: WorldState, inst: ObjectInstance) -> bool:
    return chebyshev(state.agent_position, inst.position) <= 1


def _sync_positions(state: WorldState) -> WorldState:
    """Pin contained objects to their containers and held ones to the agent."""
    updates: dict[str, ObjectInstance] = {}
    index = {o.id: o for o in state.objects}

    def resolved_position(o: ObjectInstance, depth: int = 0) -> Position:
        if depth > len(index):
            raise ValueError("containment cycle detected")
        if o.is_held:
            return state.agent_position
        if o.contained_in is not None:
            return resolved_position(index[o.contained_in], depth + 1)
        return o.position

    for o in state.objects:
        pos = resolved_position(o)
        if pos != o.position:
            updates[o.id] = replace(o, position=pos)
    if not updates:
        return state
    objs = tuple(updates.get(o.id, o) for o in state.objects)
    return replace(state, objects=objs)


def _chain_contains(state: WorldState, container_id: str, target_id: str) -> bool:
    """True if target_id appears in container_id's containment ancestry."""
    cur: "str | None" = container_id
    for _ in range(len(state.objects) + 1):
        if cur is None:
            return False
        if cur == target_id:
            return True
        cur = state.obj(cur).contained_in
    return False


def _apply_context_effects(
    state: WorldState, updates: dict[str, ObjectInstance], catalog: Catalog
) -> dict[str, ObjectInstance]:
    """Process effects that depend on where objects now sit.

    A running faucet cleans everything in sinks sharing its cell, a
    running microwave heats its contents, and a closed fridge chills its
    contents.  Effects fire on whichever action completes the condition.
    """
    def current(o: ObjectInstance) -> ObjectInstance:
        return updates.get(o.id, o)

    objs = [current(o) for o in state.objects]
    by_id = {o.id: o for o in objs}

    faucets_on = {o.position for o in objs if o.type_name == "Faucet" and o.toggled}
    sink_ids_wet = {
        o.id for o in objs if o.type_name == "Sink" and o.position in faucets_on
    }
    for o in objs:
        if o.dirty and o.contained_in in sink_ids_wet:
            updates[o.id] = replace(current(o), dirty=False)

    hot_boxes = {
        o.id for o in objs if o.type_name == "Microwave" and o.toggled
    }
    cold_boxes = {
        o.id for o in objs if o.type_name == "Fridge" and not o.open
    }
    for o in objs:
        if o.contained_in in hot_boxes and not o.hot:
            updates[o.id] = replace(current(o), hot=True, cold=False)
        elif o.contained_in in cold_boxes and not o.cold:
            updates[o.id] = replace(current(o), cold=True, hot=False)
    return updates


def execute(state: WorldState, action: PrimitiveAction, catalog: Catalog) -> WorldState:
    """Apply one action, raising ExecError when preconditions fail."""
    template = action.template
    type_name = action.args[0]
    if type_name not in catalog:
        raise NoSuchObject(type_name)
    otype = catalog[type_name]

    if template == "GOTO":
        exclude = {state.held} if state.held else None
        inst = _bind_instance(state, type_name, prefer_uncontained=True, exclude=exclude)
        if inst is None:
            raise NoSuchObject(type_name)
        moved = replace(state, agent_position=inst.position, step=state.step + 1)
        return _sync_positions(moved)

    if template == "PICKUP":
        if state.held is not None:
            held = state.held_object()
            raise PreconditionViolated(
                "hand occupied", f"already holding the {held.type_name}"
            )
        if not otype.pickable:
            raise PreconditionViolated("not pickable", f"{type_name} cannot be carried")
        inst = _bind_instance(state, type_name, prefer_uncontained=True)
        if inst is None:
            raise NoSuchObject(type_name)
        if not _adjacent(state, inst):
            raise PreconditionViolated("not adjacent", f"too far from the {type_name}")
        if inst.contained_in is not None:
            container = state.obj(inst.contained_in)
            if catalog[container.type_name].openable and not container.open:
                raise PreconditionViolated(
                    "container closed", f"the {container.type_name} is closed"
                )
        updates = {
            inst.id: replace(
                inst,
                is_held=True,
                contained_in=None,
                position=state.agent_position,
            )
        }
        new = state.with_objects(updates, held=inst.id)
        return _sync_positions(new)

    if template == "OPEN" or template == "CLOSE":
        if not otype.openable:
            raise PreconditionViolated("not openable", f"{type_name} has no door")
        inst = nearest_instance(state, type_name)
        if inst is None:
            raise NoSuchObject(type_name)
        if not _adjacent(state, inst):
            raise PreconditionViolated("not adjacent", f"too far from the {type_name}")
        want_open = template == "OPEN"
        if inst.open == want_open:
            already = "already open" if inst.open else "already closed"
            raise PreconditionViolated(already, f"the {type_name} is {already}")
        updates = {inst.id: replace(inst, open=want_open)}
        updates = _apply_context_effects(state, updates, catalog)
        return _sync_positions(state.with_objects(updates))

    if template == "TOGGLE":
        if not otype.toggleable:
            raise PreconditionViolated("not toggleable", f"{type_name} has no switch")
        inst = nearest_instance(state, type_name)
        if inst is None:
            raise NoSuchObject(type_name)
        if not _adjacent(state, inst):
            raise PreconditionViolated("not adjacent", f"too far from the {type_name}")
        updates = {inst.id: replace(inst, toggled=not inst.toggled)}
        updates = _apply_context_effects(state, updates, catalog)
        return _sync_positions(state.with_objects(updates))

    if template == "PUT":
        recep_name = action.args[1]
        if recep_name not in catalog:
            raise NoSuchObject(recep_name)
        if state.held is None:
            raise PreconditionViolated("not holding", "the hand is empty")
        held = state.held_object()
        if held.type_name != type_name:
            raise PreconditionViolated(
                "held mismatch", f"holding the {held.type_name}, not the {type_name}"
            )
        if not catalog[recep_name].receptacle:
            raise PreconditionViolated(
                "not a receptacle", f"{recep_name} cannot hold objects"
            )
        recep = nearest_instance(state, recep_name, exclude={held.id})
        if recep is None:
            raise NoSuchObject(recep_name)
        if not _adjacent(state, recep):
            raise PreconditionViolated("not adjacent", f"too far from the {recep_name}")
        if catalog[recep.type_name].openable and not recep.open:
            raise PreconditionViolated(
                "container closed", f"the {recep.type_name} is closed"
            )
        if _chain_contains(state, recep.id, held.id):
            raise PreconditionViolated(
                "containment cycle", f"the {recep_name} sits inside the held object"
            )
        updates = {
            held.id: replace(
                held,
                is_held=False,
                contained_in=recep.id,
                position=recep.position,
            )
        }
        updates = _apply_context_effects(state, updates, catalog)
        return _sync_positions(state.with_objects(updates, held=None))

    raise ValueError(f"unknown template {template!r}")


def run_program(
    state: WorldState, actions: "list[PrimitiveAction]", catalog: Catalog
) -> WorldState:
    """Execute actions in order; raises on the first failure."""
    for a in actions:
        state = execute(state, a, catalog)
    return state


_RENDER = {
    "GOTO": "go to the {0}",
    "PICKUP": "pick up the {0}",
    "OPEN": "open the {0}",
    "CLOSE": "close the {0}",
    "TOGGLE": "turn on/off the {0}",
    "PUT": "put the {0} in/on the {1}",
}


def render_action(action: PrimitiveAction, catalog: Catalog) -> str:
    """Human-readable form of an action, using each type's display name."""
    names = [
        catalog[a].display_name if a in catalog else a.lower() for a in action.args
    ]
    return _RENDER[action.template].format(*names)
