"""Object type catalog: affordances, typical names, and task pools."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources


@dataclass(frozen=True)
class ObjectType:
    name: str
    typical_names: tuple[str, ...]
    pickable: bool = False
    openable: bool = False
    toggleable: bool = False
    receptacle: bool = False

    def __post_init__(self) -> None:
        if not self.typical_names:
            raise ValueError(f"type {self.name} needs at least one typical name")

    @property
    def display_name(self) -> str:
        return self.typical_names[0]


class Catalog:
    """Immutable registry of object types plus task sampling tables.

    The lexicon maps each typical name to every type claiming it, in
    catalog order; ambiguous names ("table", "lamp") map to several types.
    """

    def __init__(
        self,
        types: list[ObjectType],
        grid_size: int = 12,
        task_fixtures: "dict[str, list[str]] | None" = None,
        task_pools: "dict[str, dict[str, list[str]]] | None" = None,
        version: int = 1,
    ) -> None:
        if len({t.name for t in types}) != len(types):
            raise ValueError("duplicate type names in catalog")
        self.types: tuple[ObjectType, ...] = tuple(types)
        self.grid_size = grid_size
        self.task_fixtures = dict(task_fixtures or {})
        self.task_pools = dict(task_pools or {})
        self.version = version
        self._by_name = {t.name: t for t in self.types}
        lexicon: dict[str, list[str]] = {}
        for t in self.types:
            for surface in t.typical_names:
                lexicon.setdefault(surface.lower(), []).append(t.name)
        self._lexicon = lexicon
        self._max_phrase_words = max(
            len(surface.split()) for t in self.types for surface in t.typical_names
        )
        for task, names in self.task_fixtures.items():
            for n in names:
                if n not in self._by_name:
                    raise ValueError(f"unknown fixture type {n} for task {task}")
        for task, pools in self.task_pools.items():
            for pool in pools.values():
                for n in pool:
                    if n not in self._by_name:
                        raise ValueError(f"unknown pool type {n} for task {task}")

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> ObjectType:
        return self._by_name[name]

    def get(self, name: str) -> "ObjectType | None":
        return self._by_name.get(name)

    @property
    def lexicon(self) -> dict[str, list[str]]:
        """surface phrase (lowercase) -> type names in catalog order."""
        return {k: list(v) for k, v in self._lexicon.items()}

    @property
    def max_phrase_words(self) -> int:
        return self._max_phrase_words

    def fixtures(self) -> list[ObjectType]:
        return [t for t in self.types if not t.pickable]

    def pickables(self) -> list[ObjectType]:
        return [t for t in self.types if t.pickable]

    @classmethod
    def from_dict(cls, payload: dict) -> "Catalog":
        types = [
            ObjectType(
                name=entry["name"],
                typical_names=tuple(entry["typical_names"]),
                pickable=bool(entry.get("pickable", False)),
                openable=bool(entry.get("openable", False)),
                toggleable=bool(entry.get("toggleable", False)),
                receptacle=bool(entry.get("receptacle", False)),
            )
            for entry in payload["types"]
        ]
        return cls(
            types,
            grid_size=int(payload.get("grid_size", 12)),
            task_fixtures=payload.get("task_fixtures"),
            task_pools=payload.get("task_pools"),
            version=int(payload.get("version", 1)),
        )

    @classmethod
    def load(cls, path: "str | None" = None) -> "Catalog":
        """Load a catalog from ``path``, or the bundled default."""
        if path is None:
            text = (
                resources.files("liftparse.data").joinpath("catalog.json").read_text()
            )
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))
