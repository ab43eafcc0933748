"""Shared fixtures: the catalog, the bundled seed model, and world builders."""
from __future__ import annotations

import pytest

from liftparse.bootstrap import load_seed_model
from liftparse.catalog import Catalog
from liftparse.world import ObjectInstance, WorldState


@pytest.fixture(scope="session")
def catalog() -> Catalog:
    return Catalog.load()


@pytest.fixture(scope="session")
def seed_model(catalog):
    """The bundled seed checkpoint; treat as read-only across tests."""
    return load_seed_model(catalog=catalog)


def make_world(
    objs: "list[tuple[str, tuple[int, int]] | ObjectInstance]",
    agent: "tuple[int, int]" = (2, 2),
    held: "str | None" = None,
    grid_size: int = 8,
) -> WorldState:
    """Small-world builder: entries are (TypeName, position) or instances."""
    instances = []
    counts: dict[str, int] = {}
    for entry in objs:
        if isinstance(entry, ObjectInstance):
            instances.append(entry)
            continue
        type_name, pos = entry
        counts[type_name] = counts.get(type_name, 0) + 1
        instances.append(
            ObjectInstance(
                id=f"{type_name}_{counts[type_name]}",
                type_name=type_name,
                position=pos,
            )
        )
    return WorldState(
        grid_size=grid_size,
        agent_position=agent,
        objects=tuple(instances),
        held=held,
    )
