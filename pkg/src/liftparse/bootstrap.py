"""Offline bootstrap: train the seed model once and keep it as a fixture.

Every new user starts from the same checkpoint — the 44 seed examples,
a trained pair classifier, a calibrated store, and an untrained
reranker — so cold starts are instant and reproducible.
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .catalog import Catalog
from .entity import tokenize
from .parser import ParserConfig
from .programs import LiftedProgram
from .session import DataExample, UserModel, fit_model

CHECKPOINT_DIRNAME = "seed_checkpoint"


def seed_dataset() -> list[DataExample]:
    """The bundled seed examples as dataset entries (already lifted)."""
    text = (
        resources.files("liftparse.data")
        .joinpath("seed_examples.json")
        .read_text(encoding="utf-8")
    )
    rows = json.loads(text)["examples"]
    out = []
    for row in rows:
        out.append(
            DataExample(
                utterance=row["utterance"],
                lifted_tokens=tuple(tokenize(row["utterance"])),
                lifted_program=LiftedProgram.from_text(row["program"]),
                source="seed",
            )
        )
    return out


def default_checkpoint_dir() -> Path:
    return Path(__file__).parent / "data" / CHECKPOINT_DIRNAME


def bootstrap(
    out_dir=None,
    catalog: "Catalog | None" = None,
    config: "ParserConfig | None" = None,
) -> UserModel:
    """Train the seed model from scratch; optionally save a checkpoint."""
    catalog = catalog or Catalog.load()
    model = fit_model(seed_dataset(), catalog, version=1, config=config)
    if out_dir is not None:
        model.save(out_dir)
    return model


def load_seed_model(
    path=None, catalog: "Catalog | None" = None
) -> UserModel:
    """Load the committed seed checkpoint (or one built with bootstrap)."""
    path = Path(path) if path is not None else default_checkpoint_dir()
    if not (path / "meta.json").exists():
        raise FileNotFoundError(
            f"no seed checkpoint at {path}; run the bootstrap command first"
        )
    return UserModel.load(path, catalog=catalog)
