"""Command-line entry points: bootstrap, serve, and the scripted protocol."""
from __future__ import annotations

from pathlib import Path

import click

from .bootstrap import bootstrap as build_seed
from .bootstrap import default_checkpoint_dir, load_seed_model
from .catalog import Catalog
from .oracle import emit_plots, run_protocol
from .tasks import TASK_TYPES


@click.group(context_settings={"auto_envvar_prefix": "DECOMP"})
def main() -> None:
    """Learning-by-decomposition: seed model, HTTP service, scripted runs."""


@main.command()
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=None,
    help="Checkpoint directory (default: the bundled package data path).",
)
def bootstrap(out: "Path | None") -> None:
    """Train the seed model from the packaged examples and save it."""
    target = out or default_checkpoint_dir()
    model = build_seed(out_dir=target)
    click.echo(
        f"seed model v{model.version}: {len(model.store.entries)} exemplars, "
        f"tau={model.tau:.3f} -> {target}"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option(
    "--seed-checkpoint",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="Seed model directory (default: the bundled checkpoint).",
)
@click.option(
    "--catalog",
    "catalog_path",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="Object catalog JSON (default: the bundled catalog).",
)
@click.option(
    "--episodes", default=5, show_default=True, type=int,
    help="Episodes per session before it completes.",
)
@click.option(
    "--ui",
    "ui_dir",
    type=click.Path(exists=True, file_okay=False, path_type=Path),
    default=None,
    help="Built web client directory to serve at / (e.g. frontend/).",
)
def serve(host, port, seed_checkpoint, catalog_path, episodes, ui_dir) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    app = create_app(
        seed_checkpoint=seed_checkpoint,
        catalog_path=catalog_path,
        episodes=episodes,
        static_dir=ui_dir,
    )
    uvicorn.run(app, host=host, port=port)


@main.group()
def oracle() -> None:
    """Scripted simulated-user protocol runs."""


@oracle.command("run")
@click.option(
    "--task",
    "task_types",
    multiple=True,
    type=click.Choice(sorted(TASK_TYPES)),
    help="Task type(s) to run (default: all).",
)
@click.option("--episodes", default=5, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option(
    "--lexical-variation/--no-lexical-variation",
    default=False,
    show_default=True,
    help="Use alternate object names in later episodes.",
)
@click.option(
    "--seed-checkpoint",
    type=click.Path(exists=True, path_type=Path),
    default=None,
    help="Seed model directory (default: the bundled checkpoint).",
)
@click.option(
    "--out",
    type=click.Path(path_type=Path),
    default=Path("oracle_out"),
    show_default=True,
    help="Directory for transcripts, metrics CSV, and plots.",
)
def oracle_run(task_types, episodes, seed, lexical_variation, seed_checkpoint, out) -> None:
    """Run the scripted protocol and write transcripts, CSV, and plots."""
    catalog = Catalog.load()
    chosen = list(task_types) or list(TASK_TYPES)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for task_type in chosen:
        model = load_seed_model(seed_checkpoint, catalog=catalog)
        result = run_protocol(
            task_type,
            episodes=episodes,
            seed=seed,
            model=model,
            lexical_variation=lexical_variation,
        )
        result.save(out / task_type)
        results.append(result)
        m = result.metrics
        click.echo(
            f"{task_type}: taught {m.examples_taught[0]}->{m.examples_taught[-1]}, "
            f"norm length {m.normalized_episode_length[0]:.3f}->"
            f"{m.normalized_episode_length[-1]:.3f}"
        )
    for p in emit_plots(results, out):
        click.echo(f"wrote {p}")


if __name__ == "__main__":
    main()
