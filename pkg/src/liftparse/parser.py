"""Exemplar retrieval parser.

Lifted utterances are embedded and matched against stored exemplars;
any exemplar within the calibrated distance threshold contributes its
program.  An empty retrieval set is the parser's way of saying it is
not sure.  The threshold is recalibrated after every retraining by
leave-one-out precision over the stored examples.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .ann import HyperplaneForest
from .entity import tokenize
from .programs import LiftedProgram

# Words carrying no lexical signal for template identity.  "on"/"off"
# are included, which is why "turn on X" and "turn off X" share one
# exemplar cluster and TOGGLE simply flips state.
STOP_WORDS: frozenset[str] = frozenset(
    (
        "the", "up", "down", "on", "off", "of", "in", "to", "then", "a",
        "an", "back", "front", "out", "from", "with", "inside", "outside",
        "below", "above", "top",
    )
)

_AND_RE = re.compile(r"\band\b", flags=re.IGNORECASE)


class EmptyStore(Exception):
    """Raised when parsing is attempted against a store with no exemplars."""


@dataclass(frozen=True)
class ParserConfig:
    beta: float = 0.15  # lower clamp on the retrieval threshold
    target_precision: float = 0.9
    n_trees: int = 16
    leaf_size: int = 8
    exhaustive_below: int = 200  # small stores skip the index entirely
    probe_factor: int = 4
    probe_cap: int = 1000
    index_seed: int = 7


def preprocess(text_or_tokens, config: "ParserConfig | None" = None) -> tuple[str, ...]:
    """Tokenize (if needed) and drop stop words; slot tokens survive."""
    if isinstance(text_or_tokens, str):
        tokens = tokenize(text_or_tokens)
    else:
        tokens = list(text_or_tokens)
    return tuple(t for t in tokens if t not in STOP_WORDS)


def split_compositional(text: str) -> list[str]:
    """Split an utterance on the word "and" into trimmed substrings."""
    parts = [p.strip() for p in _AND_RE.split(text)]
    return [p for p in parts if p]


@dataclass(frozen=True)
class StoreEntry:
    tokens: tuple[str, ...]  # lifted utterance tokens, stop words intact
    processed: tuple[str, ...]  # embedding input
    program: LiftedProgram
    source: str = "seed"  # "seed" or "taught"
    example_id: int = -1

    def to_json(self) -> dict:
        return {
            "tokens": list(self.tokens),
            "processed": list(self.processed),
            "program": self.program.to_text(),
            "slot_count": self.program.slot_count,
            "source": self.source,
            "example_id": self.example_id,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "StoreEntry":
        return cls(
            tokens=tuple(payload["tokens"]),
            processed=tuple(payload["processed"]),
            program=LiftedProgram.from_text(
                payload["program"], slot_count=payload["slot_count"]
            ),
            source=payload.get("source", "seed"),
            example_id=payload.get("example_id", -1),
        )


@dataclass(frozen=True)
class Retrieval:
    """One distinct program among the retrieved exemplars."""

    program: LiftedProgram
    distance: float
    exemplar_ids: tuple[int, ...]


@dataclass
class ExemplarStore:
    entries: list[StoreEntry]
    embeddings: np.ndarray
    tau: float
    version: int
    config: ParserConfig = field(default_factory=ParserConfig)
    index: "HyperplaneForest | None" = None

    @classmethod
    def build(
        cls,
        entries: list[StoreEntry],
        embeddings: np.ndarray,
        tau: float,
        version: int,
        config: "ParserConfig | None" = None,
    ) -> "ExemplarStore":
        config = config or ParserConfig()
        embeddings = np.asarray(embeddings, dtype=np.float64)
        if len(entries) != len(embeddings):
            raise ValueError("entries and embeddings length mismatch")
        index = None
        if len(entries) >= config.exhaustive_below:
            index = HyperplaneForest(
                embeddings,
                n_trees=config.n_trees,
                leaf_size=config.leaf_size,
                seed=config.index_seed,
            )
        return cls(
            entries=list(entries),
            embeddings=embeddings,
            tau=float(tau),
            version=version,
            config=config,
            index=index,
        )

    def __len__(self) -> int:
        return len(self.entries)

    def query(self, vector: np.ndarray) -> list[tuple[int, float]]:
        """Exemplar ids within tau of the vector, nearest first."""
        if not self.entries:
            raise EmptyStore("exemplar store is empty")
        if self.index is None:
            # per-row norms, bit-identical to the indexed path so results
            # cannot shift when a growing store starts using the index
            out = [
                (i, float(np.linalg.norm(self.embeddings[i] - vector)))
                for i in range(len(self.embeddings))
            ]
            out = [(i, d) for i, d in out if d < self.tau]
            out.sort(key=lambda pair: (pair[1], pair[0]))
            return out
        budget = min(
            self.config.probe_factor * len(self.entries), self.config.probe_cap
        )
        return self.index.query_radius(vector, self.tau, budget=budget)

    def save(self, directory, stem: "str | None" = None) -> None:
        from pathlib import Path

        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or f"store_v{self.version}"
        with open(directory / f"{stem}.jsonl", "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
        np.save(directory / f"{stem}_embeddings.npy", self.embeddings)
        meta = {
            "tau": self.tau,
            "version": self.version,
            "config": vars(self.config),
        }
        with open(directory / f"{stem}_meta.json", "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)

    @classmethod
    def load(cls, directory, version: int) -> "ExemplarStore":
        from pathlib import Path

        directory = Path(directory)
        stem = f"store_v{version}"
        with open(directory / f"{stem}_meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
        entries = []
        with open(directory / f"{stem}.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    entries.append(StoreEntry.from_json(json.loads(line)))
        embeddings = np.load(directory / f"{stem}_embeddings.npy")
        return cls.build(
            entries,
            embeddings,
            tau=meta["tau"],
            version=meta["version"],
            config=ParserConfig(**meta["config"]),
        )


def parse_lifted(
    processed_tokens: tuple[str, ...],
    store: ExemplarStore,
    embed_fn,
) -> list[Retrieval]:
    """Distinct programs among exemplars within tau, nearest first.

    An empty list means the parser is not sure about this utterance.
    """
    vector = embed_fn([processed_tokens])[0]
    hits = store.query(vector)
    by_program: dict[str, list[tuple[int, float]]] = {}
    order: list[str] = []
    for idx, dist in hits:
        key = store.entries[idx].program.to_text()
        if key not in by_program:
            by_program[key] = []
            order.append(key)
        by_program[key].append((idx, dist))
    out = []
    for key in order:
        pairs = by_program[key]
        ids = tuple(i for i, _ in pairs)
        dist = min(d for _, d in pairs)
        out.append(
            Retrieval(
                program=store.entries[ids[0]].program,
                distance=dist,
                exemplar_ids=ids,
            )
        )
    out.sort(key=lambda r: r.distance)
    return out


def _program_events(
    emb: np.ndarray, keys: list[str]
) -> tuple[np.ndarray, np.ndarray]:
    """Leave-one-out program-retrieval events, sorted by distance.

    Retrieval returns the deduplicated *program set* of the neighbors
    within the threshold, so precision is counted over programs, not
    neighbors: as the threshold sweeps upward, each distinct program
    enters a query's result set exactly once, at the distance of its
    nearest exemplar.  Those entry points are the events; an event is
    correct when the entering program equals the query's own.
    """
    n = len(emb)
    event_d: list[float] = []
    event_ok: list[bool] = []
    for i in range(n):
        dists = np.linalg.norm(emb - emb[i], axis=1)
        dists[i] = np.inf
        seen: set[str] = set()
        for j in np.argsort(dists, kind="stable"):
            if dists[j] == np.inf:
                break
            key = keys[j]
            if key in seen:
                continue
            seen.add(key)
            event_d.append(float(dists[j]))
            event_ok.append(key == keys[i])
    d = np.asarray(event_d)
    ok = np.asarray(event_ok, dtype=bool)
    order = np.argsort(d, kind="stable")
    return d[order], ok[order]


def calibrate_threshold(
    embeddings: np.ndarray,
    program_keys: list[str],
    config: "ParserConfig | None" = None,
) -> float:
    """Pick the retrieval threshold by leave-one-out precision.

    Every stored example queries the rest of the store; the candidate
    grid is the set of observed cross-example distances.  The largest
    threshold whose aggregate program-level precision meets the target
    wins, clamped below by beta.
    """
    config = config or ParserConfig()
    emb = np.asarray(embeddings, dtype=np.float64)
    n = len(emb)
    if n < 2:
        return config.beta
    keys = list(program_keys)
    event_d, event_ok = _program_events(emb, keys)
    cum_ok = np.cumsum(event_ok)
    total = np.arange(1, len(event_d) + 1)

    diffs = emb[:, None, :] - emb[None, :, :]
    dists = np.sqrt((diffs * diffs).sum(axis=2))
    grid = np.unique(dists[np.triu_indices(n, k=1)])

    best = None
    for value in grid:
        covered = int(np.searchsorted(event_d, value, side="left"))
        if covered == 0:
            continue  # nothing retrieved strictly below this distance
        precision = cum_ok[covered - 1] / total[covered - 1]
        if precision >= config.target_precision:
            best = float(value)
    if best is None:
        return config.beta
    return max(best, config.beta)


def loo_precision(
    embeddings: np.ndarray, program_keys: list[str], tau: float
) -> tuple[float, int]:
    """Aggregate leave-one-out precision of threshold retrieval.

    Counts the deduplicated programs each held-out example retrieves
    from the rest of the store (mirroring what parsing returns) and
    reports the fraction that match the example's own program, along
    with the total number of retrieved programs.  Precision is 1.0
    when nothing is retrieved, since no wrong program was surfaced.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    event_d, event_ok = _program_events(emb, list(program_keys))
    covered = int(np.searchsorted(event_d, tau, side="left"))
    if covered == 0:
        return 1.0, 0
    return float(np.mean(event_ok[:covered])), covered
