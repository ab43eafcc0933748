"""Regenerate the bundled 50-d word vector table.

Collects every word the package can emit (catalog names, seed
utterances, action templates, a hand list of verbs users reach for) and
writes one deterministic unit vector per word.  Output is committed at
src/liftparse/data/word_vectors_50d.txt.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np

DIM = 50
SALT = "liftparse-vocab-v1"
ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "liftparse" / "data"

EXTRA_WORDS = """
<obj> it and wash rinse scrub clean bring carry fetch deliver stow store
examine look inspect light tuck nest warm serve chill cool refrigerate
heat cook two pair under onto into near beside again please now first
second next finally start begin done retrieve collect gather arrange
goto pickup
""".split()


def words_from_catalog() -> set[str]:
    payload = json.loads((DATA / "catalog.json").read_text())
    words: set[str] = set()
    for entry in payload["types"]:
        words.add(entry["name"].lower())
        for surface in entry["typical_names"]:
            words.update(surface.lower().split())
    return words


def words_from_seeds() -> set[str]:
    payload = json.loads((DATA / "seed_examples.json").read_text())
    words: set[str] = set()
    token_re = re.compile(r"<obj>|[a-z0-9]+(?:'[a-z0-9]+)?")
    for ex in payload["examples"]:
        words.update(token_re.findall(ex["utterance"].lower()))
        for tok in ex["program"].replace(";", " ").split():
            if not tok.startswith("<"):
                words.add(tok.lower())
    return words


STOP_WORDS = (
    "the up down on off of in to then a an back front out from with "
    "inside outside below above top"
).split()


def vector(word: str) -> np.ndarray:
    digest = hashlib.blake2b(f"{SALT}|{word}".encode(), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    v = rng.standard_normal(DIM)
    return v / np.linalg.norm(v)


def main() -> None:
    words = sorted(
        words_from_catalog() | words_from_seeds() | set(EXTRA_WORDS) | set(STOP_WORDS)
    )
    out = DATA / "word_vectors_50d.txt"
    with out.open("w", encoding="utf-8") as fh:
        for w in words:
            comps = " ".join(f"{x:.6f}" for x in vector(w))
            fh.write(f"{w} {comps}\n")
    print(f"wrote {len(words)} vectors to {out}")


if __name__ == "__main__":
    main()
