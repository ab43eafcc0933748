"""Frozen 50-dimensional word vectors.

Vectors load from a whitespace-separated text file (one word per line,
then its components).  Words missing from the table get a deterministic
random vector derived from a stable hash of the word, so unknown words
are consistent across processes and runs.
"""
from __future__ import annotations

import hashlib

import numpy as np

DIM = 50
_OOV_SALT = "liftparse-oov-v1"


def _hash_vector(token: str, dim: int) -> np.ndarray:
    digest = hashlib.blake2b(
        f"{_OOV_SALT}|{token}".encode("utf-8"), digest_size=8
    ).digest()
    seed = int.from_bytes(digest, "little")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class WordVectorTable:
    def __init__(self, vectors: dict[str, np.ndarray], dim: int = DIM):
        self.dim = dim
        self._vectors = {w: np.asarray(v, dtype=np.float64) for w, v in vectors.items()}
        for w, v in self._vectors.items():
            if v.shape != (dim,):
                raise ValueError(f"vector for {w!r} has shape {v.shape}")
        self._oov_cache: dict[str, np.ndarray] = {}

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def vector(self, token: str) -> np.ndarray:
        v = self._vectors.get(token)
        if v is not None:
            return v
        v = self._oov_cache.get(token)
        if v is None:
            v = _hash_vector(token, self.dim)
            self._oov_cache[token] = v
        return v

    def embed_tokens(self, tokens: "list[str] | tuple[str, ...]") -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self.vector(t) for t in tokens])

    @classmethod
    def load(cls, path, dim: int = DIM) -> "WordVectorTable":
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.rstrip("\n").split()
                if not parts:
                    continue
                word = parts[0]
                values = np.array([float(x) for x in parts[1:]], dtype=np.float64)
                if values.shape != (dim,):
                    raise ValueError(
                        f"line for {word!r} has {values.size} values, expected {dim}"
                    )
                vectors[word] = values
        return cls(vectors, dim=dim)

    @classmethod
    def bundled(cls) -> "WordVectorTable":
        from importlib import resources

        path = resources.files("liftparse.data").joinpath("word_vectors_50d.txt")
        with resources.as_file(path) as p:
            return cls.load(p)
