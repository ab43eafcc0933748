"""Approximate nearest neighbors over unit vectors.

A forest of random hyperplane trees.  Radius queries prune a subtree
only when the query's margin to the splitting plane meets or exceeds
the radius, which is sound for unit vectors: a point on the far side
of a plane at margin m is at least m away in Euclidean distance.  With
the candidate budget above the store size this makes threshold queries
exact, which the retrieval layer relies on; the tests cross-check
against brute force.
"""
from __future__ import annotations

import numpy as np


class _Node:
    __slots__ = ("normal", "offset", "left", "right", "ids")

    def __init__(self, normal=None, offset=0.0, left=None, right=None, ids=None):
        self.normal = normal
        self.offset = offset
        self.left = left
        self.right = right
        self.ids = ids  # leaf payload


class HyperplaneForest:
    def __init__(
        self,
        vectors: np.ndarray,
        n_trees: int = 16,
        leaf_size: int = 8,
        seed: int = 0,
    ):
        self.vectors = np.asarray(vectors, dtype=np.float64)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be a 2-d array")
        self.n_trees = n_trees
        self.leaf_size = leaf_size
        self.seed = seed
        rng = np.random.default_rng(seed)
        n = len(self.vectors)
        self.trees = [
            self._build(np.arange(n), rng, depth=0) for _ in range(n_trees)
        ]

    def _build(self, ids: np.ndarray, rng: np.random.Generator, depth: int) -> _Node:
        if len(ids) <= self.leaf_size or depth > 32:
            return _Node(ids=ids)
        # pick two distinct stored points; the splitting plane bisects them
        for _ in range(8):
            a, b = rng.choice(ids, size=2, replace=False)
            diff = self.vectors[a] - self.vectors[b]
            norm = np.linalg.norm(diff)
            if norm > 1e-12:
                break
        else:
            return _Node(ids=ids)  # all candidates coincide
        normal = diff / norm
        offset = float(normal @ (self.vectors[a] + self.vectors[b]) / 2.0)
        margins = self.vectors[ids] @ normal - offset
        left_ids = ids[margins < 0]
        right_ids = ids[margins >= 0]
        if len(left_ids) == 0 or len(right_ids) == 0:
            # degenerate plane: split evenly, but mark the node so queries
            # descend both sides (normal=None disables margin pruning)
            half = len(ids) // 2
            order = rng.permutation(len(ids))
            return _Node(
                normal=None,
                offset=0.0,
                left=self._build(ids[order[:half]], rng, depth + 1),
                right=self._build(ids[order[half:]], rng, depth + 1),
            )
        return _Node(
            normal=normal,
            offset=offset,
            left=self._build(left_ids, rng, depth + 1),
            right=self._build(right_ids, rng, depth + 1),
        )

    def query_radius(
        self, query: np.ndarray, radius: float, budget: "int | None" = None
    ) -> list[tuple[int, float]]:
        """All stored ids with Euclidean distance < radius, sorted.

        ``budget`` caps how many distinct candidates are examined; when
        it is at least the store size the result is exact.
        """
        query = np.asarray(query, dtype=np.float64)
        if budget is None:
            budget = len(self.vectors)
        visited: set[int] = set()
        out: list[tuple[int, float]] = []
        for tree in self.trees:
            stack = [tree]
            while stack:
                node = stack.pop()
                if node.ids is not None:
                    for i in node.ids:
                        i = int(i)
                        if i in visited:
                            continue
                        if len(visited) >= budget:
                            stack.clear()
                            break
                        visited.add(i)
                        d = float(np.linalg.norm(self.vectors[i] - query))
                        if d < radius:
                            out.append((i, d))
                    continue
                if node.normal is None:
                    stack.append(node.left)
                    stack.append(node.right)
                    continue
                margin = float(query @ node.normal - node.offset)
                # a side may be skipped only when every point there is
                # provably at distance >= radius from the query
                if margin < radius:
                    stack.append(node.left)
                if -margin < radius:
                    stack.append(node.right)
            if len(visited) >= budget:
                break
        out.sort(key=lambda pair: (pair[1], pair[0]))
        return out

    def to_arrays(self) -> dict[str, np.ndarray]:
        """Flatten the forest for persistence."""
        normals, offsets, lefts, rights, leaf_starts = [], [], [], [], []
        leaf_ids: list[int] = []
        nodes: list[_Node] = []

        def walk(node: _Node) -> int:
            idx = len(nodes)
            nodes.append(node)
            normals.append(
                node.normal
                if node.normal is not None
                else np.zeros(self.vectors.shape[1])
            )
            offsets.append(node.offset)
            lefts.append(-1)
            rights.append(-1)
            if node.ids is not None:
                leaf_starts.append((idx, len(leaf_ids), len(node.ids)))
                leaf_ids.extend(int(i) for i in node.ids)
            else:
                lefts[idx] = walk(node.left)
                rights[idx] = walk(node.right)
            return idx

        roots = [walk(t) for t in self.trees]
        leaf_table = np.full((len(nodes), 2), -1, dtype=np.int64)
        for idx, start, count in leaf_starts:
            leaf_table[idx] = (start, count)
        return {
            "normals": np.array(normals),
            "offsets": np.array(offsets),
            "lefts": np.array(lefts, dtype=np.int64),
            "rights": np.array(rights, dtype=np.int64),
            "leaf_table": leaf_table,
            "leaf_ids": np.array(leaf_ids, dtype=np.int64),
            "roots": np.array(roots, dtype=np.int64),
            "config": np.array([self.n_trees, self.leaf_size, self.seed]),
        }

    @classmethod
    def from_arrays(
        cls, vectors: np.ndarray, arrays: dict[str, np.ndarray]
    ) -> "HyperplaneForest":
        forest = cls.__new__(cls)
        forest.vectors = np.asarray(vectors, dtype=np.float64)
        n_trees, leaf_size, seed = (int(x) for x in arrays["config"])
        forest.n_trees = n_trees
        forest.leaf_size = leaf_size
        forest.seed = seed

        normals = arrays["normals"]
        offsets = arrays["offsets"]
        lefts = arrays["lefts"]
        rights = arrays["rights"]
        leaf_table = arrays["leaf_table"]
        leaf_ids = arrays["leaf_ids"]

        def rebuild(idx: int) -> _Node:
            if leaf_table[idx][0] >= 0:
                start, count = leaf_table[idx]
                return _Node(ids=leaf_ids[start : start + count].copy())
            normal = normals[idx]
            if np.linalg.norm(normal) < 0.5:  # random-split marker
                normal = None
            return _Node(
                normal=normal,
                offset=float(offsets[idx]),
                left=rebuild(int(lefts[idx])),
                right=rebuild(int(rights[idx])),
            )

        forest.trees = [rebuild(int(r)) for r in arrays["roots"]]
        return forest
