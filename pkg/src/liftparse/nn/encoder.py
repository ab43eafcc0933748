"""Utterance encoder: word vectors + position, summed, through an MLP.

The output embedding is L2-normalized so Euclidean distance and cosine
similarity are interchangeable: for unit vectors, ||u - v||^2 = 2 - 2 cos.
"""
from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .words import WordVectorTable

WORD_SCALE = 16.0  # word energy must dominate the norm-5 position rows,
# or utterances sharing length and slot layout crowd together regardless
# of their verbs and the parser cannot tell novel verbs from known ones


def sinusoidal_table(max_len: int, dim: int) -> np.ndarray:
    if dim % 2 != 0:
        raise ValueError("position encoding needs an even dimension")
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    i = np.arange(dim // 2, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, 2.0 * i / dim)
    table = np.zeros((max_len, dim))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


class UtteranceEncoder:
    """Token-wise affine + tanh, masked sum, then a two-layer MLP."""

    def __init__(
        self,
        word_table: WordVectorTable,
        dim: int = 50,
        hidden: int = 64,
        out_dim: int = 32,
        max_len: int = 32,
        word_scale: float = WORD_SCALE,
        rng: "np.random.Generator | None" = None,
    ):
        if rng is None:
            rng = np.random.default_rng(0)
        self.word_table = word_table
        self.dim = dim
        self.hidden = hidden
        self.out_dim = out_dim
        self.max_len = max_len
        self.word_scale = word_scale
        self.positions = sinusoidal_table(max_len, dim)

        def init(shape, fan_in):
            return ag.parameter(rng.standard_normal(shape) / np.sqrt(fan_in))

        self.W_tok = init((dim, dim), dim)
        self.b_tok = ag.parameter(np.zeros(dim))
        self.W_h = init((dim, hidden), dim)
        self.b_h = ag.parameter(np.zeros(hidden))
        self.W_o = init((hidden, out_dim), hidden)
        self.b_o = ag.parameter(np.zeros(out_dim))

    def parameters(self) -> list[Tensor]:
        return [self.W_tok, self.b_tok, self.W_h, self.b_h, self.W_o, self.b_o]

    def param_arrays(self) -> dict[str, np.ndarray]:
        names = ("W_tok", "b_tok", "W_h", "b_h", "W_o", "b_o")
        return {n: getattr(self, n).data for n in names}

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for n, v in arrays.items():
            getattr(self, n).data = np.array(v, dtype=np.float64)

    def prepare_batch(
        self, token_lists: "list[list[str] | tuple[str, ...]]"
    ) -> tuple[np.ndarray, np.ndarray]:
        """Pad token sequences into (B, L, dim) inputs plus a (B, L, 1) mask.

        Sequences longer than max_len are truncated.  Word and position
        information is combined here, outside the graph, since both are
        frozen.
        """
        batch = [list(t)[: self.max_len] for t in token_lists]
        longest = max((len(t) for t in batch), default=1)
        longest = max(longest, 1)
        X = np.zeros((len(batch), longest, self.dim))
        mask = np.zeros((len(batch), longest, 1))
        for bi, toks in enumerate(batch):
            for ti, tok in enumerate(toks):
                X[bi, ti] = self.word_scale * self.word_table.vector(tok) + self.positions[ti]
                mask[bi, ti, 0] = 1.0
        return X, mask

    def forward(self, X: np.ndarray, mask: np.ndarray) -> Tensor:
        """Differentiable path from prepared inputs to unit embeddings."""
        Xt = ag.constant(X)
        token_h = ag.tanh(ag.add(ag.matmul(Xt, self.W_tok), self.b_tok))
        masked = ag.mul(token_h, ag.constant(mask))
        summed = ag.tsum(masked, axis=1)
        h = ag.tanh(ag.add(ag.matmul(summed, self.W_h), self.b_h))
        raw = ag.add(ag.matmul(h, self.W_o), self.b_o)
        return ag.l2_normalize(raw, axis=-1)

    def embed(self, token_lists: "list[list[str] | tuple[str, ...]]") -> np.ndarray:
        """Inference path: same arithmetic in plain numpy."""
        if not token_lists:
            return np.zeros((0, self.out_dim))
        X, mask = self.prepare_batch(token_lists)
        return self.embed_prepared(X, mask)

    def embed_prepared(self, X: np.ndarray, mask: np.ndarray) -> np.ndarray:
        token_h = np.tanh(X @ self.W_tok.data + self.b_tok.data)
        summed = (token_h * mask).sum(axis=1)
        h = np.tanh(summed @ self.W_h.data + self.b_h.data)
        raw = h @ self.W_o.data + self.b_o.data
        norms = np.sqrt((raw * raw).sum(axis=-1, keepdims=True) + 1e-12)
        return raw / norms
