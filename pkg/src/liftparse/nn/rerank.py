"""Candidate program reranker.

Scores each candidate by combining an utterance embedding, a frozen
bag-of-tokens program encoding, and an affine encoding of salient world
state.  The output layer starts at zero, so an untrained reranker
scores every candidate identically and argmax falls back to the
caller's candidate ordering.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import autograd as ag
from .encoder import WORD_SCALE, UtteranceEncoder, sinusoidal_table
from .words import WordVectorTable

STATE_FEATURES = 18  # two tracked objects x nine boolean features


class GoldNotInCandidates(ValueError):
    """Raised when a training tuple's executed program is not a candidate."""


def program_tokens(program) -> list[str]:
    """Flatten a grounded program into lowercase tokens for encoding."""
    tokens: list[str] = []
    for action in program.actions:
        tokens.append(action.template.lower())
        tokens.extend(a.lower() for a in action.args)
    return tokens


class ProgramReranker(BaseEstimator):
    """Picks the best candidate program for an utterance in a state.

    Training tuples are (utterance_tokens, candidate_program_token_lists,
    state_features, gold_index) and the model is fit with softmax
    cross-entropy over each candidate set.
    """

    def __init__(
        self,
        dim: int = 50,
        hidden: int = 64,
        utterance_dim: int = 32,
        head_hidden: int = 64,
        max_len: int = 32,
        learning_rate: float = 0.05,
        max_epochs: int = 40,
        random_state: int = 0,
        word_table: "WordVectorTable | None" = None,
    ):
        self.dim = dim
        self.hidden = hidden
        self.utterance_dim = utterance_dim
        self.head_hidden = head_hidden
        self.max_len = max_len
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.random_state = random_state
        self.word_table = word_table

    def _table(self) -> WordVectorTable:
        if self.word_table is None:
            self.word_table = WordVectorTable.bundled()
        return self.word_table

    def _check_fitted(self) -> None:
        if not hasattr(self, "encoder_"):
            raise NotFittedError("This ProgramReranker instance is not fitted yet.")

    def _init_params(self) -> None:
        rng = np.random.default_rng(self.random_state)
        self.encoder_ = UtteranceEncoder(
            self._table(),
            dim=self.dim,
            hidden=self.hidden,
            out_dim=self.utterance_dim,
            max_len=self.max_len,
            rng=rng,
        )
        self._positions = sinusoidal_table(self.max_len, self.dim)
        concat_dim = self.utterance_dim + self.dim + self.dim

        def init(shape, fan_in):
            return ag.parameter(rng.standard_normal(shape) / np.sqrt(fan_in))

        self.W_state_ = init((STATE_FEATURES, self.dim), STATE_FEATURES)
        self.b_state_ = ag.parameter(np.zeros(self.dim))
        self.W_h1_ = init((concat_dim, self.head_hidden), concat_dim)
        self.b_h1_ = ag.parameter(np.zeros(self.head_hidden))
        # zero output layer: untrained scores are identical for all inputs
        self.W_h2_ = ag.parameter(np.zeros((self.head_hidden, 1)))
        self.b_h2_ = ag.parameter(np.zeros(1))

    def parameters(self) -> list:
        return self.encoder_.parameters() + [
            self.W_state_,
            self.b_state_,
            self.W_h1_,
            self.b_h1_,
            self.W_h2_,
            self.b_h2_,
        ]

    def encode_program(self, tokens: "list[str] | tuple[str, ...]") -> np.ndarray:
        """Frozen program encoding: scaled word vectors + position, summed."""
        toks = list(tokens)[: self.max_len]
        if not toks:
            return np.zeros(self.dim)
        vecs = np.stack(
            [
                WORD_SCALE * self._table().vector(t) + self._positions[i]
                for i, t in enumerate(toks)
            ]
        )
        return vecs.sum(axis=0)

    def _forward_scores(self, utt_tokens, prog_token_lists, state_vec) -> ag.Tensor:
        k = len(prog_token_lists)
        X, mask = self.encoder_.prepare_batch([utt_tokens])
        u = self.encoder_.forward(X, mask)  # (1, utterance_dim)
        u_rep = ag.take(u, np.zeros(k, dtype=int))
        progs = ag.constant(
            np.stack([self.encode_program(p) for p in prog_token_lists])
        )
        state = ag.constant(np.tile(np.asarray(state_vec, dtype=np.float64), (k, 1)))
        s_enc = ag.add(ag.matmul(state, self.W_state_), self.b_state_)
        joined = ag.concat([u_rep, progs, s_enc], axis=1)
        h = ag.tanh(ag.add(ag.matmul(joined, self.W_h1_), self.b_h1_))
        out = ag.add(ag.matmul(h, self.W_h2_), self.b_h2_)  # (k, 1)
        return ag.tsum(out, axis=1)

    def fit(self, tuples) -> "ProgramReranker":
        """tuples: (utterance_tokens, candidate_token_lists, state, gold_index)."""
        tuples = list(tuples)
        self._init_params()
        for utt, cands, state_vec, gold in tuples:
            if gold is None or not (0 <= gold < len(cands)):
                raise GoldNotInCandidates(
                    f"gold index {gold} for a set of {len(cands)} candidates"
                )
        trainable = [t for t in tuples if len(t[1]) > 1]
        self.n_examples_ = len(tuples)
        if not trainable:
            self.loss_curve_ = []
            self.n_iter_ = 0
            return self

        rng = np.random.default_rng(self.random_state)
        opt = ag.SGD(self.parameters(), lr=self.learning_rate)
        self.loss_curve_ = []
        for _ in range(self.max_epochs):
            order = rng.permutation(len(trainable))
            total = 0.0
            for ti in order:
                utt, cands, state_vec, gold = trainable[int(ti)]
                opt.zero_grad()
                scores = self._forward_scores(utt, cands, state_vec)
                loss = ag.softmax_cross_entropy(scores, gold)
                loss.backward()
                opt.step()
                total += float(loss.data)
            self.loss_curve_.append(total / len(trainable))
        self.n_iter_ = self.max_epochs
        return self

    def score(self, utt_tokens, state_vec, prog_token_lists) -> np.ndarray:
        """Scores for each candidate; untrained output is all zeros."""
        self._check_fitted()
        if not prog_token_lists:
            return np.zeros(0)
        u = self.encoder_.embed([utt_tokens])[0]
        progs = np.stack([self.encode_program(p) for p in prog_token_lists])
        s_enc = np.asarray(state_vec) @ self.W_state_.data + self.b_state_.data
        k = len(prog_token_lists)
        joined = np.concatenate(
            [np.tile(u, (k, 1)), progs, np.tile(s_enc, (k, 1))], axis=1
        )
        h = np.tanh(joined @ self.W_h1_.data + self.b_h1_.data)
        out = h @ self.W_h2_.data + self.b_h2_.data
        return out[:, 0]

    def param_arrays(self) -> dict[str, np.ndarray]:
        self._check_fitted()
        arrays = {f"encoder.{k}": v for k, v in self.encoder_.param_arrays().items()}
        for name in ("W_state_", "b_state_", "W_h1_", "b_h1_", "W_h2_", "b_h2_"):
            arrays[name.rstrip("_")] = getattr(self, name).data
        return arrays

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self._init_params()
        self.encoder_.load_param_arrays(
            {
                k.split(".", 1)[1]: v
                for k, v in arrays.items()
                if k.startswith("encoder.")
            }
        )
        for name in ("W_state_", "b_state_", "W_h1_", "b_h1_", "W_h2_", "b_h2_"):
            key = name.rstrip("_")
            if key in arrays:
                getattr(self, name).data = np.array(arrays[key], dtype=np.float64)
