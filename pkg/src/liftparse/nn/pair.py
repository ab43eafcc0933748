"""Pair classifier over utterance embeddings.

Two utterances are scored with sigma(a * cos(phi(f), phi(f')) + b); the
classifier is trained with binary cross-entropy on all utterance pairs,
labeled by whether they map to the same program.  Positive pairs are
oversampled so every batch is half positive, half negative.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import autograd as ag
from .encoder import UtteranceEncoder
from .words import WordVectorTable


class DegenerateDataset(ValueError):
    """Raised when training pairs are all-positive or all-negative."""


class PairEmbeddingClassifier(BaseEstimator):
    """Learns an utterance embedding where same-program pairs score high.

    X is a list of token sequences, y the program label of each sequence
    (any hashable).  After fitting, ``embed`` maps token sequences to
    unit vectors and ``pair_probability`` scores a pair.
    """

    def __init__(
        self,
        dim: int = 50,
        hidden: int = 64,
        out_dim: int = 32,
        max_len: int = 32,
        word_scale: float | None = None,
        scale_init: float = 5.0,
        bias_init: float = -2.5,
        learning_rate: float = 0.005,
        calibration_learning_rate: float = 1.0,
        batch_size: int = 32,
        max_epochs: int = 8,
        early_stop_loss: float = 0.05,
        random_state: int = 0,
        word_table: "WordVectorTable | None" = None,
    ):
        self.dim = dim
        self.hidden = hidden
        self.out_dim = out_dim
        self.max_len = max_len
        self.word_scale = word_scale
        self.scale_init = scale_init
        self.bias_init = bias_init
        self.learning_rate = learning_rate
        self.calibration_learning_rate = calibration_learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.early_stop_loss = early_stop_loss
        self.random_state = random_state
        self.word_table = word_table

    def _check_fitted(self) -> None:
        if not hasattr(self, "encoder_"):
            raise NotFittedError(
                "This PairEmbeddingClassifier instance is not fitted yet."
            )

    def _table(self) -> WordVectorTable:
        if self.word_table is None:
            self.word_table = WordVectorTable.bundled()
        return self.word_table


    def _make_encoder(self, rng) -> UtteranceEncoder:
        kwargs = {}
        if self.word_scale is not None:
            kwargs["word_scale"] = self.word_scale
        return UtteranceEncoder(
            self._table(),
            dim=self.dim,
            hidden=self.hidden,
            out_dim=self.out_dim,
            max_len=self.max_len,
            rng=rng,
            **kwargs,
        )

    def fit(self, X, y) -> "PairEmbeddingClassifier":
        X = [tuple(toks) for toks in X]
        y = list(y)
        if len(X) != len(y):
            raise ValueError("X and y length mismatch")
        if len(X) < 2:
            raise DegenerateDataset("need at least two utterances")

        positives = []
        negatives = []
        for i in range(len(X)):
            for j in range(i + 1, len(X)):
                (positives if y[i] == y[j] else negatives).append((i, j))
        if not positives or not negatives:
            raise DegenerateDataset(
                f"need both pair labels: {len(positives)} positive, "
                f"{len(negatives)} negative"
            )

        rng = np.random.default_rng(self.random_state)
        enc = self._make_encoder(rng)
        a = ag.parameter(np.array([self.scale_init]))
        b = ag.parameter(np.array([self.bias_init]))
        opt_enc = ag.SGD(enc.parameters(), lr=self.learning_rate)
        opt_cal = ag.SGD([a, b], lr=self.calibration_learning_rate)

        X_all, mask_all = enc.prepare_batch(X)
        pos = np.array(positives)
        neg = np.array(negatives)
        half = max(1, self.batch_size // 2)

        self.loss_curve_ = []
        stopped = None
        for epoch in range(self.max_epochs):
            neg_order = rng.permutation(len(neg))
            for lo in range(0, len(neg), half):
                neg_batch = neg[neg_order[lo : lo + half]]
                pos_batch = pos[rng.integers(0, len(pos), size=half)]
                pairs = np.concatenate([pos_batch, neg_batch])
                labels = np.concatenate(
                    [np.ones(len(pos_batch)), np.zeros(len(neg_batch))]
                )
                rows = np.unique(pairs)
                row_of = {int(r): k for k, r in enumerate(rows)}
                left = np.array([row_of[int(i)] for i, _ in pairs])
                right = np.array([row_of[int(j)] for _, j in pairs])

                opt_enc.zero_grad()
                opt_cal.zero_grad()
                phi = enc.forward(X_all[rows], mask_all[rows])
                cos = ag.tsum(
                    ag.mul(ag.take(phi, left), ag.take(phi, right)),
                    axis=1,
                )
                logits = ag.add(ag.mul(cos, a), b)
                loss = ag.bce_with_logits(logits, labels)
                loss.backward()
                opt_enc.step()
                opt_cal.step()

            full = self._full_loss(enc, X_all, mask_all, pos, neg, a.data[0], b.data[0])
            self.loss_curve_.append(full)
            if full <= self.early_stop_loss:
                stopped = epoch + 1
                break

        if not self.loss_curve_:
            self.loss_curve_.append(
                self._full_loss(enc, X_all, mask_all, pos, neg, a.data[0], b.data[0])
            )
        self.encoder_ = enc
        self.a_ = float(a.data[0])
        self.b_ = float(b.data[0])
        self.n_iter_ = stopped if stopped is not None else self.max_epochs
        self.final_loss_ = self.loss_curve_[-1]
        self.classes_ = np.array([0, 1])
        return self

    @staticmethod
    def _full_loss(enc, X_all, mask_all, pos, neg, a, b) -> float:
        phi = enc.embed_prepared(X_all, mask_all)
        pairs = np.concatenate([pos, neg])
        labels = np.concatenate([np.ones(len(pos)), np.zeros(len(neg))])
        cos = (phi[pairs[:, 0]] * phi[pairs[:, 1]]).sum(axis=1)
        z = a * cos + b
        losses = np.maximum(z, 0.0) - z * labels + np.log1p(np.exp(-np.abs(z)))
        return float(losses.mean())

    def embed(self, token_lists) -> np.ndarray:
        self._check_fitted()
        return self.encoder_.embed([tuple(t) for t in token_lists])

    def transform(self, X) -> np.ndarray:
        return self.embed(X)

    def pair_probability(self, tokens_a, tokens_b) -> float:
        phi = self.embed([tokens_a, tokens_b])
        return self.probability_from_embeddings(phi[0], phi[1])

    def probability_from_embeddings(self, u: np.ndarray, v: np.ndarray) -> float:
        self._check_fitted()
        z = self.a_ * float(u @ v) + self.b_
        return float(1.0 / (1.0 + np.exp(-z)))

    def predict_proba(self, X) -> np.ndarray:
        """X is a sequence of (tokens_a, tokens_b) pairs."""
        p = np.array([self.pair_probability(a, b) for a, b in X])
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)

    def param_arrays(self) -> dict[str, np.ndarray]:
        self._check_fitted()
        arrays = {f"encoder.{k}": v for k, v in self.encoder_.param_arrays().items()}
        arrays["a"] = np.array([self.a_])
        arrays["b"] = np.array([self.b_])
        return arrays

    def load_param_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        enc = self._make_encoder(np.random.default_rng(self.random_state))
        enc.load_param_arrays(
            {
                k.split(".", 1)[1]: v
                for k, v in arrays.items()
                if k.startswith("encoder.")
            }
        )
        self.encoder_ = enc
        self.a_ = float(arrays["a"][0])
        self.b_ = float(arrays["b"][0])
        self.classes_ = np.array([0, 1])
