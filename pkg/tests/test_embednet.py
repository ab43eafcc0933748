"""Pair classifier and utterance encoder behavior."""
from __future__ import annotations

import numpy as np
import pytest
from sklearn.exceptions import NotFittedError

from liftparse.nn.encoder import WORD_SCALE, UtteranceEncoder, sinusoidal_table
from liftparse.nn.pair import DegenerateDataset, PairEmbeddingClassifier
from liftparse.nn.serialize import load_params, save_params
from liftparse.nn.words import WordVectorTable

TOKENS = [
    ("go", "to", "the", "<obj>"),
    ("walk", "to", "the", "<obj>"),
    ("pick", "up", "the", "<obj>"),
    ("grab", "the", "<obj>"),
    ("open", "the", "<obj>"),
    ("close", "the", "<obj>"),
]
LABELS = ["GOTO", "GOTO", "PICKUP", "PICKUP", "OPEN", "CLOSE"]


@pytest.fixture(scope="module")
def fitted():
    return PairEmbeddingClassifier(max_epochs=2).fit(TOKENS, LABELS)


def test_default_word_scale_is_sixteen():
    assert WORD_SCALE == 16.0
    table = WordVectorTable.bundled()
    enc = UtteranceEncoder(table)
    assert enc.word_scale == 16.0


def test_untrained_identical_pair_probability():
    """At cosine 1 the initial calibration gives sigma(a+b) = sigma(2.5)."""
    clf = PairEmbeddingClassifier(max_epochs=0).fit(TOKENS, LABELS)
    p = clf.pair_probability(TOKENS[0], TOKENS[0])
    assert p == pytest.approx(1.0 / (1.0 + np.exp(-2.5)), abs=1e-12)
    assert p == pytest.approx(0.9241418, abs=1e-6)


def test_pair_probability_symmetry_is_exact(fitted):
    a, b = TOKENS[0], TOKENS[2]
    assert fitted.pair_probability(a, b) == fitted.pair_probability(b, a)


def test_embeddings_are_unit_norm(fitted):
    phi = fitted.embed(TOKENS)
    np.testing.assert_allclose(np.linalg.norm(phi, axis=1), 1.0, atol=1e-12)


def test_distance_cosine_identity(fitted):
    """On unit vectors, squared distance equals 2 - 2 cos within 1e-9."""
    phi = fitted.embed(TOKENS)
    for i in range(len(phi)):
        for j in range(len(phi)):
            d2 = float(np.sum((phi[i] - phi[j]) ** 2))
            cos = float(phi[i] @ phi[j])
            assert abs(d2 - (2.0 - 2.0 * cos)) <= 1e-9


def test_training_pulls_same_program_pairs_together():
    clf = PairEmbeddingClassifier(max_epochs=8).fit(TOKENS, LABELS)
    same = clf.pair_probability(TOKENS[0], TOKENS[1])
    diff = clf.pair_probability(TOKENS[0], TOKENS[4])
    assert same > 0.5 > diff
    assert clf.loss_curve_[-1] < clf.loss_curve_[0] or len(clf.loss_curve_) == 1


def test_fit_is_deterministic():
    a = PairEmbeddingClassifier(max_epochs=3).fit(TOKENS, LABELS)
    b = PairEmbeddingClassifier(max_epochs=3).fit(TOKENS, LABELS)
    np.testing.assert_array_equal(a.embed(TOKENS), b.embed(TOKENS))
    assert a.a_ == b.a_ and a.b_ == b.b_


def test_degenerate_datasets_are_rejected():
    with pytest.raises(DegenerateDataset):
        PairEmbeddingClassifier().fit([("go",)], ["GOTO"])
    with pytest.raises(DegenerateDataset):  # all pairs positive
        PairEmbeddingClassifier().fit(
            [("go",), ("walk",)], ["GOTO", "GOTO"]
        )
    with pytest.raises(DegenerateDataset):  # all pairs negative
        PairEmbeddingClassifier().fit(
            [("go",), ("open",)], ["GOTO", "OPEN"]
        )


def test_unfitted_raises():
    with pytest.raises(NotFittedError):
        PairEmbeddingClassifier().embed([("go",)])


def test_param_round_trip_through_file(tmp_path, fitted):
    path = tmp_path / "params.bin"
    save_params(path, fitted.param_arrays(), meta={"note": "test"})
    arrays, meta = load_params(path)
    assert meta["note"] == "test"
    clone = PairEmbeddingClassifier(max_epochs=2)
    clone.load_param_arrays(arrays)
    np.testing.assert_array_equal(clone.embed(TOKENS), fitted.embed(TOKENS))
    assert clone.pair_probability(TOKENS[0], TOKENS[3]) == fitted.pair_probability(
        TOKENS[0], TOKENS[3]
    )


def test_sinusoidal_table_shape_and_range():
    table = sinusoidal_table(32, 50)
    assert table.shape == (32, 50)
    assert np.all(np.abs(table) <= 1.0 + 1e-12)
    # rows are distinct so position carries signal
    assert not np.array_equal(table[0], table[1])


def test_unknown_words_still_embed(fitted):
    phi = fitted.embed([("flux", "capacitor"), ("warp", "core")])
    np.testing.assert_allclose(np.linalg.norm(phi, axis=1), 1.0, atol=1e-12)
    assert not np.array_equal(phi[0], phi[1])


def test_word_vector_table_is_stable():
    t1 = WordVectorTable.bundled()
    t2 = WordVectorTable.bundled()
    np.testing.assert_array_equal(t1.vector("tomato"), t2.vector("tomato"))
    # hashed fallbacks are deterministic too
    np.testing.assert_array_equal(t1.vector("zzzz"), t2.vector("zzzz"))
