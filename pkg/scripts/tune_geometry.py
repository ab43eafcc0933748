"""Measure embedding geometry under candidate training configurations.

For each configuration this trains the pair classifier on the seed set,
calibrates the retrieval threshold, and reports the quantities the
acceptance battery cares about: seed parse correctness, refusal margins
on novel utterances, threshold placement, and wall time.
"""
from __future__ import annotations

import itertools
import json
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from liftparse.catalog import Catalog
from liftparse.entity import abstract
from liftparse.parser import (
    ParserConfig,
    STOP_WORDS,
    calibrate_threshold,
    loo_precision,
    preprocess,
)
from liftparse.programs import LiftedProgram
from liftparse.nn.pair import PairEmbeddingClassifier
from liftparse.nn.words import WordVectorTable

NOVEL = [
    "wash the coffee mug",
    "rinse the plate under the faucet",
    "tidy up the coffee table",
    "sweep the floor under the dining table",
    "boil some water for the pasta",
    "vacuum the living room floor",
    "dust the shelf in the corner",
    "slice the bread for breakfast",
    "warm up the soup on the stove",
    "make me a cup of coffee",
    "water the plant by the window",
]


def load_seeds():
    data = json.loads(
        (Path(__file__).resolve().parents[1] / "src/liftparse/data/seed_examples.json").read_text()
    )
    seeds = []
    for ex in data["examples"]:
        toks = preprocess(ex["utterance"])
        prog = LiftedProgram.from_text(ex["program"]).to_text()
        seeds.append((toks, prog))
    return seeds


def evaluate(clf, X, keys, novel_tokens, verbose=False):
    emb = clf.embed(X)
    tau = calibrate_threshold(emb, keys, ParserConfig())
    prec, _ = loo_precision(emb, keys, tau)

    n = len(emb)
    D = np.linalg.norm(emb[:, None] - emb[None, :], axis=2)
    same = np.equal.outer(keys, keys)
    iu = np.triu_indices(n, k=1)
    same_d = D[iu][same[iu]]
    cross_d = D[iu][~same[iu]]

    nn_ok = 0
    c1 = 0
    for i in range(n):
        row = D[i].copy()
        row[i] = np.inf
        j = int(np.argmin(row))
        nn_ok += keys[j] == keys[i]
        best = {}
        for k in range(n):
            if k != i and D[i, k] < tau:
                best[keys[k]] = min(best.get(keys[k], np.inf), D[i, k])
        ordered = sorted(best, key=lambda p: best[p])
        c1 += (not ordered) or best.get(keys[i], np.inf) <= best[ordered[0]]

    # bridge diagnostics: fetch-program entries vs the GOTO cluster
    fetch_idx = [i for i, k in enumerate(keys) if ";" in k]
    goto_idx = [i for i, k in enumerate(keys) if k == "GOTO <OBJ:0>"]
    bridge_d = (
        min(D[i, j] for i in fetch_idx for j in goto_idx) if fetch_idx else np.nan
    )

    nov = clf.embed(novel_tokens)
    nov_d = np.linalg.norm(nov[:, None] - emb[None, :], axis=2).min(axis=1)
    refused = int((nov_d >= tau).sum())
    if verbose:
        for t, d in zip(novel_tokens, nov_d):
            flag = "REFUSE" if d >= tau else "ACCEPT"
            print(f"      {flag} d={d:.3f}  {' '.join(t)}")
    return dict(
        tau=tau, prec=prec, same_max=float(same_d.max()),
        cross_min=float(cross_d.min()), bridge=float(bridge_d),
        nn_ok=nn_ok, c1=c1, nov_min=float(nov_d.min()),
        wash=float(nov_d[0]), refused=refused,
    )


def main():
    catalog = Catalog.load()
    table = WordVectorTable.bundled()
    seeds = load_seeds()
    X = [t for t, _ in seeds]
    keys = [p for _, p in seeds]

    novel_tokens = []
    for text in NOVEL:
        lifted, _ = abstract(text, catalog.lexicon, catalog.max_phrase_words)
        novel_tokens.append(tuple(t for t in lifted.tokens if t not in STOP_WORDS))

    grid = itertools.product(
        [8.0, 12.0, 16.0],              # word scale
        [0.01, 0.005],                  # encoder lr
        [0.5, 1.0],                     # calibration (a,b) lr
        [(8, 0.05), (12, 0.05), (25, 0.08)],  # (max_epochs, early_stop)
    )
    print(
        f"{'ws':>4} {'enc_lr':>7} {'cal_lr':>7} {'ep':>3} {'stop':>5} | "
        f"{'loss':>7} {'it':>3} {'a':>5} {'b':>6} {'tau':>6} {'prec':>5} | "
        f"{'smax':>5} {'xmin':>5} {'brdg':>5} | {'nn':>3} {'c1':>3} | "
        f"{'nmin':>5} {'wash':>5} {'ref':>5} | {'sec':>4}"
    )
    for ws, enc_lr, cal_lr, (max_ep, stop) in grid:
        t0 = time.time()
        clf = PairEmbeddingClassifier(
            word_scale=ws,
            learning_rate=enc_lr,
            calibration_learning_rate=cal_lr,
            max_epochs=max_ep,
            early_stop_loss=stop,
            random_state=0,
            word_table=table,
        )
        clf.fit(X, keys)
        m = evaluate(clf, X, keys, novel_tokens)
        dt = time.time() - t0
        print(
            f"{ws:>4} {enc_lr:>7} {cal_lr:>7} {max_ep:>3} {stop:>5} | "
            f"{clf.final_loss_:>7.4f} {clf.n_iter_:>3} {clf.a_:>5.2f} {clf.b_:>6.2f} "
            f"{m['tau']:>6.3f} {m['prec']:>5.3f} | "
            f"{m['same_max']:>5.3f} {m['cross_min']:>5.3f} {m['bridge']:>5.3f} | "
            f"{m['nn_ok']:>3} {m['c1']:>3} | "
            f"{m['nov_min']:>5.3f} {m['wash']:>5.3f} {m['refused']:>2}/11 | {dt:>4.1f}"
        )


if __name__ == "__main__":
    main()
