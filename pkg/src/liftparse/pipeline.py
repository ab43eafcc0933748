"""Utterance interpretation: text plus world state to an executable program.

The pipeline splits the utterance on "and", abstracts and grounds each
substring, retrieves lifted programs for it, takes the cross-product of
the per-substring retrievals, fills each combination's slots, discards
combinations that fail a speculative rollout, and lets the reranker pick
among the survivors.  Every dead end collapses to NOT_SURE rather than
an error: the caller renders that as a single apology line.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .catalog import Catalog
from .entity import ArityMismatch, abstract, combine, resolve, tokenize
from .parser import parse_lifted, preprocess, split_compositional
from .programs import NOT_SURE, LiftedProgram, Program
from .world import ExecError, WorldState, nearest_instance, run_program

# Cross-product combinations are explored nearest-first; anything past
# this many is noise from unusually dense retrievals, not signal.
MAX_COMBINATIONS = 128

FEATURE_ORDER = (
    "visible",
    "toggled",
    "open",
    "pickable",
    "receptacle",
    "held",
    "dirty",
    "hot",
    "cold",
)
TRACKED_OBJECTS = 2


@dataclass(frozen=True)
class Candidate:
    """One grounded program plus the evidence that produced it."""

    program: Program
    lifted: tuple[LiftedProgram, ...]
    exemplar_ids: tuple[int, ...]
    distance: float


@dataclass(frozen=True)
class CandidateSet:
    """Deduplicated grounded candidates for one utterance, nearest first.

    Carries the tokens and grounding the reranker consumes so session
    logs can rebuild its inputs exactly.
    """

    candidates: tuple[Candidate, ...] = ()
    utterance_tokens: tuple[str, ...] = ()
    grounding: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def programs(self) -> list[Program]:
        return [c.program for c in self.candidates]


def state_features(
    state: WorldState, type_names: "list[str] | tuple[str, ...]", catalog: Catalog
) -> np.ndarray:
    """Fixed-order flag vector over the first referenced object types.

    Each tracked type contributes nine flags; the instance-level ones
    come from the nearest instance and stay zero when none exists.
    """
    vec = np.zeros(TRACKED_OBJECTS * len(FEATURE_ORDER), dtype=np.float64)
    tracked: list[str] = []
    for name in type_names:
        if name not in tracked:
            tracked.append(name)
        if len(tracked) == TRACKED_OBJECTS:
            break
    for j, name in enumerate(tracked):
        otype = catalog.get(name)
        if otype is None:
            continue
        inst = nearest_instance(state, [name])
        flags = {
            "pickable": otype.pickable,
            "receptacle": otype.receptacle,
        }
        if inst is not None:
            flags.update(
                visible=inst.visible,
                toggled=inst.toggled,
                open=inst.open,
                held=inst.is_held,
                dirty=inst.dirty,
                hot=inst.hot,
                cold=inst.cold,
            )
        base = j * len(FEATURE_ORDER)
        for i, key in enumerate(FEATURE_ORDER):
            vec[base + i] = float(flags.get(key, False))
    return vec


def executability_filter(
    candidates: CandidateSet, state: WorldState, catalog: Catalog
) -> CandidateSet:
    """Keep candidates whose whole sequence runs cleanly from ``state``."""
    kept = tuple(
        c for c in candidates.candidates if _executes(c.program, state, catalog)
    )
    return CandidateSet(
        candidates=kept,
        utterance_tokens=candidates.utterance_tokens,
        grounding=candidates.grounding,
    )


def _executes(program: Program, state: WorldState, catalog: Catalog) -> bool:
    if program.not_sure:
        return False
    try:
        run_program(state, list(program.actions), catalog)
    except ExecError:
        return False
    return True


def _pronoun_variants(
    tokens: list[str], state: WorldState, catalog: Catalog, mentions: list[str]
) -> list[list[str]]:
    """Readings of a substring containing standalone "it".

    "it" may point at the held object ("put it inside") or at the most
    recent mention ("go to the microwave and open it") — English does
    not disambiguate, but the executability filter does, so both
    readings become candidates.  The unresolved original comes last as a
    fallback; without any antecedent it is the only reading.
    """
    if "it" not in tokens:
        return [tokens]

    def substituted(type_name: str) -> "list[str] | None":
        referent = catalog.get(type_name)
        if referent is None:
            return None
        name = tokenize(referent.display_name)
        out: list[str] = []
        for tok in tokens:
            out.extend(name if tok == "it" else [tok])
        return out

    variants: list[list[str]] = []
    held = state.held_object()
    if held is not None:
        sub = substituted(held.type_name)
        if sub is not None:
            variants.append(sub)
    if mentions:
        sub = substituted(mentions[-1])
        if sub is not None and sub not in variants:
            variants.append(sub)
    variants.append(tokens)
    return variants


def _filled_grounding(
    grounding: list[str], slot_count: int, pool: list[str]
) -> "list[str] | None":
    """Match a substring's grounding to a retrieved template's arity.

    Missing slots borrow the most recent mentions from earlier
    substrings; a surplus or an unfillable deficit disqualifies the
    combination (other retrievals may still fit).
    """
    if len(grounding) > slot_count:
        return None
    need = slot_count - len(grounding)
    if need == 0:
        return list(grounding)
    if len(pool) < need:
        return None
    return list(grounding) + pool[:need]


def interpret(
    utterance: str, state: WorldState, model
) -> tuple[Program, CandidateSet]:
    """Map an utterance to one executable program, or NOT_SURE.

    ``model`` supplies ``catalog``, ``store``, ``classifier`` and
    ``reranker``.  The returned candidate set holds the post-filter
    field the reranker chose from, for logging; it is empty whenever
    NOT_SURE is returned.
    """
    catalog = model.catalog
    lexicon = catalog.lexicon
    substrings = split_compositional(utterance)
    if not substrings:
        return NOT_SURE, CandidateSet()

    choices_per_sub: list[list[tuple[tuple[str, ...], object]]] = []
    processed_parts: list[tuple[str, ...]] = []
    mentions: list[str] = []
    for sub in substrings:
        variants = _pronoun_variants(tokenize(sub), state, catalog, mentions)
        choices: list[tuple[tuple[str, ...], object]] = []
        seen_variants: set[tuple] = set()
        primary: "tuple[list[str], tuple[str, ...]] | None" = None
        for variant in variants:
            lifted_u, refs = abstract(
                " ".join(variant), lexicon, catalog.max_phrase_words
            )
            grounded = resolve(refs, state, lexicon, catalog)
            names = tuple(t.name for t in grounded)
            key = (lifted_u.tokens, names)
            if key in seen_variants:
                continue
            seen_variants.add(key)
            processed = preprocess(lifted_u.tokens)
            retrieved = parse_lifted(
                processed, model.store, model.classifier.embed
            )
            if primary is None:
                primary = (list(names), processed)
            for retrieval in retrieved:
                choices.append((names, retrieval))
        if not choices:
            return NOT_SURE, CandidateSet()
        choices_per_sub.append(choices)
        mentions.extend(primary[0] if primary else [])
        processed_parts.append(primary[1] if primary else ())

    utt_tokens: tuple[str, ...] = processed_parts[0]
    for part in processed_parts[1:]:
        utt_tokens = utt_tokens + ("and",) + part

    combos = sorted(
        product(*choices_per_sub),
        key=lambda combo: sum(r.distance for _, r in combo),
    )[:MAX_COMBINATIONS]

    candidates: list[Candidate] = []
    seen: set[str] = set()
    for combo in combos:
        parts: list[Program] = []
        exemplar_ids: list[int] = []
        for k, (names, retrieval) in enumerate(combo):
            pool = [n for g, _ in combo[:k] for n in g][::-1]
            filled = _filled_grounding(
                list(names), retrieval.program.slot_count, pool
            )
            if filled is None:
                break
            try:
                parts.append(combine(retrieval.program, filled))
            except ArityMismatch:
                break
            exemplar_ids.extend(retrieval.exemplar_ids)
        else:
            program = Program.concat(parts)
            key = program.to_text()
            if key in seen:
                continue
            seen.add(key)
            candidates.append(
                Candidate(
                    program=program,
                    lifted=tuple(r.program for _, r in combo),
                    exemplar_ids=tuple(dict.fromkeys(exemplar_ids)),
                    distance=sum(r.distance for _, r in combo),
                )
            )

    candidate_set = CandidateSet(
        candidates=tuple(candidates),
        utterance_tokens=utt_tokens,
        grounding=tuple(mentions),
    )
    survivors = executability_filter(candidate_set, state, catalog)
    if not survivors.candidates:
        return NOT_SURE, CandidateSet(
            utterance_tokens=utt_tokens, grounding=tuple(mentions)
        )

    choice_idx = 0
    if len(survivors.candidates) > 1:
        from .nn.rerank import program_tokens

        scores = model.reranker.score(
            list(utt_tokens),
            state_features(state, survivors.grounding, catalog),
            [program_tokens(c.program) for c in survivors.candidates],
        )
        choice_idx = int(np.argmax(scores))
    return survivors.candidates[choice_idx].program, survivors
