"""Entity abstraction, resolution, and example lifting.

Abstraction swaps object mentions for ``<obj>`` tokens; resolution maps
each mention back to a concrete type using the world state to break
ties between types sharing a name.  Lifting turns a taught (utterance,
program) pair into a reusable template, and ``combine`` is its inverse.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .catalog import Catalog, ObjectType
from .programs import (
    LiftedAction,
    LiftedProgram,
    PrimitiveAction,
    Program,
    Slot,
)
from .world import WorldState, nearest_instance

SLOT_WORD = "<obj>"

_TOKEN_RE = re.compile(r"<obj>|[a-z0-9]+(?:'[a-z0-9]+)?")


class UnknownReference(Exception):
    def __init__(self, surface: str):
        super().__init__(f"no catalog entry for {surface!r}")
        self.surface = surface


class ArityMismatch(Exception):
    def __init__(self, expected: int, got: int):
        super().__init__(f"template expects {expected} reference(s), got {got}")
        self.expected = expected
        self.got = got


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class ObjectReference:
    """One object mention: the phrase matched and its slot position."""

    surface: str
    slot: int
    token_index: int


@dataclass(frozen=True)
class LiftedUtterance:
    tokens: tuple[str, ...]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    @property
    def slot_count(self) -> int:
        return sum(1 for t in self.tokens if t == SLOT_WORD)


def abstract(
    text: str, lexicon: dict[str, list[str]], max_phrase_words: int = 3
) -> tuple[LiftedUtterance, list[ObjectReference]]:
    """Replace object mentions with ``<obj>``, longest match first.

    Idempotent: no lexicon phrase contains the slot token, so running it
    on already-lifted text changes nothing.
    """
    tokens = tokenize(text)
    out: list[str] = []
    refs: list[ObjectReference] = []
    i = 0
    while i < len(tokens):
        matched = False
        if tokens[i] != SLOT_WORD:
            for n in range(min(max_phrase_words, len(tokens) - i), 0, -1):
                phrase = " ".join(tokens[i : i + n])
                if phrase in lexicon:
                    refs.append(
                        ObjectReference(
                            surface=phrase, slot=len(refs), token_index=len(out)
                        )
                    )
                    out.append(SLOT_WORD)
                    i += n
                    matched = True
                    break
        if not matched:
            out.append(tokens[i])
            i += 1
    return LiftedUtterance(tokens=tuple(out)), refs


def resolve(
    references: list[ObjectReference],
    state: WorldState,
    lexicon: dict[str, list[str]],
    catalog: Catalog,
) -> list[ObjectType]:
    """Ground each reference to an object type.

    A surface claimed by several types goes to the one whose instance is
    physically closest to the agent; with no instance present, to the
    first claimant in catalog order.
    """
    grounding: list[ObjectType] = []
    for ref in references:
        names = lexicon.get(ref.surface)
        if not names:
            raise UnknownReference(ref.surface)
        if len(names) == 1:
            grounding.append(catalog[names[0]])
            continue
        inst = nearest_instance(state, names)
        grounding.append(catalog[inst.type_name if inst else names[0]])
    return grounding


def combine(lifted: LiftedProgram, grounding: "list[ObjectType] | list[str]") -> Program:
    """Fill a template's slots from a grounding; inverse of lifting."""
    names = [g.name if isinstance(g, ObjectType) else g for g in grounding]
    if len(names) != lifted.slot_count:
        raise ArityMismatch(lifted.slot_count, len(names))
    actions = []
    for act in lifted.actions:
        args = tuple(
            names[a.index] if isinstance(a, Slot) else a for a in act.args
        )
        actions.append(PrimitiveAction(act.template, args))
    return Program(actions=tuple(actions))


def lift_example(
    utterance: str,
    program: Program,
    state: WorldState,
    lexicon: dict[str, list[str]],
    catalog: Catalog,
    max_phrase_words: int = 3,
) -> tuple[LiftedUtterance, LiftedProgram]:
    """Abstract a taught pair into a reusable template.

    Each program argument whose type was mentioned in the utterance is
    replaced by the slot of that type's first mention; types the
    utterance never names stay concrete.
    """
    if program.not_sure:
        raise ValueError("cannot lift NOT_SURE")
    lifted_u, refs = abstract(utterance, lexicon, max_phrase_words)
    grounding = resolve(refs, state, lexicon, catalog)
    first_slot: dict[str, int] = {}
    for ref, otype in zip(refs, grounding):
        first_slot.setdefault(otype.name, ref.slot)
    actions = []
    for act in program.actions:
        args = tuple(
            Slot(first_slot[a]) if a in first_slot else a for a in act.args
        )
        actions.append(LiftedAction(act.template, args))
    lifted_p = LiftedProgram(actions=tuple(actions), slot_count=len(refs))
    return lifted_u, lifted_p
