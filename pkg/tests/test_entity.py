"""Entity abstraction, resolution, combination, and lifting."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liftparse.catalog import Catalog
from liftparse.entity import (
    SLOT_WORD,
    ArityMismatch,
    UnknownReference,
    abstract,
    combine,
    lift_example,
    resolve,
    tokenize,
)
from liftparse.programs import LiftedProgram, Program

from conftest import make_world

CATALOG = Catalog.load()
LEXICON = CATALOG.lexicon


def test_tokenize_lowercases_and_splits():
    assert tokenize("Go to the Dining Table!") == [
        "go", "to", "the", "dining", "table",
    ]
    assert tokenize("don't drop it") == ["don't", "drop", "it"]
    assert tokenize("pick <obj> up") == ["pick", "<obj>", "up"]


def test_abstract_replaces_longest_match_first():
    lifted, refs = abstract("put the salt shaker on the dining table", LEXICON)
    assert lifted.text == "put the <obj> on the <obj>"
    assert [r.surface for r in refs] == ["salt shaker", "dining table"]
    assert [r.slot for r in refs] == [0, 1]


def test_abstract_is_idempotent():
    lifted, refs = abstract("wash the coffee mug", LEXICON)
    again, again_refs = abstract(lifted.text, LEXICON)
    assert again.tokens == lifted.tokens
    assert again_refs == []


def test_abstract_leaves_unknown_words():
    lifted, refs = abstract("calibrate the flux capacitor", LEXICON)
    assert refs == []
    assert SLOT_WORD not in lifted.tokens


def test_resolve_breaks_name_ties_by_distance():
    # "table" belongs to DiningTable, CoffeeTable, and SideTable; the
    # nearest instance decides.
    world = make_world(
        [("CoffeeTable", (2, 3)), ("DiningTable", (7, 7))], agent=(2, 2)
    )
    _, refs = abstract("go to the table", LEXICON)
    grounding = resolve(refs, world, LEXICON, CATALOG)
    assert [g.name for g in grounding] == ["CoffeeTable"]


def test_resolve_falls_back_to_catalog_order():
    world = make_world([("Sofa", (5, 5))])  # no table instance at all
    _, refs = abstract("go to the table", LEXICON)
    grounding = resolve(refs, world, LEXICON, CATALOG)
    assert grounding[0].name == "DiningTable"  # first claimant in the catalog


def test_resolve_unknown_surface_raises():
    world = make_world([])
    refs = abstract("go to the sink", LEXICON)[1]
    bad = [r.__class__(surface="warp core", slot=0, token_index=0) for r in refs]
    with pytest.raises(UnknownReference):
        resolve(bad, world, LEXICON, CATALOG)


def test_combine_fills_slots_in_first_mention_order():
    lifted = LiftedProgram.from_text(
        "GOTO <OBJ:0>; PICKUP <OBJ:0>; GOTO <OBJ:1>; PUT <OBJ:0> <OBJ:1>",
    )
    program = combine(lifted, ["Tomato", "Sink"])
    assert program.to_text() == "GOTO Tomato; PICKUP Tomato; GOTO Sink; PUT Tomato Sink"


def test_combine_with_fixed_arguments():
    lifted = LiftedProgram.from_text(
        "GOTO <OBJ:0>; PICKUP <OBJ:0>; GOTO Sink; PUT <OBJ:0> Sink",
    )
    program = combine(lifted, ["Tomato"])
    assert program.to_text() == "GOTO Tomato; PICKUP Tomato; GOTO Sink; PUT Tomato Sink"


def test_combine_arity_is_strict():
    lifted = LiftedProgram.from_text("GOTO <OBJ:0>")
    with pytest.raises(ArityMismatch):
        combine(lifted, [])
    with pytest.raises(ArityMismatch):
        combine(lifted, ["Tomato", "Sink"])


def test_lift_example_maps_repeat_mentions_to_first_slot():
    world = make_world(
        [("Tomato", (2, 3)), ("DiningTable", (4, 4))], agent=(2, 2)
    )
    program = Program.from_text(
        "GOTO Tomato; PICKUP Tomato; GOTO DiningTable; PUT Tomato DiningTable"
    )
    lifted_u, lifted_p = lift_example(
        "put the tomato on the dining table", program, world, LEXICON, CATALOG
    )
    assert lifted_u.text == "put the <obj> on the <obj>"
    assert lifted_p.to_text() == (
        "GOTO <OBJ:0>; PICKUP <OBJ:0>; GOTO <OBJ:1>; PUT <OBJ:0> <OBJ:1>"
    )
    assert lifted_p.slot_count == 2


def test_lift_example_keeps_unmentioned_types_concrete():
    world = make_world(
        [("Pot", (2, 3)), ("Sink", (4, 4)), ("Faucet", (4, 4))], agent=(2, 2)
    )
    program = Program.from_text(
        "GOTO Pot; PICKUP Pot; GOTO Sink; PUT Pot Sink; "
        "TOGGLE Faucet; TOGGLE Faucet"
    )
    lifted_u, lifted_p = lift_example(
        "wash the pot", program, world, LEXICON, CATALOG
    )
    assert lifted_u.text == "wash the <obj>"
    assert lifted_p.to_text() == (
        "GOTO <OBJ:0>; PICKUP <OBJ:0>; GOTO Sink; PUT <OBJ:0> Sink; "
        "TOGGLE Faucet; TOGGLE Faucet"
    )
    assert lifted_p.slot_count == 1


# -- properties -------------------------------------------------------------

_PICKABLE = sorted(t.name for t in CATALOG.pickables())
_RECEPTACLE = sorted(
    t.name for t in CATALOG.types if t.receptacle and not t.pickable
)


@settings(max_examples=60, deadline=None)
@given(
    target=st.sampled_from(_PICKABLE),
    dest=st.sampled_from(_RECEPTACLE),
    name_index=st.integers(min_value=0, max_value=1),
)
def test_lift_then_combine_round_trips(target, dest, name_index):
    """lift_example followed by resolve+combine reproduces the program."""
    t_names = CATALOG[target].typical_names
    d_names = CATALOG[dest].typical_names
    t_name = t_names[min(name_index, len(t_names) - 1)]
    d_name = d_names[min(name_index, len(d_names) - 1)]
    world = make_world([(target, (2, 3)), (dest, (5, 5))], agent=(2, 2))
    utterance = f"put the {t_name} on the {d_name}"
    program = Program.from_text(
        f"GOTO {target}; PICKUP {target}; GOTO {dest}; PUT {target} {dest}"
    )
    lifted_u, lifted_p = lift_example(utterance, program, world, LEXICON, CATALOG)
    refs = abstract(utterance, LEXICON)[1]
    grounding = resolve(refs, world, LEXICON, CATALOG)
    assert combine(lifted_p, grounding).to_text() == program.to_text()


@settings(max_examples=60, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz '", max_size=60))
def test_abstract_never_invents_slots(text):
    lifted, refs = abstract(text, LEXICON)
    assert lifted.slot_count == len(refs)
    # idempotence on arbitrary text
    again, again_refs = abstract(lifted.text, LEXICON)
    assert again.tokens == lifted.tokens
    assert again_refs == []


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(LEXICON)))
def test_every_lexicon_phrase_is_detected(phrase):
    lifted, refs = abstract(f"go to the {phrase}", LEXICON)
    assert [r.surface for r in refs] == [phrase]
    assert lifted.tokens.count(SLOT_WORD) == 1
