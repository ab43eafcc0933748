"""Primitive robot actions and the programs built from them.

A program is either a non-empty sequence of primitive actions or the
distinguished NOT_SURE value the agent returns when it refuses to act.
Lifted programs additionally allow argument slots that are filled in
later from object references in the utterance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

# Action templates and their argument counts.  PUT takes the object being
# placed and the receptacle, in that order; everything else takes one
# object type.
ARITY: dict[str, int] = {
    "GOTO": 1,
    "PICKUP": 1,
    "OPEN": 1,
    "CLOSE": 1,
    "TOGGLE": 1,
    "PUT": 2,
}

TEMPLATES: tuple[str, ...] = tuple(ARITY)

SLOT_TOKEN = "<OBJ>"


@dataclass(frozen=True)
class PrimitiveAction:
    """One grounded action: a template name plus object-type arguments."""

    template: str
    args: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.template not in ARITY:
            raise ValueError(f"unknown action template: {self.template!r}")
        if len(self.args) != ARITY[self.template]:
            raise ValueError(
                f"{self.template} takes {ARITY[self.template]} argument(s), "
                f"got {len(self.args)}"
            )

    def to_text(self) -> str:
        return " ".join((self.template,) + self.args)


@dataclass(frozen=True)
class Program:
    """A grounded program: either NOT_SURE or a non-empty action sequence."""

    actions: tuple[PrimitiveAction, ...] = ()
    not_sure: bool = False

    def __post_init__(self) -> None:
        if self.not_sure and self.actions:
            raise ValueError("NOT_SURE program cannot carry actions")
        if not self.not_sure and not self.actions:
            raise ValueError("program must contain at least one action")

    @property
    def complexity(self) -> int:
        """Number of primitive actions; 0 for NOT_SURE."""
        return len(self.actions)

    def to_text(self) -> str:
        if self.not_sure:
            return "NOT_SURE"
        return "; ".join(a.to_text() for a in self.actions)

    @classmethod
    def from_text(cls, text: str) -> "Program":
        text = text.strip()
        if text == "NOT_SURE":
            return NOT_SURE
        actions = []
        for chunk in text.split(";"):
            parts = chunk.split()
            if not parts:
                raise ValueError(f"empty action in program text: {text!r}")
            actions.append(PrimitiveAction(parts[0], tuple(parts[1:])))
        return cls(actions=tuple(actions))

    @classmethod
    def concat(cls, programs: "list[Program]") -> "Program":
        actions: tuple[PrimitiveAction, ...] = ()
        for p in programs:
            if p.not_sure:
                raise ValueError("cannot concatenate NOT_SURE")
            actions = actions + p.actions
        return cls(actions=actions)


NOT_SURE = Program(not_sure=True)


@dataclass(frozen=True)
class Slot:
    """Placeholder argument resolved from the utterance's references.

    ``index`` selects which reference fills the slot, counted in order of
    first mention within the utterance.
    """

    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("slot index must be non-negative")


@dataclass(frozen=True)
class LiftedAction:
    template: str
    args: tuple[object, ...]  # str (concrete type) or Slot entries

    def __post_init__(self) -> None:
        if self.template not in ARITY:
            raise ValueError(f"unknown action template: {self.template!r}")
        if len(self.args) != ARITY[self.template]:
            raise ValueError(
                f"{self.template} takes {ARITY[self.template]} argument(s), "
                f"got {len(self.args)}"
            )
        for a in self.args:
            if not isinstance(a, (str, Slot)):
                raise TypeError(f"lifted argument must be str or Slot, got {a!r}")

    def to_text(self) -> str:
        rendered = []
        for a in self.args:
            rendered.append(f"<OBJ:{a.index}>" if isinstance(a, Slot) else a)
        return " ".join([self.template] + rendered)


@dataclass(frozen=True)
class LiftedProgram:
    """Program template whose slot arguments are grounded at parse time.

    ``slot_count`` is the number of object references the template expects;
    it can exceed the number of distinct slot indices used when an
    utterance mentions a type more than once.
    """

    actions: tuple[LiftedAction, ...]
    slot_count: int = field(default=0)

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValueError("lifted program must contain at least one action")
        used = self.slot_indices()
        if used and max(used) >= self.slot_count:
            raise ValueError(
                f"slot index {max(used)} out of range for slot_count {self.slot_count}"
            )

    def slot_indices(self) -> tuple[int, ...]:
        seen: list[int] = []
        for act in self.actions:
            for a in act.args:
                if isinstance(a, Slot) and a.index not in seen:
                    seen.append(a.index)
        return tuple(seen)

    def to_text(self) -> str:
        return "; ".join(a.to_text() for a in self.actions)

    @classmethod
    def from_text(cls, text: str, slot_count: "int | None" = None) -> "LiftedProgram":
        """Parse lifted program text.

        Explicit ``<OBJ:i>`` tokens carry their slot index.  Bare ``<OBJ>``
        tokens are assigned fresh indices left to right, which matches how
        the seed examples are written.
        """
        actions = []
        next_bare = 0
        max_index = -1
        for chunk in text.strip().split(";"):
            parts = chunk.split()
            if not parts:
                raise ValueError(f"empty action in program text: {text!r}")
            args: list[object] = []
            for tok in parts[1:]:
                if tok == SLOT_TOKEN:
                    args.append(Slot(next_bare))
                    max_index = max(max_index, next_bare)
                    next_bare += 1
                elif tok.startswith("<OBJ:") and tok.endswith(">"):
                    idx = int(tok[5:-1])
                    args.append(Slot(idx))
                    max_index = max(max_index, idx)
                else:
                    args.append(tok)
            actions.append(LiftedAction(parts[0], tuple(args)))
        if slot_count is None:
            slot_count = max_index + 1
        return cls(actions=tuple(actions), slot_count=slot_count)
