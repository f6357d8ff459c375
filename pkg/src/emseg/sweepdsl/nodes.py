"""AST for the hyperparameter search-space notation.

Surface forms: ``[a, b]`` a continuous range, ``[a, b, c]`` all values from a
to b with step c, ``choice[...]`` one option out of several, a bare comma
list of terms the fixed set of tested values, ``name([...])`` a parameterized
term, and ``-`` an explicitly not-selected assignment.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Union

from ..errors import InfiniteSpace

_STEP_EPS = 1e-9


# --- leaf values -------------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: Union[int, float]


@dataclass(frozen=True)
class Percent:
    value: Union[int, float]


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Str:
    value: str
    quoted: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Dims:
    """Axis-size literal like 256x256 or 80x80x80."""

    sizes: tuple[int, ...]


@dataclass(frozen=True)
class NotSelected:
    """The '-' marker: this hyperparameter was not part of the assignment."""


# --- composite expressions ------------------------------------------------------

@dataclass(frozen=True)
class RangeExpr:
    lo: Union[int, float]
    hi: Union[int, float]


@dataclass(frozen=True)
class SteppedExpr:
    lo: Union[int, float]
    hi: Union[int, float]
    step: Union[int, float]


@dataclass(frozen=True)
class ChoiceExpr:
    options: tuple


@dataclass(frozen=True)
class ListExpr:
    """A bracket list that is neither a range nor a stepped range; denotes one
    fixed list value (e.g. the angle list of square_rotations)."""

    items: tuple


@dataclass(frozen=True)
class BraceList:
    """A brace-delimited fixed series like {28,36,48,64}."""

    items: tuple


@dataclass(frozen=True)
class Arg:
    name: str | None
    value: "SpaceExpr"


@dataclass(frozen=True)
class Term:
    """A named term with optional arguments; name '' is an anonymous tuple
    like (lr=0.0005, final_lr=0.1)."""

    name: str
    args: tuple[Arg, ...] = ()


@dataclass(frozen=True)
class TermList:
    terms: tuple


SpaceExpr = Union[
    Number, Percent, Bool, Str, Dims, NotSelected,
    RangeExpr, SteppedExpr, ChoiceExpr, ListExpr, BraceList, Term, TermList,
]

_FIXED_VALUE_TYPES = (Number, Percent, Bool, Str, Dims, NotSelected,
                      ListExpr, BraceList, Term, TermList)


# --- rendering --------------------------------------------------------------------

_BARE_WORD = re.compile(r"^[A-Za-z_][A-Za-z0-9_.\-]*$")
_RESERVED_WORDS = {"choice", "True", "False"}


def format_number(value: Union[int, float]) -> str:
    if isinstance(value, bool):  # guard: bools are ints in Python
        return "True" if value else "False"
    if isinstance(value, int):
        return str(value)
    if value == int(value) and abs(value) < 1e15:
        # keep a trailing .0 so the value re-parses as a float
        return f"{int(value)}.0"
    text = repr(value)
    if "e" in text or "E" in text:
        text = str(Decimal(text))
    return text


def render_expr(e: SpaceExpr) -> str:
    """Canonical text form; parse(render(e)) == e."""
    if isinstance(e, Number):
        return format_number(e.value)
    if isinstance(e, Percent):
        return format_number(e.value) + "%"
    if isinstance(e, Bool):
        return "True" if e.value else "False"
    if isinstance(e, Str):
        if not e.quoted and _BARE_WORD.match(e.value) and e.value not in _RESERVED_WORDS:
            return e.value
        return f'"{e.value}"'
    if isinstance(e, Dims):
        return "x".join(str(s) for s in e.sizes)
    if isinstance(e, NotSelected):
        return "-"
    if isinstance(e, RangeExpr):
        return f"[{format_number(e.lo)}, {format_number(e.hi)}]"
    if isinstance(e, SteppedExpr):
        return f"[{format_number(e.lo)}, {format_number(e.hi)}, {format_number(e.step)}]"
    if isinstance(e, ChoiceExpr):
        return "choice[" + ", ".join(render_expr(o) for o in e.options) + "]"
    if isinstance(e, ListExpr):
        return "[" + ", ".join(render_expr(i) for i in e.items) + "]"
    if isinstance(e, BraceList):
        return "{" + ", ".join(render_expr(i) for i in e.items) + "}"
    if isinstance(e, Term):
        inner = ", ".join(
            (f"{a.name}=" if a.name else "") + render_expr(a.value) for a in e.args
        )
        return f"{e.name}({inner})" if e.name else f"({inner})"
    if isinstance(e, TermList):
        return ", ".join(render_expr(t) for t in e.terms)
    raise TypeError(f"cannot render {e!r}")


# --- cardinality and enumeration -----------------------------------------------------

def _stepped_count(e: SteppedExpr) -> int:
    return int(math.floor((e.hi - e.lo) / e.step + _STEP_EPS)) + 1


def cardinality(e: SpaceExpr):
    """Number of distinct values the expression denotes; math.inf for
    continuous ranges."""
    if isinstance(e, RangeExpr):
        return math.inf
    if isinstance(e, SteppedExpr):
        return _stepped_count(e)
    if isinstance(e, ChoiceExpr):
        total = 0
        for opt in e.options:
            c = cardinality(opt)
            if c is math.inf:
                return math.inf
            total += c
        return total
    if isinstance(e, _FIXED_VALUE_TYPES):
        return 1
    raise TypeError(f"no cardinality for {e!r}")


def _stepped_value(e: SteppedExpr, k: int):
    if isinstance(e.lo, int) and isinstance(e.step, int):
        return Number(e.lo + k * e.step)
    return Number(round(e.lo + k * e.step, 12))


def value_set(e: SpaceExpr) -> list[SpaceExpr]:
    """All concrete values of a finite expression, in canonical order."""
    if isinstance(e, RangeExpr):
        raise InfiniteSpace(f"range {render_expr(e)} has infinitely many values")
    if isinstance(e, SteppedExpr):
        return [_stepped_value(e, k) for k in range(_stepped_count(e))]
    if isinstance(e, ChoiceExpr):
        out = []
        for opt in e.options:
            out.extend(value_set(opt))
        return out
    if isinstance(e, _FIXED_VALUE_TYPES):
        return [e]
    raise TypeError(f"no value set for {e!r}")


# --- membership ------------------------------------------------------------------------

def _number_in_stepped(v, e: SteppedExpr) -> bool:
    if v < e.lo - _STEP_EPS or v > e.hi + _STEP_EPS:
        return False
    k = round((v - e.lo) / e.step)
    return abs(v - (e.lo + k * e.step)) <= _STEP_EPS * max(1.0, abs(e.step))


def contains(space: SpaceExpr, value: SpaceExpr) -> bool:
    """Whether ``value`` is a member of the search-space expression.

    Term lists admit any sub-list of their terms (an assignment may switch
    on a subset of the tested augmentations); choices admit members of any
    option; ranges and stepped ranges admit the numbers they span.
    """
    if space == value:
        return True
    if isinstance(space, ChoiceExpr):
        return any(contains(opt, value) for opt in space.options)
    if isinstance(space, RangeExpr):
        return isinstance(value, Number) and space.lo <= value.value <= space.hi
    if isinstance(space, SteppedExpr):
        return isinstance(value, Number) and _number_in_stepped(value.value, space)
    if isinstance(space, TermList):
        chosen = value.terms if isinstance(value, TermList) else (value,)
        return all(any(contains(s, t) for s in space.terms) for t in chosen)
    if isinstance(space, Term) and isinstance(value, Term):
        if space.name != value.name or len(space.args) != len(value.args):
            return False
        for s_arg, v_arg in zip(space.args, value.args):
            if s_arg.name != v_arg.name or not contains(s_arg.value, v_arg.value):
                return False
        return True
    return False


# --- named collections --------------------------------------------------------------------

_NORMALIZE = re.compile(r"[^a-z0-9]+")


def normalize_name(label: str) -> str:
    """Lower-snake-case ASCII key for a display label."""
    text = label.strip().lower().replace("%", " pct ")
    return _NORMALIZE.sub("_", text).strip("_")


@dataclass
class SpaceEntry:
    label: str
    expr: SpaceExpr

    @property
    def name(self) -> str:
        return normalize_name(self.label)


class SearchSpace:
    """Ordered map of hyperparameter name -> search-space expression."""

    def __init__(self, entries: Iterable[SpaceEntry] = ()):
        self.entries: dict[str, SpaceEntry] = {}
        for e in entries:
            self.add(e)

    def add(self, entry: SpaceEntry) -> None:
        from ..errors import DuplicateName

        if entry.name in self.entries:
            raise DuplicateName(f"duplicate hyperparameter {entry.label!r}")
        self.entries[entry.name] = entry

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __getitem__(self, name: str) -> SpaceExpr:
        return self.entries[name].expr

    def names(self) -> list[str]:
        return list(self.entries)

    def items(self) -> list[tuple[str, SpaceExpr]]:
        return [(name, e.expr) for name, e in self.entries.items()]

    def __eq__(self, other) -> bool:
        if not isinstance(other, SearchSpace):
            return NotImplemented
        return [(e.label, e.expr) for e in self.entries.values()] == [
            (e.label, e.expr) for e in other.entries.values()
        ]


class ConfigAssignment(SearchSpace):
    """A search space whose every entry is one concrete value."""
