"""Random sampling and exhaustive grid enumeration over search spaces."""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from ..errors import InfiniteSpace
from .nodes import (
    ChoiceExpr,
    ConfigAssignment,
    Number,
    RangeExpr,
    SearchSpace,
    SpaceEntry,
    SpaceExpr,
    SteppedExpr,
    cardinality,
    contains,
    render_expr,
    value_set,
    _stepped_count,
    _stepped_value,
)


def sample_expr(e: SpaceExpr, rng: np.random.Generator) -> SpaceExpr:
    """One concrete value: choices pick an option first and then sample inside
    it; stepped ranges are uniform over their finite set; ranges are uniform
    reals; everything else is already a fixed value."""
    if isinstance(e, ChoiceExpr):
        idx = int(rng.integers(len(e.options)))
        return sample_expr(e.options[idx], rng)
    if isinstance(e, SteppedExpr):
        return _stepped_value(e, int(rng.integers(_stepped_count(e))))
    if isinstance(e, RangeExpr):
        return Number(float(rng.uniform(e.lo, e.hi)))
    return e


def sample(space: SearchSpace, seed: int) -> ConfigAssignment:
    """Draw one assignment, independently per entry; deterministic per seed."""
    rng = np.random.default_rng(seed)
    config = ConfigAssignment()
    for entry in space.entries.values():
        config.add(SpaceEntry(entry.label, sample_expr(entry.expr, rng)))
    return config


def space_cardinality(space: SearchSpace):
    total = 1
    for _, expr in space.items():
        c = cardinality(expr)
        if c is math.inf:
            return math.inf
        total *= c
    return total


def enumerate_grid(space: SearchSpace) -> Iterator[ConfigAssignment]:
    """All assignments in lexicographic product order (first entry most
    significant). Every entry must have finite cardinality."""
    entries = list(space.entries.values())
    for entry in entries:
        if cardinality(entry.expr) is math.inf:
            raise InfiniteSpace(
                f"cannot enumerate {entry.label!r} = {render_expr(entry.expr)}"
            )
    pools = [value_set(entry.expr) for entry in entries]
    for combo in itertools.product(*pools):
        config = ConfigAssignment()
        for entry, value in zip(entries, combo):
            config.add(SpaceEntry(entry.label, value))
        yield config


def validate_assignment(space: SearchSpace, config: ConfigAssignment) -> None:
    """Check every assigned value is a member of its search-space expression.

    Entries assigned '-' count as deliberately not selected and are skipped.
    """
    from .nodes import NotSelected

    for name, value in config.items():
        if name not in space:
            raise ValueError(f"assignment names unknown hyperparameter {name!r}")
        if isinstance(value, NotSelected):
            continue
        if not contains(space[name], value):
            raise ValueError(
                f"{name}: value {render_expr(value)} is not a member of "
                f"{render_expr(space[name])}"
            )


def render_space(space: SearchSpace) -> str:
    """Canonical 'label = expr' lines; stable under parse-then-render."""
    return "".join(f"{e.label} = {render_expr(e.expr)}\n" for e in space.entries.values())


render_config = render_space  # assignments share the surface syntax
