"""Parser, sampler and enumerator for the hyperparameter search-space
notation, plus the golden corpus of transcribed sweep tables."""

from importlib import resources

from .nodes import (
    Arg,
    Bool,
    BraceList,
    ChoiceExpr,
    ConfigAssignment,
    Dims,
    ListExpr,
    NotSelected,
    Number,
    Percent,
    RangeExpr,
    SearchSpace,
    SpaceEntry,
    SpaceExpr,
    SteppedExpr,
    Str,
    Term,
    TermList,
    cardinality,
    contains,
    normalize_name,
    render_expr,
    value_set,
)
from .parser import parse_config, parse_expr, parse_space
from .sampling import (
    enumerate_grid,
    render_config,
    render_space,
    sample,
    sample_expr,
    space_cardinality,
    validate_assignment,
)


def corpus_dir():
    """Traversable directory holding the golden .sss corpus."""
    return resources.files(__package__) / "corpus"


def corpus_tables() -> list[str]:
    """Names of the shipped sweep tables (one per transcribed source table)."""
    names = set()
    for item in corpus_dir().iterdir():
        if item.name.endswith(".sss") and not item.name.endswith(".best.sss"):
            names.add(item.name[: -len(".sss")])
    return sorted(names)


def load_corpus_space(table: str) -> SearchSpace:
    return parse_space((corpus_dir() / f"{table}.sss").read_text(encoding="utf-8"))


def load_corpus_best(table: str) -> ConfigAssignment:
    return parse_config((corpus_dir() / f"{table}.best.sss").read_text(encoding="utf-8"))


__all__ = [
    "Arg", "Bool", "BraceList", "ChoiceExpr", "ConfigAssignment", "Dims",
    "ListExpr", "NotSelected", "Number", "Percent", "RangeExpr", "SearchSpace",
    "SpaceEntry", "SpaceExpr", "SteppedExpr", "Str", "Term", "TermList",
    "cardinality", "contains", "normalize_name", "render_expr", "value_set",
    "parse_config", "parse_expr", "parse_space",
    "enumerate_grid", "render_config", "render_space", "sample", "sample_expr",
    "space_cardinality", "validate_assignment",
    "corpus_dir", "corpus_tables", "load_corpus_space", "load_corpus_best",
]
