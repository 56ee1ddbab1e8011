"""Predicate registry — maps each predicate name to its definition.

Central place to answer "is NAME a predicate, and how many arguments does it take?"
"""

from typing import List

from spotex.errors import UnknownPredicateError
from spotex.rules.base import PredicateDef
from spotex.rules.predicates import ALL_PREDICATES


PREDICATES = {p.name: p for p in ALL_PREDICATES}


def get_predicate(name: str, line: int = 0, column: int = 0) -> PredicateDef:
    """Look up a predicate by its (case-sensitive) name."""
    try:
        return PREDICATES[name]
    except KeyError:
        raise UnknownPredicateError(name, line, column) from None


def predicate_names() -> List[str]:
    return list(PREDICATES)


def describe_predicates() -> str:
    """Human-readable vocabulary, one predicate per line (used by `spotex info`)."""
    return "\n".join(f"- {p.__doc__.split(chr(10))[0].strip()}" for p in ALL_PREDICATES)
