"""Base classes for production rules.

A rule is `IF <condition> THEN { <message> }`. The condition is a tree of
And / Or / Not over Predicate calls; every predicate name belongs to the
closed vocabulary in predicates.py.
"""

from dataclasses import dataclass, field
from typing import Iterator, Tuple, Union

from spotex.errors import ArityError, RuleArgumentError

ArgValue = Union[str, int]


# ─── Condition tree ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Predicate:
    name: str
    args: Tuple[ArgValue, ...] = ()


@dataclass(frozen=True)
class And:
    left: "ConditionNode"
    right: "ConditionNode"


@dataclass(frozen=True)
class Or:
    left: "ConditionNode"
    right: "ConditionNode"


@dataclass(frozen=True)
class Not:
    child: "ConditionNode"


ConditionNode = Union[Predicate, And, Or, Not]


def iter_predicates(node: ConditionNode) -> Iterator[Predicate]:
    """All predicate calls in the tree, left to right."""
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Predicate):
            yield cur
        elif isinstance(cur, Not):
            stack.append(cur.child)
        else:
            stack.append(cur.right)
            stack.append(cur.left)


def tree_height(node: ConditionNode) -> int:
    height = 0
    stack = [(node, 1)]
    while stack:
        cur, depth = stack.pop()
        height = max(height, depth)
        if isinstance(cur, Not):
            stack.append((cur.child, depth + 1))
        elif isinstance(cur, (And, Or)):
            stack.append((cur.left, depth + 1))
            stack.append((cur.right, depth + 1))
    return height


@dataclass(frozen=True)
class Rule:
    """A parsed production; `id` is stable for identical rules."""

    id: str
    condition: ConditionNode
    message: str
    line: int = field(default=0, compare=False)

    @property
    def predicate_names(self) -> frozenset:
        return frozenset(p.name for p in iter_predicates(self.condition))

    def uses(self, name: str) -> bool:
        return name in self.predicate_names


# ─── Predicate definitions ────────────────────────────────────────────────────

class PredicateDef:
    """Base class for the predicate vocabulary.

    Subclasses set `name` and `arg_types`, and implement
    holds(args, ctx, rule_id) -> bool. Value checks beyond the argument
    types go in check_values().
    """

    name: str = ""
    arg_types: Tuple[type, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    def validate(self, args: Tuple[ArgValue, ...], line: int = 0, column: int = 0) -> None:
        if len(args) != self.arity:
            raise ArityError(self.name, self.arity, len(args), line, column)
        for i, (value, expected) in enumerate(zip(args, self.arg_types), 1):
            if isinstance(value, bool) or not isinstance(value, expected):
                kind = "string" if expected is str else "integer"
                raise RuleArgumentError(
                    f"{self.name} argument {i} must be a {kind} literal, got {value!r}",
                    line, column)
        self.check_values(args, line, column)

    def check_values(self, args: Tuple[ArgValue, ...], line: int, column: int) -> None:
        pass

    def holds(self, args: Tuple[ArgValue, ...], ctx, rule_id: str) -> bool:
        raise NotImplementedError

    def _error(self, message: str, line: int, column: int) -> RuleArgumentError:
        return RuleArgumentError(f"{self.name}: {message}", line, column)
