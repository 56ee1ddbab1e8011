"""Rule evaluation — contexts, visit history and the indexed rule book.

evaluate() is pure: it reads the context and never records visits.
match_all() runs a whole rule set against one scan and commits
FIRST_VISIT bookkeeping once the pass is complete, so that every rule in
the pass sees the same history.
"""

import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, tzinfo
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from spotex.config import DEFAULT_DELTA_MS, DEFAULT_OMEGA_DB
from spotex.errors import LogError, ProximityLogRequiredError, RuleEvaluationError, SpotexError
from spotex.proximity.proxlog import LogStore
from spotex.radio.fingerprint import Fingerprint, normalize_mac
from spotex.rules.base import And, ConditionNode, Not, Or, Predicate, Rule
from spotex.rules.registry import get_predicate

logger = logging.getLogger(__name__)


def scan_time(t_ms: int, tz: Optional[tzinfo] = None) -> datetime:
    """Wall-clock time of a scan timestamp, local unless `tz` is given."""
    try:
        return datetime.fromtimestamp(t_ms / 1000, tz=tz)
    except (OverflowError, OSError, ValueError):
        raise LogError(f"timestamp {t_ms} ms is outside the supported date range") from None


class VisitHistory:
    """(client, rule id) pairs whose antecedent has held at least once."""

    def __init__(self, seen: Iterable[Tuple[str, str]] = ()):
        self._lock = threading.Lock()
        self._seen: Set[Tuple[str, str]] = {(normalize_mac(c), r) for c, r in seen}

    def seen(self, client: str, rule_id: str) -> bool:
        with self._lock:
            return (client, rule_id) in self._seen

    def commit(self, visits: Iterable[Tuple[str, str]]) -> None:
        with self._lock:
            self._seen.update(visits)

    def snapshot(self) -> FrozenSet[Tuple[str, str]]:
        with self._lock:
            return frozenset(self._seen)

    def __len__(self) -> int:
        return len(self._seen)


@dataclass
class EvalContext:
    """Everything a predicate may look at.

    `now` defaults to the scan time in local wall-clock time. `delta` (ms)
    and `omega` (dB) parameterise IN_GROUP_OF.
    """

    scan: Fingerprint
    client: str
    now: Optional[datetime] = None
    attrs: Mapping[str, int] = field(default_factory=dict)
    history: VisitHistory = field(default_factory=VisitHistory)
    log: Optional[LogStore] = None
    delta: int = DEFAULT_DELTA_MS
    omega: float = DEFAULT_OMEGA_DB

    def __post_init__(self):
        self.client = normalize_mac(self.client)
        if self.now is None:
            self.now = scan_time(self.scan.t)


# ─── Evaluation ───────────────────────────────────────────────────────────────

def _holds(node: ConditionNode, ctx: EvalContext, rule_id: str, assume_first_visit: bool) -> bool:
    if isinstance(node, Predicate):
        if assume_first_visit and node.name == "FIRST_VISIT":
            return True
        return get_predicate(node.name).holds(node.args, ctx, rule_id)
    if isinstance(node, Not):
        return not _holds(node.child, ctx, rule_id, assume_first_visit)
    if isinstance(node, And):
        return (_holds(node.left, ctx, rule_id, assume_first_visit)
                and _holds(node.right, ctx, rule_id, assume_first_visit))
    return (_holds(node.left, ctx, rule_id, assume_first_visit)
            or _holds(node.right, ctx, rule_id, assume_first_visit))


def _check_requirements(rule: Rule, ctx: EvalContext) -> None:
    if ctx.log is None and rule.uses("IN_GROUP_OF"):
        raise ProximityLogRequiredError()


def evaluate(rule: Rule, ctx: EvalContext) -> bool:
    """Truth of the rule's condition in `ctx`; has no side effects."""
    _check_requirements(rule, ctx)
    return _holds(rule.condition, ctx, rule.id, assume_first_visit=False)


def antecedent_holds(rule: Rule, ctx: EvalContext) -> bool:
    """The condition with every FIRST_VISIT() taken as true."""
    _check_requirements(rule, ctx)
    return _holds(rule.condition, ctx, rule.id, assume_first_visit=True)


# ─── Trigger index ────────────────────────────────────────────────────────────

def trigger_ssids(node: ConditionNode) -> Optional[FrozenSet[str]]:
    """SSIDs of which at least one must be visible for the condition to hold.

    None means no such set is known and the rule is always evaluated.
    """
    if isinstance(node, Predicate):
        if node.name in ("IS_VISIBLE", "RSSI_IN"):
            return frozenset([node.args[0]])
        return None
    if isinstance(node, And):
        left, right = trigger_ssids(node.left), trigger_ssids(node.right)
        if left is None:
            return right
        if right is None:
            return left
        return left if len(left) <= len(right) else right
    if isinstance(node, Or):
        left, right = trigger_ssids(node.left), trigger_ssids(node.right)
        if left is None or right is None:
            return None
        return left | right
    return None


class RuleBook:
    """A rule set indexed by trigger SSID.

    match() returns exactly what evaluating every rule in order would,
    skipping rules none of whose trigger SSIDs is visible.
    """

    def __init__(self, rules: Iterable[Rule]):
        self.rules: List[Rule] = list(rules)
        self._triggers: List[Optional[FrozenSet[str]]] = [trigger_ssids(r.condition)
                                                          for r in self.rules]
        self._by_ssid: Dict[str, List[int]] = {}
        self._always: List[int] = []
        for i, triggers in enumerate(self._triggers):
            if triggers is None:
                self._always.append(i)
            else:
                for ssid in triggers:
                    self._by_ssid.setdefault(ssid, []).append(i)
        logger.debug("indexed %d rule(s): %d by ssid, %d unindexed",
                      len(self.rules), len(self.rules) - len(self._always), len(self._always))

    def __len__(self) -> int:
        return len(self.rules)

    def candidates(self, scan: Fingerprint) -> List[Rule]:
        """Rules worth evaluating for this scan, in rule-set order."""
        picked = set(self._always)
        for ssid in scan.ssids:
            picked.update(self._by_ssid.get(ssid, ()))
        return [self.rules[i] for i in sorted(picked)]

    def match(self, ctx: EvalContext) -> List[Tuple[str, str]]:
        """(rule id, message) for every rule whose condition holds, in order."""
        fired: List[Tuple[str, str]] = []
        visits: List[Tuple[str, str]] = []
        if ctx.log is None:
            # checked over the whole set, whether or not the index would skip the rule
            for rule in self.rules:
                if rule.uses("IN_GROUP_OF"):
                    raise RuleEvaluationError(rule.id, ProximityLogRequiredError())
        for rule in self.candidates(ctx.scan):
            try:
                if evaluate(rule, ctx):
                    fired.append((rule.id, rule.message))
                if rule.uses("FIRST_VISIT") and antecedent_holds(rule, ctx):
                    visits.append((ctx.client, rule.id))
            except SpotexError as e:
                raise RuleEvaluationError(rule.id, e) from e
        ctx.history.commit(visits)
        return fired


def match_all(rules: Iterable[Rule], ctx: EvalContext) -> List[Tuple[str, str]]:
    """Evaluate `rules` in order against one context; see RuleBook.match."""
    book = rules if isinstance(rules, RuleBook) else RuleBook(rules)
    return book.match(ctx)
