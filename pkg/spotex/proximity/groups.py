"""Convoy detection over the proximity log.

A group is the set of clients whose fingerprints stay comparable with the
querying client's chain of measurements while walking back from T_0 to
T_0 - T_max:

    1. R = latest record per other client in [T_0 - Δ, T_0]
    2. drop candidates not comparable with the starting environment E
    3. t = T_0; while t > T_0 - T_max:
         step back to the querier's previous measurement -> (t, E)
         refresh each candidate with its latest record in [t - Δ, t + Δ]
         drop candidates without a record there, or no longer comparable with E
         stop if R is empty

Windows never extend past T_0. `brute_force_group` recomputes the same
set from the definition by exhaustive scans and is kept as an oracle.
"""

import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional

from spotex.config import DEFAULT_DELTA_MS, DEFAULT_OMEGA_DB
from spotex.errors import GroupError, NoAnchorMeasurementError
from spotex.proximity.proxlog import LogRecord, LogStore
from spotex.radio.fingerprint import Fingerprint, comparable, normalize_mac

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroupParams:
    """Δ and T_max in ms, Ω in dB, T_0 in ms since epoch."""

    delta: int
    omega: float
    t0: int
    t_max: int

    def __post_init__(self):
        if not self.delta > 0:
            raise GroupError(f"delta must be > 0, got {self.delta}")
        if not self.omega > 0:
            raise GroupError(f"omega must be > 0, got {self.omega}")
        if self.t_max < self.delta:
            raise GroupError(f"t_max ({self.t_max}) must be >= delta ({self.delta})")


@dataclass
class GroupCandidate:
    client: str
    latest_t: int
    latest_env: Fingerprint
    updated: bool = False


def detect_group(store: LogStore, client: str, start_env: Fingerprint,
                 params: GroupParams) -> FrozenSet[str]:
    """Clients that travelled with `client` over the lookback horizon.

    Args:
        store: Proximity log
        client: Querying client's mac
        start_env: Querying client's measurement at (or nearest before) t0
        params: Δ, Ω, T_0, T_max

    Returns:
        Surviving candidate macs; never contains `client`
    """
    client = normalize_mac(client)
    if store.anchor(client, params.t0) is None:
        raise NoAnchorMeasurementError(
            f"no anchor measurement for {client} at or before t={params.t0}")

    t0, delta, omega = params.t0, params.delta, params.omega

    candidates: Dict[str, GroupCandidate] = {}
    for rec in store.query_window(t0 - delta, t0, exclude_client=client):
        # later records in time order overwrite earlier ones
        candidates[rec.client] = GroupCandidate(rec.client, rec.t, rec.fingerprint)
    if not candidates:
        return frozenset()

    candidates = {c: cand for c, cand in candidates.items()
                  if comparable(cand.latest_env, start_env, omega)}
    if not candidates:
        return frozenset()

    t = t0
    env = start_env
    while t > t0 - params.t_max:
        prev = store.previous_measurement(client, t)
        if prev is None:
            logger.debug("walk for %s ran out of measurements at t=%d", client, t)
            break
        t, env = prev.t, prev.fingerprint

        for cand in candidates.values():
            rec = store.latest_in(cand.client, t - delta, min(t + delta, t0))
            cand.updated = rec is not None
            if rec is not None:
                cand.latest_t, cand.latest_env = rec.t, rec.fingerprint

        candidates = {c: cand for c, cand in candidates.items()
                      if cand.updated and comparable(cand.latest_env, env, omega)}
        logger.debug("t=%d: %d candidate(s) remain", t, len(candidates))
        if not candidates:
            break

    return frozenset(candidates)


def in_group_of(store: LogStore, client: str, n: int, t: int, now: int,
                delta: int = DEFAULT_DELTA_MS, omega: float = DEFAULT_OMEGA_DB) -> bool:
    """True if `client` travelled in a group of at least n people for t seconds.

    The querying user counts as one of the n. Without a measurement at or
    before `now` the answer is False.
    """
    if n < 1 or t < 1:
        raise GroupError(f"IN_GROUP_OF needs n >= 1 and t >= 1, got ({n}, {t})")
    anchor = store.anchor(client, now)
    if anchor is None:
        return False
    if n == 1:
        return True

    params = GroupParams(delta=delta, omega=omega, t0=now, t_max=max(t * 1000, delta))
    group = detect_group(store, client, anchor.fingerprint, params)
    return len(group) >= n - 1


# ─── Oracle ───────────────────────────────────────────────────────────────────

def _last_matching(records: List[LogRecord], client: str, lo: float, hi: float
                   ) -> Optional[LogRecord]:
    found = None
    for rec in records:
        if rec.client == client and lo <= rec.t <= hi:
            found = rec
    return found


def brute_force_group(store: LogStore, client: str, start_env: Fingerprint,
                      params: GroupParams) -> FrozenSet[str]:
    """Same group as detect_group, computed from the definition.

    A client v is in the group iff its latest record in [T_0 - Δ, T_0] is
    comparable with start_env and, for every anchor of the backward walk,
    its latest record in [t_i - Δ, min(t_i + Δ, T_0)] exists and is
    comparable with E_i.
    """
    client = normalize_mac(client)
    records = store.records()
    t0, delta, omega = params.t0, params.delta, params.omega

    if _last_matching(records, client, float("-inf"), t0) is None:
        raise NoAnchorMeasurementError(
            f"no anchor measurement for {client} at or before t={t0}")

    anchors: List[LogRecord] = []
    t = t0
    while t > t0 - params.t_max:
        prev = None
        for rec in records:
            if rec.client == client and rec.t < t:
                prev = rec
        if prev is None:
            break
        anchors.append(prev)
        t = prev.t

    group = set()
    for other in {rec.client for rec in records} - {client}:
        first = _last_matching(records, other, t0 - delta, t0)
        if first is None or not comparable(first.fingerprint, start_env, omega):
            continue
        ok = True
        for anchor in anchors:
            rec = _last_matching(records, other, anchor.t - delta, min(anchor.t + delta, t0))
            if rec is None or not comparable(rec.fingerprint, anchor.fingerprint, omega):
                ok = False
                break
        if ok:
            group.add(other)
    return frozenset(group)
