"""Check-in registry — identities pinned to Wi-Fi fingerprints, with expiry.

A place is defined by network proximity only: two check-ins are near each
other when their fingerprints share at least one access point and their
averaged vectors are within a caller-supplied distance. Records expire
after a TTL; an identity holds at most one record.

On disk the registry is JSON Lines:

    {"identity": "fb:1234", "t": 1700000000000, "expires_at": 1700000900000,
     "attrs": {"friends": 250}, "aps": [{"ssid": ..., "mac": ..., "rssi": ...}]}
"""

import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from spotex.config import CHECKIN_TTL_MS
from spotex.errors import AlreadyExpiredError, CheckInError, FingerprintError, MetricError
from spotex.radio.fingerprint import Fingerprint, average_vector, common_macs
from spotex.radio.metrics import Metric, distance, parse_metric

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckInRecord:
    identity: str
    fingerprint: Fingerprint
    expires_at: int
    attrs: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.identity, str) or not self.identity:
            raise CheckInError("identity must be a nonempty string")
        if isinstance(self.expires_at, bool) or not isinstance(self.expires_at, int):
            raise CheckInError(f"expires_at must be integer ms, got {self.expires_at!r}")
        if self.expires_at <= self.fingerprint.t:
            raise CheckInError(
                f"expires_at ({self.expires_at}) must be after the scan time ({self.fingerprint.t})")
        if not isinstance(self.attrs, Mapping):
            raise CheckInError(f"attrs must be an object, got {type(self.attrs).__name__}")
        for key, value in self.attrs.items():
            if not isinstance(key, str) or isinstance(value, bool) or not isinstance(value, int):
                raise CheckInError(f"attribute {key!r} must map a string to an integer")
        object.__setattr__(self, "attrs", dict(self.attrs))

    @property
    def t(self) -> int:
        return self.fingerprint.t

    def to_dict(self) -> dict:
        return {"identity": self.identity, "t": self.t, "expires_at": self.expires_at,
                "attrs": dict(self.attrs), "aps": self.fingerprint.to_aps()}

    @classmethod
    def from_dict(cls, data: dict) -> "CheckInRecord":
        if not isinstance(data, dict):
            raise CheckInError("check-in must be a JSON object")
        try:
            return cls(identity=data["identity"],
                       fingerprint=Fingerprint.from_aps(data["t"], data["aps"]),
                       expires_at=data["expires_at"],
                       attrs=data.get("attrs", {}))
        except KeyError as e:
            raise CheckInError(f"check-in missing field {e.args[0]!r}") from None
        except (FingerprintError, TypeError) as e:
            raise CheckInError(str(e)) from e


def make_checkin(identity: str, fingerprint: Fingerprint, ttl_ms: int = CHECKIN_TTL_MS,
                 attrs: Optional[Mapping[str, int]] = None) -> CheckInRecord:
    """A check-in that expires ttl_ms after its scan."""
    if ttl_ms <= 0:
        raise CheckInError(f"ttl must be > 0 ms, got {ttl_ms}")
    return CheckInRecord(identity=identity, fingerprint=fingerprint,
                         expires_at=fingerprint.t + ttl_ms, attrs=attrs or {})


class CheckInRegistry:
    """At most one live record per identity. One writer at a time."""

    def __init__(self, records: Iterable[CheckInRecord] = ()):
        self._lock = threading.Lock()
        self._records: Dict[str, CheckInRecord] = {}
        for rec in records:
            self._store(rec)

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, identity: str) -> bool:
        return identity in self._records

    def get(self, identity: str) -> Optional[CheckInRecord]:
        return self._records.get(identity)

    def records(self) -> List[CheckInRecord]:
        """Snapshot, ordered by identity."""
        with self._lock:
            return [self._records[k] for k in sorted(self._records)]

    def _store(self, rec: CheckInRecord) -> bool:
        with self._lock:
            old = self._records.get(rec.identity)
            if old is not None and rec.t < old.t:
                return False
            self._records[rec.identity] = rec
            return True

    def register(self, rec: CheckInRecord, now: int) -> "CheckInRegistry":
        """Store `rec`, replacing an older record of the same identity."""
        if rec.expires_at <= now:
            raise AlreadyExpiredError(
                f"check-in for {rec.identity!r} already expired ({rec.expires_at} <= {now})")
        if not self._store(rec):
            logger.debug("kept newer check-in for %r", rec.identity)
        return self

    def expire(self, now: int) -> int:
        """Drop every record with expires_at <= now; returns how many went."""
        with self._lock:
            stale = [k for k, rec in self._records.items() if rec.expires_at <= now]
            for k in stale:
                del self._records[k]
        if stale:
            logger.info("expired %d check-in(s) at %d", len(stale), now)
        return len(stale)

    def nearby(self, scan: Fingerprint, metric: Union[str, Metric], threshold: float,
               now: int, exclude_identity: Optional[str] = None) -> List[Tuple[str, float]]:
        """Unexpired check-ins near `scan`, closest first (ties by identity).

        A record qualifies when it shares at least one access point with the
        scan and its distance is at most `threshold`. Pairs the metric
        cannot score (Tanimoto over all-zero vectors) are skipped.
        """
        metric = parse_metric(metric)
        if not threshold >= 0:
            raise CheckInError(f"threshold must be >= 0, got {threshold}")

        query = average_vector([scan])
        hits = []
        for rec in self.records():
            if rec.expires_at <= now or rec.identity == exclude_identity:
                continue
            if not common_macs(scan, rec.fingerprint):
                continue
            try:
                d = distance(query, average_vector([rec.fingerprint]), metric).value
            except MetricError as e:
                logger.debug("skipping %r: %s", rec.identity, e)
                continue
            if d <= threshold:
                hits.append((rec.identity, d))
        hits.sort(key=lambda item: (item[1], item[0]))
        return hits


# ─── Persistence ──────────────────────────────────────────────────────────────

def load_registry(path: str) -> CheckInRegistry:
    """Read a registry file; a missing file is an empty registry."""
    registry = CheckInRegistry()
    try:
        f = open(path, "rb")
    except FileNotFoundError:
        logger.info("no registry at %s, starting empty", path)
        return registry
    with f:
        for line_no, raw in enumerate(f, 1):
            try:
                text = raw.decode("utf-8").strip()
            except UnicodeDecodeError as e:
                raise CheckInError(f"line {line_no}: invalid UTF-8 byte 0x{raw[e.start]:02x}") from None
            if not text or text.startswith("#"):
                continue
            try:
                rec = CheckInRecord.from_dict(json.loads(text))
            except json.JSONDecodeError as e:
                raise CheckInError(f"line {line_no}: invalid JSON: {e.msg}") from e
            except CheckInError as e:
                raise CheckInError(f"line {line_no}: {e}") from e
            registry._store(rec)
    return registry


def save_registry(registry: CheckInRegistry, path: str) -> int:
    records = registry.records()
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(json.dumps(rec.to_dict(), ensure_ascii=False) + "\n")
    logger.info("wrote %d check-in(s) to %s", len(records), path)
    return len(records)
