"""Proximity log — an append-only, time-ordered store of per-client fingerprints.

Clients are identified by MAC only; the log carries no other identity.
On disk the log is JSON Lines, one record per line:

    {"t": 1700000000000, "client": "aa:bb:cc:dd:ee:ff",
     "aps": [{"ssid": "mycafe", "mac": "00:11:22:33:44:55", "rssi": -52}]}

Lines starting with '#' are ignored.
"""

import json
import logging
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from spotex.config import MAX_TIMESTAMP_MS
from spotex.errors import (
    EmptyWindowError, FingerprintError, LogFormatError, OutOfOrderRecordError,
)
from spotex.radio.fingerprint import Fingerprint, normalize_mac

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LogRecord:
    client: str
    fingerprint: Fingerprint

    def __post_init__(self):
        object.__setattr__(self, "client", normalize_mac(self.client))

    @property
    def t(self) -> int:
        return self.fingerprint.t

    def to_dict(self) -> dict:
        return {"t": self.t, "client": self.client, "aps": self.fingerprint.to_aps()}

    @classmethod
    def from_dict(cls, data: dict) -> "LogRecord":
        if not isinstance(data, dict):
            raise LogFormatError(f"record must be a JSON object, got {type(data).__name__}")
        missing = [k for k in ("t", "client", "aps") if k not in data]
        if missing:
            raise LogFormatError(f"record missing field(s) {missing}")
        if not isinstance(data["aps"], list):
            raise LogFormatError("'aps' must be a list")
        t = data["t"]
        if isinstance(t, int) and not isinstance(t, bool) and not 0 <= t <= MAX_TIMESTAMP_MS:
            raise LogFormatError(f"timestamp {t} outside 0..{MAX_TIMESTAMP_MS} ms")
        return cls(client=data["client"],
                   fingerprint=Fingerprint.from_aps(data["t"], data["aps"]))


class LogStore:
    """Time-ordered records with a per-client index.

    Appends must keep each client's timestamps nondecreasing; records of
    different clients may arrive in any global order. One writer at a time;
    readers always see whole records.
    """

    def __init__(self, records: Iterable[LogRecord] = ()):
        self._lock = threading.Lock()
        self._times: List[int] = []
        self._records: List[LogRecord] = []
        self._by_client: Dict[str, List[LogRecord]] = {}
        self._client_times: Dict[str, List[int]] = {}
        for rec in records:
            self.append(rec)

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[LogRecord]:
        return iter(self.records())

    # ─── Writes ───────────────────────────────────────────────────────────

    def append(self, rec: LogRecord) -> "LogStore":
        with self._lock:
            times = self._client_times.setdefault(rec.client, [])
            if times and rec.t < times[-1]:
                raise OutOfOrderRecordError(
                    f"out-of-order record for {rec.client}: t={rec.t} < {times[-1]}")
            # bisect_right keeps equal timestamps in append order
            pos = bisect_right(self._times, rec.t)
            self._times.insert(pos, rec.t)
            self._records.insert(pos, rec)
            times.append(rec.t)
            self._by_client.setdefault(rec.client, []).append(rec)
        return self

    # ─── Reads ────────────────────────────────────────────────────────────

    def records(self) -> List[LogRecord]:
        """Every record in global time order."""
        with self._lock:
            return list(self._records)

    def clients(self) -> List[str]:
        with self._lock:
            return sorted(self._by_client)

    def client_records(self, client: str) -> List[LogRecord]:
        with self._lock:
            return list(self._by_client.get(normalize_mac(client), ()))

    def query_window(self, t_from: float, t_to: float,
                     exclude_client: Optional[str] = None) -> List[LogRecord]:
        """Records with t_from <= t <= t_to in time order, minus one client if given."""
        if t_from > t_to:
            raise EmptyWindowError(f"empty window [{t_from}, {t_to}]")
        excluded = normalize_mac(exclude_client) if exclude_client else None
        with self._lock:
            lo = bisect_left(self._times, t_from)
            hi = bisect_right(self._times, t_to)
            window = self._records[lo:hi]
        return [r for r in window if r.client != excluded]

    def previous_measurement(self, client: str, strictly_before: float) -> Optional[LogRecord]:
        """Latest record of `client` with t < strictly_before."""
        client = normalize_mac(client)
        with self._lock:
            times = self._client_times.get(client)
            if not times:
                return None
            i = bisect_left(times, strictly_before)
            return self._by_client[client][i - 1] if i else None

    def latest_in(self, client: str, t_from: float, t_to: float) -> Optional[LogRecord]:
        """Latest record of `client` with t_from <= t <= t_to (last appended on ties)."""
        client = normalize_mac(client)
        with self._lock:
            times = self._client_times.get(client)
            if not times or t_from > t_to:
                return None
            i = bisect_right(times, t_to)
            if i and times[i - 1] >= t_from:
                return self._by_client[client][i - 1]
            return None

    def anchor(self, client: str, at: float) -> Optional[LogRecord]:
        """The client's measurement at, or nearest before, `at`."""
        return self.latest_in(client, float("-inf"), at)


# ─── Persistence ──────────────────────────────────────────────────────────────

def dump_record(rec: LogRecord) -> str:
    return json.dumps(rec.to_dict(), ensure_ascii=False)


def parse_lines(lines: Iterable[str]) -> Iterator[Tuple[int, LogRecord]]:
    """Yield (line_no, record) for every data line; raises LogFormatError."""
    for line_no, line in enumerate(lines, 1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        try:
            rec = LogRecord.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise LogFormatError(f"invalid JSON: {e.msg}", line_no) from e
        except (LogFormatError, FingerprintError) as e:
            raise LogFormatError(str(e), line_no) from e
        yield line_no, rec


def _decoded(raw_lines: Iterable[bytes]) -> Iterator[str]:
    for line_no, raw in enumerate(raw_lines, 1):
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError as e:
            raise LogFormatError(f"invalid UTF-8 byte 0x{raw[e.start]:02x}", line_no) from None


def load_log(path: str) -> LogStore:
    """Read a scan log; per-client time order violations name the line."""
    store = LogStore()
    with open(path, "rb") as f:
        for line_no, rec in parse_lines(_decoded(f)):
            try:
                store.append(rec)
            except OutOfOrderRecordError as e:
                raise LogFormatError(str(e), line_no) from e
    logger.info("loaded %d records for %d clients from %s",
                len(store), len(store.clients()), path)
    return store


def save_log(records: Iterable[LogRecord], path: str) -> int:
    """Write records (a LogStore or any iterable) as JSON Lines."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            f.write(dump_record(rec) + "\n")
            n += 1
    logger.info("wrote %d records to %s", n, path)
    return n
