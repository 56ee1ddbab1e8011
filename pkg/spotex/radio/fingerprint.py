"""Wi-Fi scan snapshots — observations, fingerprints and averaged signal vectors.

A fingerprint is a timestamped set of (SSID, MAC, RSSI) triples. Access
points are identified by MAC; SSIDs collide across venues. All types here
are immutable after construction.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from spotex.config import MISSING_RSSI_FILL, RSSI_MAX, RSSI_MIN
from spotex.errors import FingerprintError


_MAC_RE = re.compile(r'^[0-9a-fA-F]{2}([:-])(?:[0-9a-fA-F]{2}\1){4}[0-9a-fA-F]{2}$')


def normalize_mac(text: str) -> str:
    """Canonical lowercase colon form of a MAC ('AA-BB-..' -> 'aa:bb:..')."""
    if not isinstance(text, str) or not _MAC_RE.match(text):
        raise FingerprintError(f"invalid mac {text!r}")
    return text.lower().replace("-", ":")


def is_mac(text: str) -> bool:
    return isinstance(text, str) and bool(_MAC_RE.match(text))


@dataclass(frozen=True)
class ApObservation:
    """One heard access point."""

    ssid: str
    mac: str
    rssi: int

    def __post_init__(self):
        if not isinstance(self.ssid, str):
            raise FingerprintError(f"ssid must be a string, got {self.ssid!r}")
        object.__setattr__(self, "mac", normalize_mac(self.mac))
        if isinstance(self.rssi, bool) or not isinstance(self.rssi, (int, np.integer)):
            raise FingerprintError(f"rssi must be an integer dBm, got {self.rssi!r}")
        if not RSSI_MIN <= self.rssi <= RSSI_MAX:
            raise FingerprintError(
                f"rssi {self.rssi} outside [{RSSI_MIN}, {RSSI_MAX}] for {self.mac}")
        object.__setattr__(self, "rssi", int(self.rssi))

    def to_dict(self) -> dict:
        return {"ssid": self.ssid, "mac": self.mac, "rssi": self.rssi}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ApObservation":
        try:
            return cls(ssid=data["ssid"], mac=data["mac"], rssi=data["rssi"])
        except (KeyError, TypeError) as e:
            raise FingerprintError(f"malformed access point entry {data!r}") from e


@dataclass(frozen=True)
class Fingerprint:
    """A timestamped environment: t in ms since epoch, observations keyed by mac."""

    t: int
    observations: Tuple[ApObservation, ...] = ()

    def __post_init__(self):
        if isinstance(self.t, bool) or not isinstance(self.t, (int, np.integer)):
            raise FingerprintError(f"timestamp must be integer ms, got {self.t!r}")
        object.__setattr__(self, "t", int(self.t))
        obs = tuple(sorted(self.observations, key=lambda o: o.mac))
        for prev, cur in zip(obs, obs[1:]):
            if prev.mac == cur.mac:
                raise FingerprintError(f"duplicate mac {cur.mac} at t={self.t}")
        object.__setattr__(self, "observations", obs)

    @classmethod
    def of(cls, t: int, observations: Iterable[ApObservation] = ()) -> "Fingerprint":
        return cls(t=t, observations=tuple(observations))

    @classmethod
    def from_aps(cls, t: int, aps: Iterable[Mapping]) -> "Fingerprint":
        """Build from the scan-log AP object shape: [{"ssid", "mac", "rssi"}]."""
        return cls(t=t, observations=tuple(ApObservation.from_dict(a) for a in aps))

    def to_aps(self) -> List[dict]:
        return [o.to_dict() for o in self.observations]

    @property
    def is_empty(self) -> bool:
        return not self.observations

    @property
    def macs(self) -> frozenset:
        return frozenset(o.mac for o in self.observations)

    @property
    def ssids(self) -> frozenset:
        return frozenset(o.ssid for o in self.observations)

    @property
    def rssi_by_mac(self) -> Dict[str, int]:
        return {o.mac: o.rssi for o in self.observations}

    def get(self, mac: str) -> Optional[ApObservation]:
        mac = normalize_mac(mac)
        for o in self.observations:
            if o.mac == mac:
                return o
        return None

    def with_ssid(self, ssid: str) -> List[ApObservation]:
        return [o for o in self.observations if o.ssid == ssid]


@dataclass(frozen=True)
class SignalVector:
    """Mean RSSI per access point, ordered lexicographically by mac."""

    entries: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(sorted((normalize_mac(m), float(v)) for m, v in self.entries))
        for prev, cur in zip(entries, entries[1:]):
            if prev[0] == cur[0]:
                raise FingerprintError(f"duplicate mac {cur[0]} in signal vector")
        for mac, value in entries:
            if not np.isfinite(value) or value > 0:
                raise FingerprintError(f"signal for {mac} must be a finite value <= 0, got {value}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_mapping(cls, values: Mapping[str, float]) -> "SignalVector":
        return cls(entries=tuple(values.items()))

    @property
    def universe(self) -> Tuple[str, ...]:
        return tuple(m for m, _ in self.entries)

    def as_dict(self) -> Dict[str, float]:
        return dict(self.entries)

    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.entries], dtype=float)

    def __len__(self) -> int:
        return len(self.entries)


# ─── Operations ───────────────────────────────────────────────────────────────

def average_vector(scans: List[Fingerprint]) -> SignalVector:
    """Mean RSSI per mac over the scans in which that mac appears.

    Scans that did not hear an access point do not pull its mean down;
    the -100 dBm fill is applied only when two vectors are aligned.
    """
    if not scans:
        raise FingerprintError("no scans")

    sums: Dict[str, float] = {}
    counts: Dict[str, int] = {}
    for scan in scans:
        for o in scan.observations:
            sums[o.mac] = sums.get(o.mac, 0.0) + o.rssi
            counts[o.mac] = counts.get(o.mac, 0) + 1

    return SignalVector(entries=tuple((mac, sums[mac] / counts[mac]) for mac in sums))


def align(a: SignalVector, b: SignalVector,
          fill: float = MISSING_RSSI_FILL) -> Tuple[np.ndarray, np.ndarray]:
    """Project both vectors onto the union of their universes.

    Position i in both outputs refers to the same mac; entries missing on
    one side are replaced by `fill`.
    """
    universe = sorted(set(a.universe) | set(b.universe))
    da, db = a.as_dict(), b.as_dict()
    xa = np.array([da.get(m, fill) for m in universe], dtype=float)
    xb = np.array([db.get(m, fill) for m in universe], dtype=float)
    return xa, xb


def common_macs(a: Fingerprint, b: Fingerprint) -> frozenset:
    return a.macs & b.macs


def comparable(a: Fingerprint, b: Fingerprint, omega: float) -> bool:
    """True iff some mac heard by both differs in RSSI by strictly less than omega."""
    if not omega > 0:
        raise FingerprintError(f"invalid threshold {omega!r}")

    rb = b.rssi_by_mac
    for o in a.observations:
        other = rb.get(o.mac)
        if other is not None and abs(o.rssi - other) < omega:
            return True
    return False
