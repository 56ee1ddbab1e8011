"""Deterministic scenario simulator.

A scenario places access points in a 2-D venue and walks clients along
piecewise-linear paths. Every scan period each client hears each access
point at a log-distance path-loss RSSI plus Gaussian noise; access points
below the visibility floor are left out of the scan. Noise comes from
numpy's PCG64 generator seeded with the scenario seed, and one sample is
drawn per (scan, access point) whether or not the AP ends up visible, so
a given seed always yields the same log.

Scenario files are JSON:

    {"schema": 1, "seed": 7, "scan_period_ms": 2000, "noise_sigma": 0.0,
     "visibility_floor": -95, "path_loss_exponent": 3.0,
     "venue": {"aps": [{"ssid": "mycafe", "mac": "02:00:00:00:00:01",
                        "x": 0, "y": 5, "tx_ref": -40}]},
     "clients": [{"mac": "0a:00:00:00:00:01",
                  "waypoints": [[0, 0, 0], [120000, 100, 0]]}]}
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from spotex.config import (
    DEFAULT_NOISE_SIGMA_DB, DEFAULT_SCAN_PERIOD_MS, DEFAULT_TX_REF_DBM,
    DEFAULT_VISIBILITY_FLOOR_DBM, MIN_SEPARATION_M, PATH_LOSS_EXPONENT,
    RSSI_MAX, RSSI_MIN, SCENARIO_SCHEMA_VERSION, SEED,
)
from spotex.errors import FingerprintError, ScenarioError
from spotex.proximity.proxlog import LogRecord, LogStore
from spotex.radio.fingerprint import ApObservation, Fingerprint, normalize_mac

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ApPlacement:
    ssid: str
    mac: str
    x: float
    y: float
    tx_ref: float = DEFAULT_TX_REF_DBM

    def __post_init__(self):
        object.__setattr__(self, "mac", normalize_mac(self.mac))
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.tx_ref)):
            raise ScenarioError(f"access point {self.mac} has a non-finite position or power")


@dataclass(frozen=True)
class Venue:
    aps: Tuple[ApPlacement, ...]

    def __post_init__(self):
        macs = [ap.mac for ap in self.aps]
        if len(set(macs)) != len(macs):
            raise ScenarioError("venue has duplicate access point macs")


@dataclass(frozen=True)
class ClientPath:
    """A client's route: (t_ms, x, y) waypoints in time order."""

    mac: str
    waypoints: Tuple[Tuple[int, float, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "mac", normalize_mac(self.mac))
        if not self.waypoints:
            raise ScenarioError(f"client {self.mac} has no waypoints")
        times = [w[0] for w in self.waypoints]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ScenarioError(f"waypoints of {self.mac} are not in time order")

    def position(self, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        ts = np.array([w[0] for w in self.waypoints], dtype=float)
        xs = np.array([w[1] for w in self.waypoints], dtype=float)
        ys = np.array([w[2] for w in self.waypoints], dtype=float)
        return np.interp(t, ts, xs), np.interp(t, ts, ys)


@dataclass(frozen=True)
class Scenario:
    venue: Venue
    clients: Tuple[ClientPath, ...]
    scan_period_ms: int = DEFAULT_SCAN_PERIOD_MS
    seed: int = SEED
    noise_sigma: float = DEFAULT_NOISE_SIGMA_DB
    visibility_floor: float = DEFAULT_VISIBILITY_FLOOR_DBM
    path_loss_exponent: float = PATH_LOSS_EXPONENT

    def __post_init__(self):
        if self.scan_period_ms <= 0:
            raise ScenarioError(f"scan_period_ms must be > 0, got {self.scan_period_ms}")
        if self.noise_sigma < 0:
            raise ScenarioError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        macs = [c.mac for c in self.clients]
        if len(set(macs)) != len(macs):
            raise ScenarioError("scenario has duplicate client macs")

    def with_seed(self, seed: int) -> "Scenario":
        return Scenario(self.venue, self.clients, self.scan_period_ms, seed,
                        self.noise_sigma, self.visibility_floor, self.path_loss_exponent)


# ─── Radio model ──────────────────────────────────────────────────────────────

def rssi_model(distance: float, tx_ref: float, noise: float = 0.0,
               gamma: float = PATH_LOSS_EXPONENT) -> float:
    """Log-distance path loss in dBm, clamped to [-100, 0].

    Distances below MIN_SEPARATION_M (including <= 0) count as MIN_SEPARATION_M.
    """
    d = max(distance, MIN_SEPARATION_M)
    value = tx_ref - 10.0 * gamma * math.log10(d) + noise
    return float(min(max(value, RSSI_MIN), RSSI_MAX))


def simulate(scenario: Scenario) -> List[LogRecord]:
    """Scan log for every client, in global time order.

    Each client scans at t_first, t_first + period, ... up to its last
    waypoint time. Records with equal t keep the scenario's client order.
    """
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    aps = scenario.venue.aps
    ap_x = np.array([ap.x for ap in aps], dtype=float)
    ap_y = np.array([ap.y for ap in aps], dtype=float)

    rows = []
    for order, client in enumerate(scenario.clients):
        t_first, t_last = client.waypoints[0][0], client.waypoints[-1][0]
        times = np.arange(t_first, t_last + 1, scenario.scan_period_ms, dtype=np.int64)
        xs, ys = client.position(times.astype(float))
        for t, x, y in zip(times.tolist(), xs, ys):
            dists = np.hypot(ap_x - x, ap_y - y)
            noise = scenario.noise_sigma * rng.standard_normal(len(aps))
            heard = []
            for ap, d, n in zip(aps, dists, noise):
                rssi = rssi_model(float(d), ap.tx_ref, float(n), scenario.path_loss_exponent)
                if rssi < scenario.visibility_floor:
                    continue
                heard.append(ApObservation(ap.ssid, ap.mac, int(round(rssi))))
            rows.append((t, order, LogRecord(client.mac, Fingerprint.of(t, heard))))

    rows.sort(key=lambda row: (row[0], row[1]))
    logger.info("simulated %d scans for %d client(s), seed=%d",
                len(rows), len(scenario.clients), scenario.seed)
    return [rec for _, _, rec in rows]


def random_log(rng: np.random.Generator, max_clients: int = 5, max_records: int = 50,
               n_aps: int = 6, t_span_ms: int = 60000) -> LogStore:
    """An unstructured random proximity log for oracle cross-checks.

    Every access point has a venue-wide base level and each record jitters
    around it, so comparability varies with Ω instead of being all or
    nothing. Timestamps collide on purpose.
    """
    n_clients = int(rng.integers(1, max_clients + 1))
    base = rng.integers(-90, -40, size=n_aps)
    ap_macs = [f"02:00:00:00:ff:{i:02x}" for i in range(n_aps)]

    rows = []
    for c in range(n_clients):
        mac = f"0a:00:00:00:ff:{c:02x}"
        n = int(rng.integers(1, max_records + 1))
        for t in np.sort(rng.integers(0, t_span_ms, size=n)).tolist():
            heard = rng.random(n_aps) < 0.6
            jitter = rng.integers(-8, 9, size=n_aps)
            obs = [ApObservation("rand", ap_macs[i], int(np.clip(base[i] + jitter[i], RSSI_MIN, RSSI_MAX)))
                   for i in range(n_aps) if heard[i]]
            rows.append((t, len(rows), LogRecord(mac, Fingerprint.of(t, obs))))

    rows.sort(key=lambda row: (row[0], row[1]))
    return LogStore(rec for _, _, rec in rows)


# ─── Scenario files ───────────────────────────────────────────────────────────

def _number(data: dict, key: str, default: Optional[float] = None) -> float:
    value = data.get(key, default)
    if value is None:
        raise ScenarioError(f"missing field {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"field {key!r} must be a number, got {value!r}")
    return value


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    if data.get("schema") != SCENARIO_SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema {data.get('schema')!r}; "
                            f"expected {SCENARIO_SCHEMA_VERSION}")
    try:
        venue = Venue(aps=tuple(
            ApPlacement(ssid=ap["ssid"], mac=ap["mac"], x=_number(ap, "x"), y=_number(ap, "y"),
                        tx_ref=_number(ap, "tx_ref", DEFAULT_TX_REF_DBM))
            for ap in data["venue"]["aps"]))
        clients = tuple(
            ClientPath(mac=c["mac"],
                       waypoints=tuple((int(w[0]), float(w[1]), float(w[2]))
                                       for w in c["waypoints"]))
            for c in data["clients"])
        seed = data.get("seed", SEED)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ScenarioError(f"seed must be a nonnegative integer, got {seed!r}")
        period = data.get("scan_period_ms", DEFAULT_SCAN_PERIOD_MS)
        if isinstance(period, bool) or not isinstance(period, int):
            raise ScenarioError(f"scan_period_ms must be an integer, got {period!r}")
        return Scenario(
            venue=venue,
            clients=clients,
            scan_period_ms=period,
            seed=seed,
            noise_sigma=float(_number(data, "noise_sigma", DEFAULT_NOISE_SIGMA_DB)),
            visibility_floor=float(_number(data, "visibility_floor", DEFAULT_VISIBILITY_FLOOR_DBM)),
            path_loss_exponent=float(_number(data, "path_loss_exponent", PATH_LOSS_EXPONENT)),
        )
    except ScenarioError:
        raise
    except FingerprintError as e:
        raise ScenarioError(str(e)) from e
    except KeyError as e:
        raise ScenarioError(f"missing field {e.args[0]!r}") from None
    except (TypeError, ValueError, IndexError) as e:
        raise ScenarioError(f"malformed scenario: {e}") from e


def load_scenario(path: str) -> Scenario:
    """Read and validate a scenario file; JSON errors carry line and column."""
    with open(path, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        head = raw[:e.start]
        raise ScenarioError(f"invalid UTF-8 byte 0x{raw[e.start]:02x}", head.count(b"\n") + 1,
                            e.start - head.rfind(b"\n")) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON: {e.msg}", e.lineno, e.colno) from e
    return scenario_from_dict(data)
