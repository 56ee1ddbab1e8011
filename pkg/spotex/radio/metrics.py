"""Fingerprint similarity — Euclidean and Tanimoto distances, rank correlation, kNN.

Distances work on averaged signal vectors aligned over the union of their
access points, with unheard entries set to -100 dBm. Rankings replace
absolute RSSI by strength order, which is robust to per-device offsets.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.stats import pearsonr, rankdata

from spotex.config import MISSING_RSSI_FILL
from spotex.errors import MetricError
from spotex.radio.fingerprint import Fingerprint, SignalVector, align, average_vector

logger = logging.getLogger(__name__)


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    TANIMOTO = "tanimoto"


def parse_metric(metric: Union[str, Metric]) -> Metric:
    try:
        return Metric(metric)
    except ValueError:
        raise MetricError(f"unknown metric {metric!r}; "
                          f"choose from {[m.value for m in Metric]}") from None


@dataclass(frozen=True)
class DistanceResult:
    value: float
    metric: Metric

    def __post_init__(self):
        if not self.value >= 0:
            raise MetricError(f"distance must be >= 0, got {self.value}")

    def to_dict(self) -> dict:
        return {"metric": self.metric.value, "value": self.value}


@dataclass(frozen=True)
class Ranking:
    """Rank per mac; 1 is the strongest signal, ties share their average rank."""

    ranks: Tuple[Tuple[str, float], ...]

    @classmethod
    def from_mapping(cls, ranks: Dict[str, float]) -> "Ranking":
        return cls(ranks=tuple((m, float(r)) for m, r in ranks.items()))

    @property
    def macs(self) -> Tuple[str, ...]:
        return tuple(m for m, _ in self.ranks)

    def as_dict(self) -> Dict[str, float]:
        return dict(self.ranks)

    def values(self) -> np.ndarray:
        return np.array([r for _, r in self.ranks], dtype=float)


# ─── Distances ────────────────────────────────────────────────────────────────

def euclidean_distance(a: SignalVector, b: SignalVector) -> DistanceResult:
    """L2 norm of the difference of the aligned vectors (dB)."""
    xa, xb = align(a, b, MISSING_RSSI_FILL)
    value = float(np.linalg.norm(xa - xb)) if xa.size else 0.0
    return DistanceResult(value=value, metric=Metric.EUCLIDEAN)


def tanimoto_distance(a: SignalVector, b: SignalVector) -> DistanceResult:
    """1 - a·b / (|a|² + |b|² - a·b) over the aligned vectors.

    The -100 dBm fill is applied here as well, so both vectors have equal
    length; the value grows as the environments become more dissimilar.
    """
    xa, xb = align(a, b, MISSING_RSSI_FILL)
    dot = float(np.dot(xa, xb))
    denominator = float(np.dot(xa, xa)) + float(np.dot(xb, xb)) - dot
    if denominator == 0.0:
        raise MetricError("undefined Tanimoto: both aligned vectors are zero")
    value = 1.0 - dot / denominator
    # similarity never exceeds 1 for real vectors; absorb rounding below zero
    return DistanceResult(value=max(0.0, value), metric=Metric.TANIMOTO)


_DISTANCES = {
    Metric.EUCLIDEAN: euclidean_distance,
    Metric.TANIMOTO: tanimoto_distance,
}


def distance(a: SignalVector, b: SignalVector,
             metric: Union[str, Metric]) -> DistanceResult:
    return _DISTANCES[parse_metric(metric)](a, b)


# ─── Rankings ─────────────────────────────────────────────────────────────────

def rank_transform(v: SignalVector) -> Ranking:
    """Replace signal strengths by their strength order.

    (-20, -90, -40) becomes (1, 3, 2); tied values get the mean of the
    ranks they span.
    """
    if not len(v):
        return Ranking(ranks=())
    ranks = rankdata(-v.values(), method="average")
    return Ranking(ranks=tuple(zip(v.universe, (float(r) for r in ranks))))


def spearman_correlation(a: Ranking, b: Ranking) -> float:
    """Pearson correlation of two rank sequences over the same access points.

    Exact under ties; equals 1 - 6Σd²/(n(n²-1)) when there are none.
    """
    if set(a.macs) != set(b.macs) or len(a.macs) != len(b.macs):
        raise MetricError("incomparable rankings: universes differ")
    n = len(a.macs)
    if n < 2:
        raise MetricError(f"degenerate ranking of {n} access point(s)")

    rb = b.as_dict()
    xa = a.values()
    xb = np.array([rb[m] for m in a.macs], dtype=float)

    if np.ptp(xa) == 0.0 or np.ptp(xb) == 0.0:
        raise MetricError("degenerate ranking: all ranks tied")
    rho, _ = pearsonr(xa, xb)
    return float(np.clip(rho, -1.0, 1.0))


def aligned_rankings(a: SignalVector, b: SignalVector) -> Tuple[Ranking, Ranking]:
    """Rank both vectors over the union of their universes after the fill."""
    xa, xb = align(a, b, MISSING_RSSI_FILL)
    universe = sorted(set(a.universe) | set(b.universe))
    va = SignalVector(entries=tuple(zip(universe, xa.tolist())))
    vb = SignalVector(entries=tuple(zip(universe, xb.tolist())))
    return rank_transform(va), rank_transform(vb)


# ─── k nearest neighbours ─────────────────────────────────────────────────────

def knn_neighbors(query: Fingerprint, db: Sequence[Tuple[str, SignalVector]],
                  k: int, metric: Union[str, Metric] = Metric.EUCLIDEAN
                  ) -> List[Tuple[str, DistanceResult]]:
    """The k database entries closest to the query scan, nearest first.

    Args:
        query: A single scan; it is averaged (a no-op) before comparison
        db: (label, vector) pairs
        k: Number of neighbours, >= 1
        metric: euclidean or tanimoto

    Returns:
        Up to k (label, DistanceResult) pairs, ascending by distance,
        ties broken by label
    """
    if isinstance(k, bool) or not isinstance(k, int) or k < 1:
        raise MetricError(f"k must be a positive integer, got {k!r}")
    metric = parse_metric(metric)
    if not db:
        return []

    q = average_vector([query])
    scored = [(label, _DISTANCES[metric](q, vec)) for label, vec in db]
    scored.sort(key=lambda item: (item[1].value, item[0]))
    logger.debug("knn over %d entries, k=%d, metric=%s", len(db), k, metric.value)
    return scored[:k]
