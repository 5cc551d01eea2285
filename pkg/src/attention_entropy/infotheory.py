"""Binned attention distributions, Shannon entropy and normalized symmetric divergence.

All logarithms are natural. Divergences are computed on additively smoothed
copies so that empty bins never produce infinities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

DEFAULT_BINS = 32
DEFAULT_EPSILON = 1e-9


class InfoTheoryError(ValueError):
    pass


@lru_cache(maxsize=64)
def _uniform_edges(num_bins: int) -> np.ndarray:
    edges = np.arange(num_bins + 1) / num_bins
    edges.flags.writeable = False
    return edges


def _frozen(values) -> np.ndarray:
    if isinstance(values, np.ndarray) and values.dtype == float and not values.flags.writeable:
        return values
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class BinningConfig:
    num_bins: int = DEFAULT_BINS
    smoothing_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.num_bins < 2:
            raise InfoTheoryError("num_bins must be at least 2")
        if not self.smoothing_epsilon > 0:
            raise InfoTheoryError("smoothing_epsilon must be positive")

    @property
    def edges(self) -> np.ndarray:
        return _uniform_edges(self.num_bins)


@dataclass(frozen=True, eq=False)
class ProbabilityDistribution:
    bin_edges: np.ndarray
    probs: np.ndarray
    smoothing_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        # read-only arrays, so the cached smoothed values cannot go stale
        edges, probs = _frozen(self.bin_edges), _frozen(self.probs)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "probs", probs)
        if edges.shape != (probs.size + 1,) or (edges[1:] <= edges[:-1]).any():
            raise InfoTheoryError("bin_edges must be B+1 strictly increasing values")
        if probs.size and probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
            raise InfoTheoryError("probs must be nonnegative and sum to 1")

    @property
    def num_bins(self) -> int:
        return self.probs.size

    @classmethod
    def from_probs(cls, probs, smoothing_epsilon: float = DEFAULT_EPSILON) -> "ProbabilityDistribution":
        """Distribution over equal-width bins on [0, 1] with the given masses."""
        probs = np.asarray(probs, dtype=float)
        return cls(_uniform_edges(probs.size), probs, smoothing_epsilon)

    def smoothed(self) -> "ProbabilityDistribution":
        return ProbabilityDistribution(self.bin_edges, self._smoothed_probs.copy(), self.smoothing_epsilon)

    @cached_property
    def _smoothed_probs(self) -> np.ndarray:
        eps = self.smoothing_epsilon
        probs = (self.probs + eps) / (1.0 + eps * self.num_bins)
        probs = probs / probs.sum()
        probs.flags.writeable = False
        return probs

    @cached_property
    def _smoothed_nats(self) -> float:
        return _entropy_nats(self._smoothed_probs)


@dataclass(frozen=True)
class EntropyValue:
    normalized: float
    raw_nats: float


@dataclass(frozen=True)
class DivergenceValue:
    delta: float
    d_pq: float
    d_qp: float


def build_distribution(values, config: BinningConfig = BinningConfig()) -> ProbabilityDistribution:
    """Histogram of attention shares over ``config.num_bins`` equal-width bins on [0, 1].

    Bins are half-open except the last, which also takes the value 1.0.
    """
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise InfoTheoryError("empty group")
    if np.any(~np.isfinite(values)) or values.min() < 0.0 or values.max() > 1.0:
        raise InfoTheoryError("attention shares must lie in [0, 1]")
    edges = config.edges
    idx = np.minimum(np.searchsorted(edges, values, side="right") - 1, config.num_bins - 1)
    counts = np.bincount(idx, minlength=config.num_bins)
    return ProbabilityDistribution(edges, counts / values.size, config.smoothing_epsilon)


def _entropy_nats(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return 0.0 - float((nz * np.log(nz)).sum())


def entropy(p: ProbabilityDistribution) -> EntropyValue:
    raw = _entropy_nats(p.probs)
    return EntropyValue(normalized=min(raw / math.log(p.num_bins), 1.0), raw_nats=raw)


def _check_comparable(p: ProbabilityDistribution, q: ProbabilityDistribution) -> None:
    if p.bin_edges is q.bin_edges:
        return
    if p.bin_edges.shape != q.bin_edges.shape or not (p.bin_edges == q.bin_edges).all():
        raise InfoTheoryError("incomparable supports")


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    return max(float((p * np.log(p / q)).sum()), 0.0)


def kl_divergence(p: ProbabilityDistribution, q: ProbabilityDistribution) -> float:
    """D(p||q) in nats, on smoothed copies of both distributions."""
    _check_comparable(p, q)
    return _kl(p._smoothed_probs, q._smoothed_probs)


def symmetric_divergence(p: ProbabilityDistribution, q: ProbabilityDistribution) -> DivergenceValue:
    """Sum of both KL directions over the sum of both entropies, all on smoothed copies.

    Unbounded above; zero only when the smoothed distributions coincide.
    """
    _check_comparable(p, q)
    ps, qs = p._smoothed_probs, q._smoothed_probs
    d_pq, d_qp = _kl(ps, qs), _kl(qs, ps)
    numerator = d_pq + d_qp
    denominator = p._smoothed_nats + q._smoothed_nats
    if numerator == 0.0 or denominator < 1e-12 and np.array_equal(ps, qs):
        return DivergenceValue(0.0, d_pq, d_qp)
    return DivergenceValue(numerator / denominator, d_pq, d_qp)
