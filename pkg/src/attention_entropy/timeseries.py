"""Snapshot alignment onto a fixed poll grid, gap imputation and per-video normalization."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

PERIOD_SECONDS = 6 * 3600
NUM_PERIODS = 56


class Feed(str, enum.Enum):
    TRENDING = "trending"
    RECENT = "recent"


class Metric(str, enum.Enum):
    VIEWS = "views"
    LIKES = "likes"
    COMMENTS = "comments"


class NormalizationMode(str, enum.Enum):
    PER_PERIOD_SHARE = "per_period"
    CUMULATIVE_SHARE = "cumulative"


class TimeSeriesError(ValueError):
    pass


@dataclass(frozen=True)
class Snapshot:
    video_id: str
    feed: Feed
    observed_at: int
    views: int
    likes: int
    comments: int

    def __post_init__(self):
        if self.observed_at <= 0:
            raise TimeSeriesError(f"{self.video_id}: observed_at must be positive")
        if min(self.views, self.likes, self.comments) < 0:
            raise TimeSeriesError(f"{self.video_id}: negative count")

    def count(self, metric: Metric) -> int:
        return getattr(self, Metric(metric).value)


@dataclass(frozen=True)
class Grid:
    origin: int
    period_seconds: int = PERIOD_SECONDS
    num_periods: int = NUM_PERIODS

    def __post_init__(self):
        if self.period_seconds <= 0:
            raise TimeSeriesError("period_seconds must be positive")
        if self.num_periods < 2:
            raise TimeSeriesError("num_periods must be at least 2")

    def slot(self, t: int) -> int:
        """Index of the half-open slot containing ``t``."""
        return (t - self.origin) // self.period_seconds


@dataclass(frozen=True, eq=False)
class AttentionSeries:
    """One metric of one video on a fixed grid.

    ``cumulative`` holds NaN in slots that are still missing; ``imputed_mask``
    flags slots that had no observation of their own.
    """

    video_id: str
    feed: Feed
    grid: Grid
    metric: Metric
    cumulative: np.ndarray
    imputed_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        cum = np.asarray(self.cumulative, dtype=float)
        object.__setattr__(self, "cumulative", cum)
        mask = self.imputed_mask
        mask = np.zeros(cum.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        object.__setattr__(self, "imputed_mask", mask)
        if cum.shape != (self.grid.num_periods,) or mask.shape != cum.shape:
            raise TimeSeriesError(f"{self.video_id}: series length does not match the grid")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.cumulative)

    @property
    def is_complete(self) -> bool:
        return not self.missing.any()

    def __eq__(self, other):
        if not isinstance(other, AttentionSeries):
            return NotImplemented
        return (
            (self.video_id, self.feed, self.grid, self.metric)
            == (other.video_id, other.feed, other.grid, other.metric)
            and np.array_equal(self.cumulative, other.cumulative, equal_nan=True)
            and np.array_equal(self.imputed_mask, other.imputed_mask)
        )


def align_snapshots(snapshots: Sequence[Snapshot], grid: Grid, metric: Metric = Metric.VIEWS) -> AttentionSeries:
    """Place one video's snapshots onto ``grid``; the latest snapshot in a slot wins.

    Slots without an observation come back as NaN with ``imputed_mask`` set,
    ready for :func:`impute_missing`. Observations past the grid are ignored.
    """
    if not snapshots:
        raise TimeSeriesError("no observations")
    metric = Metric(metric)
    cumulative = np.full(grid.num_periods, np.nan)
    for snap in sorted(snapshots, key=lambda s: s.observed_at):
        k = grid.slot(snap.observed_at)
        if k < 0:
            raise TimeSeriesError(f"{snap.video_id}: pre-origin observation at {snap.observed_at}")
        if k < grid.num_periods:
            cumulative[k] = snap.count(metric)
    first = snapshots[0]
    return AttentionSeries(first.video_id, first.feed, grid, metric, cumulative, np.isnan(cumulative))


def impute_missing(series: AttentionSeries) -> AttentionSeries:
    """Fill interior gaps by linear interpolation between the bounding observations.

    A single missed slot becomes the mean of its two neighbours. The result is
    clamped to be nondecreasing.
    """
    cum = series.cumulative
    missing = np.isnan(cum)
    if missing.all():
        raise TimeSeriesError(f"{series.video_id}: all slots missing")
    if missing[0] or missing[-1]:
        raise TimeSeriesError(f"{series.video_id}: unbounded gap")
    filled = cum.copy()
    if missing.any():
        idx = np.arange(cum.size)
        known = ~missing
        filled[missing] = np.interp(idx[missing], idx[known], cum[known])
    filled = np.maximum.accumulate(filled)
    return replace(series, cumulative=filled, imputed_mask=series.imputed_mask | missing)


def to_per_period(series: AttentionSeries) -> np.ndarray:
    """Per-slot increments; counter decreases clamp to zero."""
    _require_complete(series)
    cum = series.cumulative
    out = np.empty_like(cum)
    out[0] = cum[0]
    out[1:] = np.maximum(np.diff(cum), 0.0)
    return out


@dataclass(frozen=True, eq=False)
class NormalizedSeries:
    values: np.ndarray
    zero_attention: bool = False


def normalize(series: AttentionSeries, mode: NormalizationMode) -> NormalizedSeries:
    """Express a video's attention as shares of its own window total.

    Zero-attention videos yield an all-zero vector with ``zero_attention`` set.
    """
    mode = NormalizationMode(mode)
    if mode is NormalizationMode.PER_PERIOD_SHARE:
        values = to_per_period(series)
        total = values.sum()
    else:
        _require_complete(series)
        values = np.maximum.accumulate(series.cumulative)
        total = values[-1]
    if total <= 0:
        return NormalizedSeries(np.zeros_like(values), zero_attention=True)
    return NormalizedSeries(values / total)


def observable_periods(series: AttentionSeries) -> int:
    """Number of slots covered once interior gaps are imputed (0 if the first slot is missing)."""
    missing = np.isnan(series.cumulative)
    if missing.all() or missing[0]:
        return 0
    return int(np.flatnonzero(~missing)[-1]) + 1


def filter_eligible(
    all_series: Iterable[AttentionSeries], min_periods: int = NUM_PERIODS
) -> list[AttentionSeries]:
    """Keep videos observed through at least ``min_periods`` slots."""
    return [s for s in all_series if observable_periods(s) >= min_periods]


def group_snapshots(snapshots: Iterable[Snapshot]) -> dict[str, list[Snapshot]]:
    """Bucket snapshots by video, each bucket sorted by time; insertion order follows first appearance."""
    groups: dict[str, list[Snapshot]] = {}
    for snap in snapshots:
        groups.setdefault(snap.video_id, []).append(snap)
    for video_id, snaps in groups.items():
        snaps.sort(key=lambda s: s.observed_at)
        feeds = {s.feed for s in snaps}
        if len(feeds) > 1:
            raise TimeSeriesError(f"{video_id}: appears under more than one feed")
    return groups


def _require_complete(series: AttentionSeries) -> None:
    if not series.is_complete:
        raise TimeSeriesError(f"{series.video_id}: series has missing slots; impute first")
