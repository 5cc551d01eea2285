"""Seeded synthetic attention trajectories for trending-like and recent-like videos.

Each video gets a gamma-shaped increment envelope whose time scale depends on
its popularity tier, so more popular tiers accumulate attention over a longer
stretch. ``early_volatility`` scales a per-video jitter of that time scale plus
multiplicative noise that is stronger over the first two days than later. Likes and
comments are mixed from the view trajectory and an independent one so the
cumulative series reach a target correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from .cohorts import TRENDING_LABELS, quintile_split
from .timeseries import NUM_PERIODS, PERIOD_SECONDS, AttentionSeries, Feed, Grid, Metric, Snapshot

# 2012-09-21 00:00 UTC
EPOCH_START = 1348185600

# envelope time scale, in periods, per tier
TIER_SCALE = {"R": 2.5, "R5": 3.0, "T1": 3.5, "T2": 4.5, "T3": 6.0, "T4": 8.0, "T5": 11.0}
ENVELOPE_SHAPE = 2.0
EARLY_PERIODS = 8
# log-sd of the per-video time scale and of per-period noise, at early_volatility=1
SCALE_JITTER = 0.3
EARLY_NOISE = 0.2
LATE_NOISE = 0.05


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    num_trending: int = 1000
    num_recent: int = 1500
    num_periods: int = NUM_PERIODS
    period_seconds: int = PERIOD_SECONDS
    trending_median: float = 117398.0
    trending_sigma: float = 2.13
    recent_median: float = 212.0
    recent_sigma: float = 1.54
    early_volatility: float = 0.6
    late_spike_rate: float = 0.05
    spike_factor: float = 4.0
    coupling: float = 0.95
    recent_coupled_fraction: float = 0.2
    recent_comment_rate: float = 0.15
    collection_days: int = 60

    def __post_init__(self):
        for name in ("num_trending", "num_recent", "num_periods", "period_seconds"):
            if getattr(self, name) <= 0:
                raise GeneratorError(f"{name} must be positive")
        if self.num_periods < 2:
            raise GeneratorError("num_periods must be at least 2")
        for name in ("early_volatility", "late_spike_rate", "coupling", "recent_coupled_fraction", "recent_comment_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise GeneratorError(f"{name} must lie in [0, 1]")
        for name in ("trending_median", "recent_median", "spike_factor"):
            if not getattr(self, name) > 0:
                raise GeneratorError(f"{name} must be positive")
        for name in ("trending_sigma", "recent_sigma"):
            if getattr(self, name) < 0:
                raise GeneratorError(f"{name} must be nonnegative")
        if not 0 <= self.seed < 2**64:
            raise GeneratorError("seed must be a 64-bit unsigned integer")
        if self.collection_days < 0:
            raise GeneratorError("collection_days must be nonnegative")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class VideoTruth:
    tier: str
    spike: bool
    coupled: bool


@dataclass(eq=False)
class SyntheticVideo:
    video_id: str
    feed: Feed
    first_seen: int
    views: np.ndarray
    likes: np.ndarray
    comments: np.ndarray
    truth: VideoTruth

    def series(self, metric: Metric, period_seconds: int = PERIOD_SECONDS) -> AttentionSeries:
        values = getattr(self, Metric(metric).value)
        grid = Grid(self.first_seen, period_seconds, values.size)
        return AttentionSeries(self.video_id, self.feed, grid, Metric(metric), values)


@dataclass(eq=False)
class SyntheticCorpus:
    config: GeneratorConfig
    videos: list[SyntheticVideo]

    def by_feed(self, feed: Feed) -> list[SyntheticVideo]:
        return [v for v in self.videos if v.feed is feed]

    def snapshots(self) -> Iterator[Snapshot]:
        """Integer snapshots, one per video per period, as a collector would log them."""
        step = self.config.period_seconds
        for v in self.videos:
            counts = np.rint(np.vstack([v.views, v.likes, v.comments])).astype(np.int64)
            for t in range(counts.shape[1]):
                yield Snapshot(v.video_id, v.feed, v.first_seen + t * step, *map(int, counts[:, t]))


def _envelope(rng: np.random.Generator, scale: float, config: GeneratorConfig, spike: bool) -> np.ndarray:
    vol = config.early_volatility
    t = np.arange(1, config.num_periods + 1, dtype=float)
    scale = scale * math.exp(SCALE_JITTER * vol * rng.standard_normal())
    inc = t ** (ENVELOPE_SHAPE - 1.0) * np.exp(-t / scale)
    noise_sd = np.where(t <= EARLY_PERIODS, EARLY_NOISE * vol, LATE_NOISE * vol)
    inc = inc * np.exp(noise_sd * rng.standard_normal(config.num_periods))
    if spike:
        lo, hi = EARLY_PERIODS, max(EARLY_PERIODS + 1, config.num_periods - EARLY_PERIODS)
        inc[rng.integers(lo, hi) % config.num_periods] *= config.spike_factor
    return np.cumsum(inc) / inc.sum()


def _coupled_share(rng: np.random.Generator, share: np.ndarray, target: float) -> np.ndarray:
    """Mix ``share`` with an independent cumulative trajectory to reach correlation ``target``.

    The mixing weight is found by bisection; if even the independent trajectory
    alone correlates above the target, it is used as is.
    """
    other = np.cumsum(rng.gamma(1.0, size=share.size))
    other /= other[-1]
    a, b = share - share.mean(), other - other.mean()
    saa, sab, sbb = float(a @ a), float(a @ b), float(b @ b)

    def corr(w):
        cov = w * saa + (1.0 - w) * sab
        var = w * w * saa + 2.0 * w * (1.0 - w) * sab + (1.0 - w) ** 2 * sbb
        return cov / math.sqrt(saa * var)

    if corr(0.0) >= target:
        return other
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if corr(mid) < target:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    return w * share + (1.0 - w) * other


def _tiers(totals: dict[str, float]) -> dict[str, str]:
    return {vid: c.label for c in quintile_split(totals, TRENDING_LABELS) for vid in c.member_ids}


def generate(config: GeneratorConfig = GeneratorConfig()) -> SyntheticCorpus:
    """Build a corpus that is a pure function of ``config``.

    Totals come from one seeded stream; every video then draws from its own
    child stream, so per-video work does not depend on generation order.
    """
    root = np.random.SeedSequence(config.seed)
    totals_seq, videos_seq = root.spawn(2)
    totals_rng = np.random.default_rng(totals_seq)
    n_t, n_r = config.num_trending, config.num_recent
    trending_totals = np.rint(totals_rng.lognormal(math.log(config.trending_median), config.trending_sigma, n_t)) + 1
    recent_totals = np.rint(totals_rng.lognormal(math.log(config.recent_median), config.recent_sigma, n_r)) + 1

    t_ids = [f"t{i:05d}" for i in range(n_t)]
    r_ids = [f"r{i:05d}" for i in range(n_r)]
    tier = _tiers(dict(zip(t_ids, trending_totals))) if n_t >= 5 else {v: "T1" for v in t_ids}
    n_coupled = math.floor(config.recent_coupled_fraction * n_r + 1e-9)
    ranked = sorted(range(n_r), key=lambda i: (-recent_totals[i], r_ids[i]))
    coupled = {r_ids[i] for i in ranked[:n_coupled]}

    span = config.collection_days * 86400 // config.period_seconds
    videos = []
    child_seqs = videos_seq.spawn(n_t + n_r)
    specs = [(vid, Feed.TRENDING, total) for vid, total in zip(t_ids, trending_totals)]
    specs += [(vid, Feed.RECENT, total) for vid, total in zip(r_ids, recent_totals)]
    for (vid, feed, total), seq in zip(specs, child_seqs):
        rng = np.random.default_rng(seq)
        first_seen = EPOCH_START + int(rng.integers(0, span + 1)) * config.period_seconds
        if feed is Feed.TRENDING:
            label, is_coupled = tier[vid], True
            spike = bool(rng.random() < config.late_spike_rate)
            like_rate, comment_rate = 0.01, 0.003
        else:
            is_coupled = vid in coupled
            label, spike = ("R5" if is_coupled else "R"), False
            like_rate, comment_rate = 0.03, 0.015
        share = _envelope(rng, TIER_SCALE[label], config, spike)
        views = total * share
        if is_coupled:
            likes = like_rate * total * _coupled_share(rng, share, config.coupling)
            comments = comment_rate * total * _coupled_share(rng, share, config.coupling)
        else:
            # counts that predate tracking and never move: no signal to correlate
            has_comments = rng.random() < config.recent_comment_rate
            likes = np.zeros(config.num_periods)
            comments = np.full(config.num_periods, float(rng.integers(1, 4)) if has_comments else 0.0)
        videos.append(SyntheticVideo(vid, feed, first_seen, views, likes, comments, VideoTruth(label, spike, is_coupled)))
    return SyntheticCorpus(config, videos)
