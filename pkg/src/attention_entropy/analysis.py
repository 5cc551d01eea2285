"""Entropy curves, between-cohort divergence and lagged within-cohort divergence."""

from __future__ import annotations

import itertools
import logging
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cohorts import (
    Cohort,
    CohortError,
    CorrelationProfile,
    MetricPair,
    correlation_edges,
    correlation_histogram,
    quintile_split,
    select_top_recent,
)
from .infotheory import (
    DEFAULT_BINS,
    DEFAULT_EPSILON,
    BinningConfig,
    build_distribution,
    entropy,
    symmetric_divergence,
)
from .timeseries import (
    NUM_PERIODS,
    PERIOD_SECONDS,
    AttentionSeries,
    Feed,
    Grid,
    Metric,
    NormalizationMode,
    Snapshot,
    TimeSeriesError,
    align_snapshots,
    group_snapshots,
    impute_missing,
    normalize,
    observable_periods,
)

logger = logging.getLogger(__name__)

BASIC_LABELS = ("R5", "T1", "T2", "T3", "T4", "T5")


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class AnalysisConfig:
    num_bins: int = DEFAULT_BINS
    epsilon: float = DEFAULT_EPSILON
    period_seconds: int = PERIOD_SECONDS
    num_periods: int = NUM_PERIODS
    metric: str = Metric.VIEWS.value
    fraction: float = 0.2
    hist_bin_width: float = 0.1
    entropy_mode: str = NormalizationMode.PER_PERIOD_SHARE.value
    divergence_mode: str = NormalizationMode.CUMULATIVE_SHARE.value

    @property
    def binning(self) -> BinningConfig:
        return BinningConfig(self.num_bins, self.epsilon)

    def to_dict(self) -> dict:
        return asdict(self)


class Dataset:
    """Imputed, eligible attention series keyed by video id and metric."""

    def __init__(self, series: dict[str, dict[Metric, AttentionSeries]], excluded: Sequence[str] = ()):
        self.series = series
        self.excluded = tuple(excluded)
        self._shares: dict[tuple, np.ndarray] = {}

    @classmethod
    def from_snapshots(
        cls,
        snapshots: Iterable[Snapshot],
        period_seconds: int = PERIOD_SECONDS,
        num_periods: int = NUM_PERIODS,
    ) -> "Dataset":
        """Align every video on its own grid (origin = first observation), keep
        videos observed for the full window and impute interior gaps."""
        groups = group_snapshots(snapshots)
        if not groups:
            raise AnalysisError("no observations")
        series, excluded = {}, []
        for video_id, snaps in groups.items():
            grid = Grid(snaps[0].observed_at, period_seconds, num_periods)
            aligned = {m: align_snapshots(snaps, grid, m) for m in Metric}
            if observable_periods(aligned[Metric.VIEWS]) < num_periods:
                excluded.append(video_id)
                continue
            series[video_id] = {m: impute_missing(s) for m, s in aligned.items()}
        logger.info("%d eligible videos, %d excluded", len(series), len(excluded))
        return cls(series, excluded)

    def ids(self, feed: Feed) -> list[str]:
        return [vid for vid, by_metric in self.series.items() if by_metric[Metric.VIEWS].feed is Feed(feed)]

    def total(self, video_id: str, metric: Metric = Metric.VIEWS) -> float:
        return float(self.series[video_id][Metric(metric)].cumulative[-1])

    @property
    def num_periods(self) -> int:
        first = next(iter(self.series.values()))
        return first[Metric.VIEWS].grid.num_periods

    def shares(self, ids: Sequence[str], metric, mode) -> np.ndarray:
        """Matrix of normalized shares, one row per video, one column per period."""
        metric, mode = Metric(metric), NormalizationMode(mode)
        rows = []
        for vid in ids:
            key = (vid, metric, mode)
            if key not in self._shares:
                self._shares[key] = normalize(self.series[vid][metric], mode).values
            rows.append(self._shares[key])
        return np.vstack(rows)

    def zero_attention_count(self, ids: Sequence[str], metric) -> int:
        return int(sum(normalize(self.series[v][Metric(metric)], "per_period").zero_attention for v in ids))

    def correlation_profile(self, video_id: str) -> CorrelationProfile:
        by_metric = self.series[video_id]
        return CorrelationProfile.from_series(
            video_id,
            by_metric[Metric.VIEWS].cumulative,
            by_metric[Metric.LIKES].cumulative,
            by_metric[Metric.COMMENTS].cumulative,
        )


@dataclass(frozen=True, eq=False)
class EntropyCurve:
    label: str
    metric: str
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class EntropySummary:
    mean: np.ndarray
    variance: np.ndarray


@dataclass(frozen=True, eq=False)
class DivergenceCurve:
    label_a: str
    label_b: str | None
    values: np.ndarray

    @property
    def lagged(self) -> bool:
        return self.label_b is None


@dataclass(frozen=True, eq=False)
class DivergenceMatrix:
    labels: tuple[str, ...]
    values: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.values[self.labels.index(a), self.labels.index(b)])


def _members(cohort: Cohort) -> tuple[str, ...]:
    if not cohort.member_ids:
        raise AnalysisError(f"cohort {cohort.label} is empty")
    return cohort.member_ids


def _distributions(shares: np.ndarray, binning: BinningConfig) -> list:
    return [build_distribution(shares[:, t], binning) for t in range(shares.shape[1])]


def entropy_curve(
    cohort: Cohort,
    dataset: Dataset,
    metric=Metric.VIEWS,
    binning: BinningConfig = BinningConfig(),
    mode=NormalizationMode.PER_PERIOD_SHARE,
) -> EntropyCurve:
    shares = dataset.shares(_members(cohort), metric, mode)
    values = np.array([entropy(p).normalized for p in _distributions(shares, binning)])
    return EntropyCurve(cohort.label, Metric(metric).value, values)


def entropy_summary(curves: Sequence[EntropyCurve]) -> EntropySummary:
    """Per-period mean and population variance across cohort entropy curves."""
    if not curves:
        raise AnalysisError("no entropy curves to summarize")
    lengths = {c.values.size for c in curves}
    if len(lengths) != 1:
        raise AnalysisError("entropy curves differ in length")
    stacked = np.vstack([c.values for c in curves])
    return EntropySummary(stacked.mean(axis=0), stacked.var(axis=0))


def group_divergence_curve(
    cohort_a: Cohort,
    cohort_b: Cohort,
    dataset: Dataset,
    metric=Metric.VIEWS,
    binning: BinningConfig = BinningConfig(),
    mode=NormalizationMode.CUMULATIVE_SHARE,
) -> DivergenceCurve:
    pa = _distributions(dataset.shares(_members(cohort_a), metric, mode), binning)
    pb = _distributions(dataset.shares(_members(cohort_b), metric, mode), binning)
    values = np.array([symmetric_divergence(p, q).delta for p, q in zip(pa, pb)])
    return DivergenceCurve(cohort_a.label, cohort_b.label, values)


def divergence_matrix(
    cohorts: Sequence[Cohort],
    dataset: Dataset,
    metric=Metric.VIEWS,
    binning: BinningConfig = BinningConfig(),
    mode=NormalizationMode.CUMULATIVE_SHARE,
    curves: Sequence[DivergenceCurve] | None = None,
) -> DivergenceMatrix:
    """Mean-over-time divergence for every unordered cohort pair.

    Precomputed pair ``curves`` are reused when given.
    """
    if len(cohorts) < 2:
        raise AnalysisError("divergence matrix needs at least two cohorts")
    labels = tuple(c.label for c in cohorts)
    known = {(c.label_a, c.label_b): c for c in curves or ()}
    values = np.zeros((len(labels), len(labels)))
    for (i, a), (j, b) in itertools.combinations(enumerate(cohorts), 2):
        curve = known.get((a.label, b.label)) or group_divergence_curve(a, b, dataset, metric, binning, mode)
        values[i, j] = values[j, i] = float(np.mean(curve.values))
    return DivergenceMatrix(labels, values)


def lagged_divergence_curve(
    cohort: Cohort,
    dataset: Dataset,
    metric=Metric.VIEWS,
    binning: BinningConfig = BinningConfig(),
    mode=NormalizationMode.CUMULATIVE_SHARE,
) -> DivergenceCurve:
    """Divergence between the cohort's distributions at consecutive periods (length T-1)."""
    shares = dataset.shares(_members(cohort), metric, mode)
    if shares.shape[1] < 2:
        raise AnalysisError("lagged divergence needs at least two periods")
    dists = _distributions(shares, binning)
    values = np.array([symmetric_divergence(p, q).delta for p, q in zip(dists[:-1], dists[1:])])
    return DivergenceCurve(cohort.label, None, values)


def build_cohorts(dataset: Dataset, fraction: float = 0.2) -> dict[str, Cohort]:
    """T1..T5 from trending views quintiles and R1..R5 from recent correlation ranking."""
    trending, recent = dataset.ids(Feed.TRENDING), dataset.ids(Feed.RECENT)
    try:
        cohorts = quintile_split({v: dataset.total(v) for v in trending})
    except CohortError as exc:
        raise AnalysisError(f"trending feed: {exc}") from exc
    if not recent:
        raise AnalysisError("recent feed: no eligible videos")
    profiles = [dataset.correlation_profile(v) for v in recent]
    cohorts += select_top_recent(profiles, {v: dataset.total(v) for v in recent}, fraction)
    return {c.label: c for c in cohorts}


@dataclass
class AnalysisReport:
    config: AnalysisConfig
    cohorts: dict[str, Cohort]
    entropy_curves: list[EntropyCurve]
    summary: EntropySummary
    pair_curves: list[DivergenceCurve]
    lagged_curves: list[DivergenceCurve]
    matrix: DivergenceMatrix
    correlation_histograms: dict[str, dict]
    counts: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        fl = lambda arr: [float(x) for x in arr]  # noqa: E731
        return {
            "config": self.config.to_dict(),
            "counts": self.counts,
            "cohorts": {label: list(c.member_ids) for label, c in self.cohorts.items()},
            "entropy_curves": [{"cohort": c.label, "metric": c.metric, "values": fl(c.values)} for c in self.entropy_curves],
            "entropy_summary": {"mean": fl(self.summary.mean), "variance": fl(self.summary.variance)},
            "divergence_curves": [
                {"cohort_a": c.label_a, "cohort_b": c.label_b, "values": fl(c.values)} for c in self.pair_curves
            ],
            "lagged_curves": [{"cohort": c.label_a, "values": fl(c.values)} for c in self.lagged_curves],
            "divergence_matrix": {
                "labels": list(self.matrix.labels),
                "values": [fl(row) for row in self.matrix.values],
            },
            "correlation_histograms": self.correlation_histograms,
        }


def _histograms(dataset: Dataset, bin_width: float) -> dict[str, dict]:
    out = {}
    for feed in Feed:
        ids = dataset.ids(feed)
        entry = {"bin_edges": [float(e) for e in correlation_edges(bin_width)], "num_videos": len(ids)}
        profiles = [dataset.correlation_profile(v) for v in ids]
        for pair in MetricPair:
            if profiles:
                hist = correlation_histogram(profiles, pair, bin_width)
                entry[pair.value] = {"counts": [int(c) for c in hist.counts], "fractions": [float(f) for f in hist.fractions]}
        out[feed.value] = entry
    return out


def run_analysis(dataset: Dataset, config: AnalysisConfig = AnalysisConfig()) -> AnalysisReport:
    """Cohort the dataset and compute every curve, the matrix and the histograms."""
    if not dataset.series:
        raise AnalysisError("no eligible videos")
    if dataset.num_periods != config.num_periods:
        raise AnalysisError("dataset grid does not match the configured number of periods")
    metric, binning = Metric(config.metric), config.binning
    if metric is not Metric.VIEWS:
        logger.warning("%s are sparse for many videos; views is the recommended metric", metric.value)
    cohorts = build_cohorts(dataset, config.fraction)
    basic = [cohorts[label] for label in BASIC_LABELS]

    curves = [entropy_curve(c, dataset, metric, binning, config.entropy_mode) for c in basic]
    pair_curves = [
        group_divergence_curve(a, b, dataset, metric, binning, config.divergence_mode)
        for a, b in itertools.combinations(basic, 2)
    ]
    lagged = [lagged_divergence_curve(c, dataset, metric, binning, config.divergence_mode) for c in basic]
    matrix = divergence_matrix(basic, dataset, metric, binning, config.divergence_mode, curves=pair_curves)

    all_ids = list(dataset.series)
    counts = {
        "eligible": {feed.value: len(dataset.ids(feed)) for feed in Feed},
        "excluded": len(dataset.excluded),
        "zero_attention": dataset.zero_attention_count(all_ids, metric),
        "cohort_sizes": {label: len(c) for label, c in cohorts.items()},
    }
    return AnalysisReport(
        config=config,
        cohorts=cohorts,
        entropy_curves=curves,
        summary=entropy_summary(curves),
        pair_curves=pair_curves,
        lagged_curves=lagged,
        matrix=matrix,
        correlation_histograms=_histograms(dataset, config.hist_bin_width),
        counts=counts,
    )


def analyze_snapshots(snapshots: Iterable[Snapshot], config: AnalysisConfig = AnalysisConfig()) -> AnalysisReport:
    try:
        dataset = Dataset.from_snapshots(snapshots, config.period_seconds, config.num_periods)
    except TimeSeriesError as exc:
        raise AnalysisError(str(exc)) from exc
    return run_analysis(dataset, config)
