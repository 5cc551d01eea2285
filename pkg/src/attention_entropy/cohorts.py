"""Inter-metric correlation profiles, correlation histograms and popularity cohorts."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class CohortError(ValueError):
    pass


class MetricPair(str, enum.Enum):
    VIEWS_LIKES = "views_likes"
    VIEWS_COMMENTS = "views_comments"
    LIKES_COMMENTS = "likes_comments"


TRENDING_LABELS = ("T1", "T2", "T3", "T4", "T5")
RECENT_LABELS = ("R1", "R2", "R3", "R4", "R5")


def pearson(a, b) -> tuple[float, bool]:
    """Pearson coefficient and an ``undefined`` flag.

    A constant series has no defined correlation; that case returns ``(0.0, True)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise CohortError("series must be one-dimensional and of equal length")
    if a.size < 2:
        raise CohortError("need at least two points to correlate")
    da = a - a.mean()
    db = b - b.mean()
    ssa = float(np.dot(da, da))
    ssb = float(np.dot(db, db))
    if np.ptp(a) == 0 or np.ptp(b) == 0 or ssa == 0.0 or ssb == 0.0:
        return 0.0, True
    rho = float(np.dot(da, db)) / math.sqrt(ssa * ssb)
    return min(1.0, max(-1.0, rho)), False


@dataclass(frozen=True)
class CorrelationProfile:
    video_id: str
    rho_views_likes: float
    rho_views_comments: float
    rho_likes_comments: float
    undefined_flags: tuple[bool, bool, bool] = (False, False, False)

    @classmethod
    def from_series(cls, video_id: str, views, likes, comments) -> "CorrelationProfile":
        vl, u1 = pearson(views, likes)
        vc, u2 = pearson(views, comments)
        lc, u3 = pearson(likes, comments)
        return cls(video_id, vl, vc, lc, (u1, u2, u3))

    def rho(self, pair: MetricPair) -> float:
        return getattr(self, "rho_" + MetricPair(pair).value)

    @property
    def mean_rho(self) -> float:
        return (self.rho_views_likes + self.rho_views_comments + self.rho_likes_comments) / 3.0


@dataclass(frozen=True, eq=False)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def bin_width(self) -> float:
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def fractions(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts / total if total else np.zeros(self.counts.size)

    def mass_between(self, lo: float, hi: float) -> float:
        """Fraction of mass in bins lying entirely inside [lo, hi]."""
        left, right = self.bin_edges[:-1], self.bin_edges[1:]
        inside = (left >= lo - 1e-12) & (right <= hi + 1e-12)
        return float(self.fractions[inside].sum())


def correlation_edges(bin_width: float = 0.1) -> np.ndarray:
    n = round(2.0 / bin_width)
    if n < 1 or abs(n * bin_width - 2.0) > 1e-9:
        raise CohortError("bin_width must divide the interval [-1, 1]")
    # rounding keeps edges such as 0.7 at their nearest double
    return np.round(-1.0 + np.arange(n + 1) * bin_width, 12)


def correlation_histogram(
    profiles: Sequence[CorrelationProfile], pair: MetricPair, bin_width: float = 0.1
) -> Histogram:
    if not profiles:
        raise CohortError("no correlation profiles to histogram")
    edges = correlation_edges(bin_width)
    rho = np.array([p.rho(pair) for p in profiles])
    idx = np.clip(np.searchsorted(edges, rho, side="right") - 1, 0, edges.size - 2)
    return Histogram(edges, np.bincount(idx, minlength=edges.size - 1))


@dataclass(frozen=True)
class Cohort:
    label: str
    member_ids: tuple[str, ...]
    rule: str

    def __len__(self):
        return len(self.member_ids)


def _split_sizes(n: int, groups: int) -> list[int]:
    base, extra = divmod(n, groups)
    return [base + (1 if i < extra else 0) for i in range(groups)]


def _chunk(ordered: Sequence[str], sizes: Sequence[int]) -> list[tuple[str, ...]]:
    out, start = [], 0
    for size in sizes:
        out.append(tuple(ordered[start : start + size]))
        start += size
    return out


def quintile_split(
    totals: Mapping[str, float], labels: Sequence[str] = TRENDING_LABELS
) -> list[Cohort]:
    """Split videos into five contiguous groups by ascending total views.

    Ties are ordered by video id. When ``n`` is not a multiple of five the
    lowest groups receive one extra member each.
    """
    if len(totals) < 5:
        raise CohortError(f"quintile split needs at least 5 videos, got {len(totals)}")
    ordered = sorted(totals, key=lambda vid: (totals[vid], vid))
    chunks = _chunk(ordered, _split_sizes(len(ordered), 5))
    return [
        Cohort(label, members, f"quintile {i + 1}/5 by ascending total views")
        for i, (label, members) in enumerate(zip(labels, chunks))
    ]


def select_top_recent(
    profiles: Sequence[CorrelationProfile],
    totals: Mapping[str, float],
    fraction: float = 0.2,
) -> list[Cohort]:
    """Return R1..R5 with R5 the ``fraction`` of recent videos whose metrics correlate best.

    Videos are ranked by mean pairwise correlation (undefined counted as 0),
    then by total views, then by id. R5 takes the top ``floor(fraction * n)``
    (at least one); the rest form R1..R4 with extras to the lowest groups,
    which for ``fraction=0.2`` is exactly a quintile split.
    """
    if not profiles:
        raise CohortError("no recent videos to rank")
    if not 0.0 < fraction <= 1.0:
        raise CohortError("fraction must lie in (0, 1]")
    best_first = sorted(profiles, key=lambda p: (-p.mean_rho, -totals[p.video_id], p.video_id))
    ids = [p.video_id for p in best_first]
    n_top = max(1, math.floor(fraction * len(ids) + 1e-9))
    top, rest = ids[:n_top], ids[n_top:][::-1]
    lower = _chunk(rest, _split_sizes(len(rest), 4))
    rule = "ranked by mean pairwise correlation, then total views"
    cohorts = [Cohort(label, members, rule) for label, members in zip(RECENT_LABELS[:4], lower)]
    cohorts.append(Cohort("R5", tuple(top), f"top {fraction:g} {rule}"))
    return cohorts
