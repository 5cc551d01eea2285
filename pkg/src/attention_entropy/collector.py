"""Feed polling and counter tracking against a pluggable stats source.

Every cycle the two feeds are checked for unseen videos, then every active
video's counters are fetched and appended to an append-only snapshot log. The
log is a snapshot CSV plus a JSONL file with one marker per cycle; replaying
the markers rebuilds the registry, which is how a restarted run resumes.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from . import io
from .timeseries import NUM_PERIODS, PERIOD_SECONDS, Feed, Snapshot

logger = logging.getLogger(__name__)

FEED_LIMIT = 150
GONE = "gone"
SNAPSHOT_FILE = "snapshots.csv"
MARKER_FILE = "cycles.jsonl"
# 2012-09-21 00:00 UTC, start of the virtual clock
DEFAULT_START = 1348185600


class CollectorError(RuntimeError):
    pass


class SourceUnavailable(CollectorError):
    """The whole source is unreachable; the cycle cannot run."""


class StatsSource(Protocol):
    def begin_cycle(self, cycle: int, scheduled_at: int) -> None: ...

    def list_feed(self, feed: Feed) -> list[str]: ...

    def get_stats(self, video_id: str) -> tuple[int, int, int] | str: ...


class Status(str, enum.Enum):
    ACTIVE = "active"
    GONE = "gone"
    COMPLETE = "complete"


@dataclass
class TrackedVideo:
    video_id: str
    feed: Feed
    first_seen: int
    tracking_deadline: int
    status: Status = Status.ACTIVE


class Registry:
    """Tracked videos in discovery order."""

    def __init__(self, track_seconds: int = NUM_PERIODS * PERIOD_SECONDS):
        self.track_seconds = track_seconds
        self.videos: dict[str, TrackedVideo] = {}
        self.last_feed_ids: dict[str, list[str]] = {}

    def __contains__(self, video_id: str) -> bool:
        return video_id in self.videos

    def __len__(self) -> int:
        return len(self.videos)

    def add(self, video_id: str, feed: Feed, first_seen: int) -> TrackedVideo:
        if video_id in self.videos:
            raise CollectorError(f"{video_id} is already tracked")
        video = TrackedVideo(video_id, Feed(feed), first_seen, first_seen + self.track_seconds)
        self.videos[video_id] = video
        return video

    def active(self) -> list[TrackedVideo]:
        return [v for v in self.videos.values() if v.status is Status.ACTIVE]

    def apply(self, marker: "CycleMarker") -> None:
        """Replay one cycle marker."""
        for video_id, feed in marker.new:
            self.add(video_id, Feed(feed), marker.scheduled_at)
        for video_id in marker.gone:
            self.videos[video_id].status = Status.GONE
        for video_id in marker.complete:
            self.videos[video_id].status = Status.COMPLETE
        if marker.feed_ids:
            self.last_feed_ids = {k: list(v) for k, v in marker.feed_ids.items()}

    def state(self) -> list[tuple]:
        return [(v.video_id, v.feed.value, v.first_seen, v.tracking_deadline, v.status.value) for v in self.videos.values()]


@dataclass
class CycleMarker:
    cycle: int
    scheduled_at: int
    completed: bool
    new: list[list[str]] = field(default_factory=list)
    gone: list[str] = field(default_factory=list)
    complete: list[str] = field(default_factory=list)
    missed: list[str] = field(default_factory=list)
    overlap: dict[str, int] = field(default_factory=dict)
    feed_ids: dict[str, list[str]] = field(default_factory=dict)
    snapshots: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "CycleMarker":
        return cls(**json.loads(line))


class SnapshotLog:
    """Append-only snapshot CSV plus a JSONL sidecar of cycle markers."""

    def __init__(self, store_dir):
        self.store = Path(store_dir)
        self.snapshot_path = self.store / SNAPSHOT_FILE
        self.marker_path = self.store / MARKER_FILE

    def ensure_writable(self) -> None:
        try:
            self.store.mkdir(parents=True, exist_ok=True)
            probe = self.store / ".write-probe"
            probe.write_text("")
            probe.unlink()
        except OSError as exc:
            raise CollectorError(f"store {self.store} is not writable: {exc}") from exc
        if not self.snapshot_path.exists():
            io.write_snapshots(self.snapshot_path, [])

    def markers(self) -> list[CycleMarker]:
        if not self.marker_path.exists():
            return []
        with open(self.marker_path) as fh:
            lines = [line for line in fh if line.strip()]
        markers = []
        for i, line in enumerate(lines):
            try:
                markers.append(CycleMarker.from_json(line))
            except (ValueError, TypeError):
                if i != len(lines) - 1:
                    raise CollectorError(f"corrupt cycle marker on line {i + 1}") from None
                logger.warning("ignoring torn final cycle marker")
        return markers

    def snapshots(self) -> list[Snapshot]:
        return list(io.iter_rows(self.snapshot_path))

    def append(self, snapshots: list[Snapshot], marker: CycleMarker) -> None:
        """Append a cycle's snapshots, then its marker; the marker commits the cycle."""
        with open(self.snapshot_path, "a", newline="") as fh:
            for snap in snapshots:
                fh.write(",".join(str(x) for x in io.format_snapshot(snap)) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        with open(self.marker_path, "a") as fh:
            fh.write(marker.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def recover(self) -> list[CycleMarker]:
        """Drop snapshot rows written by a cycle that never got its marker."""
        markers = self.markers()
        if self.marker_path.exists():
            with open(self.marker_path) as fh:
                torn = sum(1 for line in fh if line.strip()) > len(markers)
            if torn:
                with open(self.marker_path, "w") as fh:
                    fh.writelines(m.to_json() + "\n" for m in markers)
        committed = sum(m.snapshots for m in markers)
        # raw lines: a crash can leave a half-written last row
        with open(self.snapshot_path) as fh:
            header, *rows = fh.read().splitlines(keepends=True)
        if len(rows) > committed:
            logger.warning("discarding %d uncommitted snapshot rows", len(rows) - committed)
            with open(self.snapshot_path, "w") as fh:
                fh.writelines([header] + rows[:committed])
        elif len(rows) < committed:
            raise CollectorError("snapshot log is shorter than its cycle markers claim")
        return markers

    def replay(self, track_seconds: int = NUM_PERIODS * PERIOD_SECONDS) -> Registry:
        registry = Registry(track_seconds)
        for marker in self.markers():
            registry.apply(marker)
        return registry


@dataclass
class PollResult:
    new: list[TrackedVideo]
    overlap: dict[str, int]
    feed_ids: dict[str, list[str]]


def poll_feeds(source: StatsSource, registry: Registry, cycle_time: int) -> PollResult:
    """Track every feed video not seen before.

    Both feeds are read before the registry changes, so an unreachable source
    leaves it untouched.
    """
    listed: dict[str, list[str]] = {}
    for feed in Feed:
        ids = list(dict.fromkeys(source.list_feed(feed)))
        if len(ids) > FEED_LIMIT:
            logger.warning("%s feed returned %d ids; keeping the first %d", feed.value, len(ids), FEED_LIMIT)
            ids = ids[:FEED_LIMIT]
        listed[feed.value] = ids
    overlap = {
        feed: len(set(ids) & set(registry.last_feed_ids.get(feed, ()))) for feed, ids in listed.items()
    }
    new = []
    for feed in Feed:
        for video_id in listed[feed.value]:
            if video_id in registry:
                known = registry.videos[video_id].feed
                if known is not feed:
                    logger.warning("%s listed in %s but tracked under %s; ignored", video_id, feed.value, known.value)
                continue
            new.append(registry.add(video_id, feed, cycle_time))
    registry.last_feed_ids = listed
    return PollResult(new, overlap, listed)


@dataclass
class CycleSummary:
    snapshots: list[Snapshot]
    gone: list[str]
    completed: list[str]
    missed: list[str]

    @property
    def fetched(self) -> int:
        return len(self.snapshots)


def update_stats(source: StatsSource, registry: Registry, cycle_time: int) -> CycleSummary:
    """Fetch counters for every active video still inside its tracking window.

    A failed fetch only marks that video missed for this cycle.
    """
    summary = CycleSummary([], [], [], [])
    for video in registry.active():
        if cycle_time >= video.tracking_deadline:
            video.status = Status.COMPLETE
            summary.completed.append(video.video_id)
            continue
        try:
            result = source.get_stats(video.video_id)
        except Exception as exc:  # noqa: BLE001 - any per-video failure is a transient miss
            logger.info("fetch failed for %s: %s", video.video_id, exc)
            summary.missed.append(video.video_id)
            continue
        if result == GONE:
            video.status = Status.GONE
            summary.gone.append(video.video_id)
            continue
        views, likes, comments = (int(x) for x in result)
        summary.snapshots.append(Snapshot(video.video_id, video.feed, cycle_time, views, likes, comments))
    return summary


@dataclass(frozen=True)
class CollectorConfig:
    store_dir: str
    interval: int = PERIOD_SECONDS
    horizon_days: float = 14.0
    track_periods: int = NUM_PERIODS
    start_time: int | None = None

    @property
    def num_cycles(self) -> int:
        return math.ceil(self.horizon_days * 86400 / self.interval - 1e-9)


class VirtualClock:
    """Jumps straight to each scheduled time."""

    def __init__(self, start: int = DEFAULT_START):
        self.now = start

    def __call__(self) -> int:
        return self.now

    def sleep_until(self, t: int) -> None:
        self.now = max(self.now, t)


class WallClock:
    def __call__(self) -> int:
        return int(time.time())

    def sleep_until(self, t: int) -> None:
        delay = t - time.time()
        if delay > 0:
            time.sleep(delay)


def run_schedule(
    source: StatsSource,
    config: CollectorConfig,
    clock=None,
    max_cycles: int | None = None,
    on_cycle: Callable[[CycleMarker], None] | None = None,
) -> list[CycleMarker]:
    """Run poll and update cycles until the horizon, resuming a partially written store.

    ``max_cycles`` stops after that many new cycles; rerunning continues from
    the last committed marker.
    """
    if config.interval <= 0:
        raise CollectorError("interval must be positive")
    log = SnapshotLog(config.store_dir)
    log.ensure_writable()
    clock = clock or VirtualClock(config.start_time or DEFAULT_START)
    markers = log.recover()
    registry = Registry(config.track_periods * config.interval)
    for marker in markers:
        registry.apply(marker)
    if markers:
        start = markers[0].scheduled_at - markers[0].cycle * config.interval
        next_cycle = markers[-1].cycle + 1
    else:
        start = config.start_time if config.start_time is not None else int(clock())
        next_cycle = 0

    written = []
    for cycle in range(next_cycle, config.num_cycles):
        if max_cycles is not None and len(written) >= max_cycles:
            break
        scheduled = start + cycle * config.interval
        clock.sleep_until(scheduled)
        marker, snapshots = run_cycle(source, registry, cycle, scheduled)
        log.append(snapshots, marker)
        written.append(marker)
        if on_cycle:
            on_cycle(marker)
    return written


def run_cycle(
    source: StatsSource, registry: Registry, cycle: int, scheduled: int
) -> tuple[CycleMarker, list[Snapshot]]:
    begin = getattr(source, "begin_cycle", None)
    if begin:
        begin(cycle, scheduled)
    try:
        polled = poll_feeds(source, registry, scheduled)
    except SourceUnavailable as exc:
        logger.warning("cycle %d skipped: %s", cycle, exc)
        return CycleMarker(cycle, scheduled, completed=False), []
    summary = update_stats(source, registry, scheduled)
    marker = CycleMarker(
        cycle,
        scheduled,
        completed=True,
        new=[[v.video_id, v.feed.value] for v in polled.new],
        gone=summary.gone,
        complete=summary.completed,
        missed=summary.missed,
        overlap=polled.overlap,
        feed_ids=polled.feed_ids,
        snapshots=len(summary.snapshots),
    )
    return marker, summary.snapshots


class ScriptedSource:
    """Deterministic stats source driven by a script, for tests and dry runs.

    ``feeds`` maps a feed name to one id list per cycle (missing cycles list
    nothing). ``stats`` maps a video id either to a per-cycle list whose
    entries are ``[views, likes, comments]``, ``"gone"`` or ``None`` (a
    transient failure), or to ``{"start": [...], "step": [...]}`` for linear
    growth with optional ``"gone_at"`` and ``"fail"`` cycle lists.
    ``down`` lists cycles in which the whole source is unreachable.
    """

    def __init__(self, feeds: dict, stats: dict, down=()):
        self.feeds = {Feed(k.lower()).value: v for k, v in feeds.items()}
        self.stats = stats
        self.down = set(down)
        self.cycle = 0

    @classmethod
    def from_file(cls, path) -> "ScriptedSource":
        with open(path) as fh:
            script = json.load(fh)
        return cls(script.get("feeds", {}), script.get("stats", {}), script.get("down", ()))

    def begin_cycle(self, cycle: int, scheduled_at: int) -> None:
        self.cycle = cycle

    def _check_up(self):
        if self.cycle in self.down:
            raise SourceUnavailable(f"source down in cycle {self.cycle}")

    def list_feed(self, feed: Feed) -> list[str]:
        self._check_up()
        per_cycle = self.feeds.get(Feed(feed).value, [])
        return list(per_cycle[self.cycle]) if self.cycle < len(per_cycle) else []

    def get_stats(self, video_id: str):
        self._check_up()
        script = self.stats.get(video_id)
        if script is None:
            raise KeyError(f"no scripted stats for {video_id}")
        if isinstance(script, dict):
            if self.cycle >= script.get("gone_at", math.inf):
                return GONE
            if self.cycle in script.get("fail", ()):
                raise CollectorError(f"scripted failure for {video_id}")
            return tuple(int(a + b * self.cycle) for a, b in zip(script["start"], script.get("step", (0, 0, 0))))
        entry = script[min(self.cycle, len(script) - 1)]
        if entry is None:
            raise CollectorError(f"scripted failure for {video_id}")
        if entry == GONE:
            return GONE
        return tuple(int(x) for x in entry)


class HttpSource:
    """JSON-over-HTTP source.

    ``GET {base}/feeds/{feed}`` returns a list of ids (or ``{"ids": [...]}``);
    ``GET {base}/videos/{id}`` returns ``{"views", "likes", "comments"}``, with
    404 or 410 meaning the video is gone.
    """

    def __init__(self, base_url: str, session=None, timeout: float = 10.0):
        import requests

        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self._request_error = requests.RequestException

    def begin_cycle(self, cycle: int, scheduled_at: int) -> None:
        pass

    def list_feed(self, feed: Feed) -> list[str]:
        try:
            resp = self.session.get(f"{self.base_url}/feeds/{Feed(feed).value}", timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
        except (self._request_error, ValueError) as exc:
            raise SourceUnavailable(str(exc)) from exc
        ids = body["ids"] if isinstance(body, dict) else body
        return [str(x) for x in ids]

    def get_stats(self, video_id: str):
        resp = self.session.get(f"{self.base_url}/videos/{video_id}", timeout=self.timeout)
        if resp.status_code in (404, 410):
            return GONE
        resp.raise_for_status()
        body = resp.json()
        return int(body["views"]), int(body["likes"]), int(body["comments"])
