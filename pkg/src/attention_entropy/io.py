"""Snapshot CSV interchange and report bundle rendering."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Iterator

from .timeseries import Feed, Snapshot, TimeSeriesError

SNAPSHOT_HEADER = ("video_id", "feed", "observed_at", "views", "likes", "comments")


class SnapshotFormatError(ValueError):
    pass


def format_snapshot(snap: Snapshot) -> list:
    return [snap.video_id, snap.feed.value, snap.observed_at, snap.views, snap.likes, snap.comments]


def parse_snapshot(row: list[str], line: int) -> Snapshot:
    if len(row) != len(SNAPSHOT_HEADER):
        raise SnapshotFormatError(f"line {line}: expected {len(SNAPSHOT_HEADER)} fields, got {len(row)}")
    video_id, feed, *numbers = row
    try:
        feed = Feed(feed.strip().lower())
    except ValueError:
        raise SnapshotFormatError(f"line {line}: unknown feed {feed!r}") from None
    try:
        observed_at, views, likes, comments = (int(x) for x in numbers)
    except ValueError:
        raise SnapshotFormatError(f"line {line}: non-integer field in {row!r}") from None
    try:
        return Snapshot(video_id, feed, observed_at, views, likes, comments)
    except TimeSeriesError as exc:
        raise SnapshotFormatError(f"line {line}: {exc}") from None


def read_snapshots(path) -> list[Snapshot]:
    """Read a snapshot CSV; malformed rows raise with their line number."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SnapshotFormatError("no observations")
        if tuple(h.strip() for h in header) != SNAPSHOT_HEADER:
            raise SnapshotFormatError(f"line 1: expected header {','.join(SNAPSHOT_HEADER)}")
        snaps = [parse_snapshot(row, reader.line_num) for row in reader if row]
    if not snaps:
        raise SnapshotFormatError("no observations")
    return snaps


def write_snapshots(path, snapshots: Iterable[Snapshot]) -> int:
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SNAPSHOT_HEADER)
        for snap in snapshots:
            writer.writerow(format_snapshot(snap))
            n += 1
    return n


def iter_rows(path) -> Iterator[Snapshot]:
    """Stream snapshots without the non-empty check; used for append-only logs."""
    path = Path(path)
    if not path.exists():
        return
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if row:
                yield parse_snapshot(row, reader.line_num)


def _num(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: Iterable[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_tables(report: dict, out_dir) -> list[Path]:
    """Render the figure-ready CSV tables of a report bundle into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    period_seconds = report["config"]["period_seconds"]
    written = []

    curves = report["entropy_curves"]
    path = out / "entropy_curves.csv"
    n = len(curves[0]["values"])
    _write_csv(
        path,
        ["period", "hours"] + [c["cohort"] for c in curves],
        ([t, t * period_seconds // 3600] + [_num(c["values"][t]) for c in curves] for t in range(n)),
    )
    written.append(path)

    summary = report["entropy_summary"]
    path = out / "entropy_summary.csv"
    _write_csv(
        path,
        ["period", "hours", "mean", "variance"],
        (
            [t, t * period_seconds // 3600, _num(m), _num(v)]
            for t, (m, v) in enumerate(zip(summary["mean"], summary["variance"]))
        ),
    )
    written.append(path)

    path = out / "divergence_curves.csv"
    rows = []
    for c in report["divergence_curves"]:
        rows += [["between", c["cohort_a"], c["cohort_b"], t, _num(v)] for t, v in enumerate(c["values"])]
    for c in report["lagged_curves"]:
        # lag step t compares period t-1 with period t
        rows += [["lagged", c["cohort"], c["cohort"], t + 1, _num(v)] for t, v in enumerate(c["values"])]
    _write_csv(path, ["kind", "cohort_a", "cohort_b", "period", "delta"], rows)
    written.append(path)

    matrix = report["divergence_matrix"]
    path = out / "divergence_matrix.csv"
    _write_csv(
        path,
        ["cohort"] + matrix["labels"],
        ([label] + [_num(v) for v in row] for label, row in zip(matrix["labels"], matrix["values"])),
    )
    written.append(path)

    for feed, hist in report["correlation_histograms"].items():
        path = out / f"correlation_hist_{feed}.csv"
        pairs = [k for k in ("views_likes", "views_comments", "likes_comments") if k in hist]
        edges = hist["bin_edges"]
        header = ["bin_lo", "bin_hi"] + [f"{p}_count" for p in pairs] + [f"{p}_fraction" for p in pairs]
        _write_csv(
            path,
            header,
            (
                [_num(edges[i]), _num(edges[i + 1])]
                + [hist[p]["counts"][i] for p in pairs]
                + [_num(hist[p]["fractions"][i]) for p in pairs]
                for i in range(len(edges) - 1)
            ),
        )
        written.append(path)

    path = out / "cohorts.csv"
    _write_csv(path, ["video_id", "label"], ([vid, label] for label, ids in sorted(report["cohorts"].items()) for vid in ids))
    written.append(path)
    return written


def dump_report(report: dict, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def load_report(path) -> dict:
    with open(path) as fh:
        report = json.load(fh)
    missing = {"config", "entropy_curves", "entropy_summary", "divergence_curves", "lagged_curves",
               "divergence_matrix", "correlation_histograms", "cohorts"} - report.keys()
    if missing:
        raise ValueError(f"report bundle lacks {', '.join(sorted(missing))}")
    return report
