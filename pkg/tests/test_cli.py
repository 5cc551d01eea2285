import csv
import json

import pytest

from attention_entropy.cli import run
from attention_entropy.io import SNAPSHOT_HEADER


def rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    d = tmp_path_factory.mktemp("gen")
    csv_path = d / "s.csv"
    argv = ["generate", "--seed", "7", "--num-trending", "50", "--num-recent", "50", "--num-periods", "12",
            "--output", str(csv_path)]
    assert run(argv) == 0
    return csv_path, argv


@pytest.fixture(scope="module")
def analyzed(generated, tmp_path_factory):
    out = tmp_path_factory.mktemp("out")
    assert run(["analyze", "--input", str(generated[0]), "--out-dir", str(out), "--num-periods", "12"]) == 0
    return out


class TestErrors:
    def test_empty_csv(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(SNAPSHOT_HEADER) + "\n")
        assert run(["analyze", "--input", str(path), "--out-dir", str(tmp_path / "o")]) != 0
        assert "no observations" in capsys.readouterr().err

    def test_malformed_row_reports_line(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text(",".join(SNAPSHOT_HEADER) + "\nv1,trending,1000000,5,0,0\nv1,trending,oops,5,0,0\n")
        assert run(["analyze", "--input", str(path), "--out-dir", str(tmp_path / "o")]) == 1
        assert "line 3" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run(["analyze", "--input", str(tmp_path / "nope.csv"), "--out-dir", str(tmp_path)]) == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_unknown_flag(self):
        assert run(["analyze", "--bogus"]) != 0

    def test_bad_bins(self, generated, tmp_path, capsys):
        assert run(["analyze", "--input", str(generated[0]), "--out-dir", str(tmp_path), "--bins", "1"]) == 1

    def test_bad_generator_value(self, tmp_path, capsys):
        assert run(["generate", "--coupling", "2", "--output", str(tmp_path / "x.csv")]) == 1
        assert "coupling" in capsys.readouterr().err

    def test_mock_without_script(self, tmp_path):
        assert run(["collect", "--out-dir", str(tmp_path)]) == 1


class TestGenerate:
    def test_seed_reproducible(self, generated, tmp_path):
        path, argv = generated
        again = tmp_path / "again.csv"
        assert run(argv[:-1] + [str(again)]) == 0
        assert again.read_bytes() == path.read_bytes()

    def test_config_sidecar(self, generated):
        cfg = json.loads(generated[0].with_suffix(".config.json").read_text())
        assert cfg["seed"] == 7 and cfg["num_periods"] == 12


class TestAnalyze:
    def test_bundle_contents(self, analyzed):
        report = json.loads((analyzed / "report.json").read_text())
        assert len(report["entropy_curves"]) == 6
        assert len(report["divergence_curves"]) == 15
        assert len(report["divergence_matrix"]["labels"]) == 6
        assert set(report["correlation_histograms"]) == {"trending", "recent"}
        assert report["config"]["input"] == "s.csv"

    def test_tables(self, analyzed):
        names = {p.name for p in analyzed.iterdir()}
        assert names >= {
            "entropy_curves.csv", "entropy_summary.csv", "divergence_curves.csv", "divergence_matrix.csv",
            "correlation_hist_trending.csv", "correlation_hist_recent.csv", "cohorts.csv",
        }
        entropy = rows(analyzed / "entropy_curves.csv")
        assert entropy[0] == ["period", "hours", "R5", "T1", "T2", "T3", "T4", "T5"] and len(entropy) == 13
        div = rows(analyzed / "divergence_curves.csv")
        assert sum(r[0] == "between" for r in div) == 15 * 12
        assert sum(r[0] == "lagged" for r in div) == 6 * 11

    def test_report_rerenders(self, analyzed, tmp_path):
        assert run(["report", "--input", str(analyzed / "report.json"), "--out-dir", str(tmp_path)]) == 0
        for name in ("entropy_curves.csv", "divergence_matrix.csv", "cohorts.csv"):
            assert (tmp_path / name).read_text() == (analyzed / name).read_text()

    def test_report_rejects_partial_bundle(self, tmp_path, capsys):
        bad = tmp_path / "report.json"
        bad.write_text(json.dumps({"config": {}}))
        assert run(["report", "--input", str(bad), "--out-dir", str(tmp_path / "o")]) == 1
        assert "lacks" in capsys.readouterr().err


class TestCollect:
    def test_mock_script(self, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(json.dumps({
            "feeds": {"trending": [["a"]], "recent": [["b"]]},
            "stats": {"a": {"start": [10, 0, 0], "step": [5, 1, 0]}, "b": {"start": [1, 0, 0], "step": [1, 0, 0]}},
            "down": [2],
        }))
        store = tmp_path / "store"
        argv = ["collect", "--script", str(script), "--out-dir", str(store), "--horizon-days", "1.5",
                "--start-time", "1000000"]
        assert run(argv) == 0
        snaps = rows(store / "snapshots.csv")
        assert snaps[0] == list(SNAPSHOT_HEADER) and len(snaps) == 1 + 2 * 5
        assert len((store / "cycles.jsonl").read_text().splitlines()) == 6
        assert json.loads((store / "collect_config.json").read_text())["wall_clock"] is False
        # a rerun finds the horizon already reached and writes nothing
        assert run(argv) == 0
        assert len(rows(store / "snapshots.csv")) == 11
