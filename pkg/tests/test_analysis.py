import math

import numpy as np
import pytest

from attention_entropy.analysis import (
    BASIC_LABELS,
    AnalysisConfig,
    AnalysisError,
    Dataset,
    EntropyCurve,
    analyze_snapshots,
    build_cohorts,
    divergence_matrix,
    entropy_curve,
    entropy_summary,
    group_divergence_curve,
    lagged_divergence_curve,
    run_analysis,
)
from attention_entropy.cohorts import Cohort
from attention_entropy.synthgen import GeneratorConfig, generate
from attention_entropy.timeseries import Feed, Metric, Snapshot

from . import oracles

T = 6
STEP = 21600


def corpus(trajectories, feed=Feed.TRENDING, start=1_000_000, prefix="v"):
    snaps = []
    for i, traj in enumerate(trajectories):
        for t, v in enumerate(traj):
            snaps.append(Snapshot(f"{prefix}{i:03d}", feed, start + i * 7 + t * STEP, int(v), 0, 0))
    return snaps


def dataset(trajectories, num_periods=T):
    return Dataset.from_snapshots(corpus(trajectories), STEP, num_periods)


def C(label, ids):
    return Cohort(label, tuple(ids), "test")


def whole(ds, label="A"):
    return C(label, ds.series)


@pytest.fixture(scope="module")
def small():
    rng = np.random.default_rng(11)
    trajs = [np.cumsum(rng.integers(0, 50, T)) + 1 for _ in range(40)]
    return trajs, dataset(trajs)


@pytest.fixture(scope="module")
def synthetic():
    cfg = GeneratorConfig(seed=3, num_trending=60, num_recent=60, num_periods=12)
    snaps = list(generate(cfg).snapshots())
    return run_analysis(Dataset.from_snapshots(snaps, STEP, 12), AnalysisConfig(num_periods=12))


class TestDataset:
    def test_truncated_videos_excluded(self):
        ds = dataset([[1, 2, 3, 4, 5, 6], [1, 2, 3]])
        assert list(ds.series) == ["v000"] and ds.excluded == ("v001",)

    def test_empty(self):
        with pytest.raises(AnalysisError, match="no observations"):
            Dataset.from_snapshots([])

    def test_gap_is_imputed(self):
        snaps = [s for s in corpus([[10, 20, 30, 40, 50, 60]]) if s.views != 30]
        ds = Dataset.from_snapshots(snaps, STEP, T)
        np.testing.assert_array_equal(ds.series["v000"]["views"].cumulative, [10, 20, 30, 40, 50, 60])


class TestEntropy:
    def test_identical_trajectories_zero(self):
        ds = dataset([[10, 30, 60, 100, 150, 210]] * 8)
        curve = entropy_curve(whole(ds), ds)
        np.testing.assert_array_equal(curve.values, np.zeros(T))

    def test_matches_bruteforce(self, small):
        trajs, ds = small
        curve = entropy_curve(whole(ds), ds)
        shares = [oracles.per_period_shares(list(map(float, tr))) for tr in trajs]
        for t in range(T):
            probs = oracles.histogram([s[t] for s in shares], 32)
            assert curve.values[t] == pytest.approx(oracles.entropy(probs) / math.log(32), abs=1e-12)

    def test_scale_invariant(self, small):
        trajs, ds = small
        scaled = dataset([np.asarray(tr) * 1000 for tr in trajs])
        a = entropy_curve(whole(ds), ds).values
        b = entropy_curve(whole(scaled), scaled).values
        np.testing.assert_array_equal(a, b)

    def test_summary(self):
        s = entropy_summary([EntropyCurve("a", "views", np.array([0.4])), EntropyCurve("b", "views", np.array([0.6]))])
        assert s.mean[0] == pytest.approx(0.5) and s.variance[0] == pytest.approx(0.01)

    def test_summary_rejects_ragged(self):
        with pytest.raises(AnalysisError):
            entropy_summary([EntropyCurve("a", "views", np.zeros(2)), EntropyCurve("b", "views", np.zeros(3))])

    def test_empty_cohort(self, small):
        with pytest.raises(AnalysisError, match="empty"):
            entropy_curve(C("X", ()), small[1])

    def test_no_volatility_gives_zero_entropy(self):
        cfg = GeneratorConfig(seed=1, num_trending=20, num_recent=10, num_periods=8, early_volatility=0.0)
        videos = generate(cfg).by_feed(Feed.TRENDING)
        ds = Dataset({v.video_id: {m: v.series(m) for m in Metric} for v in videos})
        for label in ("T1", "T5"):
            tier = C(label, [v.video_id for v in videos if v.truth.tier == label and not v.truth.spike])
            np.testing.assert_array_equal(entropy_curve(tier, ds).values, 0.0)


class TestDivergence:
    def test_self_zero(self, small):
        _, ds = small
        c = whole(ds)
        np.testing.assert_array_equal(group_divergence_curve(c, c, ds).values, np.zeros(T))

    def test_matches_bruteforce(self, small):
        trajs, ds = small
        ids = list(ds.series)
        a, b = C("A", (ids[:20])), C("B", (ids[20:]))
        curve = group_divergence_curve(a, b, ds)
        shares = [oracles.cumulative_shares(list(map(float, tr))) for tr in trajs]
        for t in range(T):
            p = oracles.histogram([s[t] for s in shares[:20]], 32)
            q = oracles.histogram([s[t] for s in shares[20:]], 32)
            assert curve.values[t] == pytest.approx(oracles.delta(p, q, 1e-9), rel=1e-9, abs=1e-12)

    def test_lagged_length_and_oracle(self, small):
        trajs, ds = small
        curve = lagged_divergence_curve(whole(ds), ds)
        assert curve.values.size == T - 1 and curve.lagged
        shares = [oracles.cumulative_shares(list(map(float, tr))) for tr in trajs]
        p = oracles.histogram([s[0] for s in shares], 32)
        q = oracles.histogram([s[1] for s in shares], 32)
        assert curve.values[0] == pytest.approx(oracles.delta(p, q, 1e-9), rel=1e-9)

    def test_matrix_symmetric_zero_diagonal(self, small):
        _, ds = small
        ids = list(ds.series)
        cohorts = [C(str(k), (ids[k::3])) for k in range(3)]
        m = divergence_matrix(cohorts, ds)
        np.testing.assert_array_equal(m.values, m.values.T)
        np.testing.assert_array_equal(np.diag(m.values), 0.0)
        assert m["0", "1"] == pytest.approx(np.mean(group_divergence_curve(cohorts[0], cohorts[1], ds).values))

    def test_matrix_needs_two(self, small):
        with pytest.raises(AnalysisError):
            divergence_matrix([whole(small[1])], small[1])


class TestRunAnalysis:
    def test_shapes(self, synthetic):
        assert [c.label for c in synthetic.entropy_curves] == list(BASIC_LABELS)
        assert len(synthetic.pair_curves) == 15
        assert len(synthetic.lagged_curves) == 6
        assert all(c.values.size == 11 for c in synthetic.lagged_curves)
        assert synthetic.matrix.values.shape == (6, 6)

    def test_cohorts_partition(self, synthetic):
        cohorts = synthetic.cohorts
        assert sorted(cohorts) == ["R1", "R2", "R3", "R4", "R5", "T1", "T2", "T3", "T4", "T5"]
        assert len(cohorts["R5"]) == 12
        assert sum(len(c) for c in cohorts.values()) == 120

    def test_report_dict(self, synthetic):
        d = synthetic.to_dict()
        assert set(d) >= {"config", "counts", "entropy_curves", "divergence_matrix", "correlation_histograms"}
        assert set(d["correlation_histograms"]) == {"trending", "recent"}

    def test_wrong_grid(self):
        snaps = list(generate(GeneratorConfig(num_trending=10, num_recent=10, num_periods=8)).snapshots())
        with pytest.raises(AnalysisError):
            run_analysis(Dataset.from_snapshots(snaps, STEP, 8), AnalysisConfig(num_periods=10))

    def test_too_few_trending(self):
        snaps = corpus([[1, 2, 3, 4, 5, 6]] * 3) + corpus([[1, 2, 3, 4, 5, 6]] * 3, Feed.RECENT, prefix="r")
        with pytest.raises(AnalysisError, match="trending"):
            analyze_snapshots(snaps, AnalysisConfig(num_periods=T))

    def test_analyze_wraps_timeseries_errors(self):
        with pytest.raises(AnalysisError):
            analyze_snapshots([])

    def test_build_cohorts_recent_missing(self):
        ds = dataset([[1, 2, 3, 4, 5, 6]] * 6)
        with pytest.raises(AnalysisError, match="recent"):
            build_cohorts(ds)
