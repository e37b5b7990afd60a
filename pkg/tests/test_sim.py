import math

import numpy as np
import pytest

from sdrkit.errors import DegenerateDataError, EmptyResultError, ParameterError, ShapeError
from sdrkit.sim import (
    CovariateSpec,
    ExperimentConfig,
    RepOutcome,
    SettingSpec,
    aggregate,
    draw_sample,
    gen_covariates,
    gen_response,
    outcomes_csv,
    rep_rngs,
    run_experiment,
    run_replication,
    spearman,
    true_mean,
    v3_covariance,
)


class TestCovariates:
    n = 100_000

    def test_v1_moments(self):
        X = gen_covariates(CovariateSpec("V1", 10), self.n, np.random.default_rng(0))
        assert np.all(np.abs(X.mean(0)) < 0.02)
        assert np.all(np.abs(X.var(0) - 1) < 0.05)

    def test_v2_variance(self):
        X = gen_covariates(CovariateSpec("V2", 10), self.n, np.random.default_rng(1))
        assert np.all(np.abs(X.var(0) - 2) < 0.05)
        # one shared sign per row
        assert np.corrcoef(X[:, 0], X[:, 1])[0, 1] == pytest.approx(0.5, abs=0.02)

    def test_v3_covariance(self):
        X = gen_covariates(CovariateSpec("V3", 10), self.n, np.random.default_rng(2))
        C = np.cov(X, rowvar=False)
        off = C[~np.eye(10, dtype=bool)]
        assert np.all(np.abs(off - 0.4) < 0.02)

    def test_v3_cholesky_up_to_200(self):
        for p in range(1, 201):
            assert np.all(np.diag(np.linalg.cholesky(v3_covariance(p))) > 0)

    @pytest.mark.parametrize("p", [2, 10, 50, 200])
    def test_v3_spectrum(self, p):
        w = np.linalg.eigvalsh(v3_covariance(p))
        assert w[0] == pytest.approx(0.6) and w[-1] == pytest.approx(0.6 + 0.4 * p)

    def test_bad_law(self):
        with pytest.raises(ParameterError):
            CovariateSpec("V4")


class TestResponse:
    def test_setting1(self):
        assert true_mean("S1", np.array([[2.0, 3.0, 0.0]]))[0] == pytest.approx(1.0)

    def test_setting2(self):
        X = np.array([[0.0, 1.3], [2.0, 0.0]])
        np.testing.assert_allclose(true_mean("S2", X), [0.0, 1.0])

    def test_noise_variance(self):
        X = np.zeros((100_000, 2))
        Y, truth = gen_response(SettingSpec("S1"), X, np.random.default_rng(3))
        assert np.all(truth == 0)
        assert Y.var() == pytest.approx(0.25, abs=0.005)

    def test_needs_two_columns(self):
        with pytest.raises(ShapeError):
            true_mean("S1", np.zeros((3, 1)))


class TestSpearman:
    def test_monotone(self, rng):
        a = rng.standard_normal(50)
        assert spearman(a, np.exp(a)) == pytest.approx(1.0)
        assert spearman(a, -a) == pytest.approx(-1.0)

    def test_ties(self):
        # average ranks (1, 2.5, 2.5, 4) against (1, 3, 2, 4): 4.5 / sqrt(4.5 * 5)
        assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(3 / math.sqrt(10), abs=1e-15)
        assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(0.9486833, abs=1e-7)

    def test_constant(self):
        with pytest.raises(DegenerateDataError):
            spearman([1, 1, 1], [1, 2, 3])

    def test_shapes(self):
        with pytest.raises(ShapeError):
            spearman([1, 2], [1, 2, 3])


class TestReplication:
    cfg = ExperimentConfig(setting="S1", law="V1", n_reps=3, seed=11)

    def test_deterministic(self):
        a = run_replication(self.cfg, 2)
        b = run_replication(self.cfg, 2)
        assert [(o.cor_truth, o.cor_response) for o in a] == [(o.cor_truth, o.cor_response) for o in b]

    def test_range_and_status(self):
        for o in run_replication(self.cfg, 0):
            assert o.status == "ok"
            assert 0 <= o.cor_truth <= 1 and 0 <= o.cor_response <= 1

    def test_sir_only(self):
        cfg = ExperimentConfig(methods=("SIR",), n_reps=1, seed=3)
        (o,) = run_replication(cfg, 0)
        assert o.method == "SIR" and 0 <= o.cor_truth <= 1

    def test_train_stream_ignores_test_size(self):
        c1 = ExperimentConfig(n_test=50, seed=4)
        c2 = ExperimentConfig(n_test=500, seed=4)
        X1 = draw_sample(c1, c1.n_train, rep_rngs(4, 0)[0])[0]
        X2 = draw_sample(c2, c2.n_train, rep_rngs(4, 0)[0])[0]
        assert np.array_equal(X1, X2)

    def test_train_and_test_streams_differ(self):
        tr, te = rep_rngs(5, 0)
        assert not np.array_equal(tr.standard_normal(5), te.standard_normal(5))

    def test_fitter_failure_is_recorded(self):
        # p > n_train makes SIR rank deficient; the kernel methods still run
        cfg = ExperimentConfig(p=30, n_train=25, n_test=40, n_slices=5, n_reps=1, seed=1)
        out = {o.method: o for o in run_replication(cfg, 0)}
        assert out["SIR"].status.startswith("failed: RankDeficiencyError")
        assert math.isnan(out["SIR"].cor_truth)
        assert out["GSIR"].status == "ok"

    def test_config_validation(self):
        with pytest.raises(ParameterError):
            ExperimentConfig(methods=("PCA",))
        with pytest.raises(ParameterError):
            ExperimentConfig(n_reps=0)
        with pytest.raises(ParameterError):
            ExperimentConfig(tuning="gcv", gcv_grid=(0.5, 1.0))


class TestAggregate:
    def test_single_rep(self):
        s = aggregate([RepOutcome(0, "SIR", 0.9, 0.5)])["SIR"]
        assert s.sd_truth == 0 and s.degenerate_sd and s.n_ok == 1

    def test_identical_values(self):
        s = aggregate([RepOutcome(i, "SIR", 0.7, 0.4) for i in range(4)])["SIR"]
        assert s.sd_truth == 0 and s.mean_truth == pytest.approx(0.7) and not s.degenerate_sd

    def test_sample_sd(self):
        s = aggregate([RepOutcome(i, "GSIR", v, v) for i, v in enumerate([0.1, 0.2, 0.6])])["GSIR"]
        assert s.sd_truth == pytest.approx(np.std([0.1, 0.2, 0.6], ddof=1))

    def test_failures_counted(self):
        outs = [RepOutcome(0, "KCCA", 0.8, 0.5), RepOutcome(1, "KCCA", status="failed: x")]
        s = aggregate(outs)["KCCA"]
        assert s.n_ok == 1 and s.n_failed == 1

    def test_no_success(self):
        with pytest.raises(EmptyResultError):
            aggregate([RepOutcome(0, "SIR", status="failed: x")])


class TestExperiment:
    def test_thread_count_does_not_matter(self):
        cfg = ExperimentConfig(setting="S2", law="V3", n_reps=4, seed=21)
        assert run_experiment(cfg, threads=1).raw_csv() == run_experiment(cfg, threads=3).raw_csv()

    def test_csv_layout(self):
        res = run_experiment(ExperimentConfig(n_reps=2, seed=1), threads=1)
        lines = outcomes_csv(res.outcomes).splitlines()
        assert lines[0] == "rep,method,cor_truth,cor_response,status"
        assert len(lines) == 1 + 2 * 4
        assert set(res.summaries) == {"SIR", "KCCA", "KSIR", "GSIR"}

    def test_setting1_sir_row(self, cell):
        s = cell("S1", "V1").summaries["SIR"]
        assert s.mean_truth == pytest.approx(0.952, abs=0.03)
        assert s.mean_response == pytest.approx(0.590, abs=0.06)
        assert s.sd_truth >= 0 and s.n_failed == 0

    def test_row_shape(self, cell):
        res = cell("S1", "V1")
        assert len(res.summaries) == 4
        for s in res.summaries.values():
            assert 0 <= s.mean_truth <= 1 and 0 <= s.mean_response <= 1
            assert s.sd_truth >= 0 and s.sd_response >= 0
