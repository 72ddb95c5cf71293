import math

import numpy as np
import pytest

from selkern import (
    ProblemSpec,
    RunConfig,
    SelectionResult,
    SelectiveReport,
    augment_fake_features,
    benchmark_trials,
    derive_rng,
    gen_logistic,
    gen_mean_shift,
    run_trials,
    tpr_fpr,
)


def test_mean_shift_null_shapes():
    X, Y = gen_mean_shift(50, 7, 0.0, 0, derive_rng(0))
    assert X.shape == Y.shape == (50, 7)


def test_mean_shift_column_means():
    n = 100_000
    _, Y = gen_mean_shift(n, 12, 0.5, 4, derive_rng(1))
    band = 4.0 / np.sqrt(n)
    means = Y.mean(axis=0)
    assert np.abs(means[:4] - 0.5).max() <= band
    assert np.abs(means[4:]).max() <= band


def test_mean_shift_validates_m():
    with pytest.raises(Exception):
        gen_mean_shift(10, 3, 0.5, 4, derive_rng(2))


def test_logistic_balanced_at_zero_score():
    Z = gen_logistic(100_000, 3, 0, derive_rng(3))
    # m = 0: success probability is logistic(0) = 0.5 for every row.
    assert abs(Z.Y.mean() - 0.5) <= 4 * 0.5 / np.sqrt(100_000)


def test_logistic_monotone_in_score():
    Z = gen_logistic(100_000, 12, 10, derive_rng(4))
    score = Z.X[:, :10].sum(axis=1)
    hi = Z.Y[score > 2.0].mean()
    lo = Z.Y[score < -2.0].mean()
    assert hi > lo


def test_logistic_response_is_binary():
    Z = gen_logistic(500, 4, 2, derive_rng(5))
    assert set(np.unique(Z.Y)) <= {0.0, 1.0}


def test_augment_zero_is_copy():
    rng = derive_rng(6)
    X = rng.standard_normal((20, 3))
    out = augment_fake_features(X, 0, rng)
    assert np.array_equal(out, X) and out is not X


def test_augment_width_and_originals():
    rng = derive_rng(7)
    X = rng.standard_normal((30, 4))
    out = augment_fake_features(X, 5, rng)
    assert out.shape == (30, 9)
    assert np.array_equal(out[:, :4], X)


def test_augment_fakes_uncorrelated():
    rng = derive_rng(8)
    X = rng.standard_normal((500, 3))
    out = augment_fake_features(X, 6, rng)
    corr = np.corrcoef(out, rowvar=False)
    cross = corr[:3, 3:]
    assert np.abs(cross).max() < 0.15


def _report(selected, p_values, d):
    scores = np.zeros(d)
    return SelectiveReport(
        method="MultiMMD",
        selection=SelectionResult(selected=tuple(selected), scores=scores),
        feature_names=[f"f{i}" for i in range(d)],
        p_values=list(p_values),
        diagnostics=[{} for _ in selected],
    )


def test_tpr_fpr_worked_example():
    # Selected {1,2,3}; truth positives {1,2}; rejected {1,3}.
    report = _report([1, 2, 3], [0.01, 0.5, 0.01], d=5)
    tpr, fpr = tpr_fpr(report, {1, 2}, alpha=0.05)
    assert tpr == 0.5
    assert fpr == 1.0


def test_tpr_fpr_no_rejections():
    report = _report([1, 2, 3], [0.5, 0.5, 0.5], d=5)
    tpr, fpr = tpr_fpr(report, {1, 2}, alpha=0.05)
    assert tpr == 0.0 and fpr == 0.0


def test_tpr_fpr_undefined_denominator():
    report = _report([0, 1], [0.01, 0.01], d=4)
    tpr, fpr = tpr_fpr(report, {0, 1}, alpha=0.05)
    assert tpr == 1.0
    assert math.isnan(fpr)


def test_run_trials_single_trial_matches_record():
    problem = ProblemSpec(kind="mean-shift", n=60, d=5, shift=0.6, informative=2)
    config = RunConfig(seed=0, k=2, replicates_per_scale=300)
    (summary,) = run_trials(problem, ["multi-mmd"], trials=1, master_seed=5, config=config)
    assert summary.trials == 1
    rec = summary.records[0]
    if not math.isnan(rec["tpr"]):
        assert summary.tpr == rec["tpr"]
    if not math.isnan(rec["fpr"]):
        assert summary.fpr == rec["fpr"]


def test_run_trials_reproducible():
    problem = ProblemSpec(kind="mean-shift", n=60, d=5, shift=0.4, informative=2)
    config = RunConfig(seed=0, k=2, replicates_per_scale=300)
    a = run_trials(problem, ["multi-mmd", "poly-mmd"], 3, master_seed=9, config=config)
    b = run_trials(problem, ["multi-mmd", "poly-mmd"], 3, master_seed=9, config=config)
    for sa, sb in zip(a, b):
        assert sa.records == sb.records
        assert (sa.tpr, sa.fpr) == (sb.tpr, sb.fpr) or (
            math.isnan(sa.tpr) and math.isnan(sb.tpr)
        )


def test_run_trials_null_calibration_smoke():
    problem = ProblemSpec(kind="mean-shift", n=200, d=8, shift=0.0, informative=0)
    config = RunConfig(seed=0, k=4, replicates_per_scale=500)
    summaries = run_trials(problem, ["multi-mmd", "poly-mmd"], 60, master_seed=77, config=config)
    # 3 binomial standard errors around alpha with trials * k null feature tests.
    band = 3 * math.sqrt(0.05 * 0.95 / (60 * 4))
    for s in summaries:
        assert abs(s.fpr - 0.05) <= band + 1e-9, (s.method, s.fpr)


def test_run_trials_rejects_mismatched_method():
    problem = ProblemSpec(kind="mean-shift", n=40, d=4, shift=0.0, informative=0)
    config = RunConfig(seed=0, k=2)
    with pytest.raises(ValueError):
        run_trials(problem, ["multi-hsic"], 1, master_seed=1, config=config)


def test_problem_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(kind="bogus", n=50, d=5)
    with pytest.raises(ValueError):
        ProblemSpec(kind="logistic", n=50, d=5, informative=9)


def test_benchmark_mmd_mode():
    rng = derive_rng(10)
    n_rows = 160
    labels = (rng.random(n_rows) < 0.5).astype(float)
    features = rng.standard_normal((n_rows, 3))
    features[labels == 1, 0] += 1.5  # first column separates the classes
    config = RunConfig(seed=0, k=4, replicates_per_scale=300)
    summaries = benchmark_trials(
        features, labels, "mmd", ["multi-mmd"], trials=3, master_seed=3, config=config, n_fake=4
    )
    s = summaries[0]
    assert s.trials == 3
    assert 0.0 <= s.fpr <= 1.0
    assert all(0 <= i < 7 for rec in s.records for i in rec["selected"])


def test_benchmark_hsic_mode():
    rng = derive_rng(11)
    n_rows = 150
    X = rng.standard_normal((n_rows, 3))
    y = X[:, 0] + 0.3 * rng.standard_normal(n_rows)
    config = RunConfig(seed=0, k=4, replicates_per_scale=300)
    summaries = benchmark_trials(
        X, y, "hsic", ["poly-hsic"], trials=2, master_seed=4, config=config, n_fake=4
    )
    assert summaries[0].trials == 2


def test_benchmark_requires_binary_label():
    rng = derive_rng(12)
    features = rng.standard_normal((30, 2))
    labels = np.arange(30) % 3
    config = RunConfig(seed=0, k=2)
    with pytest.raises(Exception):
        benchmark_trials(features, labels, "mmd", ["multi-mmd"], 1, 0, config)
