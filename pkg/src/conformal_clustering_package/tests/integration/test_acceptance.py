"""
Monte Carlo acceptance checks at desk scale.

These run the shipped experiment and diagnostics configurations (with fewer
replications where the qualitative claim allows) and take minutes, so they
are marked slow and excluded from the default test run: ``pytest -m slow``.
"""

import itertools
import json
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from conformal_clustering_package.align.assignment import (
    Permutation,
    brute_force_assignment,
    solve_assignment,
)
from conformal_clustering_package.clustering.mixture import fit_mixture_em
from conformal_clustering_package.config.config_validator import validate_model
from conformal_clustering_package.config.constants import ClustererKind, MixtureFamily
from conformal_clustering_package.config.run_config import DiagnosticsRunConfig, ExperimentRunConfig
from conformal_clustering_package.config.specs import ClustererSpec
from conformal_clustering_package.conformal.scores import aps_score_matrix, calibration_threshold
from conformal_clustering_package.core.types import Dataset, Labeling, RandomSeed
from conformal_clustering_package.evaluation.coverage import coverage_under, oracle_permutation
from conformal_clustering_package.evaluation.diagnostics import (
    exact_product_l1,
    hellinger_product_bound,
    hellinger_squared,
    replace_one_factors,
    run_diagnostics_sweep,
)
from conformal_clustering_package.simulate.experiment import run_experiment

pytestmark = pytest.mark.slow

CONFIG_DIR = Path(__file__).resolve().parents[4] / "configs"
WORKERS = 4


def _experiment(name: str, tmp_path, **overrides) -> ExperimentRunConfig:
    payload = json.loads((CONFIG_DIR / "experiments" / name).read_text(encoding="utf-8"))
    payload.update({
        "seed": 20240917,
        "tidy_output": str(tmp_path / "tidy.csv"),
        "aggregate_output": str(tmp_path / "aggregate.csv"),
    })
    payload.update(overrides)
    return validate_model(ExperimentRunConfig, payload)


def _by_method(aggregate, column):
    return dict(zip(aggregate["method"], aggregate[column]))


def test_exchangeable_labels_reach_nominal_coverage(tmp_path):
    cfg = _experiment("exchangeable_control.json", tmp_path)
    result = run_experiment(cfg, max_workers=WORKERS)
    coverage = result.aggregate["coverage_mean"].iloc[0]
    assert 0.89 <= coverage <= 0.912
    assert not result.any_invalid


def test_stochastic_labels_cover_and_naive_labels_undercover(tmp_path):
    cfg = _experiment("gmm2d_sigma2_sweep.json", tmp_path, sweep={"parameter": "sigma2", "values": [1.5]})
    result = run_experiment(cfg, max_workers=WORKERS)
    coverage = _by_method(result.aggregate, "coverage_mean")
    size = _by_method(result.aggregate, "set_size_mean")
    assert coverage["stochastic"] >= 0.88
    assert coverage["naive-hard"] <= 0.88
    assert coverage["naive-hard"] < coverage["stochastic"]
    assert size["cutoff"] >= 1.05 * size["stochastic"]


def test_set_size_shrinks_with_sample_size(tmp_path):
    cfg = _experiment("gmm2d_n_sweep.json", tmp_path, methods=["stochastic"], reps=30)
    records = run_experiment(cfg, max_workers=WORKERS).records
    records = records[~records["failed"]]
    assert records["mean_set_size"].nunique() > 1
    rho, p_value = stats.spearmanr(records["n"], records["mean_set_size"])
    assert np.isfinite(rho)
    assert rho < 0
    assert p_value < 0.05


def test_estimation_error_decreases_and_bound_tightens():
    payload = json.loads((CONFIG_DIR / "diagnostics" / "gmm2d_n_grid.json").read_text(encoding="utf-8"))
    payload["seed"] = 20240917
    cfg = validate_model(DiagnosticsRunConfig, payload)
    reports = run_diagnostics_sweep(
        cfg.clusterer, cfg.resolved_generator(), cfg.n_grid, cfg.reps, cfg.alpha, RandomSeed(cfg.seed)
    )
    E = np.array([r.E_hat for r in reports])
    rhs = np.array([r.bound_rhs for r in reports])
    assert stats.spearmanr(cfg.n_grid, E).correlation < 0
    assert E[-1] < E[0]
    assert rhs[-1] > rhs[0]
    assert np.all(rhs <= 1 - cfg.alpha)


def test_fuzziness_trades_coverage_for_set_size(tmp_path):
    cfg = _experiment("fcm_fuzziness_sweep.json", tmp_path)
    aggregate = run_experiment(cfg, max_workers=WORKERS).aggregate
    coverage = dict(zip(aggregate["sweep_value"], aggregate["coverage_mean"]))
    size = dict(zip(aggregate["sweep_value"], aggregate["set_size_mean"]))
    assert coverage[1.4] < coverage[1.7]
    assert size[2.0] > size[1.7]


def test_hellinger_bound_holds_for_refitted_clusterings():
    rng = np.random.default_rng(20240917)
    spec = ClustererSpec(kind=ClustererKind.FCM)
    violations = 0
    for draw in range(200):
        n = int(rng.integers(4, 8))
        K = int(rng.integers(2, 4))
        X = Dataset(rng.normal(scale=3.0, size=(n, 2)))
        P, Q = replace_one_factors(spec, X, rng.normal(scale=3.0, size=2), K, RandomSeed(draw))
        if exact_product_l1(P, Q) > hellinger_product_bound(hellinger_squared(P, Q)) + 1e-9:
            violations += 1
    assert violations == 0


def test_hungarian_matches_exhaustive_assignment():
    rng = np.random.default_rng(7)
    for trial in range(1000):
        K = int(rng.integers(1, 7))
        # small integer costs produce ties, exercising the shared tie-break
        cost = rng.integers(0, 5, size=(K, K)).astype(float) if trial % 2 else rng.normal(size=(K, K))
        fast, exhaustive = solve_assignment(cost), brute_force_assignment(cost)
        assert fast == exhaustive
        assert cost[np.arange(K), fast.mapping].sum() == pytest.approx(cost[np.arange(K), exhaustive.mapping].sum())


def test_oracle_permutation_matches_exhaustive_search():
    rng = np.random.default_rng(8)
    for _ in range(200):
        K = int(rng.integers(2, 7))
        n = int(rng.integers(K, 40))
        membership = rng.random((n, K)) < 0.4
        truth = Labeling(rng.integers(0, K, size=n), K)
        best, best_coverage = None, -1.0
        for mapping in itertools.permutations(range(K)):
            permutation = Permutation(mapping)
            coverage = coverage_under(membership, truth, permutation)
            if coverage > best_coverage:
                best, best_coverage = permutation, coverage
        assert oracle_permutation(membership, truth) == best


def test_aps_sets_are_nonempty_and_nested_in_alpha():
    rng = np.random.default_rng(9)
    calibration = rng.random(200)
    for K in range(2, 8):
        probs = rng.dirichlet(np.full(K, 0.5), size=10_000 // 6)
        scores = aps_score_matrix(probs)
        alphas = np.sort(rng.uniform(0.01, 0.99, size=(probs.shape[0], 2)), axis=1)
        wide = np.array([calibration_threshold(calibration, a) for a in alphas[:, 0]])
        narrow = np.array([calibration_threshold(calibration, a) for a in alphas[:, 1]])
        assert np.all(narrow <= wide)
        wide_sets, narrow_sets = scores <= wide[:, None], scores <= narrow[:, None]
        assert wide_sets.any(axis=1).all()
        assert narrow_sets.any(axis=1).all()
        assert np.all(narrow_sets <= wide_sets)


def test_em_history_is_monotone_on_random_fits():
    rng = np.random.default_rng(10)
    for fit in range(50):
        family = list(MixtureFamily)[fit % len(MixtureFamily)]
        X = Dataset(np.abs(rng.normal(6.0, 2.0, size=(120, 2))) + 0.1)
        model = fit_mixture_em(X, int(rng.integers(1, 4)), RandomSeed(fit), family=family, n_restarts=1)
        assert np.all(np.diff(model.fit_log.history) >= -1e-8)
