from __future__ import annotations

import numpy as np
import pytest

from core.domain.entities.grid_entity import Triad
from core.domain.entities.kernels_entity import VolterraKernels
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.entities.report_entity import EdgeScores, EvaluationReport, TriadEntry
from core.domain.enums.method_enums import Method
from core.domain.schemas.solver_types import SolverConfig
from core.services.exceptions import DegenerateTruth, DimensionMismatch, SingularCovariance
from core.services.features import pair_index
from core.services.grid_model import ground_truth_sets, restrict_to_non_root
from core.services.identify import (
    baseline_concentration,
    baseline_linear_pc,
    edge_labels,
    edge_scores_from_kernels,
    evaluate,
    mann_whitney_auc,
    precision_matrix,
    roc,
    triad_candidates,
    triad_roc,
    triad_scores_from_kernels,
)


def _truth_edges(grid):
    edges, _ = restrict_to_non_root(*ground_truth_sets(grid))
    return edges


def _indicator_scores(n, edges):
    S = np.zeros((n, n))
    for e in edges:
        i, j = sorted(e)
        S[i - 1, j - 1] = S[j - 1, i - 1] = 1.0
    return EdgeScores(matrix=S)


def _random_scores(rng, n, decimals=None):
    S = rng.uniform(size=(n, n))
    if decimals is not None:
        S = np.round(S, decimals)
    S = np.triu(S, 1)
    return EdgeScores(matrix=S + S.T)


# ---------- kernel scores ----------

def test_zero_kernels_give_zero_scores():
    kernels = VolterraKernels.zeros(4)
    assert not np.any(edge_scores_from_kernels(kernels).matrix)
    assert len(triad_scores_from_kernels(kernels)) == 0


def test_edge_score_takes_the_larger_direction():
    R1 = np.zeros((3, 3))
    R1[0, 1] = 0.5
    R1[1, 0] = -0.3
    scores = edge_scores_from_kernels(VolterraKernels(R1=R1, R2=np.zeros((3, 6))))
    assert scores.score(1, 2) == 0.5
    assert scores.score(2, 1) == 0.5
    assert scores.score(1, 3) == 0.0
    np.testing.assert_array_equal(scores.matrix, scores.matrix.T)


def test_triads_are_ranked_and_respect_exclusions():
    n = 4
    R2 = np.zeros((n, n * (n + 1) // 2))
    R2[0, pair_index(1, 2, n)] = -0.2
    R2[3, pair_index(0, 1, n)] = 0.7
    triads = triad_scores_from_kernels(VolterraKernels(R1=np.zeros((n, n)), R2=R2))

    assert [e.triad for e in triads.entries] == [Triad(4, 1, 2), Triad(1, 2, 3)]
    assert triads.entries[0].score == 0.7
    assert triads.entries[1].score == pytest.approx(0.2)
    for e in triads.entries:
        assert e.center not in (e.i, e.j) and e.i < e.j


def test_triad_entry_rejects_center_in_pair():
    with pytest.raises(ValueError):
        TriadEntry(center=2, i=2, j=3, score=1.0)


def test_edge_scores_must_be_symmetric():
    with pytest.raises(ValueError):
        EdgeScores(matrix=[[0.0, 1.0], [0.5, 0.0]])


# ---------- ROC ----------

def test_indicator_scores_give_perfect_auc(random_grid):
    edges = _truth_edges(random_grid)
    curve = roc(_indicator_scores(random_grid.n_buses, edges), edges)
    assert curve.auc == 1.0
    assert curve.positives == len(edges)
    assert curve.positives + curve.negatives == random_grid.n_buses * (random_grid.n_buses - 1) // 2


def test_constant_scores_give_half_auc(chain_grid):
    S = np.ones((3, 3)) - np.eye(3)
    curve = roc(EdgeScores(matrix=S), _truth_edges(chain_grid))
    assert curve.auc == pytest.approx(0.5)


def test_random_scores_average_half(random_grid):
    rng = np.random.default_rng(5)
    edges = _truth_edges(random_grid)
    aucs = [roc(_random_scores(rng, random_grid.n_buses), edges).auc for _ in range(1000)]
    assert 0.45 <= float(np.mean(aucs)) <= 0.55


def test_roc_is_monotone_with_endpoints(random_grid, rng):
    curve = roc(_random_scores(rng, random_grid.n_buses, decimals=1), _truth_edges(random_grid))
    assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0)
    assert (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
    assert np.all(np.diff(curve.fpr) >= 0)
    assert np.all(np.diff(curve.tpr) >= 0)
    assert np.all(np.diff(curve.thresholds) < 0)
    assert np.isfinite(curve.thresholds[0])
    assert 0.0 <= curve.auc <= 1.0


@pytest.mark.parametrize("seed", range(5))
def test_auc_equals_pair_counting(seed, random_grid):
    rng = np.random.default_rng(seed)
    # few distinct values so ties occur
    scores = _random_scores(rng, random_grid.n_buses, decimals=1)
    edges = _truth_edges(random_grid)
    y_true, y_score = edge_labels(scores, edges)

    pos, neg = y_score[y_true], y_score[~y_true]
    diff = pos[:, None] - neg[None, :]
    counted = (np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size

    assert roc(scores, edges).auc == pytest.approx(counted, abs=1e-12)
    assert mann_whitney_auc(y_true, y_score) == pytest.approx(counted, abs=1e-12)


def test_degenerate_truth(chain_grid):
    scores = EdgeScores(matrix=np.ones((3, 3)) - np.eye(3))
    with pytest.raises(DegenerateTruth):
        roc(scores, set())
    with pytest.raises(DegenerateTruth):
        roc(scores, {frozenset((1, 2)), frozenset((1, 3)), frozenset((2, 3))})


def test_triad_roc_counts_every_candidate(star_grid):
    _, triads = restrict_to_non_root(*ground_truth_sets(star_grid))
    n = star_grid.n_buses
    report = triad_scores_from_kernels(VolterraKernels.zeros(n))
    curve = triad_roc(report, triads)
    assert curve.positives == len(triads)
    assert curve.positives + curve.negatives == len(triad_candidates(n)) == n * (n - 1) * (n - 2) // 2
    assert curve.auc == pytest.approx(0.5)
    assert curve.supplementary


# ---------- linear baselines ----------

def test_pc_independent_buses_are_near_zero():
    rng = np.random.default_rng(11)
    V = 1.0 + 0.01 * rng.standard_normal((2000, 2))
    assert baseline_linear_pc(VoltageSeries(V=V)).score(1, 2) < 0.2


def test_pc_near_collinear_buses():
    rng = np.random.default_rng(12)
    v1 = 1.0 + 0.01 * rng.standard_normal(500)
    v2 = v1 + 0.001 * rng.standard_normal(500)
    v3 = 1.0 + 0.01 * rng.standard_normal(500)
    scores = baseline_linear_pc(VoltageSeries(V=np.column_stack([v1, v2, v3])))
    assert scores.score(1, 2) > 0.9


def test_pc_permutes_with_bus_order(white_series):
    perm = np.array([2, 0, 3, 1])
    base = baseline_linear_pc(white_series).matrix
    permuted = baseline_linear_pc(VoltageSeries(V=white_series.V[:, perm])).matrix
    np.testing.assert_allclose(permuted, base[np.ix_(perm, perm)], rtol=1e-8)


def test_pc_ranking_is_scale_invariant(rng):
    V = 1.0 + 0.01 * rng.standard_normal((300, 5))
    V[:, 1] += 0.5 * (V[:, 0] - 1.0)
    V[:, 3] += 0.3 * (V[:, 2] - 1.0)
    mean = V.mean(axis=0)
    scaled = mean + 3.0 * (V - mean)

    def ranking(series):
        return np.argsort([s for _, _, s in baseline_linear_pc(series).candidates()])

    np.testing.assert_array_equal(ranking(VoltageSeries(V=V)), ranking(VoltageSeries(V=scaled)))


def test_concentration_differs_from_pc_by_normalization(white_series):
    K = precision_matrix(white_series)
    pc = baseline_linear_pc(white_series).matrix
    conc = baseline_concentration(white_series).matrix
    norm = np.sqrt(np.outer(np.diag(K), np.diag(K)))
    off = ~np.eye(4, dtype=bool)
    np.testing.assert_allclose(conc[off], (pc * norm)[off], rtol=1e-10)


def test_concentration_of_independent_buses_is_small_relative_to_diagonal(white_series):
    K = precision_matrix(white_series)
    conc = baseline_concentration(white_series).matrix
    assert np.max(conc) < 0.3 * np.min(np.diag(K))


def test_singular_covariance_without_ridge(rng):
    v = 1.0 + 0.01 * rng.standard_normal((200, 2))
    V = np.column_stack([v, v[:, 0]])
    with pytest.raises(SingularCovariance):
        baseline_linear_pc(VoltageSeries(V=V), ridge=False)

    scores = baseline_concentration(VoltageSeries(V=V))
    assert np.all(np.isfinite(scores.matrix))
    np.testing.assert_array_equal(scores.matrix, scores.matrix.T)


# ---------- evaluate ----------

def test_evaluate_report_round_trips(chain_grid, rng):
    series = VoltageSeries(V=1.0 + 0.01 * rng.standard_normal((120, 3)))
    report = evaluate(chain_grid, series, SolverConfig(lam=1e-6, mu=1e-6))

    assert set(report.rocs) == {m.value for m in Method}
    assert report.triad_roc is not None
    assert report.triad_roc.positives == 1
    assert len(report.diagnostics) == 3
    assert all(0.0 <= a <= 1.0 for a in report.auc.values())

    restored = EvaluationReport.model_validate_json(report.model_dump_json())
    assert restored.auc == report.auc
    assert restored.rocs == report.rocs
    assert restored.triads == report.triads
    np.testing.assert_array_equal(restored.scores_for("pc").matrix, report.scores_for("pc").matrix)


def test_evaluate_baselines_only(chain_grid, rng):
    series = VoltageSeries(V=1.0 + 0.01 * rng.standard_normal((50, 3)))
    report = evaluate(chain_grid, series, methods=["pc"])
    assert list(report.rocs) == ["pc"]
    assert report.triad_roc is None
    assert report.diagnostics == []
    assert report.auc_table()["supplementary"] == {}


def test_evaluate_bus_count_mismatch(chain_grid, white_series):
    with pytest.raises(DimensionMismatch):
        evaluate(chain_grid, white_series)
