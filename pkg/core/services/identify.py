"""
Topology and higher-order interaction reports from estimated kernels, ROC / AUC against
ground truth, and the linear partial-correlation / concentration-matrix baselines.

Bus positions are 0-based in matrices and 1-based in reports; the root never appears.
"""
from __future__ import annotations

import logging
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import mannwhitneyu
from sklearn.covariance import empirical_covariance
from sklearn.metrics import auc, roc_curve

from core.domain.entities.grid_entity import RadialGrid, Triad
from core.domain.entities.kernels_entity import VolterraKernels
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.entities.report_entity import EdgeScores, EvaluationReport, RocCurve, TriadEntry, TriadScores
from core.domain.enums.method_enums import Method
from core.domain.schemas.solver_types import SolverConfig
from core.services.exceptions import DegenerateTruth, DimensionMismatch, SingularCovariance
from core.services.features import pair_positions
from core.services.grid_model import ground_truth_sets, restrict_to_non_root
from core.services.solver import solve_all

logger = logging.getLogger(__name__)

COND_LIMIT = 1e12
RIDGE_SCALE = 1e-8


# ---------- scores from kernels ----------

def edge_scores_from_kernels(kernels: VolterraKernels) -> EdgeScores:
    """score(i, j) = max(|R1[i, j]|, |R1[j, i]|)."""
    mag = np.abs(kernels.R1)
    sym = np.maximum(mag, mag.T)
    np.fill_diagonal(sym, 0.0)
    return EdgeScores(method=Method.VOLTERRA, matrix=sym)


def triad_scores_from_kernels(kernels: VolterraKernels, atol: float = 0.0) -> TriadScores:
    """score(n; {i, j}) = |R2[n, (i, j)]| for every entry above `atol`, excluded pairs skipped."""
    n = kernels.n_buses
    rows, cols = pair_positions(n)
    entries = []
    for b, k in np.argwhere(np.abs(kernels.R2) > atol):
        i, j = int(rows[k]), int(cols[k])
        if i == j or b in (i, j):
            continue
        entries.append(TriadEntry(center=int(b) + 1, i=i + 1, j=j + 1, score=abs(float(kernels.R2[b, k]))))
    entries.sort(key=lambda e: (-e.score, e.center, e.i, e.j))
    return TriadScores(n_buses=n, entries=entries)


# ---------- ROC / AUC ----------

def _roc_from_labels(
    y_true: np.ndarray,
    y_score: np.ndarray,
    method: str,
    supplementary: bool = False,
) -> RocCurve:
    positives = int(np.count_nonzero(y_true))
    negatives = int(y_true.shape[0] - positives)
    if positives == 0 or negatives == 0:
        raise DegenerateTruth(positives, negatives)

    fpr, tpr, thresholds = roc_curve(y_true, y_score, drop_intermediate=False)
    thresholds = np.asarray(thresholds, dtype=float)
    if not np.isfinite(thresholds[0]):
        thresholds[0] = float(np.max(y_score)) + 1.0
    return RocCurve(
        method=str(method),
        thresholds=thresholds.tolist(),
        fpr=fpr.tolist(),
        tpr=tpr.tolist(),
        auc=float(auc(fpr, tpr)),
        positives=positives,
        negatives=negatives,
        supplementary=supplementary,
    )


def edge_labels(scores: EdgeScores, truth: Iterable[frozenset]) -> tuple[np.ndarray, np.ndarray]:
    truth = set(truth)
    cand = scores.candidates()
    y_true = np.array([frozenset((i, j)) in truth for i, j, _ in cand], dtype=bool)
    y_score = np.array([s for _, _, s in cand], dtype=float)
    return y_true, y_score


def roc(scores: EdgeScores, truth: Iterable[frozenset], method: Optional[str] = None) -> RocCurve:
    """
    Edge ROC over the N(N-1)/2 candidate pairs, thresholds at every distinct score,
    AUC by the trapezoid rule.
    """
    y_true, y_score = edge_labels(scores, truth)
    return _roc_from_labels(y_true, y_score, method or scores.method)


def triad_candidates(n_buses: int) -> list[Triad]:
    return [
        Triad(center, i, j)
        for center in range(1, n_buses + 1)
        for i, j in combinations([b for b in range(1, n_buses + 1) if b != center], 2)
    ]


def triad_roc(triads: TriadScores, truth: Iterable[Triad]) -> RocCurve:
    """
    ROC over every (center; {i, j}) of non-root buses; unreported triads score 0.
    """
    truth = {Triad(*t) for t in truth}
    scored = triads.as_dict()
    cand = triad_candidates(triads.n_buses)
    y_true = np.array([t in truth for t in cand], dtype=bool)
    y_score = np.array([scored.get(t, 0.0) for t in cand], dtype=float)
    return _roc_from_labels(y_true, y_score, "volterra_triads", supplementary=True)


def mann_whitney_auc(y_true: Sequence[bool], y_score: Sequence[float]) -> float:
    """
    P(score of a random positive > score of a random negative), ties counted 1/2.
    """
    y_true = np.asarray(y_true, dtype=bool)
    y_score = np.asarray(y_score, dtype=float)
    pos, neg = y_score[y_true], y_score[~y_true]
    if pos.size == 0 or neg.size == 0:
        raise DegenerateTruth(int(pos.size), int(neg.size))
    res = mannwhitneyu(pos, neg, alternative="two-sided", method="asymptotic")
    return float(res.statistic) / (pos.size * neg.size)


# ---------- linear baselines ----------

def precision_matrix(series: VoltageSeries, ridge: bool = True) -> np.ndarray:
    """
    Inverse sample covariance of the bus series. A ridge of RIDGE_SCALE * trace / N is added
    when the condition number exceeds COND_LIMIT; with `ridge=False` that raises instead.
    """
    cov = empirical_covariance(series.V)
    cond = float(np.linalg.cond(cov))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        if not ridge:
            raise SingularCovariance(cond)
        trace = float(np.trace(cov))
        delta = RIDGE_SCALE * trace / cov.shape[0] if trace > 0 else RIDGE_SCALE
        logger.warning("Covariance ill-conditioned (cond=%.3e), adding ridge %.3e", cond, delta)
        cov = cov + delta * np.eye(cov.shape[0])
    K = np.linalg.inv(cov)
    return 0.5 * (K + K.T)


def baseline_linear_pc(series: VoltageSeries, ridge: bool = True) -> EdgeScores:
    """score(i, j) = |K_ij| / sqrt(K_ii K_jj)."""
    K = precision_matrix(series, ridge)
    d = np.sqrt(np.abs(np.diag(K)))
    S = np.abs(K) / np.outer(d, d)
    np.fill_diagonal(S, 0.0)
    return EdgeScores(method=Method.PC, matrix=S)


def baseline_concentration(series: VoltageSeries, ridge: bool = True) -> EdgeScores:
    """score(i, j) = |K_ij|."""
    S = np.abs(precision_matrix(series, ridge))
    np.fill_diagonal(S, 0.0)
    return EdgeScores(method=Method.CONCENTRATION, matrix=S)


# ---------- experiment ----------

def evaluate(
    grid: RadialGrid,
    series: VoltageSeries,
    cfg: Optional[SolverConfig] = None,
    methods: Sequence[Method | str] = tuple(Method),
    jobs: int = 1,
    ridge: bool = True,
    kernels: Optional[VolterraKernels] = None,
) -> EvaluationReport:
    """
    Run the requested methods on the same series and score them against the grid.
    Precomputed `kernels` replace the Volterra solve (no solver diagnostics then).

    The Volterra method additionally reports its triads and, when the grid has both
    true and false triads, a supplementary triad ROC.
    """
    if series.n_buses != grid.n_buses:
        raise DimensionMismatch("series buses", grid.n_buses, series.n_buses)

    edges, true_triads = restrict_to_non_root(*ground_truth_sets(grid))
    rocs, edge_scores = {}, {}
    triads: list[TriadEntry] = []
    t_roc = None
    diagnostics: list[dict] = []

    for method in [Method(m) for m in methods]:
        if method == Method.VOLTERRA:
            if kernels is None:
                result = solve_all(series, cfg=cfg, jobs=jobs)
                kernels = result.kernels
                diagnostics = result.diagnostics(include_trace=False)
            elif kernels.n_buses != grid.n_buses:
                raise DimensionMismatch("kernel buses", grid.n_buses, kernels.n_buses)
            scores = edge_scores_from_kernels(kernels)
            triad_scores = triad_scores_from_kernels(kernels)
            triads = list(triad_scores.entries)
            try:
                t_roc = triad_roc(triad_scores, true_triads)
            except DegenerateTruth as exc:
                logger.info("Triad ROC skipped: %s", exc)
        elif method == Method.PC:
            scores = baseline_linear_pc(series, ridge)
        else:
            scores = baseline_concentration(series, ridge)

        curve = roc(scores, edges, method)
        rocs[str(method)] = curve
        edge_scores[str(method)] = scores.matrix.tolist()
        logger.info("%s AUC=%.4f", method, curve.auc)

    return EvaluationReport(
        n_buses=grid.n_buses,
        n_slots=series.n_slots,
        rocs=rocs,
        triad_roc=t_roc,
        edge_scores=edge_scores,
        triads=triads,
        diagnostics=diagnostics,
    )
