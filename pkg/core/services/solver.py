"""
Per-bus sparse-group regressions of the self-driven graph Volterra model.

For bus n the regression target is v_n(t) and the design holds every admissible
first-order and pair feature. Excluded columns (the bus itself, pairs containing
it, squares) never enter the problem, so their coefficients are exact zeros.

Row groups of R_n overlap on pair columns. Each pair column is therefore
duplicated into the two groups it belongs to and the coefficient is the sum of
the copies, which keeps the groups disjoint and the proximal step exact.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import lars_path

from core.domain.entities.kernels_entity import FeatureMatrix, VolterraKernels
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.enums.solver_enums import HierarchyRule, SelectionCriterion, SolveStatus, StepPolicy
from core.domain.schemas.solver_types import (
    BusProblem,
    BusSolution,
    ColumnId,
    IdentificationResult,
    SolverConfig,
)
from core.services.exceptions import (
    BusSolveError,
    ConfigError,
    DimensionMismatch,
    GridVolterraError,
    IllConditionedWarning,
)
from core.services.features import (
    assemble_stacked,
    build_feature_matrix,
    hierarchy_violations,
    pair_index,
    pair_positions,
    structural_violations,
)

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 500
RESTART_SLACK = 1e-12


# ---------- problem construction ----------

class _Layout(NamedTuple):
    rows: np.ndarray
    colmap: Tuple[ColumnId, ...]
    groups: Tuple[np.ndarray, ...]
    group_buses: Tuple[int, ...]


@lru_cache(maxsize=256)
def _layout(n_buses: int, bus: int) -> _Layout:
    """
    Feature rows (positions in M) kept for `bus` and the row groups over them.
    """
    p = bus - 1
    first = np.array([i for i in range(n_buses) if i != p], dtype=int)
    rows, cols = pair_positions(n_buses)
    pair_k = np.flatnonzero((rows != cols) & (rows != p) & (cols != p))
    pr, pc = rows[pair_k], cols[pair_k]

    colmap = tuple(ColumnId(int(i)) for i in first) + tuple(
        ColumnId(int(i), int(j)) for i, j in zip(pr, pc)
    )
    n_first = len(first)
    groups = []
    for c, i in enumerate(first):
        members = np.concatenate(([c], n_first + np.flatnonzero((pr == i) | (pc == i)))).astype(int)
        members.setflags(write=False)
        groups.append(members)

    feature_rows = np.concatenate((first, n_buses + pair_k)).astype(int)
    feature_rows.setflags(write=False)
    return _Layout(feature_rows, colmap, tuple(groups), tuple(int(i) + 1 for i in first))


def _problem(y_raw: np.ndarray, M: np.ndarray, n_buses: int, bus: int) -> BusProblem:
    layout = _layout(n_buses, bus)
    F = np.asarray(M[layout.rows].T, dtype=float)
    y = np.asarray(y_raw, dtype=float)

    A_mean = F.mean(axis=0) if F.shape[0] else np.zeros(F.shape[1])
    y_mean = float(y.mean()) if y.shape[0] else 0.0
    A = F - A_mean
    # constant columns / target are exactly zero after centering
    if A.shape[0]:
        A[:, np.ptp(F, axis=0) == 0.0] = 0.0
    yc = y - y_mean
    if y.shape[0] and np.ptp(y) == 0.0:
        yc = np.zeros_like(y)

    return BusProblem(
        bus=bus,
        n_buses=n_buses,
        y=yc,
        A=A,
        colmap=list(layout.colmap),
        groups=list(layout.groups),
        group_buses=list(layout.group_buses),
        y_mean=y_mean,
        A_mean=A_mean,
    )


def build_problem(series: VoltageSeries, M: FeatureMatrix, n: int) -> BusProblem:
    """
    Centered regression of bus n (1-based) on its admissible columns.
    """
    if M.n_buses != series.n_buses:
        raise DimensionMismatch("feature buses", series.n_buses, M.n_buses)
    if M.n_slots != series.n_slots:
        raise DimensionMismatch("feature slots", series.n_slots, M.n_slots)
    if not 1 <= n <= series.n_buses:
        raise DimensionMismatch("bus", f"1..{series.n_buses}", n)
    return _problem(series.V[:, n - 1], M.M, series.n_buses, n)


# ---------- proximal operator ----------

class GroupPartition(NamedTuple):
    """
    Contiguous, non-empty, disjoint groups covering a coefficient vector.
    """

    starts: np.ndarray
    sizes: np.ndarray

    @classmethod
    def from_slices(cls, groups: Sequence[slice]) -> "GroupPartition":
        starts = np.array([g.start for g in groups], dtype=int)
        sizes = np.array([g.stop - g.start for g in groups], dtype=int)
        return cls(starts, sizes)

    def norms(self, x: np.ndarray) -> np.ndarray:
        if self.starts.size == 0:
            return np.zeros(0)
        return np.sqrt(np.add.reduceat(x * x, self.starts))

    def expand(self, per_group: np.ndarray) -> np.ndarray:
        return np.repeat(per_group, self.sizes)


def _soft(z: np.ndarray, thr: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - thr, 0.0)


def prox_sparse_group(
    z,
    lam_step: float,
    mu_step: float,
    groups: Union[GroupPartition, Sequence] = (),
) -> np.ndarray:
    """
    Prox of lam * ||x||_1 + mu * sum_g ||x_g||_2 for disjoint groups:
    elementwise soft-threshold by lam_step, then block shrinkage max(0, 1 - mu_step / ||x_g||).
    `groups` is a GroupPartition or a sequence of slices / index arrays.
    """
    if lam_step < 0 or mu_step < 0:
        raise ValueError("prox thresholds must be >= 0")
    x = _soft(np.asarray(z, dtype=float), lam_step)
    if mu_step == 0:
        return x

    if isinstance(groups, GroupPartition):
        norms = groups.norms(x)
        safe = np.where(norms > 0, norms, 1.0)
        factor = np.where(norms > mu_step, 1.0 - mu_step / safe, 0.0)
        return x * groups.expand(factor)

    for g in groups:
        nrm = float(np.linalg.norm(x[g]))
        x[g] = 0.0 if nrm <= mu_step else x[g] * (1.0 - mu_step / nrm)
    return x


def penalty(w: np.ndarray, lam: float, mu: float, partition: GroupPartition) -> float:
    return float(lam * np.sum(np.abs(w)) + mu * np.sum(partition.norms(w)))


def optimality_residual(
    grad: np.ndarray,
    w: np.ndarray,
    lam: float,
    mu: float,
    partition: GroupPartition,
) -> float:
    """
    Euclidean distance from -grad to the subdifferential of the sparse-group penalty at w.
    """
    norms = partition.norms(w)
    out = 0.0
    for g, (start, size) in enumerate(zip(partition.starts, partition.sizes)):
        sl = slice(int(start), int(start + size))
        gg, ww = grad[sl], w[sl]
        if norms[g] > 0:
            r = np.where(
                ww != 0,
                gg + lam * np.sign(ww) + mu * ww / norms[g],
                np.maximum(np.abs(gg) - lam, 0.0),
            )
            out += float(r @ r)
        else:
            out += max(float(np.linalg.norm(_soft(gg, lam))) - mu, 0.0) ** 2
    return float(np.sqrt(out))


# ---------- accelerated proximal gradient ----------

def lipschitz_estimate(A: np.ndarray, n_iter: int = 20) -> float:
    """
    Power-iteration estimate of 2 ||A^T A||_2, the gradient Lipschitz constant of ||y - A w||^2.
    """
    if A.size == 0:
        return 0.0
    x = np.random.default_rng(0).standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(n_iter):
        u = A.T @ (A @ x)
        est = float(np.linalg.norm(u))
        if est == 0.0:
            return 0.0
        x = u / est
    return 2.0 * est


def lambda_max(problem: BusProblem) -> float:
    """Smallest l1 weight (mu = 0) with an all-zero solution: 2 ||A^T y||_inf."""
    if problem.dim == 0:
        return 0.0
    return float(2.0 * np.max(np.abs(problem.A.T @ problem.y)))


def _zero_solution(problem: BusProblem, lam: float, mu: float) -> BusSolution:
    n_latent = len(problem.latent_columns)
    return BusSolution(
        bus=problem.bus,
        theta=np.zeros(problem.dim),
        latent=np.zeros(n_latent),
        objective=[float(problem.y @ problem.y)],
        status=SolveStatus.CONVERGED,
        iterations=0,
        optimality=0.0,
        lam=lam,
        mu=mu,
    )


def _fista(
    problem: BusProblem,
    lam: float,
    mu: float,
    cfg: SolverConfig,
    init: Optional[np.ndarray] = None,
) -> BusSolution:
    A = problem.latent_design
    b = problem.y
    partition = GroupPartition.from_slices(problem.latent_groups)

    L = lipschitz_estimate(A, cfg.power_iters)
    if L == 0.0:
        return _zero_solution(problem, lam, mu)

    backtrack = StepPolicy(cfg.step) == StepPolicy.BACKTRACKING
    w = np.zeros(A.shape[1]) if init is None else np.array(init, dtype=float)
    r_w = b - A @ w
    F_w = float(r_w @ r_w) + penalty(w, lam, mu, partition)
    trace = [F_w]

    zk, t = w.copy(), 1.0
    plain = True
    status = SolveStatus.MAX_ITER
    cert = float("nan")
    it = 0

    for it in range(1, cfg.max_iter + 1):
        r_z = b - A @ zk
        f_z = float(r_z @ r_z)
        grad_z = -2.0 * (A.T @ r_z)

        while True:
            w_new = prox_sparse_group(zk - grad_z / L, lam / L, mu / L, partition)
            r_new = b - A @ w_new
            f_new = float(r_new @ r_new)
            if not backtrack:
                break
            d = w_new - zk
            dd = float(d @ d)
            if dd == 0.0 or f_new <= f_z + float(grad_z @ d) + 0.5 * L * dd + 1e-15 * abs(f_z):
                break
            L *= 2.0

        F_new = f_new + penalty(w_new, lam, mu, partition)
        if F_new > F_w + RESTART_SLACK * abs(F_w):
            # a plain step that still increases the objective means the step is too long
            if plain:
                L *= 2.0
            zk, t, plain = w.copy(), 1.0, True
            continue

        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
        zk = w_new + ((t - 1.0) / t_next) * (w_new - w)
        rel = abs(F_w - F_new) / max(abs(F_w), np.finfo(float).tiny)
        w, r_w, F_w, t, plain = w_new, r_new, F_new, t_next, False
        trace.append(F_w)

        if it % PROGRESS_EVERY == 0:
            logger.debug("bus %d iter %d objective=%.6e rel=%.3e L=%.3e", problem.bus, it, F_w, rel, L)

        if rel <= cfg.tol:
            grad = -2.0 * (A.T @ r_w)
            cert = optimality_residual(grad, w, lam, mu, partition)
            if cert <= cfg.opt_tol * (1.0 + float(np.linalg.norm(grad))):
                status = SolveStatus.CONVERGED
                break

    if status == SolveStatus.MAX_ITER:
        grad = -2.0 * (A.T @ r_w)
        cert = optimality_residual(grad, w, lam, mu, partition)
        logger.warning(
            "bus %d stopped at max_iter=%d (certificate=%.3e)", problem.bus, cfg.max_iter, cert
        )

    return BusSolution(
        bus=problem.bus,
        theta=problem.theta_from_latent(w),
        latent=w,
        objective=trace,
        status=status,
        iterations=it,
        optimality=cert,
        lam=lam,
        mu=mu,
    )


def solve_bus(
    problem: BusProblem,
    cfg: SolverConfig,
    init: Optional[np.ndarray] = None,
) -> BusSolution:
    """
    Minimize ||y - A theta||^2 + lam ||w||_1 + mu sum_g ||w_g||_2 over the latent copies w of theta.

    Accelerated proximal gradient with momentum restart on objective increase; the step starts at
    1 / L_hat and backtracks unless `cfg.step` is fixed. A MaxIter solution carries the best iterate;
    call `raise_for_status()` to turn it into MaxIterExceeded.
    """
    if problem.dim == 0:
        return _zero_solution(problem, cfg.lam, cfg.mu)
    return _fista(problem, cfg.lam, cfg.mu, cfg, init)


# ---------- regularization sweep ----------

RSS_FLOOR = 1e-12
HOLDOUT_SEED = 20231


def lambda_path(lam_hi: float, cfg: SolverConfig) -> np.ndarray:
    if lam_hi <= 0:
        return np.zeros(1)
    return lam_hi * np.geomspace(1.0, cfg.ratio_min, cfg.n_lambda)


def _standardized(X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Columns scaled to unit norm and the indices of the non-constant ones."""
    scale = np.linalg.norm(X, axis=0)
    keep = np.flatnonzero(scale > 0)
    return X[:, keep] / scale[keep], keep


def entry_order(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Columns of X in the order they first become active along the lasso path of ||y - X b||^2 + lam ||b||_1,
    with the weight lam at which each one enters.
    """
    if X.shape[1] == 0 or not np.any(y):
        return np.zeros(0, dtype=int), np.zeros(0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        alphas, _, coefs = lars_path(X, y, method="lasso")
    active = coefs != 0.0
    entered = np.flatnonzero(active.any(axis=1))
    first = np.argmax(active[entered], axis=1)
    order = entered[np.argsort(first, kind="stable")]
    # lars_path scales the squared loss by 1 / (2 T)
    return order, 2.0 * X.shape[0] * alphas[np.sort(first)]


def _refit(A: np.ndarray, y: np.ndarray, cols: np.ndarray) -> Tuple[np.ndarray, float]:
    if cols.size == 0:
        return np.zeros(0), float(y @ y)
    beta, *_ = np.linalg.lstsq(A[:, cols], y, rcond=None)
    r = y - A[:, cols] @ beta
    return beta, float(r @ r)


def ebic(rss: float, T: int, sizes: Sequence[Tuple[int, int]], gamma: float, floor: float = 0.0) -> float:
    """
    Extended BIC of a least-squares fit: T log(rss / T) + k log T + 2 gamma log C(p, k),
    summed over the (p, k) blocks the support was drawn from.
    """
    k = sum(kb for _, kb in sizes)
    log_comb = sum(gammaln(p + 1) - gammaln(kb + 1) - gammaln(p - kb + 1) for p, kb in sizes)
    return float(T * np.log(max(rss, floor, np.finfo(float).tiny) / T) + k * np.log(T) + 2.0 * gamma * log_comb)


def _pair_candidates(problem: BusProblem, support: np.ndarray, rule: HierarchyRule) -> np.ndarray:
    chosen = {problem.colmap[c].i for c in support}
    out = []
    for c, col in enumerate(problem.colmap):
        if not col.is_pair:
            continue
        hits = (col.i in chosen) + (col.j in chosen)
        if hits == 2 or (rule == HierarchyRule.WEAK and hits == 1):
            out.append(c)
    return np.array(out, dtype=int)


def _pair_stage(
    problem: BusProblem,
    support: np.ndarray,
    cfg: SolverConfig,
    n_first: int,
    n_pairs: int,
    floor: float,
) -> Tuple[float, np.ndarray, float]:
    """
    Best pair extension of a first-order support: (score, columns, entry weight of the last pair).

    Candidate pair columns are projected off the first-order support before ordering, so the
    order reflects what the products add beyond the linear terms.
    """
    A, y, T = problem.A, problem.y, problem.n_slots
    _, rss = _refit(A, y, support)
    best = (ebic(rss, T, [(n_first, support.size)], cfg.ebic_gamma, floor), support, 0.0)

    room = T - 2 - support.size
    cands = _pair_candidates(problem, support, HierarchyRule(cfg.hierarchy))
    if room <= 0 or cands.size == 0:
        return best

    P = A[:, cands]
    if support.size:
        Q, _ = np.linalg.qr(A[:, support])
        P = P - Q @ (Q.T @ P)
        r = y - Q @ (Q.T @ y)
    else:
        r = y
    # products the linear terms already explain are dropped
    raw = np.linalg.norm(A[:, cands], axis=0)
    P[:, np.linalg.norm(P, axis=0) <= 1e-10 * np.maximum(raw, np.finfo(float).tiny)] = 0.0
    Z, keep = _standardized(P)
    order, weights = entry_order(Z, r)
    order = cands[keep[order]]

    for m in range(1, min(order.size, room) + 1):
        cols = np.concatenate((support, order[:m]))
        _, rss = _refit(A, y, cols)
        score = ebic(rss, T, [(n_first, support.size), (n_pairs, m)], cfg.ebic_gamma, floor)
        if score < best[0]:
            best = (score, cols, float(weights[m - 1]))
    return best


def _ebic_select(problem: BusProblem, cfg: SolverConfig) -> BusSolution:
    """
    Two-stage selection: first-order columns in standardized lasso entry order, nested supports
    scored by EBIC; each support near the best one is then extended by pair columns of its own
    buses (the hierarchy rule) and the joint support is refit by least squares.
    """
    A, y, T = problem.A, problem.y, problem.n_slots
    first = np.array([c for c, col in enumerate(problem.colmap) if not col.is_pair], dtype=int)
    n_pairs = problem.dim - first.size
    floor = RSS_FLOOR * float(y @ y)

    Z, keep = _standardized(A[:, first])
    order, weights = entry_order(Z, y)
    order = first[keep[order]]
    limit = min(order.size, T - 2)

    scores = [ebic(_refit(A, y, order[:k])[1], T, [(first.size, k)], cfg.ebic_gamma, floor) for k in range(limit + 1)]
    k1 = int(np.argmin(scores))

    best: Optional[Tuple[float, np.ndarray, float, float]] = None
    for k in range(max(0, k1 - 2), min(limit, k1 + 2) + 1):
        score, cols, mu = _pair_stage(problem, order[:k], cfg, first.size, n_pairs, floor)
        lam = float(weights[k - 1]) if k else float(2.0 * np.max(np.abs(Z.T @ y), initial=0.0))
        if best is None or score < best[0]:
            best = (score, cols, lam, mu)

    _, cols, lam, mu = best
    beta, rss = _refit(A, y, cols)
    theta = np.zeros(problem.dim)
    theta[cols] = beta
    grad = -2.0 * (A[:, cols].T @ (y - A[:, cols] @ beta)) if cols.size else np.zeros(0)

    # one latent copy per column carries the coefficient
    latent = np.zeros(problem.latent_columns.size)
    _, first_copy = np.unique(problem.latent_columns, return_index=True)
    latent[first_copy] = theta[problem.latent_columns[first_copy]]

    n_lin = int(np.isin(cols, first).sum())
    logger.debug(
        "bus %d ebic picked %d first-order and %d pair columns (lambda=%.3e mu=%.3e rss=%.3e)",
        problem.bus, n_lin, int(cols.size) - n_lin, lam, mu, rss,
    )
    return BusSolution(
        bus=problem.bus,
        theta=theta,
        latent=latent,
        objective=[rss],
        status=SolveStatus.CONVERGED,
        iterations=int(order.size),
        optimality=float(np.linalg.norm(grad)),
        lam=lam,
        mu=mu,
    )


def _holdout_select(y_raw: np.ndarray, M: np.ndarray, n_buses: int, bus: int, cfg: SolverConfig) -> BusSolution:
    """
    Pick (lam, mu = mu_ratio * lam) by holdout error, then refit on the whole series.

    The holdout is a random holdout_fraction of the slots (seeded per bus); the path runs from
    lam_max down with warm starts. Ties keep the larger weight.
    """
    T = y_raw.shape[0]
    n_val = max(1, int(round(cfg.holdout_fraction * T)))
    if T - n_val < 2:
        raise ConfigError(f"regularization sweep needs more time slots (T={T})", field="sweep")
    val = np.zeros(T, dtype=bool)
    val[np.random.default_rng(HOLDOUT_SEED + bus).choice(T, n_val, replace=False)] = True

    fit = _problem(y_raw[~val], M[:, ~val], n_buses, bus)
    full = _problem(y_raw, M, n_buses, bus)
    if fit.dim == 0:
        return _zero_solution(full, 0.0, 0.0)

    A_val = M[_layout(n_buses, bus).rows][:, val].T
    y_val = y_raw[val]

    best: Optional[Tuple[float, float, float, np.ndarray]] = None
    w = None
    for lam in lambda_path(lambda_max(fit), cfg):
        mu = cfg.mu_ratio * float(lam)
        sol = _fista(fit, float(lam), mu, cfg, w)
        w = sol.latent
        err = float(np.mean((fit.predict(sol.theta, A_val) - y_val) ** 2))
        if best is None or err < best[0]:
            best = (err, float(lam), mu, w)

    _, lam, mu, w0 = best
    logger.debug("bus %d sweep picked lambda=%.3e mu=%.3e (holdout mse=%.3e)", bus, lam, mu, best[0])
    return _fista(full, lam, mu, cfg, w0)


def sweep_bus(y_raw: np.ndarray, M: np.ndarray, n_buses: int, bus: int, cfg: SolverConfig) -> BusSolution:
    """
    Model selection for one bus by `cfg.criterion`; lam / mu of the result are the selected weights.
    """
    T = y_raw.shape[0]
    if T < 3:
        raise ConfigError(f"regularization sweep needs more time slots (T={T})", field="sweep")
    if SelectionCriterion(cfg.criterion) == SelectionCriterion.HOLDOUT:
        return _holdout_select(y_raw, M, n_buses, bus, cfg)
    problem = _problem(y_raw, M, n_buses, bus)
    if problem.dim == 0:
        return _zero_solution(problem, 0.0, 0.0)
    return _ebic_select(problem, cfg)


# ---------- all buses ----------

def _is_degenerate(problem: BusProblem) -> bool:
    return problem.dim == 0 or not np.any(problem.y) or not np.any(problem.A)


def identify_bus(series: VoltageSeries, M: FeatureMatrix, bus: int, cfg: SolverConfig) -> BusSolution:
    problem = build_problem(series, M, bus)
    if _is_degenerate(problem):
        warnings.warn(
            f"bus {bus}: constant target or regressors, returning the zero solution",
            IllConditionedWarning,
            stacklevel=2,
        )
        return _zero_solution(problem, cfg.lam, cfg.mu)
    if cfg.sweep:
        return sweep_bus(series.V[:, bus - 1], M.M, series.n_buses, bus, cfg)
    return solve_bus(problem, cfg)


def enforce_hierarchy(kernels: VolterraKernels, rule: HierarchyRule = HierarchyRule.STRONG) -> VolterraKernels:
    """
    Zero pair coefficients whose partners have zero first-order coefficients
    (either partner for STRONG, both for WEAK).
    """
    rows, cols = pair_positions(kernels.n_buses)
    zero = kernels.R1 == 0.0
    if HierarchyRule(rule) == HierarchyRule.STRONG:
        dead = zero[:, rows] | zero[:, cols]
    else:
        dead = zero[:, rows] & zero[:, cols]
    # diagonal zeros of R1 only hit pairs that are structurally zero already
    return VolterraKernels(R1=kernels.R1, R2=np.where(dead, 0.0, kernels.R2))


def kernels_from_solutions(n_buses: int, solutions: List[BusSolution]) -> VolterraKernels:
    R1 = np.zeros((n_buses, n_buses))
    R2 = np.zeros((n_buses, n_buses * (n_buses + 1) // 2))
    for sol in solutions:
        colmap = _layout(n_buses, sol.bus).colmap
        for c, col in enumerate(colmap):
            if col.is_pair:
                R2[sol.bus - 1, pair_index(col.i, col.j, n_buses)] = sol.theta[c]
            else:
                R1[sol.bus - 1, col.i] = sol.theta[c]
    return VolterraKernels(R1=R1, R2=R2)


def solve_all(
    series: VoltageSeries,
    M: Optional[FeatureMatrix] = None,
    cfg: Optional[SolverConfig] = None,
    jobs: int = 1,
) -> IdentificationResult:
    """
    Solve the N independent bus regressions and assemble R1, R2 and the stacked model.
    Failures are collected over all buses and raised as one BusSolveError.
    """
    cfg = cfg or SolverConfig()
    M = M if M is not None else build_feature_matrix(series)
    if M.n_buses != series.n_buses or M.n_slots != series.n_slots:
        raise DimensionMismatch("feature matrix", (series.n_buses, series.n_slots), (M.n_buses, M.n_slots))

    n = series.n_buses
    logger.info("Solving %d bus regressions (T=%d, sweep=%s, jobs=%d)", n, series.n_slots, cfg.sweep, jobs)

    def _one(bus: int):
        try:
            return identify_bus(series, M, bus, cfg)
        except (GridVolterraError, ValueError, np.linalg.LinAlgError) as exc:
            return exc

    buses = range(1, n + 1)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_one, buses))
    else:
        outcomes = [_one(b) for b in buses]

    failed = [(b, out) for b, out in zip(buses, outcomes) if isinstance(out, Exception)]
    if failed:
        for b, exc in failed:
            logger.error("bus %d failed: %s", b, exc)
        bus, cause = failed[0]
        raise BusSolveError(bus, cause, failed_buses=[b for b, _ in failed])

    solutions: List[BusSolution] = list(outcomes)
    kernels = kernels_from_solutions(n, solutions)
    violations = {
        **structural_violations(kernels),
        "hierarchy": hierarchy_violations(kernels, strong=HierarchyRule(cfg.hierarchy) == HierarchyRule.STRONG),
    }
    if violations["hierarchy"]:
        logger.info("%d pair coefficients break the %s hierarchy before zeroing", violations["hierarchy"], cfg.hierarchy)
    if cfg.enforce_hierarchy:
        kernels = enforce_hierarchy(kernels, cfg.hierarchy)

    n_max = sum(1 for s in solutions if s.status == SolveStatus.MAX_ITER)
    if n_max:
        logger.warning("%d of %d buses stopped at max_iter", n_max, n)
    return IdentificationResult(
        kernels=kernels,
        stacked=assemble_stacked(series, kernels),
        solutions=solutions,
        violations=violations,
    )
