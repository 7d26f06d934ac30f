from __future__ import annotations

import warnings

import numpy as np
import pytest

from core.domain.entities.kernels_entity import VolterraKernels
from core.domain.entities.powerflow_entity import VoltageSeries
from core.domain.enums.solver_enums import HierarchyRule, SelectionCriterion, SolveStatus, StepPolicy
from core.domain.schemas.solver_types import BusSolution, ColumnId, SolverConfig
from core.services.exceptions import BusSolveError, DimensionMismatch, IllConditionedWarning, MaxIterExceeded
from core.services.features import build_feature_matrix, hierarchy_violations, pair_index, structural_violations
import core.services.solver as solver_module
from core.services.solver import (
    GroupPartition,
    build_problem,
    ebic,
    enforce_hierarchy,
    entry_order,
    kernels_from_solutions,
    lambda_max,
    optimality_residual,
    penalty,
    prox_sparse_group,
    solve_all,
    solve_bus,
)


def _series(rng, T=200, N=4, low=0.5, high=1.5):
    return VoltageSeries(V=rng.uniform(low, high, (T, N)))


def _problem(series, bus=1):
    return build_problem(series, build_feature_matrix(series), bus)


def _planted_series(rng, T=500, N=6):
    """Bus 1 driven by buses 2, 3 and their product; every other bus is free."""
    V = rng.uniform(0.2, 1.8, (T, N))
    V[:, 0] = 0.5 * V[:, 1] + 0.3 * V[:, 2] + 0.2 * V[:, 1] * V[:, 2]
    return VoltageSeries(V=V)


# ---------- problem layout ----------

def test_problem_layout_three_buses(rng):
    problem = _problem(_series(rng, N=3))
    assert problem.colmap == [ColumnId(1), ColumnId(2), ColumnId(1, 2)]
    assert problem.group_buses == [2, 3]
    assert [g.tolist() for g in problem.groups] == [[0, 2], [1, 2]]
    assert problem.dim == 3


def test_problem_layout_two_buses(rng):
    problem = _problem(_series(rng, N=2))
    assert problem.colmap == [ColumnId(1)]
    assert problem.dim == 1


def test_problem_is_centered(rng):
    problem = _problem(_series(rng, N=4), bus=3)
    assert abs(problem.y.mean()) < 1e-12
    np.testing.assert_allclose(problem.A.mean(axis=0), 0.0, atol=1e-12)
    # no column of the bus itself and no pair containing it
    assert all(3 - 1 not in (c.i, c.j) for c in problem.colmap)


def test_every_group_has_n_minus_one_members(rng):
    problem = _problem(_series(rng, N=5), bus=2)
    assert all(len(g) == 4 for g in problem.groups)
    assert len(problem.latent_columns) == 4 * 4


def test_bus_out_of_range(rng):
    series = _series(rng, N=3)
    with pytest.raises(DimensionMismatch):
        build_problem(series, build_feature_matrix(series), 4)


# ---------- prox ----------

def test_prox_soft_threshold():
    assert prox_sparse_group([3.0], 1.0, 0.0).tolist() == [2.0]
    assert prox_sparse_group([-0.5], 1.0, 0.0).tolist() == [0.0]


def test_prox_group_kill():
    np.testing.assert_allclose(prox_sparse_group([3.0, 4.0], 0.0, 5.0, [slice(0, 2)]), [0.0, 0.0])


def test_prox_group_shrink():
    np.testing.assert_allclose(prox_sparse_group([3.0, 4.0], 0.0, 2.5, [slice(0, 2)]), [1.5, 2.0])


def test_prox_partition_matches_slices(rng):
    z = rng.normal(size=9)
    slices = [slice(0, 3), slice(3, 5), slice(5, 9)]
    np.testing.assert_allclose(
        prox_sparse_group(z, 0.2, 0.7, GroupPartition.from_slices(slices)),
        prox_sparse_group(z, 0.2, 0.7, slices),
    )


@pytest.mark.parametrize("seed", range(4))
def test_prox_minimizes_against_grid_search(seed):
    rng = np.random.default_rng(seed)
    z = rng.uniform(-2, 2, 2)
    lam, mu = 0.3, 0.4
    part = GroupPartition.from_slices([slice(0, 2)])

    def obj(x):
        return 0.5 * np.sum((x - z) ** 2, axis=-1) + lam * np.sum(np.abs(x), axis=-1) + mu * np.linalg.norm(x, axis=-1)

    grid = np.linspace(-2.5, 2.5, 1001)
    xx, yy = np.meshgrid(grid, grid)
    best = obj(np.stack([xx, yy], axis=-1)).min()
    x = prox_sparse_group(z, lam, mu, part)
    assert obj(x) <= best + 1e-9


def test_prox_satisfies_subgradient_conditions(rng):
    z = rng.normal(size=12)
    lam, mu = 0.3, 0.5
    part = GroupPartition.from_slices([slice(0, 4), slice(4, 8), slice(8, 12)])
    x = prox_sparse_group(z, lam, mu, part)
    # x = prox(z)  <=>  z - x is a subgradient of the penalty at x
    assert optimality_residual(x - z, x, lam, mu, part) < 1e-12


# ---------- solve_bus ----------

def test_unregularized_matches_least_squares(rng):
    problem = _problem(_series(rng, N=4))
    cfg = SolverConfig(lam=0.0, mu=0.0, tol=1e-15, opt_tol=1e-10, max_iter=20000)
    sol = solve_bus(problem, cfg)
    theta_ls, *_ = np.linalg.lstsq(problem.A, problem.y, rcond=None)
    np.testing.assert_allclose(sol.theta, theta_ls, atol=1e-8)


def test_lambda_above_lambda_max_gives_zero(rng):
    problem = _problem(_series(rng, N=4))
    cfg = SolverConfig(lam=1.0001 * lambda_max(problem), mu=0.0)
    sol = solve_bus(problem, cfg)
    assert sol.status == SolveStatus.CONVERGED
    assert not np.any(sol.theta)


def test_lambda_alias(rng):
    assert SolverConfig(**{"lambda": 0.2}).lam == 0.2
    assert SolverConfig(lam=0.2).lam == 0.2


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("step", [StepPolicy.BACKTRACKING, StepPolicy.FIXED])
def test_optimality_certificate(seed, step):
    rng = np.random.default_rng(seed)
    problem = _problem(_series(rng, T=120, N=5), bus=int(rng.integers(1, 6)))
    lam_hi = lambda_max(problem)
    cfg = SolverConfig(lam=0.05 * lam_hi, mu=0.05 * lam_hi, step=step)
    sol = solve_bus(problem, cfg)
    assert sol.status == SolveStatus.CONVERGED

    A = problem.latent_design
    grad = -2.0 * A.T @ (problem.y - A @ sol.latent)
    part = GroupPartition.from_slices(problem.latent_groups)
    assert optimality_residual(grad, sol.latent, cfg.lam, cfg.mu, part) <= 1e-6 * (1 + np.linalg.norm(grad))


def test_objective_is_monotone(rng):
    problem = _problem(_series(rng, N=5), bus=2)
    lam_hi = lambda_max(problem)
    sol = solve_bus(problem, SolverConfig(lam=0.01 * lam_hi, mu=0.01 * lam_hi))
    trace = np.array(sol.objective)
    assert np.all(np.diff(trace) <= 1e-11 * np.abs(trace[:-1]))


def test_penalty_shrinks_along_path(rng):
    problem = _problem(_series(rng, N=4), bus=1)
    lam_hi = lambda_max(problem)
    part = GroupPartition.from_slices(problem.latent_groups)
    values = []
    for scale in [0.01, 0.02, 0.04, 0.08, 0.16]:
        sol = solve_bus(problem, SolverConfig(lam=scale * lam_hi, mu=scale * lam_hi, tol=1e-12))
        values.append(penalty(sol.latent, 1.0, 1.0, part))
    assert all(b <= a * (1 + 1e-3) + 1e-9 for a, b in zip(values, values[1:]))


def test_planted_single_bus_is_recovered(rng):
    series = _planted_series(rng)
    problem = _problem(series, bus=1)
    lam_hi = lambda_max(problem)
    sol = solve_bus(problem, SolverConfig(lam=1e-6 * lam_hi, mu=1e-6 * lam_hi, tol=1e-12))

    planted = {ColumnId(1): 0.5, ColumnId(2): 0.3, ColumnId(1, 2): 0.2}
    for c, col in enumerate(problem.colmap):
        target = planted.get(col, 0.0)
        assert abs(sol.theta[c] - target) <= 1e-2, col
        if target:
            assert sol.theta[c] != 0.0


def test_max_iter_status(rng):
    problem = _problem(_series(rng, N=4))
    sol = solve_bus(problem, SolverConfig(lam=1e-4, mu=1e-4, max_iter=1))
    assert sol.status == SolveStatus.MAX_ITER
    assert sol.iterations == 1
    with pytest.raises(MaxIterExceeded) as err:
        sol.raise_for_status()
    assert err.value.solution is sol


# ---------- solve_all ----------

def test_solve_all_structure(rng):
    series = _series(rng, T=150, N=5)
    result = solve_all(series, cfg=SolverConfig(lam=1e-3, mu=1e-3))
    assert result.kernels.n_buses == 5
    assert len(result.solutions) == 5
    assert structural_violations(result.kernels) == {"hollow": 0, "pairs": 0}
    assert hierarchy_violations(result.kernels, strong=True) == 0
    assert result.stacked.E.shape == (5, 150)


def test_solve_all_parallel_is_bitwise_identical(rng):
    series = _series(rng, T=100, N=4)
    cfg = SolverConfig(lam=1e-3, mu=1e-3)
    serial = solve_all(series, cfg=cfg, jobs=1)
    parallel = solve_all(series, cfg=cfg, jobs=3)
    np.testing.assert_array_equal(serial.kernels.R1, parallel.kernels.R1)
    np.testing.assert_array_equal(serial.kernels.R2, parallel.kernels.R2)


def test_constant_series_warns_and_returns_zero():
    series = VoltageSeries(V=np.ones((30, 3)))
    with pytest.warns(IllConditionedWarning):
        result = solve_all(series, cfg=SolverConfig(lam=0.1, mu=0.1))
    assert not np.any(result.kernels.R1)
    assert not np.any(result.kernels.R2)


def _group_kill_weight(problem):
    """Smallest mu (lam = 0) at which every row group of the bus is zero."""
    grad = 2.0 * problem.latent_design.T @ problem.y
    return max(float(np.linalg.norm(grad[g])) for g in problem.latent_groups)


def test_linear_data_with_large_group_penalty_has_no_pairs(rng):
    T, N = 300, 4
    R1 = np.zeros((N, N))
    R1[0, 1] = R1[1, 0] = 0.3
    R1[2, 3] = R1[3, 2] = 0.4
    E = 1.0 + 0.05 * rng.standard_normal((N, T))
    V = np.linalg.solve(np.eye(N) - R1, E).T
    series = VoltageSeries(V=V)

    M = build_feature_matrix(series)
    mu = 1.01 * max(_group_kill_weight(build_problem(series, M, n)) for n in range(1, N + 1))
    result = solve_all(series, M, SolverConfig(lam=0.0, mu=mu))
    assert np.max(np.abs(result.kernels.R2)) <= 1e-4


def test_bus_failures_are_collected(rng):
    series = _series(rng, T=2, N=3)
    with pytest.raises(BusSolveError) as err:
        solve_all(series, cfg=SolverConfig(sweep=True))
    assert err.value.failed_buses == [1, 2, 3]
    assert err.value.bus == 1


@pytest.mark.parametrize(
    "cfg",
    [
        SolverConfig(sweep=True),
        SolverConfig(sweep=True, criterion=SelectionCriterion.HOLDOUT, n_lambda=8, ratio_min=1e-6, tol=1e-10),
    ],
    ids=["ebic", "holdout"],
)
def test_sweep_recovers_planted_bus(rng, cfg):
    series = _planted_series(rng, T=400, N=5)
    result = solve_all(series, cfg=cfg)
    rho1 = result.kernels.R1[0]
    assert rho1[1] == pytest.approx(0.5, abs=1e-2)
    assert rho1[2] == pytest.approx(0.3, abs=1e-2)
    assert result.kernels.R2[0, pair_index(1, 2, 5)] == pytest.approx(0.2, abs=1e-2)
    assert result.solutions[0].lam > 0


def test_enforce_hierarchy_rules():
    R1 = np.zeros((3, 3))
    R1[0, 1] = 0.5
    R2 = np.zeros((3, 6))
    R2[0, pair_index(1, 2, 3)] = 0.1
    kernels = VolterraKernels(R1=R1, R2=R2)

    strong = enforce_hierarchy(kernels, HierarchyRule.STRONG)
    weak = enforce_hierarchy(kernels, HierarchyRule.WEAK)
    assert strong.R2[0, pair_index(1, 2, 3)] == 0.0
    assert weak.R2[0, pair_index(1, 2, 3)] == 0.1


def test_solution_diagnostics(rng):
    problem = _problem(_series(rng, N=3))
    sol = solve_bus(problem, SolverConfig(lam=1e-3, mu=1e-3))
    diag = sol.diagnostics(include_trace=False)
    assert diag["status"] == "Converged"
    assert "objective" not in diag
    assert sol.diagnostics()["objective"][0] >= sol.diagnostics()["objective"][-1]


def test_no_warning_on_regular_series(rng):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IllConditionedWarning)
        solve_all(_series(rng, T=60, N=3), cfg=SolverConfig(lam=1e-3, mu=1e-3))


def _crafted_solution(series, M, bus, cfg):
    # bus 1 keeps the pair {2, 3} although bus 2 has a zero first-order coefficient
    theta = np.array([0.0, 0.4, 0.2]) if bus == 1 else np.zeros(3)
    return BusSolution(bus=bus, theta=theta, latent=np.zeros(4))


@pytest.mark.parametrize(
    "rule, enforce, expected",
    [
        (HierarchyRule.STRONG, True, 1),
        (HierarchyRule.STRONG, False, 1),
        (HierarchyRule.WEAK, True, 0),
    ],
)
def test_violations_are_counted_before_zeroing(monkeypatch, rng, rule, enforce, expected):
    monkeypatch.setattr(solver_module, "identify_bus", _crafted_solution)
    result = solve_all(_series(rng, T=20, N=3), cfg=SolverConfig(hierarchy=rule, enforce_hierarchy=enforce))

    assert result.violations == {"hollow": 0, "pairs": 0, "hierarchy": expected}
    pair = result.kernels.R2[0, pair_index(1, 2, 3)]
    assert pair == (0.0 if enforce and rule == HierarchyRule.STRONG else 0.2)
    assert hierarchy_violations(result.kernels, strong=rule == HierarchyRule.STRONG) == (0 if enforce else expected)


def test_violations_of_a_real_solve_match_the_raw_kernels(rng):
    series = _planted_series(rng, T=200, N=4)
    cfg = SolverConfig(lam=1e-2, mu=0.0)
    result = solve_all(series, cfg=cfg)

    raw = kernels_from_solutions(4, result.solutions)
    assert result.violations["hierarchy"] == hierarchy_violations(raw)
    assert result.violations["hollow"] == result.violations["pairs"] == 0
    assert hierarchy_violations(result.kernels) == 0


def test_entry_order_follows_signal_strength(rng):
    X = rng.standard_normal((300, 5))
    X /= np.linalg.norm(X, axis=0)
    y = 3.0 * X[:, 4] + 1.0 * X[:, 1] + 0.01 * rng.standard_normal(300)

    order, weights = entry_order(X, y)
    assert order[:2].tolist() == [4, 1]
    assert np.all(np.diff(weights) <= 0)
    assert weights[0] == pytest.approx(2.0 * np.max(np.abs(X.T @ y)))


def test_entry_order_of_zero_target_is_empty(rng):
    order, weights = entry_order(rng.standard_normal((20, 3)), np.zeros(20))
    assert order.size == 0 and weights.size == 0


def test_ebic_penalizes_size_and_candidate_count():
    base = ebic(1.0, 100, [(10, 2)], 0.5)
    assert ebic(1.0, 100, [(10, 3)], 0.5) > base
    assert ebic(1.0, 100, [(50, 2)], 0.5) > base
    assert ebic(1.0, 100, [(10, 2)], 0.0) < base
    assert ebic(0.0, 100, [(10, 2)], 0.5, floor=1e-6) == ebic(1e-6, 100, [(10, 2)], 0.5)


def test_ebic_sweep_keeps_pure_noise_buses_empty(rng):
    result = solve_all(_series(rng, T=300, N=4), cfg=SolverConfig(sweep=True))
    assert np.count_nonzero(result.kernels.R1) <= 1
    assert np.count_nonzero(result.kernels.R2) == 0


def test_weak_rule_admits_pairs_with_one_selected_partner(rng):
    V = rng.uniform(0.2, 1.8, (400, 4))
    # bus 3 enters bus 1 only through its product with bus 2
    V[:, 0] = 0.5 * V[:, 1] + 0.3 * V[:, 1] * V[:, 2]
    series = VoltageSeries(V=V)

    weak = solve_all(series, cfg=SolverConfig(sweep=True, hierarchy=HierarchyRule.WEAK))
    assert weak.kernels.R1[0, 1] == pytest.approx(0.5, abs=1e-8)
    assert weak.kernels.R1[0, 2] == 0.0
    assert weak.kernels.R2[0, pair_index(1, 2, 4)] == pytest.approx(0.3, abs=1e-8)
    assert weak.violations["hierarchy"] == 0
    assert hierarchy_violations(weak.kernels, strong=True) >= 1
