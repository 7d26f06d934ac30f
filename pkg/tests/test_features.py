from __future__ import annotations

import numpy as np
import pytest

from core.domain.entities.kernels_entity import BusKernels, VolterraKernels, n_pairs
from core.domain.entities.powerflow_entity import VoltageSeries
from core.services.exceptions import NonFiniteInput
from core.services.features import (
    assemble_stacked,
    build_feature_matrix,
    hierarchy_violations,
    kernels_from_records,
    kernels_to_Rn,
    kernels_to_records,
    pair_from_index,
    pair_index,
    reduced_kron,
    rn_to_kernels,
    structural_violations,
)


def test_reduced_kron_two_buses():
    np.testing.assert_allclose(reduced_kron([2.0, 3.0]).values, [4.0, 6.0, 9.0])


def test_reduced_kron_single_bus():
    assert reduced_kron([1.5]).values.tolist() == [2.25]


def test_reduced_kron_length():
    assert reduced_kron(np.ones(41)).values.shape == (861,)


def test_feature_dimension_at_41_buses():
    series = VoltageSeries(V=np.ones((240, 41)))
    feats = build_feature_matrix(series)
    assert feats.dim == 902
    assert feats.M.shape == (902, 240)


def test_feature_columns_are_snapshots(rng):
    V = rng.uniform(0.9, 1.1, (5, 4))
    feats = build_feature_matrix(VoltageSeries(V=V))
    for t in range(5):
        expected = np.concatenate([V[t], reduced_kron(V[t]).values])
        np.testing.assert_array_equal(feats.M[:, t], expected)


def test_non_finite_series_rejected():
    V = np.ones((3, 2))
    V[1, 1] = np.nan
    with pytest.raises(NonFiniteInput) as err:
        build_feature_matrix(V)
    assert err.value.count == 1


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_pair_index_matches_lexicographic_order(n):
    k = 0
    for i in range(n):
        for j in range(i, n):
            assert pair_index(i, j, n) == k
            assert pair_index(j, i, n) == k
            assert pair_from_index(k, n) == (i, j)
            k += 1
    assert k == n_pairs(n)


def test_pair_index_out_of_range():
    with pytest.raises(IndexError):
        pair_index(0, 3, 3)


def test_rn_matrix_round_trip(rng):
    n = 4
    rho1 = rng.normal(size=n)
    rho2 = rng.normal(size=n_pairs(n))
    kernels = BusKernels(bus=2, rho1=rho1, rho2=rho2)
    rn = kernels_to_Rn(kernels)
    assert rn.matrix.shape == (n, n + 1)
    # a pair coefficient sits in the rows of both partners
    assert rn.matrix[0, 3] == rn.matrix[2, 1] == rho2[pair_index(0, 2, n)]
    back = rn_to_kernels(rn)
    np.testing.assert_array_equal(back.rho1, rho1)
    np.testing.assert_array_equal(back.rho2, rho2)


def test_structural_violations_counts():
    kernels = VolterraKernels.zeros(3)
    assert structural_violations(kernels) == {"hollow": 0, "pairs": 0}

    R1 = np.zeros((3, 3))
    R1[1, 1] = 0.2
    R2 = np.zeros((3, 6))
    R2[0, pair_index(0, 2, 3)] = 0.1  # contains the bus itself
    R2[0, pair_index(1, 1, 3)] = 0.1  # square
    R2[0, pair_index(1, 2, 3)] = 0.1  # admissible
    assert structural_violations(VolterraKernels(R1=R1, R2=R2)) == {"hollow": 1, "pairs": 2}


def test_hierarchy_violations_strong_and_weak():
    R1 = np.zeros((3, 3))
    R1[0, 1] = 0.5
    R2 = np.zeros((3, 6))
    R2[0, pair_index(1, 2, 3)] = 0.1
    kernels = VolterraKernels(R1=R1, R2=R2)
    assert hierarchy_violations(kernels, strong=True) == 1
    assert hierarchy_violations(kernels, strong=False) == 0


def test_stacked_model_residual(rng):
    V = rng.uniform(0.9, 1.1, (6, 3))
    stacked = assemble_stacked(VoltageSeries(V=V), VolterraKernels.zeros(3))
    np.testing.assert_array_equal(stacked.E, V.T)
    assert stacked.V2.shape == (6, 6)

    R1 = np.zeros((3, 3))
    R1[0, 1] = 1.0
    stacked = assemble_stacked(VoltageSeries(V=V), VolterraKernels(R1=R1, R2=np.zeros((3, 6))))
    np.testing.assert_allclose(stacked.E[0], V[:, 0] - V[:, 1])


def test_kernel_records_round_trip(rng):
    n = 3
    R1 = rng.normal(size=(n, n))
    np.fill_diagonal(R1, 0.0)
    R2 = np.zeros((n, n_pairs(n)))
    R2[0, pair_index(1, 2, n)] = 0.25
    kernels = VolterraKernels(R1=R1, R2=R2)

    records = kernels_to_records(kernels)
    assert records[0]["rho2"] == [{"i": 2, "j": 3, "value": 0.25}]
    assert records[1]["rho2"] == []
    back = kernels_from_records(records)
    np.testing.assert_array_equal(back.R1, R1)
    np.testing.assert_array_equal(back.R2, R2)
