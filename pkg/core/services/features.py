"""
Self-driven graph Volterra regression structures.

Pair (i, j) with i <= j is stored at lexicographic position
    k = i * N - i * (i - 1) / 2 + (j - i)
(0-based bus positions), matching np.triu_indices(N).
The combining rule is multiplicative: h({v_i}) = v_i and h({v_i, v_j}) = v_i v_j.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from core.domain.entities.kernels_entity import (
    BusKernels,
    FeatureMatrix,
    ReducedKron,
    RnMatrix,
    StackedModel,
    VolterraKernels,
    n_pairs,
)
from core.domain.entities.powerflow_entity import VoltageSeries
from core.services.exceptions import DimensionMismatch, NonFiniteInput


@lru_cache(maxsize=64)
def pair_positions(n_buses: int) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n_buses)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def pair_index(i: int, j: int, n_buses: int) -> int:
    """
    Flat position of the unordered pair {i, j} (0-based positions, either order).
    """
    if i > j:
        i, j = j, i
    if i < 0 or j >= n_buses:
        raise IndexError(f"pair ({i}, {j}) outside 0..{n_buses - 1}")
    return i * n_buses - i * (i - 1) // 2 + (j - i)


def pair_from_index(k: int, n_buses: int) -> Tuple[int, int]:
    rows, cols = pair_positions(n_buses)
    return int(rows[k]), int(cols[k])


def reduced_kron(v) -> ReducedKron:
    vec = np.asarray(v, dtype=float).reshape(-1)
    if vec.shape[0] < 1:
        raise ValueError("reduced_kron needs N >= 1")
    rows, cols = pair_positions(vec.shape[0])
    return ReducedKron(n_buses=vec.shape[0], values=vec[rows] * vec[cols])


def build_feature_matrix(series: Union[VoltageSeries, np.ndarray]) -> FeatureMatrix:
    """
    M = [V1; V2] with V1 = series transposed (N x T) and V2 the column-wise reduced Kronecker products.
    """
    V = series.V if isinstance(series, VoltageSeries) else np.asarray(series, dtype=float)
    if V.ndim != 2 or V.shape[0] < 1:
        raise DimensionMismatch("series", "T x N matrix with T >= 1", V.shape)
    bad = int(V.size - np.count_nonzero(np.isfinite(V)))
    if bad:
        raise NonFiniteInput(bad)

    n = V.shape[1]
    rows, cols = pair_positions(n)
    V1 = V.T
    V2 = V1[rows] * V1[cols]
    M = np.vstack([V1, V2])
    M.setflags(write=False)
    return FeatureMatrix(n_buses=n, M=M)


def kernels_to_Rn(kernels: BusKernels) -> RnMatrix:
    n = kernels.n_buses
    rows, cols = pair_positions(n)
    mat = np.zeros((n, n + 1))
    mat[:, 0] = kernels.rho1
    mat[rows, cols + 1] = kernels.rho2
    mat[cols, rows + 1] = kernels.rho2
    return RnMatrix(bus=kernels.bus, matrix=mat)


def rn_to_kernels(rn: RnMatrix) -> BusKernels:
    mat = rn.matrix
    n = mat.shape[0]
    if mat.shape != (n, n + 1):
        raise DimensionMismatch("R_n", (n, n + 1), mat.shape)
    rows, cols = pair_positions(n)
    return BusKernels(bus=rn.bus, rho1=mat[:, 0].copy(), rho2=mat[rows, cols + 1].copy())


def structural_violations(kernels: VolterraKernels, atol: float = 0.0) -> Dict[str, int]:
    """
    Count entries breaking the structural assumptions:
    hollow: R1[n, n] != 0
    pairs: R2[n, (i, j)] != 0 with n in {i, j} or i == j
    """
    n = kernels.n_buses
    rows, cols = pair_positions(n)
    hollow = int(np.count_nonzero(np.abs(np.diag(kernels.R1)) > atol))

    bus = np.arange(n)[:, None]
    forbidden = (rows[None, :] == cols[None, :]) | (rows[None, :] == bus) | (cols[None, :] == bus)
    pairs = int(np.count_nonzero(np.abs(kernels.R2[forbidden]) > atol))
    return {"hollow": hollow, "pairs": pairs}


def hierarchy_violations(kernels: VolterraKernels, strong: bool = True) -> int:
    """
    Count pair coefficients that are nonzero although their partners' first-order coefficients vanish
    (either partner for strong, both partners for weak).
    """
    n = kernels.n_buses
    rows, cols = pair_positions(n)
    zero_first = kernels.R1 == 0.0
    dead = zero_first[:, rows] | zero_first[:, cols] if strong else zero_first[:, rows] & zero_first[:, cols]
    return int(np.count_nonzero((kernels.R2 != 0.0) & dead))


def assemble_stacked(series: Union[VoltageSeries, np.ndarray], kernels: VolterraKernels) -> StackedModel:
    feats = build_feature_matrix(series)
    if kernels.n_buses != feats.n_buses:
        raise DimensionMismatch("kernel buses", feats.n_buses, kernels.n_buses)

    V1 = feats.first_order
    V2 = feats.second_order
    E = V1 - kernels.R1 @ V1 - kernels.R2 @ V2
    return StackedModel(V1=V1, V2=V2, R1=kernels.R1, R2=kernels.R2, E=E)


# ---------- kernel export ----------

def kernels_to_records(kernels: VolterraKernels) -> List[Dict[str, Any]]:
    """
    One record per bus: {"n", "rho1": [...], "rho2": [{"i", "j", "value"}]} with 1-based bus ids
    and only the nonzero second-order coefficients.
    """
    n = kernels.n_buses
    rows, cols = pair_positions(n)
    out = []
    for b in range(n):
        nz = np.flatnonzero(kernels.R2[b])
        out.append({
            "n": b + 1,
            "rho1": [float(x) for x in kernels.R1[b]],
            "rho2": [{"i": int(rows[k]) + 1, "j": int(cols[k]) + 1, "value": float(kernels.R2[b, k])} for k in nz],
        })
    return out


def kernels_from_records(records: List[Dict[str, Any]]) -> VolterraKernels:
    n = len(records)
    kernels = [
        BusKernels(
            bus=int(rec["n"]),
            rho1=rec["rho1"],
            rho2=_rho2_from_entries(rec.get("rho2", []), n),
        )
        for rec in records
    ]
    if sorted(k.bus for k in kernels) != list(range(1, n + 1)):
        raise DimensionMismatch("kernel records", f"buses 1..{n}", sorted(k.bus for k in kernels))
    return VolterraKernels.from_buses(kernels)


def _rho2_from_entries(entries: List[Dict[str, Any]], n: int) -> np.ndarray:
    rho2 = np.zeros(n_pairs(n))
    for e in entries:
        rho2[pair_index(int(e["i"]) - 1, int(e["j"]) - 1, n)] += float(e["value"])
    return rho2
