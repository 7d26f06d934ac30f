"""
Radial grid construction, incidence-matrix algebra and ground-truth interaction sets.

Conventions:
- Buses are contiguous integers, 0 is the substation, 1..N are non-root buses.
- Vectors over non-root buses use position n - 1 for bus n.
- Row n - 1 of the incidence matrix B is line (pi_n, n): -1 at column pi_n, +1 at column n.
  With this convention Btilde is unit lower-triangular under a topological ordering and
  Btilde^{-1} is the root-path matrix: entry (n, k) is 1 iff bus k is on the path root -> n.
"""
from __future__ import annotations

import logging
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Optional, Set, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from core.domain.entities.grid_entity import (
    ROOT,
    BusId,
    IncidenceDecomposition,
    Line,
    RadialGrid,
    Triad,
)
from core.services.exceptions import BadIndex, DuplicateChild, SingularIncidence

logger = logging.getLogger(__name__)

# per-unit impedance range used by the synthetic feeder generator
SYNTH_IMPEDANCE_RANGE: Tuple[float, float] = (0.005, 0.05)

Edge = FrozenSet[BusId]


def build_grid(lines: Iterable[Line | dict], n_buses: Optional[int] = None) -> RadialGrid:
    """
    Validate a list of lines and return a RadialGrid.

    `n_buses` defaults to the number of lines; when given explicitly, a declared bus
    without a line raises DisconnectedBus.

    Raises: CycleDetected, DisconnectedBus, DuplicateChild, BadIndex, ZeroImpedanceLine.
    """
    parsed = [ln if isinstance(ln, Line) else Line.model_validate(ln) for ln in lines]
    if not parsed:
        raise BadIndex("A grid needs at least one line")

    n = int(n_buses) if n_buses is not None else len(parsed)

    by_child: Dict[int, Line] = {}
    for ln in parsed:
        if ln.child in by_child:
            raise DuplicateChild(ln.child)
        by_child[ln.child] = ln

    ordered = tuple(sorted(parsed, key=lambda ln: ln.child))
    grid = RadialGrid(n_buses=n, lines=ordered)
    logger.debug("Built radial grid with N=%d, depth=%d", n, max(grid.depth.values()))
    return grid


def path_matrix(grid: RadialGrid) -> np.ndarray:
    """
    Btilde^{-1}: P[n-1, k-1] = 1 iff bus k lies on the path from the root to bus n.
    """
    return _btilde_inverse(grid, incidence(grid).Btilde)


def incidence(grid: RadialGrid) -> IncidenceDecomposition:
    n = grid.n_buses
    B = np.zeros((n, n + 1), dtype=int)
    rows = np.arange(n)
    B[rows, rows + 1] = 1
    B[rows, grid.parents] = -1

    b0 = B[:, 0].copy()
    Btilde = B[:, 1:].copy()
    for arr in (B, b0, Btilde):
        arr.setflags(write=False)
    return IncidenceDecomposition(B=B, b0=b0, Btilde=Btilde, children=grid.children)


def _btilde_inverse(grid: RadialGrid, Btilde: np.ndarray) -> np.ndarray:
    # permute to breadth-first order: Btilde becomes unit lower-triangular
    perm = np.array(grid.order, dtype=int) - 1
    lower = Btilde[np.ix_(perm, perm)].astype(float)
    if not np.allclose(np.diag(lower), 1.0) or np.any(np.triu(lower, k=1)):
        raise SingularIncidence("Reduced incidence matrix is not triangular under the tree ordering")

    inv_perm = solve_triangular(lower, np.eye(grid.n_buses), lower=True, unit_diagonal=True)
    inv = np.empty_like(inv_perm)
    inv[np.ix_(perm, perm)] = inv_perm
    return inv


def sensitivity_matrices(grid: RadialGrid) -> Tuple[np.ndarray, np.ndarray]:
    """
    R = Btilde^{-1} diag(r) Btilde^{-T} and X = Btilde^{-1} diag(x) Btilde^{-T}.

    Both equal the sum of r (resp. x) over the common part of the root paths of two buses.
    """
    P = path_matrix(grid)
    R = (P * grid.r) @ P.T
    X = (P * grid.x) @ P.T
    return R, X


def ground_truth_sets(grid: RadialGrid) -> Tuple[Set[Edge], Set[Triad]]:
    """
    edges: every {pi_n, n}; triads: for each bus n, every unordered pair of {pi_n} U C_n.
    The root is included both as an edge endpoint and as a triad member.
    """
    edges: Set[Edge] = {frozenset((ln.parent, ln.child)) for ln in grid.lines}

    triads: Set[Triad] = set()
    for n in range(1, grid.n_buses + 1):
        neighborhood = {grid.parent_of(n)} | set(grid.children[n])
        for a, b in combinations(sorted(neighborhood), 2):
            triads.add(Triad.of(n, a, b))
    return edges, triads


def restrict_to_non_root(edges: Set[Edge], triads: Set[Triad]) -> Tuple[Set[Edge], Set[Triad]]:
    """
    Drop every interaction involving the substation (it is not a regressor).
    """
    return (
        {e for e in edges if ROOT not in e},
        {t for t in triads if ROOT not in t},
    )


def synth_grid(n_buses: int, seed: int, degree_bias: float = 1.0) -> RadialGrid:
    """
    Random radial feeder by sequential parent sampling.

    Bus n picks its parent among 0..n-1 with weight (1 + depth_k) / (1 + |C_k|)^degree_bias:
    deep buses are preferred (long laterals) and crowded buses are penalized.
    Impedances are drawn uniformly from SYNTH_IMPEDANCE_RANGE for both r and x.
    """
    if n_buses < 1:
        raise BadIndex("n_buses must be >= 1")

    rng = np.random.default_rng(seed)
    lo, hi = SYNTH_IMPEDANCE_RANGE

    depth = np.zeros(n_buses + 1)
    n_children = np.zeros(n_buses + 1)
    lines = []
    for n in range(1, n_buses + 1):
        w = (1.0 + depth[:n]) / (1.0 + n_children[:n]) ** degree_bias
        parent = int(rng.choice(n, p=w / w.sum()))
        depth[n] = depth[parent] + 1
        n_children[parent] += 1
        lines.append(Line(child=n, parent=parent, r=float(rng.uniform(lo, hi)), x=float(rng.uniform(lo, hi))))

    logger.info("Synthesized radial grid N=%d seed=%d max_depth=%d", n_buses, seed, int(depth.max()))
    return build_grid(lines)
