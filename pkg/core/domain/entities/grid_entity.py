from __future__ import annotations

from functools import cached_property
from typing import Dict, FrozenSet, NamedTuple, Tuple

import networkx as nx
import numpy as np
from pydantic import ConfigDict, Field, model_validator

from core.domain.entities.base_entity import ArrayEntity
from core.services.exceptions import (
    BadIndex,
    CycleDetected,
    DisconnectedBus,
    DuplicateChild,
    ZeroImpedanceLine,
)

# 0 is the root (substation); non-root buses are 1..N
BusId = int
ROOT: BusId = 0


class Triad(NamedTuple):
    """
    A 2-length path seen from its center bus: center -- i and center -- j, with i < j.
    """

    center: BusId
    i: BusId
    j: BusId

    @classmethod
    def of(cls, center: BusId, a: BusId, b: BusId) -> "Triad":
        lo, hi = (a, b) if a < b else (b, a)
        return cls(center, lo, hi)


class Line(ArrayEntity):
    """
    Power line (parent -> child), indexed by its child bus, impedance z = r + j x (per unit).
    """

    child: BusId
    parent: BusId
    r: float = Field(..., description="Resistance, per unit")
    x: float = Field(..., description="Reactance, per unit")

    @model_validator(mode="after")
    def _check(self) -> "Line":
        if self.child == self.parent:
            raise BadIndex(f"Line into bus {self.child} has itself as parent", bus=self.child)
        if not (self.r > 0) or not (self.x >= 0):
            raise ZeroImpedanceLine(self.child, self.r, self.x)
        return self

    @property
    def z(self) -> complex:
        return complex(self.r, self.x)


class RadialGrid(ArrayEntity):
    """
    Radial distribution grid: a tree rooted at bus 0 with exactly one line per non-root bus.

    `lines[k]` is the line into bus k + 1. Construct through
    `core.services.grid_model.build_grid`, which validates the tree property.
    """

    n_buses: int = Field(..., ge=1, description="Number of non-root buses N")
    lines: Tuple[Line, ...]

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check_tree(self) -> "RadialGrid":
        n = self.n_buses
        seen: set[int] = set()
        for ln in self.lines:
            if not 1 <= ln.child <= n:
                raise BadIndex(f"Child index {ln.child} outside 1..{n}", bus=ln.child)
            if not 0 <= ln.parent <= n:
                raise BadIndex(f"Parent index {ln.parent} outside 0..{n}", bus=ln.parent)
            if ln.child in seen:
                raise DuplicateChild(ln.child)
            seen.add(ln.child)

        missing = sorted(set(range(1, n + 1)) - seen)
        if missing:
            raise DisconnectedBus(missing[0])

        if [ln.child for ln in self.lines] != list(range(1, n + 1)):
            raise BadIndex("lines must be ordered by child index")

        graph = self.to_networkx()
        if not nx.is_arborescence(graph):
            cycle = nx.find_cycle(graph)
            raise CycleDetected(sorted({u for u, _ in cycle}))
        return self

    # ---------- per-line vectors (position k <-> bus k + 1) ----------

    @cached_property
    def parents(self) -> np.ndarray:
        arr = np.array([ln.parent for ln in self.lines], dtype=int)
        arr.setflags(write=False)
        return arr

    @cached_property
    def r(self) -> np.ndarray:
        arr = np.array([ln.r for ln in self.lines], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def x(self) -> np.ndarray:
        arr = np.array([ln.x for ln in self.lines], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def z(self) -> np.ndarray:
        arr = self.r + 1j * self.x
        arr.setflags(write=False)
        return arr

    @cached_property
    def children(self) -> Dict[BusId, FrozenSet[BusId]]:
        """
        The C_j sets for every bus j in 0..N (leaves map to an empty set).
        """
        acc: Dict[BusId, set[BusId]] = {j: set() for j in range(self.n_buses + 1)}
        for ln in self.lines:
            acc[ln.parent].add(ln.child)
        return {j: frozenset(c) for j, c in acc.items()}

    @cached_property
    def order(self) -> Tuple[BusId, ...]:
        """
        Non-root buses in breadth-first order from the root (parents before children).
        """
        return tuple(b for b in nx.bfs_tree(self.to_networkx(), ROOT) if b != ROOT)

    @cached_property
    def depth(self) -> Dict[BusId, int]:
        return dict(nx.shortest_path_length(self.to_networkx(), ROOT))

    def parent_of(self, bus: BusId) -> BusId:
        return self.lines[bus - 1].parent

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n_buses + 1))
        for ln in self.lines:
            graph.add_edge(ln.parent, ln.child, r=ln.r, x=ln.x)
        return graph

    def to_record(self) -> dict:
        return {
            "buses": self.n_buses,
            "lines": [{"child": ln.child, "parent": ln.parent, "r": ln.r, "x": ln.x} for ln in self.lines],
        }


class IncidenceDecomposition(ArrayEntity):
    """
    Bus-branch incidence matrix B (N x (N+1)), split as B = [b0  Btilde].

    Row n-1 is line (pi_n, n): -1 in the parent column, +1 in the column of n.
    """

    B: np.ndarray
    b0: np.ndarray
    Btilde: np.ndarray
    children: Dict[BusId, FrozenSet[BusId]]

    def children_from_B(self) -> Dict[BusId, FrozenSet[BusId]]:
        """
        Rebuild the C_j sets from the -1 entries of B.
        """
        n_lines, n_cols = self.B.shape
        return {
            j: frozenset(int(i) + 1 for i in np.flatnonzero(self.B[:, j] == -1))
            for j in range(n_cols)
        }
