from __future__ import annotations

from functools import cached_property
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.domain.entities.kernels_entity import StackedModel, VolterraKernels
from core.domain.enums.solver_enums import HierarchyRule, SelectionCriterion, SolveStatus, StepPolicy
from core.services.exceptions import MaxIterExceeded


class ColumnId(NamedTuple):
    """
    Identity of a design column: first-order coefficient of bus position i (j is None)
    or pair coefficient {i, j} with i < j. Positions are 0-based.
    """

    i: int
    j: Optional[int] = None

    @property
    def is_pair(self) -> bool:
        return self.j is not None


class SolverConfig(BaseModel):
    """
    Regularization weights and stopping rules of the per-bus solves.

    lam: l1 weight, mu: l2,1 (row-group) weight. With `sweep`, lam / mu are ignored and the model of
    every bus is picked by `criterion`:
      ebic     first-order supports in lasso entry order on standardized columns, then pair columns
               among the selected buses; nested supports scored by the extended BIC (ebic_gamma) of
               their least-squares refit.
      holdout  lam = lam_max * geomspace(1, ratio_min, n_lambda), mu = mu_ratio * lam, scored on a
               random holdout_fraction of the slots and refit on all of them.
    """

    lam: float = Field(0.0, ge=0, alias="lambda")
    mu: float = Field(0.0, ge=0)
    tol: float = Field(1e-8, gt=0, description="Relative objective change threshold")
    max_iter: int = Field(20000, ge=1)
    step: StepPolicy = StepPolicy.BACKTRACKING
    opt_tol: float = Field(1e-6, gt=0, description="Certificate threshold, relative to 1 + ||grad f||")
    power_iters: int = Field(20, ge=1)

    enforce_hierarchy: bool = True
    hierarchy: HierarchyRule = HierarchyRule.STRONG

    sweep: bool = False
    criterion: SelectionCriterion = SelectionCriterion.EBIC
    ebic_gamma: float = Field(0.5, ge=0, le=1)
    n_lambda: int = Field(12, ge=1)
    ratio_min: float = Field(1e-4, gt=0, le=1)
    mu_ratio: float = Field(1.0, ge=0)
    holdout_fraction: float = Field(0.2, gt=0, lt=1)

    model_config = ConfigDict(populate_by_name=True, frozen=True, use_enum_values=True)


class BusProblem(BaseModel):
    """
    Centered regression of bus n on its admissible features.

    Columns exclude the bus itself (hollow R1) and every pair containing it or repeating a bus.
    `groups[g]` lists the columns in row g of R_n: the first-order column of bus g plus every pair
    column containing g, so each pair column belongs to exactly two groups.
    """

    bus: int = Field(..., ge=1)
    n_buses: int = Field(..., ge=1)
    y: np.ndarray
    A: np.ndarray
    colmap: List[ColumnId]
    groups: List[np.ndarray]
    group_buses: List[int]
    y_mean: float = 0.0
    A_mean: Optional[np.ndarray] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check(self) -> "BusProblem":
        if self.A.ndim != 2 or self.A.shape[0] != self.y.shape[0]:
            raise ValueError(f"A {self.A.shape} and y {self.y.shape} are inconsistent")
        if self.A.shape[1] != len(self.colmap):
            raise ValueError("colmap length must match the number of columns")
        return self

    @property
    def dim(self) -> int:
        return int(self.A.shape[1])

    @property
    def n_slots(self) -> int:
        return int(self.A.shape[0])

    @cached_property
    def latent_columns(self) -> np.ndarray:
        """Original column of every latent (duplicated) coefficient, group after group."""
        return np.concatenate(self.groups) if self.groups else np.zeros(0, dtype=int)

    @cached_property
    def latent_groups(self) -> List[slice]:
        out, start = [], 0
        for g in self.groups:
            out.append(slice(start, start + len(g)))
            start += len(g)
        return out

    @cached_property
    def latent_design(self) -> np.ndarray:
        return self.A[:, self.latent_columns]

    def theta_from_latent(self, w: np.ndarray) -> np.ndarray:
        """Sum the duplicated copies back into one coefficient per column."""
        return np.bincount(self.latent_columns, weights=w, minlength=self.dim)

    def predict(self, theta: np.ndarray, A_raw: np.ndarray) -> np.ndarray:
        """Un-centered prediction for raw (uncentered) design rows."""
        mean = 0.0 if self.A_mean is None else self.A_mean
        return (A_raw - mean) @ theta + self.y_mean


class BusSolution(BaseModel):
    bus: int
    theta: np.ndarray
    latent: np.ndarray
    objective: List[float] = Field(default_factory=list)
    status: SolveStatus = SolveStatus.CONVERGED
    iterations: int = 0
    optimality: float = float("nan")
    lam: float = 0.0
    mu: float = 0.0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, use_enum_values=True)

    def raise_for_status(self) -> "BusSolution":
        if self.status == SolveStatus.MAX_ITER:
            raise MaxIterExceeded(self.bus, self.iterations, solution=self)
        return self

    def diagnostics(self, include_trace: bool = True) -> dict:
        out = {
            "bus": self.bus,
            "status": self.status,
            "iterations": self.iterations,
            "optimality": self.optimality,
            "lambda": self.lam,
            "mu": self.mu,
        }
        if include_trace:
            out["objective"] = self.objective
        return out


class IdentificationResult(BaseModel):
    """
    Output of solve_all: kernels of every bus, the stacked model they induce and per-bus diagnostics.

    `violations` counts constraint breaches of the kernels as solved, before the hierarchy
    zeroing pass: {"hollow", "pairs", "hierarchy"}.
    """

    kernels: VolterraKernels
    stacked: StackedModel
    solutions: List[BusSolution]
    violations: Dict[str, int] = Field(default_factory=dict)

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def diagnostics(self, include_trace: bool = True) -> List[dict]:
        return [s.diagnostics(include_trace) for s in self.solutions]
