from __future__ import annotations

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__


class StepPolicy(StrEnum):
    """
    Step size selection for the proximal gradient solver.
    """

    FIXED = "fixed"
    BACKTRACKING = "backtracking"


class SolveStatus(StrEnum):
    CONVERGED = "Converged"
    MAX_ITER = "MaxIter"


class HierarchyRule(StrEnum):
    """
    How the zero first-order => zero pair implication is enforced after a solve.

    STRONG: a pair coefficient is zeroed when either partner has a zero
            first-order coefficient (row sparsity of R_n).
    WEAK: a pair coefficient is zeroed only when both partners are zero.
    """

    STRONG = "strong"
    WEAK = "weak"


class SelectionCriterion(StrEnum):
    """
    How the regularization sweep picks a model per bus.

    EBIC: supports taken in lasso entry order on standardized columns, scored by the
          extended BIC of their least-squares refit; pairs are screened in a second stage.
    HOLDOUT: (lam, mu = mu_ratio * lam) grid, mean squared error on randomly held out slots.
    """

    EBIC = "ebic"
    HOLDOUT = "holdout"
