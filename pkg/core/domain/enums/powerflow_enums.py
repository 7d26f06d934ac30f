from __future__ import annotations

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__


class FlowModel(StrEnum):
    """
    Power flow model used to turn injections into voltages.

    EXACT: branch flow equations solved by backward/forward sweep.
    LINEAR: linearized DistFlow, closed form through the sensitivity matrices.
    """

    EXACT = "exact"
    LINEAR = "linear"
