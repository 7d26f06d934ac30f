from __future__ import annotations

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    from enum import Enum

    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__


class Method(StrEnum):
    """
    Topology identification methods compared by `evaluate`.
    """

    VOLTERRA = "volterra"
    PC = "pc"
    CONCENTRATION = "concentration"
