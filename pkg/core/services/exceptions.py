from __future__ import annotations

from typing import Any, Dict, Optional


class GridVolterraError(Exception):
    """
    Base class for every error raised by the identification pipeline.

    Subclasses keep their structured context as attributes so callers
    (CLI, HTTP views) can serialize them without parsing the message.
    """

    def __init__(self, msg: str):
        super().__init__(msg)
        self.msg = msg

    def details(self) -> Dict[str, Any]:
        return {}

    def as_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "message": self.msg,
            "details": self.details(),
        }


# ---------- grid ----------

class GridError(GridVolterraError):
    pass


class CycleDetected(GridError):
    """
    Raised when following parent links from a bus never reaches the root.
    """
    def __init__(self, cycle: list[int]):
        super().__init__(f"Cycle detected among buses {cycle}")
        self.cycle = list(cycle)

    def details(self) -> Dict[str, Any]:
        return {"cycle": self.cycle}


class DisconnectedBus(GridError):
    """
    Raised when a declared non-root bus has no line connecting it to a parent.
    """
    def __init__(self, bus: int):
        super().__init__(f"Bus {bus} has no line to a parent bus")
        self.bus = bus

    def details(self) -> Dict[str, Any]:
        return {"bus": self.bus}


class DuplicateChild(GridError):
    def __init__(self, bus: int):
        super().__init__(f"Bus {bus} appears as child of more than one line")
        self.bus = bus

    def details(self) -> Dict[str, Any]:
        return {"bus": self.bus}


class BadIndex(GridError):
    def __init__(self, msg: str, bus: Optional[int] = None):
        super().__init__(msg)
        self.bus = bus

    def details(self) -> Dict[str, Any]:
        return {"bus": self.bus}


class ZeroImpedanceLine(GridError):
    """
    Raised at build time for lines with r <= 0 or x < 0.
    Zero-impedance lines must be merged into their parent bus before identification.
    """
    def __init__(self, child: int, r: float, x: float):
        super().__init__(f"Line into bus {child} has invalid impedance r={r}, x={x}")
        self.child = child
        self.r = r
        self.x = x

    def details(self) -> Dict[str, Any]:
        return {"child": self.child, "r": self.r, "x": self.x}


class SingularIncidence(GridError):
    pass


# ---------- power flow ----------

class PowerFlowError(GridVolterraError):
    """
    Power flow failures. `t` is the time slot when raised from a series simulation.
    """
    def __init__(self, msg: str, t: Optional[int] = None):
        super().__init__(msg)
        self.t = t

    def at_time(self, t: int) -> "PowerFlowError":
        self.t = t
        self.msg = f"t={t}: {self.msg}"
        self.args = (self.msg,)
        return self

    def details(self) -> Dict[str, Any]:
        return {"t": self.t}


class NoConvergence(PowerFlowError):
    def __init__(self, iterations: int, residual: float, t: Optional[int] = None):
        super().__init__(
            f"Backward/forward sweep did not converge after {iterations} iterations "
            f"(residual={residual:.3e})",
            t=t,
        )
        self.iterations = iterations
        self.residual = residual

    def details(self) -> Dict[str, Any]:
        return {"t": self.t, "iterations": self.iterations, "residual": self.residual}


class NonPositiveVoltage(PowerFlowError):
    """
    Raised when a squared voltage magnitude drops to zero or below (voltage collapse).
    """
    def __init__(self, bus: int, value: float, t: Optional[int] = None):
        super().__init__(f"Voltage collapse at bus {bus} (v={value:.6g})", t=t)
        self.bus = bus
        self.value = value

    def details(self) -> Dict[str, Any]:
        return {"t": self.t, "bus": self.bus, "value": self.value}


# ---------- features ----------

class FeatureError(GridVolterraError):
    pass


class NonFiniteInput(FeatureError):
    def __init__(self, count: int):
        super().__init__(f"Voltage series contains {count} non-finite entries")
        self.count = count

    def details(self) -> Dict[str, Any]:
        return {"count": self.count}


class DimensionMismatch(FeatureError):
    def __init__(self, what: str, expected: Any, got: Any):
        super().__init__(f"{what}: expected {expected}, got {got}")
        self.what = what
        self.expected = expected
        self.got = got

    def details(self) -> Dict[str, Any]:
        return {"what": self.what, "expected": str(self.expected), "got": str(self.got)}


class IllConditionedWarning(UserWarning):
    """
    Emitted when a regression has (numerically) constant regressors or target.
    """


# ---------- solver ----------

class SolverError(GridVolterraError):
    pass


class MaxIterExceeded(SolverError):
    """
    Raised on demand (BusSolution.raise_for_status) when a solve stopped at max_iter.
    The best iterate is still available on `solution`.
    """
    def __init__(self, bus: int, iterations: int, solution: Any = None):
        super().__init__(f"Bus {bus}: solver stopped at max_iter={iterations}")
        self.bus = bus
        self.iterations = iterations
        self.solution = solution

    def details(self) -> Dict[str, Any]:
        return {"bus": self.bus, "iterations": self.iterations}


class BusSolveError(SolverError):
    """
    Per-bus failure inside solve_all. `failed_buses` lists every bus that failed in the same run.
    """
    def __init__(self, bus: int, cause: Exception, failed_buses: Optional[list[int]] = None):
        super().__init__(f"Bus {bus}: {cause}")
        self.bus = bus
        self.cause = cause
        self.failed_buses = list(failed_buses or [bus])

    def details(self) -> Dict[str, Any]:
        return {"bus": self.bus, "cause": type(self.cause).__name__, "failed_buses": self.failed_buses}


# ---------- identify ----------

class IdentifyError(GridVolterraError):
    pass


class DegenerateTruth(IdentifyError):
    def __init__(self, positives: int, negatives: int):
        super().__init__(
            f"ROC needs at least one positive and one negative (got {positives}/{negatives})"
        )
        self.positives = positives
        self.negatives = negatives

    def details(self) -> Dict[str, Any]:
        return {"positives": self.positives, "negatives": self.negatives}


class SingularCovariance(IdentifyError):
    def __init__(self, condition_number: float):
        super().__init__(f"Sample covariance is singular (cond={condition_number:.3e})")
        self.condition_number = condition_number

    def details(self) -> Dict[str, Any]:
        return {"condition_number": self.condition_number}


# ---------- cli / orchestration ----------

class ConfigError(GridVolterraError):
    def __init__(self, msg: str, field: Optional[str] = None):
        super().__init__(msg)
        self.field = field

    def details(self) -> Dict[str, Any]:
        return {"field": self.field}


class StageError(GridVolterraError):
    """
    Wraps any failure raised inside a pipeline stage with the stage tag.
    """
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause

    def details(self) -> Dict[str, Any]:
        inner = self.cause.as_dict() if isinstance(self.cause, GridVolterraError) else {
            "error": type(self.cause).__name__,
            "message": str(self.cause),
        }
        return {"stage": self.stage, "cause": inner}
