"""Exception hierarchy shared by every module of the package."""


class ThermoVIError(Exception):
    """Base class for all errors raised by thermovi."""

    kind = "error"


class InvalidArgument(ThermoVIError, ValueError):
    kind = "invalid-argument"


class DegenerateElement(ThermoVIError):
    kind = "degenerate-element"

    def __init__(self, element, volume=0.0):
        self.element = int(element)
        self.volume = float(volume)
        super().__init__(f"element {self.element} is degenerate (signed volume {self.volume:g})")


class InvertedElement(ThermoVIError):
    """det F <= 0 somewhere; ``element`` is filled in when known."""

    kind = "inverted-element"

    def __init__(self, element=None, jacobian=None):
        self.element = None if element is None else int(element)
        self.jacobian = None if jacobian is None else float(jacobian)
        where = "" if self.element is None else f" in element {self.element}"
        super().__init__(f"non-positive deformation Jacobian{where} (J = {self.jacobian})")


class InvalidTemperature(ThermoVIError):
    kind = "invalid-temperature"


class OutOfRangeTemperature(ThermoVIError):
    kind = "out-of-range-temperature"

    def __init__(self, message, nodes=None):
        self.nodes = nodes
        super().__init__(message)


class SolverFailure(ThermoVIError):
    kind = "solver-failure"

    def __init__(self, message, residual=float("nan")):
        self.residual = float(residual)
        super().__init__(f"{message} (residual {self.residual:.3e})")


class UndefinedCoupling(ThermoVIError):
    kind = "undefined-coupling"


class UnsupportedEstimate(ThermoVIError):
    kind = "unsupported-estimate"


class UndefinedRelativeError(ThermoVIError):
    kind = "undefined-relative-error"


class ScenarioError(ThermoVIError):
    """Configuration problem; ``line`` is 1-based when it can be located."""

    kind = "parse-error"

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class StepFailure(ThermoVIError):
    kind = "step-failure"

    def __init__(self, step, cause):
        self.step = int(step)
        self.cause = cause
        super().__init__(f"step {self.step} failed: {getattr(cause, 'kind', type(cause).__name__)}: {cause}")

    @property
    def cause_kind(self) -> str:
        return getattr(self.cause, "kind", type(self.cause).__name__)
