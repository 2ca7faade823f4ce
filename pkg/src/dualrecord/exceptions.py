"""Exception types raised by the estimators."""


class DualRecordError(ValueError):
    """Base class for all estimation failures."""


class DegenerateTable(DualRecordError):
    """The observed table cannot support the requested estimator (e.g. x11 = 0)."""


class DomainError(DualRecordError):
    """An argument lies outside the domain of a likelihood or transform."""


class HyperparamInfeasible(DualRecordError):
    """The hyperparameter policy yields non-positive prior parameters."""


class DegenerateQuadratic(DualRecordError):
    """The boundary equation has no finite upper root."""


class NoRealRoot(DualRecordError):
    """The boundary quadratic has a negative discriminant."""


class InfeasibleScenario(DualRecordError):
    """Scenario probabilities do not define a valid capture model."""
