"""Exception types raised across the package."""


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class SpecError(ValueError):
    """A process specification is internally inconsistent (e.g. non-PSD covariance)."""


class CapacityError(RuntimeError):
    """A request exceeds a documented size limit."""


class RegimeError(ValueError):
    """A model does not satisfy the hypotheses of the requested evaluator."""


class ModerateDeviationError(ValueError):
    """No stationary point of the moderate-deviation exponent in the bracket."""


class HorizonTooShort(RuntimeError):
    """A sampled path must be extended before the requested quantity is defined."""


class ConfigError(ValueError):
    """An experiment configuration could not be parsed or validated."""
