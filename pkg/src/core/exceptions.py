"""Exception hierarchy for samplers, oracles and run configuration"""

from typing import Any, List, Optional


class KineticError(Exception):
    """Base class for all errors raised by the toolkit"""


class ContractViolation(KineticError):
    """A caller-supplied function or argument broke its contract"""


class DominanceViolation(ContractViolation):
    """A deeper thinning level exceeded a shallower one"""


class ConfigurationError(KineticError):
    """Model parameters that cannot describe a valid sampler"""


class SingularityError(KineticError):
    """Two particles occupy the same position"""


class PreconditionError(KineticError):
    """A mathematical precondition of an estimator does not hold"""


class StepCapExceeded(KineticError):
    """A loop reached its iteration cap before terminating"""

    def __init__(self, message: str, partial_count: int, partial_state: Any = None):
        super().__init__(message)
        self.partial_count = partial_count
        self.partial_state = partial_state


class BoundViolation(KineticError):
    """An acceptance ratio exceeded one, so a rate majorant is wrong"""

    def __init__(self, message: str, ratio: float):
        super().__init__(message)
        self.ratio = ratio


class RunawayError(KineticError):
    """Too many jump events inside a single segment"""


class StateSpaceTooLarge(KineticError):
    """The exact kernel would not fit the enumeration limit"""


class NumericalError(KineticError):
    """An iterative solver did not reach its tolerance"""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class SizeError(KineticError, ValueError):
    """Input sample or series too small for the estimator"""


class DomainError(KineticError, ValueError):
    """Argument outside the domain of a formula"""


class ConfigIssue:
    """One problem found while parsing a run configuration"""

    def __init__(self, line: Optional[int], key: str, message: str):
        self.line = line
        self.key = key
        self.message = message

    def __str__(self) -> str:
        where = f"line {self.line}" if self.line is not None else "flag"
        return f"{where}: {self.key}: {self.message}"

    def __repr__(self) -> str:
        return f"ConfigIssue(line={self.line!r}, key={self.key!r}, message={self.message!r})"


class ConfigErrors(KineticError):
    """All problems found in a run configuration"""

    def __init__(self, issues: List[ConfigIssue]):
        super().__init__("; ".join(str(issue) for issue in issues))
        self.issues = issues
