"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line runner:
2 for configuration problems, 3 for numerical failures and 4 for
operations a backend does not support.
"""


class GradedPsiError(Exception):
    exit_code = 3


class ConfigurationError(GradedPsiError, ValueError):
    exit_code = 2


class ShapeError(GradedPsiError, ValueError):
    pass


class DomainError(GradedPsiError, ValueError):
    pass


class BoundaryError(GradedPsiError, ValueError):
    pass


class ContractError(GradedPsiError, ValueError):
    pass


class UnsupportedOperationError(GradedPsiError, NotImplementedError):
    exit_code = 4


class SingularResolventError(GradedPsiError, ArithmeticError):
    pass


class NotEllipticError(GradedPsiError, ArithmeticError):
    pass


class ContourViolationError(GradedPsiError, ArithmeticError):
    pass


class DecayContractError(ContractError):
    pass


class PositivityError(GradedPsiError, ArithmeticError):
    pass


class NumericalAccuracyError(GradedPsiError, ArithmeticError):
    pass


class InstabilityError(GradedPsiError, ArithmeticError):
    pass


class StiffnessError(GradedPsiError, ArithmeticError):
    pass
