"""Exception hierarchy shared by all modules."""


class PruneLabError(Exception):
    """Base class for errors raised by prune_lab."""


class DimensionError(PruneLabError, ValueError):
    pass


class StructureError(PruneLabError, ValueError):
    """Index sets or groups do not have the required structure."""


class ContractError(PruneLabError, ValueError):
    """A documented precondition of an operation was violated."""


class DomainError(PruneLabError, ValueError):
    pass


class DegenerateRegimeError(PruneLabError, ArithmeticError):
    pass


class SingularMatrixError(PruneLabError, ArithmeticError):
    pass


class UnsupportedOperation(PruneLabError, NotImplementedError):
    pass


class DivergenceError(PruneLabError, ArithmeticError):
    """Training blew up. The partial trajectory is kept on ``trajectory``."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = list(trajectory or [])


class ConfigError(PruneLabError, ValueError):
    """Raised with every offending key listed in ``problems``."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join("  " + p for p in self.problems))
