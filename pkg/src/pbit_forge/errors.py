"""Exception types shared across the package."""


class ContractError(ValueError):
    """A precondition on shapes, domains or parameter ranges was violated."""


class CapacityError(ContractError):
    """An exhaustive computation was requested beyond its configured size cap."""


class MappingError(ContractError):
    """A model cannot be lowered onto the crossbar (sign or quantization)."""

    def __init__(self, message, offenders=()):
        super().__init__(message)
        self.offenders = list(offenders)


class ComplianceError(ContractError):
    """An SMTJ drive voltage exceeds the device compliance voltage."""


class ProgrammingError(RuntimeError):
    """Program-and-verify left cells outside tolerance after the pulse budget."""

    def __init__(self, message, failed=()):
        super().__init__(message)
        self.failed = list(failed)
