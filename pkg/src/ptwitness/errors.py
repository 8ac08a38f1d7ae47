"""Exception hierarchy shared by every module."""


class PTWitnessError(Exception):
    """Base class for all errors raised by the package."""


class DimensionError(PTWitnessError, ValueError):
    """Mode counts of the operands do not agree, or an index is out of range."""


class CapacityError(PTWitnessError):
    """A hard size limit was exceeded (occupation, enumeration or matrix cap)."""


class ContractError(PTWitnessError, ValueError):
    """An operation was called with input violating its precondition."""


class DegenerateStateError(PTWitnessError, ValueError):
    """A state with zero norm where a normalizable one is required."""
