"""Exception hierarchy shared by every module."""


class BicommError(Exception):
    """Base class for all library errors."""


class InvalidInputError(BicommError, ValueError):
    """Non-finite samples or malformed arrays."""


class AlignmentError(BicommError, ValueError):
    """Rectangle or grid mismatch."""


class ResolutionError(BicommError, ValueError):
    """A cube or block is finer than the grid supports."""


class DegenerateInputError(BicommError, ValueError):
    """Zero input where a normalization is required."""


class ConfigurationError(BicommError, ValueError):
    """Unknown names or inconsistent parameters."""


class ParameterError(BicommError, ValueError):
    """Parameter outside its admissible range."""


class SingularityError(BicommError, ValueError):
    """Kernel evaluated on the diagonal."""


class TruncationError(BicommError, ValueError):
    """Truncation radius below the grid spacing."""


class GeometryError(BicommError, ValueError):
    """Reflected cube would wrap onto the original cube."""


class DegenerateKernelError(BicommError, ArithmeticError):
    """Denominator too small in the weak factorization."""


class ContractError(BicommError, RuntimeError):
    """A black-box operator violated linearity."""


class BudgetError(BicommError, RuntimeError):
    """An iteration or recursion budget was exhausted."""
