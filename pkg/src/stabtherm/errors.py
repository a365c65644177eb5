"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, CapacityError -> 3,
NumericalError -> 4; everything else is a programming error and propagates.
"""


class StabthermError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(StabthermError):
    """Operands act on different numbers of qubits / incompatible dimensions."""


class ParameterError(StabthermError):
    """A physical or structural parameter is out of its allowed range."""


class CapacityError(StabthermError):
    """A requested object exceeds the configured dense/sparse size limits."""


class ModelError(StabthermError):
    """A model-level contract is violated (non-commuting stabilizers,
    mismatched decomposition, incomplete operator coverage, ...)."""


class NumericalError(StabthermError):
    """An iterative numerical procedure failed to converge or went unstable."""


class ScheduleError(StabthermError):
    """A gate schedule is malformed (bad qubit index, dangling classical bit)."""


class ConfigError(StabthermError):
    """An experiment configuration fails schema validation."""
