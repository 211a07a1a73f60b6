"""
Error hierarchy for bayesqst.

Every error carries a ``detail`` message and the process ``exit_code`` the
command-line front end uses when the error escapes a subcommand.
"""

from typing import Dict, Optional


class QstError(Exception):
    """Base class for all bayesqst errors."""

    exit_code: int = 1

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class UsageError(QstError):
    """Inconsistent or out-of-range options."""

    exit_code = 2


class InsufficientChains(UsageError):
    """A chain subset larger than the persisted pool was requested."""


class NumericalError(QstError):
    """Linear-algebra or sampling input outside the operation's domain."""

    exit_code = 3


class DimensionMismatch(NumericalError):
    pass


class NotHermitian(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class InvalidDensityMatrix(NumericalError):
    pass


class DegenerateDecomposition(NumericalError):
    pass


class DegenerateState(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class DegenerateChain(NumericalError):
    pass


class InvalidDataset(QstError):
    """Counts data violating the dataset invariants."""

    exit_code = 4


class InvalidStateFile(QstError):
    """A density-matrix file that cannot be read or is not a valid state."""

    exit_code = 5


class OutputError(QstError):
    """An output path that cannot be written."""

    exit_code = 6


class SampleDirError(QstError):
    """Missing, empty or corrupt sample directory."""

    exit_code = 7


class EmptyPool(SampleDirError):
    pass


class ChainFailure(QstError):
    """One or more chains failed; completed chains are left intact."""

    exit_code = 8

    def __init__(self, failures: Dict[int, str]):
        self.failures = dict(sorted(failures.items()))
        indices = ", ".join(str(r) for r in self.failures)
        super().__init__(f"{len(self.failures)} chain(s) failed: {indices}")
