"""Error hierarchy shared by every darkstate module.

Each error carries the process exit code the CLI uses when it surfaces.
"""

from typing import Any, Dict, Optional


class DarkStateError(Exception):
    """Base class for all darkstate errors."""

    exit_code: int = 1


class ConfigError(DarkStateError):
    """Run configuration could not be parsed or validated.

    Attributes:
        key_path: Dotted path of the offending key, if known
        line: 1-based line number in the YAML file, if known
    """

    exit_code = 2

    def __init__(
        self, message: str, key_path: Optional[str] = None, line: Optional[int] = None
    ) -> None:
        location = ""
        if key_path:
            location = f" [{key_path}]"
        if line is not None:
            location += f" (line {line})"
        super().__init__(f"{message}{location}")
        self.key_path = key_path
        self.line = line


class PhysicsPreconditionError(DarkStateError, ValueError):
    """A physical or structural precondition of an operation does not hold."""

    exit_code = 3


class InvalidTruncationError(PhysicsPreconditionError):
    """Fock-space truncation is too small."""


class LayoutError(PhysicsPreconditionError):
    """Operator or state dimensions do not match the space layout."""


class UnsupportedDriveError(PhysicsPreconditionError):
    """The local drive Hamiltonian is only defined for two qubits."""


class ResonanceError(PhysicsPreconditionError):
    """Qubits are not resonant with each other or couplings differ."""


class JUndefinedError(PhysicsPreconditionError, ZeroDivisionError):
    """The dispersive J-coupling is undefined at zero detuning."""


class NonUniqueSteadyStateError(PhysicsPreconditionError):
    """The Liouvillian has a degenerate null space."""


class NotHermitianError(PhysicsPreconditionError):
    """An operator expected to be Hermitian is not."""


class NormalizationError(PhysicsPreconditionError):
    """A state vector or density matrix is not normalized."""


class GridError(PhysicsPreconditionError):
    """A sweep grid is empty, not monotone or violates a guard."""


class NumericalInvariantError(DarkStateError):
    """A numerical invariant was violated beyond its tolerance.

    Attributes:
        diagnostics: Values describing where and by how much it failed
    """

    exit_code = 4

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class FitError(DarkStateError):
    """A least-squares fit could not be carried out."""

    exit_code = 4


class RankDeficiencyError(FitError):
    """The normal matrix is singular.

    Attributes:
        combination: Parameter weights spanning the unidentifiable direction
    """

    def __init__(self, message: str, combination: Dict[str, float]) -> None:
        super().__init__(message)
        self.combination = combination


class OutputError(DarkStateError):
    """Results could not be written or failed schema validation."""

    exit_code = 1
