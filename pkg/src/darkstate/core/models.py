"""Core data models for the simulator.

All angular frequencies and rates are in rad/ns (rates of population decay in
1/ns). Conversion from the linear GHz/MHz values quoted in configuration files
happens once, in :mod:`darkstate.config.loader`.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Tuple, Union

from darkstate.core.errors import NumericalInvariantError, PhysicsPreconditionError

TWO_PI = 2.0 * math.pi
RESONANCE_TOLERANCE = 1e-9  # rad/ns
POPULATION_SLACK = 1e-8


def ghz_to_angular(freq_ghz: float) -> float:
    """Convert a linear frequency in GHz to rad/ns."""
    return TWO_PI * freq_ghz


def mhz_to_angular(freq_mhz: float) -> float:
    """Convert a linear frequency in MHz to rad/ns."""
    return TWO_PI * freq_mhz * 1e-3


def angular_to_ghz(omega: float) -> float:
    """Convert rad/ns to a linear frequency in GHz."""
    return omega / TWO_PI


def angular_to_mhz(omega: float) -> float:
    """Convert rad/ns to a linear frequency in MHz."""
    return omega / TWO_PI * 1e3


class TargetState(Enum):
    """States a lifetime experiment can prepare."""

    PSI_A = "psi_a"
    PSI_S = "psi_s"
    EG = "eg"  # qubit 1 excited
    GE = "ge"  # qubit 2 excited


class SpectroscopyMode(Enum):
    """How spectroscopy populations are computed."""

    ANALYTIC = "analytic"
    MASTER_EQUATION = "master_equation"


class LineBranch(Enum):
    """Symmetry branch of a spectroscopic line."""

    SYMMETRIC = "s"
    ANTISYMMETRIC = "a"

    @property
    def sign(self) -> float:
        """Sign of the interference term in the transition matrix element."""
        return 1.0 if self is LineBranch.SYMMETRIC else -1.0


def _per_qubit(values: Tuple[float, ...], n_qubits: int, name: str) -> None:
    if len(values) != n_qubits:
        raise PhysicsPreconditionError(
            f"{name} has {len(values)} entries but the device has {n_qubits} qubits"
        )


@dataclass(frozen=True)
class DeviceParams:
    """Cavity and qubit parameters of the device.

    Attributes:
        omega_r: Cavity angular frequency (rad/ns)
        omega_q: Per-qubit angular frequency (rad/ns)
        g: Per-qubit coupling strength (rad/ns)
        kappa: Cavity energy decay rate (1/ns)
        gamma_i: Per-qubit intrinsic relaxation rate (1/ns)
        gamma_phi: Per-qubit pure dephasing rate 1/T_{2,phi} (1/ns)
        n_max: Highest Fock state kept for the cavity
        n_qubits: Number of qubits

    The transmon Josephson and charging energies of the measured sample
    (E_J/h = 37.6 GHz, E_C/h = 285 MHz) are carried as configuration metadata
    only; the qubits are modelled as two-level systems.
    """

    omega_r: float
    omega_q: Tuple[float, ...]
    g: Tuple[float, ...]
    kappa: float
    gamma_i: Tuple[float, ...]
    gamma_phi: Tuple[float, ...]
    n_max: int = 3
    n_qubits: int = 2

    def __post_init__(self) -> None:
        if self.n_qubits < 2:
            raise PhysicsPreconditionError(f"n_qubits must be >= 2, got {self.n_qubits}")
        if self.n_max < 2:
            raise PhysicsPreconditionError(
                f"n_max must be >= 2 to hold the double-excitation manifold, got {self.n_max}"
            )
        for name in ("omega_q", "g", "gamma_i", "gamma_phi"):
            values = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, values)
            _per_qubit(values, self.n_qubits, name)
        if self.omega_r <= 0 or any(w <= 0 for w in self.omega_q):
            raise PhysicsPreconditionError("frequencies must be positive")
        if self.kappa < 0 or any(r < 0 for r in self.gamma_i + self.gamma_phi):
            raise PhysicsPreconditionError("rates must be non-negative")

    @classmethod
    def uniform(
        cls,
        omega_r: float,
        omega_q: float,
        g: float,
        kappa: float,
        gamma_i: float = 0.0,
        gamma_phi: float = 0.0,
        n_max: int = 3,
        n_qubits: int = 2,
    ) -> "DeviceParams":
        """Build a device whose qubits share frequency, coupling and rates."""
        return cls(
            omega_r=omega_r,
            omega_q=(omega_q,) * n_qubits,
            g=(g,) * n_qubits,
            kappa=kappa,
            gamma_i=(gamma_i,) * n_qubits,
            gamma_phi=(gamma_phi,) * n_qubits,
            n_max=n_max,
            n_qubits=n_qubits,
        )

    @property
    def subsystem_dims(self) -> Tuple[int, ...]:
        """Dimensions in basis order: cavity first, then the qubits."""
        return (self.n_max + 1,) + (2,) * self.n_qubits

    @property
    def delta(self) -> float:
        """Detuning omega_q - omega_r of the first qubit (rad/ns)."""
        return self.omega_q[0] - self.omega_r

    @property
    def is_resonant(self) -> bool:
        """True if all qubits share one frequency within the resonance tolerance."""
        return max(self.omega_q) - min(self.omega_q) < RESONANCE_TOLERANCE

    def with_detuning(self, delta: float) -> "DeviceParams":
        """Copy with every qubit placed at omega_r + delta."""
        return replace(self, omega_q=(self.omega_r + delta,) * self.n_qubits)

    def with_n_max(self, n_max: int) -> "DeviceParams":
        """Copy with a different Fock truncation."""
        return replace(self, n_max=n_max)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to a JSON-friendly dictionary."""
        return {
            "omega_r": self.omega_r,
            "omega_q": list(self.omega_q),
            "g": list(self.g),
            "kappa": self.kappa,
            "gamma_i": list(self.gamma_i),
            "gamma_phi": list(self.gamma_phi),
            "n_max": self.n_max,
            "n_qubits": self.n_qubits,
        }


@dataclass(frozen=True)
class DriveParams:
    """Local two-qubit drive.

    Attributes:
        epsilon: Drive strength on qubit 1 (rad/ns)
        xi: Amplitude imbalance of qubit 2 relative to qubit 1
        phi: Relative phase of the qubit 2 drive, wrapped into [0, 2pi)
        omega_d: Drive angular frequency (rad/ns)
    """

    epsilon: float
    xi: float = 1.0
    phi: float = 0.0
    omega_d: float = 0.0

    def __post_init__(self) -> None:
        if self.xi < 0:
            raise PhysicsPreconditionError(f"xi must be >= 0, got {self.xi}")
        if self.epsilon < 0:
            raise PhysicsPreconditionError(f"epsilon must be >= 0, got {self.epsilon}")
        object.__setattr__(self, "phi", float(self.phi) % TWO_PI)

    def with_phase(self, phi: float) -> "DriveParams":
        """Copy with another relative phase."""
        return replace(self, phi=phi)

    def with_frequency(self, omega_d: float) -> "DriveParams":
        """Copy with another drive frequency."""
        return replace(self, omega_d=omega_d)


@dataclass
class ExperimentRecord:
    """One row of a simulated experiment.

    Attributes:
        coordinates: Sweep coordinates in output order (e.g. phi_rad, omega_d_ghz)
        observable: Name of the recorded quantity
        value: Observable value
        metadata: Provenance (config hash, n_max, integrator step, ...)
    """

    coordinates: Dict[str, Union[float, str]]
    observable: str
    value: float
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.observable == "population":
            if not -POPULATION_SLACK <= self.value <= 1.0 + POPULATION_SLACK:
                raise NumericalInvariantError(
                    f"population {self.value!r} outside [0, 1]",
                    {"coordinates": dict(self.coordinates)},
                )
            self.value = max(self.value, 0.0)

    @property
    def sort_key(self) -> Tuple[Any, ...]:
        """Key ordering records by their sweep coordinates."""
        return tuple(self.coordinates.values())

    def to_dict(self) -> Dict[str, Any]:
        """Convert record to dictionary."""
        return {
            **self.coordinates,
            self.observable: self.value,
            "metadata": dict(self.metadata),
        }
