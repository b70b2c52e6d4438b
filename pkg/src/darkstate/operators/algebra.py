"""Dense operators on the cavity-qubit product space.

Basis convention: the cavity factor comes first, followed by the qubits in
index order. Each qubit is ordered (g, e) with sigma_z|e> = +|e>.
"""

from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Sequence, Tuple, Union

import numpy as np
import scipy.linalg

from darkstate.core.errors import (
    InvalidTruncationError,
    LayoutError,
    NormalizationError,
    NotHermitianError,
)

HERMITIAN_TOLERANCE = 1e-12
NORM_TOLERANCE = 1e-12
EIG_HERMITIAN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered subsystem dimensions of a product Hilbert space.

    A layout with a single factor describes a local operator (one cavity or
    one qubit). Composite layouts put the cavity (dimension n_max + 1) at
    index 0 and qubits (dimension 2) at indices 1..N.
    """

    subsystem_dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.subsystem_dims)
        object.__setattr__(self, "subsystem_dims", dims)
        if not dims:
            raise LayoutError("layout needs at least one subsystem")
        if any(d < 2 for d in dims):
            raise LayoutError(f"every subsystem dimension must be >= 2, got {dims}")
        if len(dims) > 1 and any(d != 2 for d in dims[1:]):
            raise LayoutError(f"subsystems after the cavity must be qubits, got {dims}")

    @classmethod
    def cavity_qubits(cls, n_max: int, n_qubits: int) -> "SpaceLayout":
        """Layout of one cavity truncated at n_max photons and n_qubits qubits."""
        if n_max < 1:
            raise InvalidTruncationError(f"n_max must be >= 1, got {n_max}")
        if n_qubits < 1:
            raise LayoutError(f"need at least one qubit, got {n_qubits}")
        return cls((n_max + 1,) + (2,) * n_qubits)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.subsystem_dims))

    @property
    def is_composite(self) -> bool:
        return len(self.subsystem_dims) > 1

    @property
    def n_max(self) -> int:
        return self.subsystem_dims[0] - 1

    @property
    def n_qubits(self) -> int:
        return len(self.subsystem_dims) - 1

    def index(self, labels: Sequence[int]) -> int:
        """Flat basis index of a product state, e.g. (n, q1, q2)."""
        if len(labels) != len(self.subsystem_dims):
            raise LayoutError(f"expected {len(self.subsystem_dims)} labels, got {len(labels)}")
        for label, dim in zip(labels, self.subsystem_dims):
            if not 0 <= label < dim:
                raise LayoutError(f"label {label} out of range for dimension {dim}")
        return int(np.ravel_multi_index(tuple(labels), self.subsystem_dims))


@dataclass(frozen=True, eq=False)
class Operator:
    """Complex square matrix tagged with its space layout.

    Entries are copied and made read-only on construction.
    """

    layout: SpaceLayout
    entries: np.ndarray
    hermitian: bool = False

    # numpy scalars defer to __rmul__ instead of broadcasting over the object
    __array_ufunc__ = None

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.complex128)
        dim = self.layout.total_dim
        if entries.shape != (dim, dim):
            raise LayoutError(f"operator shape {entries.shape} does not match dimension {dim}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        if self.hermitian and self.hermiticity_error() >= HERMITIAN_TOLERANCE:
            raise NotHermitianError(
                f"operator flagged Hermitian deviates by {self.hermiticity_error():.3e}"
            )

    def hermiticity_error(self) -> float:
        """Largest entry of |A - A^dagger|."""
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOLERANCE) -> bool:
        return self.hermiticity_error() < tol

    def dag(self) -> "Operator":
        """Hermitian conjugate; keeps the Hermitian flag."""
        return Operator(self.layout, self.entries.conj().T, self.hermitian)

    def trace(self) -> complex:
        """Sum of the diagonal entries."""
        return complex(np.trace(self.entries))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    def _check(self, other: "Operator") -> None:
        if other.layout != self.layout:
            raise LayoutError(f"layouts differ: {self.layout} vs {other.layout}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(
            self.layout, self.entries + other.entries, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(
            self.layout, self.entries - other.entries, self.hermitian and other.hermitian
        )

    def __neg__(self) -> "Operator":
        return Operator(self.layout, -self.entries, self.hermitian)

    def __mul__(self, scalar: complex) -> "Operator":
        real = bool(np.isreal(scalar))
        return Operator(self.layout, scalar * self.entries, self.hermitian and real)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.layout, self.entries @ other.entries)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Ket on a space layout."""

    layout: SpaceLayout
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amplitudes.shape != (self.layout.total_dim,):
            raise LayoutError(
                f"state length {amplitudes.shape[0]} does not match {self.layout.total_dim}"
            )
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)
        if self.normalized and abs(self.norm() - 1.0) >= NORM_TOLERANCE:
            raise NormalizationError(f"state norm is {self.norm():.15f}, expected 1")

    def norm(self) -> float:
        """Euclidean norm of the amplitudes."""
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.layout != self.layout:
            raise LayoutError("states live on different layouts")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def matrix_element(self, op: Operator, other: "StateVector") -> complex:
        """<self|op|other>."""
        if op.layout != self.layout or other.layout != self.layout:
            raise LayoutError("operator and states live on different layouts")
        return complex(np.vdot(self.amplitudes, op.entries @ other.amplitudes))

    def projector(self) -> Operator:
        """|psi><psi|."""
        return Operator(
            self.layout, np.outer(self.amplitudes, self.amplitudes.conj()), hermitian=True
        )


class Pauli(Enum):
    """Single-qubit operators in the (g, e) basis."""

    X = "x"
    Y = "y"
    Z = "z"
    PLUS = "plus"
    MINUS = "minus"


_QUBIT = SpaceLayout((2,))
_PAULI_MATRICES = {
    Pauli.X: np.array([[0, 1], [1, 0]], dtype=np.complex128),
    # sigma_y = i(sigma_- - sigma_+) so that sigma_+- = (sigma_x +- i sigma_y)/2
    Pauli.Y: np.array([[0, 1j], [-1j, 0]], dtype=np.complex128),
    Pauli.Z: np.array([[-1, 0], [0, 1]], dtype=np.complex128),
    Pauli.PLUS: np.array([[0, 0], [1, 0]], dtype=np.complex128),
    Pauli.MINUS: np.array([[0, 1], [0, 0]], dtype=np.complex128),
}


def pauli(kind: Union[Pauli, str]) -> Operator:
    """Single-qubit Pauli or ladder operator.

    Args:
        kind: One of x, y, z, plus, minus

    Returns:
        2x2 operator on a local qubit layout
    """
    try:
        key = Pauli(kind)
    except ValueError as exc:
        raise LayoutError(f"unknown Pauli kind {kind!r}") from exc
    return Operator(_QUBIT, _PAULI_MATRICES[key], hermitian=key in (Pauli.X, Pauli.Y, Pauli.Z))


def annihilation(n_max: int) -> Operator:
    """Cavity lowering operator truncated at n_max photons.

    Raises:
        InvalidTruncationError: If n_max < 1
    """
    if n_max < 1:
        raise InvalidTruncationError(f"n_max must be >= 1, got {n_max}")
    entries = np.diag(np.sqrt(np.arange(1, n_max + 1, dtype=float)), k=1)
    return Operator(SpaceLayout((n_max + 1,)), entries)


def identity(layout: SpaceLayout) -> Operator:
    """Identity on the full layout."""
    return Operator(layout, np.eye(layout.total_dim), hermitian=True)


def zero(layout: SpaceLayout) -> Operator:
    """Zero operator, flagged Hermitian."""
    return Operator(layout, np.zeros((layout.total_dim, layout.total_dim)), hermitian=True)


def embed(op: Operator, layout: SpaceLayout, site: int) -> Operator:
    """Lift a single-subsystem operator onto the full layout.

    Args:
        op: Operator acting on one subsystem
        layout: Target product layout
        site: Index of the subsystem op acts on

    Returns:
        op on `site`, identity on every other factor

    Raises:
        LayoutError: If the site is out of range or dimensions differ
    """
    dims = layout.subsystem_dims
    if not 0 <= site < len(dims):
        raise LayoutError(f"site {site} out of range for layout {dims}")
    if op.layout.total_dim != dims[site]:
        raise LayoutError(
            f"operator dimension {op.layout.total_dim} does not match subsystem {site} "
            f"of dimension {dims[site]}"
        )
    factors = [op.entries if i == site else np.eye(d) for i, d in enumerate(dims)]
    return Operator(layout, reduce(np.kron, factors), op.hermitian)


def commutator(a: Operator, b: Operator) -> Operator:
    """[a, b] = ab - ba."""
    return a @ b - b @ a


def tensor(*ops: Operator) -> Operator:
    """Kronecker product of operators, first argument slowest-varying.

    Raises:
        LayoutError: If no operators are given or the combined factors do not
            form a valid layout
    """
    if not ops:
        raise LayoutError("tensor needs at least one operator")
    dims = tuple(d for op in ops for d in op.layout.subsystem_dims)
    entries = reduce(np.kron, [op.entries for op in ops])
    return Operator(SpaceLayout(dims), entries, all(op.hermitian for op in ops))


def basis_state(layout: SpaceLayout, labels: Sequence[int]) -> StateVector:
    """Product basis ket, e.g. basis_state(layout, (1, 0, 0)) = |1;gg>."""
    amplitudes = np.zeros(layout.total_dim, dtype=np.complex128)
    amplitudes[layout.index(labels)] = 1.0
    return StateVector(layout, amplitudes)


def hermitian_eig(op: Operator) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian operator.

    Eigenvalues are ascending; eigenvectors are orthonormal columns whose
    largest-magnitude component is real and positive.

    Raises:
        NotHermitianError: If op deviates from Hermitian by 1e-10 or more
    """
    error = op.hermiticity_error()
    if error >= EIG_HERMITIAN_TOLERANCE:
        raise NotHermitianError(f"hermitian_eig needs a Hermitian operator, deviation {error:.3e}")
    matrix = 0.5 * (op.entries + op.entries.conj().T)
    eigenvalues, eigenvectors = scipy.linalg.eigh(matrix)
    pivots = np.argmax(np.abs(eigenvectors), axis=0)
    pivot_values = eigenvectors[pivots, np.arange(eigenvectors.shape[1])]
    eigenvectors = eigenvectors * (pivot_values.conj() / np.abs(pivot_values))
    return eigenvalues, eigenvectors
