"""Tavis-Cummings Hamiltonian, local drive and dressed single-excitation states."""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from darkstate.core.errors import (
    JUndefinedError,
    LayoutError,
    NormalizationError,
    PhysicsPreconditionError,
    ResonanceError,
    UnsupportedDriveError,
)
from darkstate.core.models import DeviceParams, DriveParams, TargetState
from darkstate.operators.algebra import (
    NORM_TOLERANCE,
    Operator,
    SpaceLayout,
    StateVector,
    annihilation,
    basis_state,
    embed,
    hermitian_eig,
    pauli,
    zero,
)

logger = logging.getLogger(__name__)

COUPLING_TOLERANCE = 1e-6  # relative
DARK_THRESHOLD = 1e-10  # relative to epsilon


def device_layout(params: DeviceParams) -> SpaceLayout:
    """Space layout matching a device: cavity then n_qubits qubits."""
    return SpaceLayout.cavity_qubits(params.n_max, params.n_qubits)


def cavity_lowering(layout: SpaceLayout) -> Operator:
    """Cavity annihilation operator a on the full layout."""
    return embed(annihilation(layout.n_max), layout, 0)


def qubit_operator(layout: SpaceLayout, kind: str, qubit: int) -> Operator:
    """Pauli operator on qubit `qubit` (0-based) of the layout."""
    return embed(pauli(kind), layout, qubit + 1)


def excitation_number(layout: SpaceLayout) -> Operator:
    """N_exc = a^dagger a + sum_i |e><e|_i."""
    a = cavity_lowering(layout)
    n_exc = a.dag() @ a
    for i in range(layout.n_qubits):
        n_exc = n_exc + qubit_operator(layout, "plus", i) @ qubit_operator(layout, "minus", i)
    return Operator(layout, n_exc.entries, hermitian=True)


def ground_state(layout: SpaceLayout) -> StateVector:
    """|0;g...g>."""
    return basis_state(layout, (0,) * len(layout.subsystem_dims))


def _check_layout(layout: SpaceLayout, params: DeviceParams) -> None:
    if layout.subsystem_dims != params.subsystem_dims:
        raise LayoutError(
            f"layout {layout.subsystem_dims} does not match device {params.subsystem_dims}"
        )


def build_htc(layout: SpaceLayout, params: DeviceParams) -> Operator:
    """Generalized Tavis-Cummings Hamiltonian.

    H/hbar = omega_r a^dagger a + sum_i (omega_q[i]/2) sigma_z^(i)
             + sum_i g[i] (a sigma_+^(i) + a^dagger sigma_-^(i))

    Args:
        layout: Product layout (cavity, qubits)
        params: Device parameters matching the layout

    Returns:
        Hermitian Hamiltonian in rad/ns
    """
    _check_layout(layout, params)
    a = cavity_lowering(layout)
    h = params.omega_r * (a.dag() @ a)
    for i in range(params.n_qubits):
        sigma_plus = qubit_operator(layout, "plus", i)
        h = h + 0.5 * params.omega_q[i] * qubit_operator(layout, "z", i)
        h = h + params.g[i] * (a @ sigma_plus + a.dag() @ sigma_plus.dag())
    return Operator(layout, h.entries, hermitian=True)


def collective_ops(layout: SpaceLayout) -> Tuple[Operator, Operator, Operator]:
    """Collective spin operators (J_z, J_+, J_-)."""
    j_z = zero(layout)
    j_plus = Operator(layout, np.zeros((layout.total_dim, layout.total_dim)))
    for i in range(layout.n_qubits):
        j_z = j_z + 0.5 * qubit_operator(layout, "z", i)
        j_plus = j_plus + qubit_operator(layout, "plus", i)
    return j_z, j_plus, j_plus.dag()


@dataclass(frozen=True, eq=False)
class DressedStates:
    """Single-excitation eigenstates of the resonant two-qubit Tavis-Cummings model.

    Frequencies are transition frequencies from |0;gg> in rad/ns.

    Attributes:
        theta_m: Mixing angle, pi + t with t in [0, pi/2]
        psi_a: Antisymmetric dark state |0;psi_->
        psi_s: Qubit-like symmetric state (lower branch for Delta < 0)
        psi_r: Photon-like symmetric state (upper branch for Delta < 0)
        omega_a: Frequency of psi_a
        omega_s: Frequency of psi_s
        omega_r_dressed: Frequency of psi_r
        j_coupling: g^2/Delta; NaN at resonance where it is undefined
    """

    theta_m: float
    psi_a: StateVector
    psi_s: StateVector
    psi_r: StateVector
    omega_a: float
    omega_s: float
    omega_r_dressed: float
    j_coupling: float

    @property
    def splitting(self) -> float:
        """Exact dressed splitting omega_a - omega_s."""
        return self.omega_a - self.omega_s

    def state(self, target: TargetState) -> StateVector:
        if target is TargetState.PSI_A:
            return self.psi_a
        if target is TargetState.PSI_S:
            return self.psi_s
        raise PhysicsPreconditionError(f"{target.value} is not a collective dressed state")

    def frequency(self, target: TargetState) -> float:
        if target is TargetState.PSI_A:
            return self.omega_a
        if target is TargetState.PSI_S:
            return self.omega_s
        raise PhysicsPreconditionError(f"{target.value} is not a collective dressed state")


def mixing_angle(g: float, delta: float) -> float:
    """theta_m with cos(2 theta_m) = -Delta / sqrt(4 (sqrt2 g)^2 + Delta^2).

    The branch theta_m = pi + t, t in [0, pi/2], makes the closed-form states
    eigenvectors of build_htc for g > 0; theta_m -> pi deep in the dispersive
    regime at negative detuning and is continuous through resonance.
    """
    root = math.sqrt(8.0 * g * g + delta * delta)
    if root == 0.0:
        return math.pi + math.pi / 4.0
    return math.pi + 0.5 * math.acos(max(-1.0, min(1.0, -delta / root)))


def _require_resonant_pair(params: DeviceParams) -> None:
    if params.n_qubits != 2:
        raise ResonanceError(f"dressed states need two qubits, got {params.n_qubits}")
    if not params.is_resonant:
        raise ResonanceError(f"qubits are not resonant: omega_q = {params.omega_q}")
    g1, g2 = params.g
    if abs(g1 - g2) > COUPLING_TOLERANCE * max(abs(g1), abs(g2)):
        raise ResonanceError(f"couplings differ: g = {params.g}")


def dressed_single_excitation(params: DeviceParams) -> DressedStates:
    """Closed-form single-excitation eigenstates of two resonant qubits.

    Raises:
        ResonanceError: If the qubits are not resonant or couplings differ
    """
    _require_resonant_pair(params)
    layout = device_layout(params)
    g = 0.5 * (params.g[0] + params.g[1])
    delta = params.delta
    theta = mixing_angle(g, delta)

    photon = basis_state(layout, (1, 0, 0)).amplitudes
    ge = basis_state(layout, (0, 0, 1)).amplitudes
    eg = basis_state(layout, (0, 1, 0)).amplitudes
    psi_plus = (ge + eg) / math.sqrt(2.0)
    psi_minus = (ge - eg) / math.sqrt(2.0)

    psi_r = math.cos(theta) * photon + math.sin(theta) * psi_plus
    psi_s = math.sin(theta) * photon - math.cos(theta) * psi_plus

    mean = 0.5 * (params.omega_r + params.omega_q[0])
    half_split = 0.5 * math.sqrt(delta * delta + 8.0 * g * g)
    j = g * g / delta if delta != 0.0 else math.nan
    return DressedStates(
        theta_m=theta,
        psi_a=StateVector(layout, psi_minus),
        psi_s=StateVector(layout, psi_s),
        psi_r=StateVector(layout, psi_r),
        omega_a=params.omega_q[0],
        omega_s=mean - half_split,
        omega_r_dressed=mean + half_split,
        j_coupling=j,
    )


def dressed_eigenstate(h: Operator, reference: StateVector) -> Tuple[StateVector, float]:
    """Eigenvector of h with the largest overlap with a reference state.

    Returns:
        Tuple of (eigenstate, eigenvalue)
    """
    eigenvalues, eigenvectors = hermitian_eig(h)
    overlaps = np.abs(eigenvectors.conj().T @ reference.amplitudes)
    k = int(np.argmax(overlaps))
    return StateVector(h.layout, eigenvectors[:, k]), float(eigenvalues[k])


def bare_qubit_state(layout: SpaceLayout, target: TargetState) -> StateVector:
    """|0;eg> (qubit 1 excited) or |0;ge> (qubit 2 excited)."""
    if target is TargetState.EG:
        return basis_state(layout, (0, 1, 0))
    if target is TargetState.GE:
        return basis_state(layout, (0, 0, 1))
    raise PhysicsPreconditionError(f"{target.value} is not a bare qubit state")


def drive_hamiltonian(layout: SpaceLayout, drive: DriveParams) -> Operator:
    """Local drive H_d/hbar = epsilon (sigma_+^(1) + xi e^{i phi} sigma_+^(2)) + h.c.

    Raises:
        UnsupportedDriveError: If the layout does not hold exactly two qubits
    """
    if layout.n_qubits != 2:
        raise UnsupportedDriveError(f"local drive needs two qubits, got {layout.n_qubits}")
    raising = qubit_operator(layout, "plus", 0) + (
        complex(drive.xi * np.exp(1j * drive.phi))
    ) * qubit_operator(layout, "plus", 1)
    h = drive.epsilon * (raising + raising.dag())
    return Operator(layout, 0.5 * (h.entries + h.entries.conj().T), hermitian=True)


def _require_normalized(*states: StateVector) -> None:
    for state in states:
        if abs(state.norm() - 1.0) >= NORM_TOLERANCE:
            raise NormalizationError(f"state norm {state.norm():.15f} differs from 1")


def transition_matrix_element(
    drive: DriveParams, target: StateVector, ground: StateVector
) -> float:
    """Omega(psi) = |<ground|H_d|target>| in rad/ns."""
    _require_normalized(target, ground)
    h_d = drive_hamiltonian(target.layout, drive)
    return abs(ground.matrix_element(h_d, target))


def dark_state_condition(drive: DriveParams, dressed: DressedStates) -> Optional[TargetState]:
    """Which of psi_s, psi_a the drive cannot excite, if any."""
    if drive.epsilon == 0.0:
        return None
    ground = ground_state(dressed.psi_a.layout)
    threshold = DARK_THRESHOLD * drive.epsilon
    omegas = {
        TargetState.PSI_S: transition_matrix_element(drive, dressed.psi_s, ground),
        TargetState.PSI_A: transition_matrix_element(drive, dressed.psi_a, ground),
    }
    target, value = min(omegas.items(), key=lambda item: item[1])
    return target if value < threshold else None


def purcell_rate(target: StateVector, ground: StateVector, kappa: float) -> float:
    """gamma_kappa = kappa |<ground|a|target>|^2 (exact, no dispersive expansion)."""
    _require_normalized(target, ground)
    a = cavity_lowering(target.layout)
    return kappa * abs(ground.matrix_element(a, target)) ** 2


def dispersive_purcell_rate(g: float, delta: float, kappa: float) -> float:
    """Dispersive single-qubit estimate (g/Delta)^2 kappa."""
    if delta == 0.0:
        raise JUndefinedError("dispersive Purcell rate is undefined at zero detuning")
    return (g / delta) ** 2 * kappa


def single_qubit_purcell_rate(g: float, delta: float, kappa: float) -> float:
    """Exact Purcell rate of the qubit-like state of one qubit dressed with the cavity.

    kappa times its photon weight (1 - |Delta| / sqrt(4 g^2 + Delta^2)) / 2, the
    same on either side of the cavity.
    """
    root = math.sqrt(4.0 * g * g + delta * delta)
    if root == 0.0:
        return 0.5 * kappa
    return 0.5 * kappa * (1.0 - abs(delta) / root)


def j_coupling(g: float, delta: float) -> float:
    """Dispersive J-coupling g^2/Delta (signed).

    Raises:
        JUndefinedError: At zero detuning
    """
    if delta == 0.0:
        raise JUndefinedError("J-coupling g^2/Delta is undefined at zero detuning")
    return g * g / delta


def rotating_frame(h: Operator, layout: SpaceLayout, omega_frame: float) -> Operator:
    """H - omega_frame N_exc: the Hamiltonian in a frame rotating at omega_frame."""
    if h.layout != layout:
        raise LayoutError("Hamiltonian layout differs from the frame layout")
    if omega_frame == 0.0:
        return h
    shifted = h - omega_frame * excitation_number(layout)
    return Operator(layout, shifted.entries, hermitian=h.hermitian)
