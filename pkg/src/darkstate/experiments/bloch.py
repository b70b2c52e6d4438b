"""Two-level Bloch steady states and the line parameters of the dressed pair."""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.linalg

from darkstate.core.errors import PhysicsPreconditionError
from darkstate.core.models import DeviceParams, TargetState
from darkstate.dynamics.lindblad import CollapseSet, build_collapse_set
from darkstate.model.tavis_cummings import dressed_single_excitation, ground_state
from darkstate.operators.algebra import StateVector, basis_state

logger = logging.getLogger(__name__)

LINES = (TargetState.PSI_S, TargetState.PSI_A)
FEED_THRESHOLD = 1e-12  # relative to the largest loss rate

# order of the dressed states in the rate matrices: psi_s, psi_a, psi_r
_STATE_INDEX = {TargetState.PSI_S: 0, TargetState.PSI_A: 1}


def _require_positive_times(t1: float, t2: float) -> None:
    if t1 <= 0 or t2 <= 0:
        raise PhysicsPreconditionError(f"T1 and T2 must be positive, got T1={t1}, T2={t2}")


def bloch_steady_state(t1: float, t2: float, omega: float) -> float:
    """Excited population {1 - 1/(1 + T1 T2 Omega^2)}/2 of a resonantly driven two-level system.

    Args:
        t1: Energy relaxation time (ns)
        t2: Coherence time (ns)
        omega: Rabi angular frequency (rad/ns)
    """
    _require_positive_times(t1, t2)
    saturation = t1 * t2 * omega * omega
    return 0.5 * (1.0 - 1.0 / (1.0 + saturation))


def bloch_detuned_population(t1: float, t2: float, omega: float, detuning: float) -> float:
    """Excited population 1/2 T1 T2 Omega^2 / (1 + T2^2 delta^2 + T1 T2 Omega^2)."""
    _require_positive_times(t1, t2)
    saturation = t1 * t2 * omega * omega
    return 0.5 * saturation / (1.0 + (t2 * detuning) ** 2 + saturation)


@dataclass(frozen=True)
class SecularRates:
    """Incoherent rates between dressed states under a collapse set.

    Attributes:
        transfer: transfer[i, j] is the population rate from state i to state j (1/ns)
        loss: Total population decay rate of each state (1/ns)
        dephasing: Decay rate of the coherence between the ground state and
            each state (1/ns)
    """

    transfer: np.ndarray
    loss: np.ndarray
    dephasing: np.ndarray


def secular_rates(
    states: Sequence[StateVector], ground: StateVector, collapses: CollapseSet
) -> SecularRates:
    """Golden-rule rates of the collapse set between nondegenerate eigenstates.

    Each channel sqrt(gamma) c moves population from |i> to |j> at |<j|c|i>|^2.
    Diagonal elements <i|c|i> do not empty |i>; together with <G|c|G> they
    set how fast the coherence between |G> and |i> decays.
    """
    basis = np.column_stack([s.amplitudes for s in states])
    g = ground.amplitudes
    size = basis.shape[1]
    transfer = np.zeros((size, size))
    loss = np.zeros(size)
    dephasing = np.zeros(size)
    for c in collapses.scaled_operators():
        image = c @ basis
        elements = basis.conj().T @ image
        outflow = np.sum(np.abs(image) ** 2, axis=0)
        diagonal = np.diag(elements)
        transfer += np.abs(elements.T) ** 2
        loss += outflow - np.abs(diagonal) ** 2
        ground_image = c @ g
        ground_outflow = float(np.sum(np.abs(ground_image) ** 2))
        ground_diagonal = complex(np.vdot(g, ground_image))
        dephasing += 0.5 * (outflow + ground_outflow) - np.real(
            diagonal * np.conj(ground_diagonal)
        )
    np.fill_diagonal(transfer, 0.0)
    return SecularRates(transfer=transfer, loss=loss, dephasing=dephasing)


def _fed_states(rates: SecularRates, line: int) -> List[int]:
    """States that receive population, directly or not, from the driven line."""
    threshold = FEED_THRESHOLD * float(np.max(rates.loss))
    fed: List[int] = []
    frontier = [line]
    while frontier:
        source = frontier.pop()
        for index in np.flatnonzero(rates.transfer[source] > threshold):
            dest = int(index)
            if dest != line and dest not in fed:
                fed.append(dest)
                frontier.append(dest)
    return sorted(fed)


def shelving(rates: SecularRates, line: int) -> Tuple[float, float]:
    """Population parked outside a driven line and the line's net decay rate.

    Returns:
        (m, Gamma_net): steady-state population of the fed states per unit
        population of the line, and the line's loss minus what flows back

    Raises:
        PhysicsPreconditionError: If population can pile up in a fed state
            that never decays
    """
    fed = _fed_states(rates, line)
    if not fed:
        return 0.0, float(rates.loss[line])
    block = np.diag(rates.loss[fed]) - rates.transfer[np.ix_(fed, fed)].T
    try:
        feed = scipy.linalg.solve(block, rates.transfer[line, fed])
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise PhysicsPreconditionError(f"dressed state {line} feeds a state without decay") from exc
    if not np.all(np.isfinite(feed)):
        raise PhysicsPreconditionError(f"dressed state {line} feeds a state without decay")
    returned = float(rates.transfer[fed, line] @ feed)
    return float(np.sum(feed)), float(rates.loss[line]) - returned


@dataclass(frozen=True)
class LineParameters:
    """Spectroscopic line of one collective state.

    Under a weak drive the line behaves as a two-level system whose upper
    level also feeds the other dressed states. The total single-excitation
    population is amplitude times a Bloch line with times t1 and t2.

    Attributes:
        frequency: Transition frequency from |0;gg> (rad/ns)
        weight: Qubit amplitude of the state; scales the drive matrix element
        photon_weight: Population of |1;gg> in the state
        t1: Effective relaxation time of the driven line, including the
            population shelved in the other dressed states (ns)
        t2: Coherence time of the ground-state transition (ns)
        amplitude: Total single-excitation population at saturation, over 1/2
        lifetime: Free decay time of the state's own population (ns)
    """

    frequency: float
    weight: float
    photon_weight: float
    t1: float
    t2: float
    amplitude: float = 1.0
    lifetime: float = math.nan

    def population(self, rabi: float, detuning: float = 0.0) -> float:
        """Steady-state single-excitation population for a drive of Rabi frequency rabi."""
        return self.amplitude * bloch_detuned_population(self.t1, self.t2, rabi, detuning)


def line_parameters(device: DeviceParams) -> Dict[TargetState, LineParameters]:
    """Frequencies, drive weights and Bloch times of the psi_s and psi_a lines.

    Rates follow from the device collapse set projected on the dressed
    states. Local dephasing moves population between psi_a and the symmetric
    states, so a driven line keeps part of its excitation in the other two.

    Raises:
        ResonanceError: If the qubits are not a resonant pair
        PhysicsPreconditionError: If a line has no decay at all
    """
    dressed = dressed_single_excitation(device)
    layout = dressed.psi_a.layout
    photon = basis_state(layout, (1, 0, 0))
    states = (dressed.psi_s, dressed.psi_a, dressed.psi_r)
    rates = secular_rates(states, ground_state(layout), build_collapse_set(layout, device))

    lines: Dict[TargetState, LineParameters] = {}
    for target in LINES:
        index = _STATE_INDEX[target]
        gamma_2 = float(rates.dephasing[index])
        if rates.loss[index] <= 0 or gamma_2 <= 0:
            raise PhysicsPreconditionError(f"{target.value} line has no decay; Bloch times diverge")
        stored, net_rate = shelving(rates, index)
        if net_rate <= 0:
            raise PhysicsPreconditionError(f"{target.value} line has no net decay")
        photon_weight = abs(photon.inner(states[index])) ** 2
        lines[target] = LineParameters(
            frequency=dressed.frequency(target),
            weight=math.sqrt(1.0 - photon_weight),
            photon_weight=photon_weight,
            t1=(2.0 + stored) / (2.0 * net_rate),
            t2=1.0 / gamma_2,
            amplitude=2.0 * (1.0 + stored) / (2.0 + stored),
            lifetime=1.0 / float(rates.loss[index]),
        )
        logger.debug(
            f"{target.value} line: T1={lines[target].t1:.1f} ns, T2={lines[target].t2:.1f} ns, "
            f"amplitude={lines[target].amplitude:.4f}"
        )
    return lines
