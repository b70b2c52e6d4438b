"""Delayed-readout lifetime measurements of dressed and uncoupled qubit states."""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from darkstate.core.errors import FitError, GridError, PhysicsPreconditionError
from darkstate.core.models import (
    DeviceParams,
    DriveParams,
    ExperimentRecord,
    TargetState,
    angular_to_mhz,
    mhz_to_angular,
)
from darkstate.dynamics.lindblad import (
    DensityMatrix,
    Segment,
    Trajectory,
    build_collapse_set,
    evolve,
    evolve_segments,
)
from darkstate.experiments.coordinator import SweepCoordinator
from darkstate.fitting.least_squares import FitResult
from darkstate.fitting.models import fit_exponential
from darkstate.model.tavis_cummings import (
    bare_qubit_state,
    build_htc,
    device_layout,
    dressed_eigenstate,
    dressed_single_excitation,
    drive_hamiltonian,
    ground_state,
    qubit_operator,
    rotating_frame,
)
from darkstate.operators.algebra import Operator, StateVector

logger = logging.getLogger(__name__)

DETUNING_GUARD = 1.5  # in units of g
DEFAULT_PARTNER_OFFSET = mhz_to_angular(-1000.0)
SWEEP_TARGETS = (TargetState.PSI_A, TargetState.PSI_S, TargetState.EG, TargetState.GE)


@dataclass(frozen=True)
class LifetimeConfig:
    """Preparation of one state followed by free decay.

    Attributes:
        device: Cavity and qubit parameters; qubit frequencies are replaced by
            omega_r + delta
        target: State to prepare and track
        delta: Qubit-cavity detuning (rad/ns)
        delay_grid: Delays after preparation (ns), starting at 0
        pulse_epsilon: If set, prepare with a resonant square pi pulse of this
            drive strength (rad/ns) instead of setting the state directly
        partner_offset: Detuning of the idle qubit from its partner when an
            uncoupled state (eg, ge) is measured (rad/ns)
    """

    device: DeviceParams
    target: TargetState
    delta: float
    delay_grid: Tuple[float, ...] = field(default_factory=tuple)
    pulse_epsilon: Optional[float] = None
    partner_offset: float = DEFAULT_PARTNER_OFFSET

    def __post_init__(self) -> None:
        grid = tuple(float(t) for t in self.delay_grid)
        object.__setattr__(self, "delay_grid", grid)
        object.__setattr__(self, "target", TargetState(self.target))
        if not grid:
            raise GridError("delay_grid is empty")
        if grid[0] != 0.0:
            raise GridError(f"delay_grid must start at 0, got {grid[0]}")
        if np.any(np.diff(grid) <= 0):
            raise GridError("delay_grid must be strictly increasing")
        if self.pulse_epsilon is not None and self.pulse_epsilon <= 0:
            raise PhysicsPreconditionError("pulse_epsilon must be positive")

    def with_target(self, target: TargetState) -> "LifetimeConfig":
        return replace(self, target=target)

    def with_delta(self, delta: float) -> "LifetimeConfig":
        return replace(self, delta=delta)

    def measured_device(self) -> DeviceParams:
        """Device at the configured detuning, with the idle qubit moved away for eg/ge."""
        device = self.device.with_detuning(self.delta)
        if self.target not in (TargetState.EG, TargetState.GE):
            return device
        idle = 1 if self.target is TargetState.EG else 0
        omega_q = list(device.omega_q)
        omega_q[idle] += self.partner_offset
        return replace(device, omega_q=tuple(omega_q))


@dataclass
class LifetimeResult:
    """Raw populations and the exponential fit of one lifetime run.

    Attributes:
        records: Target population per delay
        fit: Exponential fit, None if fitting failed
        t1: Fitted lifetime (ns); inf if non-decaying, nan if the fit failed
        error: Fit failure message, if any
        step: Integrator step used (ns)
    """

    records: List[ExperimentRecord]
    fit: Optional[FitResult]
    t1: float
    error: Optional[str] = None
    step: float = 0.0

    @property
    def non_decaying(self) -> bool:
        return math.isinf(self.t1)


def prepare_target(cfg: LifetimeConfig) -> Tuple[Operator, StateVector, float]:
    """Hamiltonian, target state and its transition frequency from |0;gg>."""
    device = cfg.measured_device()
    layout = device_layout(device)
    h = build_htc(layout, device)
    ground_energy = float(np.real(ground_state(layout).matrix_element(h, ground_state(layout))))
    if cfg.target in (TargetState.PSI_A, TargetState.PSI_S):
        dressed = dressed_single_excitation(device)
        return h, dressed.state(cfg.target), dressed.frequency(cfg.target)
    state, energy = dressed_eigenstate(h, bare_qubit_state(layout, cfg.target))
    return h, state, energy - ground_energy


def _preparation_drive(state: StateVector, target: TargetState, epsilon: float) -> Operator:
    layout = state.layout
    if target is TargetState.PSI_S:
        return drive_hamiltonian(layout, DriveParams(epsilon=epsilon, xi=1.0, phi=0.0))
    if target is TargetState.PSI_A:
        return drive_hamiltonian(layout, DriveParams(epsilon=epsilon, xi=1.0, phi=math.pi))
    if target is TargetState.EG:
        return drive_hamiltonian(layout, DriveParams(epsilon=epsilon, xi=0.0))
    return epsilon * qubit_operator(layout, "x", 1)


def _initial_state(
    cfg: LifetimeConfig, h_frame: Operator, target: StateVector
) -> Tuple[DensityMatrix, float]:
    """Prepared state and the pulse duration (0 for ideal preparation)."""
    if cfg.pulse_epsilon is None:
        return DensityMatrix.from_state(target), 0.0
    layout = target.layout
    ground = ground_state(layout)
    drive = _preparation_drive(target, cfg.target, cfg.pulse_epsilon)
    matrix_element = abs(ground.matrix_element(drive, target))
    if matrix_element == 0.0:
        raise PhysicsPreconditionError(f"{cfg.target.value} is dark for its preparation drive")
    duration = math.pi / (2.0 * matrix_element)
    collapses = build_collapse_set(layout, cfg.measured_device())
    pulse = evolve_segments(
        DensityMatrix.from_state(ground), [Segment(h_frame + drive, duration)], collapses
    )
    logger.debug(f"pi pulse of {duration:.2f} ns on {cfg.target.value}")
    return pulse.final_state, duration


def simulate_decay(cfg: LifetimeConfig) -> Tuple[Trajectory, StateVector]:
    """Prepare the target and evolve it freely over the delay grid."""
    h, target, frequency = prepare_target(cfg)
    layout = target.layout
    h_frame = rotating_frame(h, layout, frequency)
    rho0, _ = _initial_state(cfg, h_frame, target)
    collapses = build_collapse_set(layout, cfg.measured_device())
    trajectory = evolve(
        rho0, h_frame, collapses, cfg.delay_grid, observables={"population": target.projector()}
    )
    return trajectory, target


def run_lifetime(cfg: LifetimeConfig) -> LifetimeResult:
    """Target population versus delay and its fitted T1.

    A failed fit is logged and reported on the result; the raw records are
    returned either way.
    """
    logger.info(
        f"lifetime of {cfg.target.value} at delta = {angular_to_mhz(cfg.delta):.1f} MHz/2pi"
    )
    trajectory, _ = simulate_decay(cfg)
    populations = trajectory.observables["population"]
    metadata = {"target": cfg.target.value, "step_ns": trajectory.step}
    records = [
        ExperimentRecord(
            coordinates={"delay_ns": float(t)},
            observable="population",
            value=float(p),
            metadata=dict(metadata),
        )
        for t, p in zip(trajectory.times, populations)
    ]
    try:
        fit = fit_exponential(trajectory.times, populations)
    except FitError as e:
        logger.warning(f"lifetime fit failed for {cfg.target.value}: {e}")
        return LifetimeResult(records, None, math.nan, str(e), trajectory.step)
    t1 = fit["t1"]
    logger.info(f"{cfg.target.value}: T1 = {t1:.1f} ns")
    return LifetimeResult(records, fit, t1, None, trajectory.step)


@dataclass(frozen=True)
class SweepRow:
    """Fitted lifetime of one state at one detuning and the RK4 step it used (ns)."""

    delta: float
    target: TargetState
    t1: float
    t1_error: float
    step: float = 0.0

    def to_record(self) -> ExperimentRecord:
        return ExperimentRecord(
            coordinates={"delta_mhz": angular_to_mhz(self.delta), "state": self.target.value},
            observable="t1_ns",
            value=self.t1,
            metadata={"t1_error_ns": self.t1_error},
        )


def _sweep_point(template: LifetimeConfig, delta: float, target: TargetState) -> SweepRow:
    result = run_lifetime(template.with_delta(delta).with_target(target))
    error = result.fit.error("t1") if result.fit is not None else math.nan
    return SweepRow(delta=delta, target=target, t1=result.t1, t1_error=error, step=result.step)


def run_detuning_sweep(
    template: LifetimeConfig,
    delta_grid: Sequence[float],
    *,
    targets: Sequence[TargetState] = SWEEP_TARGETS,
    max_concurrent: int = 4,
) -> List[SweepRow]:
    """Fitted T1 of every target at every detuning.

    Raises:
        GridError: If the grid is empty or a detuning lies within 1.5 g of resonance
    """
    deltas = [float(d) for d in delta_grid]
    if not deltas:
        raise GridError("delta_grid is empty")
    guard = DETUNING_GUARD * max(template.device.g)
    close = [d for d in deltas if abs(d) < guard]
    if close:
        raise GridError(
            f"detunings {[round(angular_to_mhz(d), 3) for d in close]} MHz/2pi lie within "
            f"{DETUNING_GUARD} g of resonance, where the decay is not single-exponential"
        )
    order: Dict[TargetState, int] = {t: i for i, t in enumerate(targets)}
    tasks = [
        ((delta, order[target]), partial(_sweep_point, template, delta, target))
        for delta in deltas
        for target in targets
    ]
    coordinator: SweepCoordinator[SweepRow] = SweepCoordinator(max_concurrent)
    return coordinator.run(tasks)
