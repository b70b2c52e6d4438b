"""Phase-resolved steady-state spectroscopy of the dressed qubit pair."""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from darkstate.core.errors import GridError, PhysicsPreconditionError
from darkstate.core.models import (
    TWO_PI,
    DeviceParams,
    DriveParams,
    ExperimentRecord,
    LineBranch,
    SpectroscopyMode,
    TargetState,
    angular_to_ghz,
    ghz_to_angular,
)
from darkstate.dynamics.lindblad import build_collapse_set, steady_state
from darkstate.experiments.bloch import LINES, LineParameters, line_parameters
from darkstate.experiments.coordinator import SweepCoordinator
from darkstate.fitting.least_squares import FitResult
from darkstate.fitting.models import fit_phase_response
from darkstate.model.tavis_cummings import (
    build_htc,
    device_layout,
    drive_hamiltonian,
    excitation_number,
    rotating_frame,
)
from darkstate.operators.algebra import Operator

logger = logging.getLogger(__name__)

LINE_BRANCHES = {
    TargetState.PSI_S: LineBranch.SYMMETRIC,
    TargetState.PSI_A: LineBranch.ANTISYMMETRIC,
}


def _strictly_monotone(values: Tuple[float, ...], name: str) -> None:
    if not values:
        raise GridError(f"{name} is empty")
    if not all(np.isfinite(values)):
        raise GridError(f"{name} contains non-finite values")
    steps = np.diff(values)
    if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
        raise GridError(f"{name} must be strictly monotone")


@dataclass(frozen=True)
class SpectroscopyConfig:
    """Sweep of drive phase and frequency at fixed drive strength.

    Attributes:
        device: Resonant qubit pair and cavity
        epsilon: Drive strength on qubit 1 (rad/ns)
        xi: Amplitude imbalance of the qubit 2 drive
        phi_grid: Relative drive phases (rad)
        omega_d_grid: Drive angular frequencies (rad/ns)
        phase_offset: Extra phase of the qubit 2 line at the psi_s frequency
            relative to the psi_a frequency (rad); models a cable-length
            difference, so it grows linearly with drive frequency
        max_concurrent: Sweep points solved at once in master-equation mode
    """

    device: DeviceParams
    epsilon: float
    xi: float = 1.0
    phi_grid: Tuple[float, ...] = field(default_factory=tuple)
    omega_d_grid: Tuple[float, ...] = field(default_factory=tuple)
    phase_offset: float = 0.0
    max_concurrent: int = 4

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi_grid", tuple(float(p) for p in self.phi_grid))
        object.__setattr__(self, "omega_d_grid", tuple(float(w) for w in self.omega_d_grid))
        _strictly_monotone(self.phi_grid, "phi_grid")
        _strictly_monotone(self.omega_d_grid, "omega_d_grid")
        if self.epsilon < 0 or self.xi < 0:
            raise PhysicsPreconditionError("epsilon and xi must be non-negative")


def cable_phase(omega_d: float, lines: Dict[TargetState, LineParameters], offset: float) -> float:
    """Phase added to the qubit 2 drive at frequency omega_d.

    Zero at the psi_a line and -offset at the psi_s line.

    Raises:
        PhysicsPreconditionError: If an offset is set but the two lines coincide
    """
    if offset == 0.0:
        return 0.0
    omega_a = lines[TargetState.PSI_A].frequency
    omega_s = lines[TargetState.PSI_S].frequency
    if omega_a == omega_s:
        raise PhysicsPreconditionError("cable phase offset needs distinct psi_s and psi_a lines")
    return offset * (omega_d - omega_a) / (omega_a - omega_s)


def line_populations(
    cfg: SpectroscopyConfig,
    phi: float,
    omega_d: float,
    lines: Dict[TargetState, LineParameters],
) -> Dict[TargetState, float]:
    """Detuned single-excitation population of each line driven on its own."""
    phase = phi + cable_phase(omega_d, lines, cfg.phase_offset)
    populations = {}
    for target, line in lines.items():
        sign = LINE_BRANCHES[target].sign
        interference = 1.0 + cfg.xi**2 + sign * 2.0 * cfg.xi * math.cos(phase)
        matrix_element = line.weight * cfg.epsilon * math.sqrt(max(0.5 * interference, 0.0))
        populations[target] = line.population(2.0 * matrix_element, omega_d - line.frequency)
    return populations


def _record(phi: float, omega_d: float, value: float, mode: SpectroscopyMode) -> ExperimentRecord:
    return ExperimentRecord(
        coordinates={"phi_rad": phi, "omega_d_ghz": angular_to_ghz(omega_d)},
        observable="population",
        value=value,
        metadata={"mode": mode.value},
    )


def _single_excitation_projector(h: Operator) -> Operator:
    n_exc = np.real(np.diag(excitation_number(h.layout).entries))
    return Operator(h.layout, np.diag((np.abs(n_exc - 1.0) < 0.5).astype(float)), hermitian=True)


def near_resonant_line(omega_d: float, lines: Dict[TargetState, LineParameters]) -> TargetState:
    """Line closest to omega_d; psi_s on a tie."""
    return min(LINES, key=lambda target: abs(omega_d - lines[target].frequency))


def _analytic(cfg: SpectroscopyConfig) -> List[ExperimentRecord]:
    lines = line_parameters(cfg.device)
    records = []
    for phi in cfg.phi_grid:
        for omega_d in cfg.omega_d_grid:
            target = near_resonant_line(omega_d, lines)
            value = line_populations(cfg, phi, omega_d, lines)[target]
            records.append(_record(phi, omega_d, min(value, 1.0), SpectroscopyMode.ANALYTIC))
    return records


def _master_equation(cfg: SpectroscopyConfig) -> List[ExperimentRecord]:
    lines = line_parameters(cfg.device)
    layout = device_layout(cfg.device)
    h_tc = build_htc(layout, cfg.device)
    collapses = build_collapse_set(layout, cfg.device)
    projector = _single_excitation_projector(h_tc)

    base = DriveParams(epsilon=cfg.epsilon, xi=cfg.xi)

    def solve(phi: float, omega_d: float) -> ExperimentRecord:
        phase = phi + cable_phase(omega_d, lines, cfg.phase_offset)
        drive = base.with_phase(phase).with_frequency(omega_d)
        h = rotating_frame(h_tc, layout, omega_d) + drive_hamiltonian(layout, drive)
        rho = steady_state(h, collapses)
        value = float(np.real(rho.expectation(projector)))
        return _record(phi, omega_d, value, SpectroscopyMode.MASTER_EQUATION)

    tasks = [
        ((phi, omega_d), partial(solve, phi, omega_d))
        for phi in cfg.phi_grid
        for omega_d in cfg.omega_d_grid
    ]
    coordinator: SweepCoordinator[ExperimentRecord] = SweepCoordinator(cfg.max_concurrent)
    return coordinator.run(tasks)


def run_spectroscopy(
    cfg: SpectroscopyConfig, mode: Union[SpectroscopyMode, str] = SpectroscopyMode.ANALYTIC
) -> List[ExperimentRecord]:
    """Population at every (phi, omega_d) of the sweep.

    The analytic mode reports the detuned Bloch population of the line
    nearest each drive frequency, so a dark line stays dark. The
    master-equation mode reports the single-excitation population of the
    steady state of the full driven model in the frame of the drive.

    Returns:
        Records sorted by (phi_rad, omega_d_ghz)
    """
    mode = SpectroscopyMode(mode)
    logger.info(
        f"spectroscopy ({mode.value}): {len(cfg.phi_grid)} phases x "
        f"{len(cfg.omega_d_grid)} frequencies"
    )
    if mode is SpectroscopyMode.ANALYTIC:
        records = _analytic(cfg)
    else:
        records = _master_equation(cfg)
    return sorted(records, key=lambda r: r.sort_key)


@dataclass
class PhaseCalibration:
    """Zeros of the two lines versus drive phase.

    Attributes:
        phi_zero_s: Phase at which the psi_s line is dark (rad, [0, 2pi))
        phi_zero_a: Phase at which the psi_a line is dark (rad, [0, 2pi))
        xi_fit: Imbalance fitted on the psi_a line
        s0_fit: Amplitude normalization fitted on the psi_a line
        difference: phi_zero_s - phi_zero_a wrapped into [0, 2pi)
        fits: Full fit result per line
    """

    phi_zero_s: float
    phi_zero_a: float
    xi_fit: float
    s0_fit: float
    difference: float
    fits: Dict[TargetState, FitResult] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "phi_zero_s": self.phi_zero_s,
            "phi_zero_a": self.phi_zero_a,
            "xi_fit": self.xi_fit,
            "s0_fit": self.s0_fit,
            "difference": self.difference,
            "fits": {target.value: fit.to_dict() for target, fit in self.fits.items()},
        }


def _phase_cut(
    records: Sequence[ExperimentRecord], omega_d_ghz: float
) -> Tuple[np.ndarray, np.ndarray]:
    cut = sorted(
        (float(r.coordinates["phi_rad"]), r.value)
        for r in records
        if float(r.coordinates["omega_d_ghz"]) == omega_d_ghz
    )
    return np.array([c[0] for c in cut]), np.array([c[1] for c in cut])


def phase_calibration(
    records: Sequence[ExperimentRecord], cfg: SpectroscopyConfig
) -> PhaseCalibration:
    """Fit the phase response at the frequency closest to each line.

    Raises:
        GridError: If the records do not cover at least 0.9 of a phase period
    """
    if not records:
        raise GridError("no spectroscopy records to calibrate")
    lines = line_parameters(cfg.device)
    frequencies = sorted({float(r.coordinates["omega_d_ghz"]) for r in records})

    zeros: Dict[TargetState, float] = {}
    fits: Dict[TargetState, FitResult] = {}
    for target, line in lines.items():
        nearest = min(frequencies, key=lambda f: abs(ghz_to_angular(f) - line.frequency))
        phi, s = _phase_cut(records, nearest)
        branch = LINE_BRANCHES[target]
        fit = fit_phase_response(
            phi,
            s,
            t1=line.t1,
            t2=line.t2,
            epsilon=cfg.epsilon * line.weight,
            branch=branch,
            detuning=ghz_to_angular(nearest) - line.frequency,
        )
        fits[target] = fit
        shift = math.pi if branch is LineBranch.SYMMETRIC else 0.0
        zeros[target] = (fit["phi0"] + shift) % TWO_PI
        logger.debug(f"{target.value} line fitted at {nearest:.6f} GHz")

    difference = (zeros[TargetState.PSI_S] - zeros[TargetState.PSI_A]) % TWO_PI
    antisymmetric = fits[TargetState.PSI_A]
    logger.info(f"phase calibration: phi_s - phi_a = {difference:.4f} rad")
    return PhaseCalibration(
        phi_zero_s=zeros[TargetState.PSI_S],
        phi_zero_a=zeros[TargetState.PSI_A],
        xi_fit=antisymmetric["xi"],
        s0_fit=antisymmetric["s0"],
        difference=difference,
        fits=fits,
    )
