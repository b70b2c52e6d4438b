"""Lindblad master-equation dynamics on dense density matrices.

Superoperators act on row-major vectorized density matrices, for which
vec(A rho B) = (A kron B^T) vec(rho).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from darkstate.core.errors import (
    GridError,
    LayoutError,
    NonUniqueSteadyStateError,
    NormalizationError,
    NotHermitianError,
    NumericalInvariantError,
)
from darkstate.core.models import DeviceParams, POPULATION_SLACK
from darkstate.model.tavis_cummings import cavity_lowering, qubit_operator
from darkstate.operators.algebra import (
    EIG_HERMITIAN_TOLERANCE,
    Operator,
    SpaceLayout,
    StateVector,
)

logger = logging.getLogger(__name__)

TRACE_TOLERANCE = 1e-9
POSITIVITY_TOLERANCE = 1e-8
STEP_HALVING_TOLERANCE = 1e-6
STEADY_STATE_RESIDUAL = 1e-10
NULL_SPACE_RTOL = 1e-10
MAX_STEP_NS = 1.0
STEP_SAFETY = 0.1


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite system state.

    Attributes:
        layout: Space layout the state lives on
        entries: Complex matrix, copied and made read-only
    """

    layout: SpaceLayout
    entries: np.ndarray

    __array_ufunc__ = None

    def __post_init__(self) -> None:
        entries = np.array(self.entries, dtype=np.complex128)
        dim = self.layout.total_dim
        if entries.shape != (dim, dim):
            raise LayoutError(f"density matrix shape {entries.shape} does not match {dim}")
        hermiticity = float(np.max(np.abs(entries - entries.conj().T)))
        if hermiticity >= EIG_HERMITIAN_TOLERANCE:
            raise NotHermitianError(f"density matrix deviates from Hermitian by {hermiticity:.3e}")
        trace_error = abs(complex(np.trace(entries)) - 1.0)
        if trace_error > TRACE_TOLERANCE:
            raise NormalizationError(f"density matrix trace is off by {trace_error:.3e}")
        min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (entries + entries.conj().T))))
        if min_eig < -POSITIVITY_TOLERANCE:
            raise NormalizationError(f"density matrix has eigenvalue {min_eig:.3e} < 0")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_state(cls, state: StateVector) -> "DensityMatrix":
        """Pure state |psi><psi|."""
        return cls(state.layout, state.projector().entries)

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.entries)))

    def expectation(self, op: Operator) -> complex:
        """tr(rho op)."""
        if op.layout != self.layout:
            raise LayoutError("operator and density matrix live on different layouts")
        return complex(np.einsum("ij,ji->", self.entries, op.entries))

    def population(self, state: StateVector) -> float:
        """<psi|rho|psi>."""
        if state.layout != self.layout:
            raise LayoutError("state and density matrix live on different layouts")
        return float(np.real(np.vdot(state.amplitudes, self.entries @ state.amplitudes)))


@dataclass(frozen=True)
class CollapseChannel:
    """One dissipation channel c with rate gamma, entering as sqrt(gamma) c."""

    label: str
    operator: Operator
    rate: float


@dataclass(frozen=True)
class CollapseSet:
    """Ordered dissipation channels on a common layout."""

    layout: SpaceLayout
    channels: Tuple[CollapseChannel, ...] = ()

    def __post_init__(self) -> None:
        for channel in self.channels:
            if channel.rate < 0:
                raise NormalizationError(f"rate of {channel.label} is negative: {channel.rate}")
            if channel.operator.layout != self.layout:
                raise LayoutError(f"collapse operator {channel.label} has a foreign layout")

    @property
    def active(self) -> Tuple[CollapseChannel, ...]:
        """Channels with a positive rate."""
        return tuple(c for c in self.channels if c.rate > 0)

    @property
    def is_dissipative(self) -> bool:
        return bool(self.active)

    def scaled_operators(self) -> List[np.ndarray]:
        """sqrt(rate) * c for every active channel."""
        return [math.sqrt(c.rate) * c.operator.entries for c in self.active]

    def slowest_rate(self) -> float:
        """Smallest positive rate, 0 if nothing dissipates."""
        rates = [c.rate for c in self.active]
        return min(rates) if rates else 0.0


def build_collapse_set(layout: SpaceLayout, params: DeviceParams) -> CollapseSet:
    """Cavity decay, intrinsic relaxation and local pure dephasing.

    Channels: sqrt(kappa) a, sqrt(gamma_i) sigma_-^(i), sqrt(gamma_phi/2) sigma_z^(i).
    The dephasing channel makes qubit coherences decay at gamma_phi.
    """
    channels = [CollapseChannel("cavity", cavity_lowering(layout), params.kappa)]
    for i in range(params.n_qubits):
        channels.append(
            CollapseChannel(f"relax_{i + 1}", qubit_operator(layout, "minus", i), params.gamma_i[i])
        )
        channels.append(
            CollapseChannel(
                f"dephase_{i + 1}", qubit_operator(layout, "z", i), 0.5 * params.gamma_phi[i]
            )
        )
    return CollapseSet(layout, tuple(channels))


@dataclass
class Trajectory:
    """Sampled solution of the master equation.

    Attributes:
        times: Sample times in ns, strictly increasing
        states: Density matrix at each sample time
        observables: Named real time series, one value per sample
        step: Largest integrator step used (ns)
    """

    times: np.ndarray
    states: List[DensityMatrix]
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    step: float = 0.0

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise LayoutError(f"{len(self.times)} times but {len(self.states)} states")
        for name, series in self.observables.items():
            if len(series) != len(self.times):
                raise LayoutError(f"observable {name} has {len(series)} samples")

    @property
    def final_state(self) -> DensityMatrix:
        return self.states[-1]


def _require_compatible(layout: SpaceLayout, h: Operator, collapses: CollapseSet) -> None:
    if h.layout != layout or collapses.layout != layout:
        raise LayoutError("state, Hamiltonian and collapse operators use different layouts")


def lindblad_rhs(rho: DensityMatrix, h: Operator, collapses: CollapseSet) -> np.ndarray:
    """d rho/dt = -i[H, rho] + sum_k (c rho c^dagger - 1/2 {c^dagger c, rho})."""
    _require_compatible(rho.layout, h, collapses)
    r = rho.entries
    drho = -1j * (h.entries @ r - r @ h.entries)
    for c in collapses.scaled_operators():
        c_dag = c.conj().T
        c_dag_c = c_dag @ c
        drho = drho + c @ r @ c_dag - 0.5 * (c_dag_c @ r + r @ c_dag_c)
    return np.asarray(drho)


def liouvillian(h: Operator, collapses: CollapseSet) -> np.ndarray:
    """Matrix of the Lindblad generator acting on row-major vec(rho)."""
    if collapses.layout != h.layout:
        raise LayoutError("Hamiltonian and collapse operators use different layouts")
    dim = h.layout.total_dim
    eye = np.eye(dim)
    gen = -1j * (np.kron(h.entries, eye) - np.kron(eye, h.entries.T))
    for c in collapses.scaled_operators():
        c_dag_c = c.conj().T @ c
        gen = gen + np.kron(c, c.conj()) - 0.5 * (np.kron(c_dag_c, eye) + np.kron(eye, c_dag_c.T))
    return np.asarray(gen)


def _rate_scale(h: Operator, collapses: CollapseSet) -> float:
    """Largest rate the integrator has to resolve (rad/ns)."""
    eigenvalues = np.linalg.eigvalsh(0.5 * (h.entries + h.entries.conj().T))
    scale = float(eigenvalues[-1] - eigenvalues[0])
    for c in collapses.scaled_operators():
        scale += 0.5 * float(np.linalg.norm(c.conj().T @ c, 2))
    return scale


def default_step(h: Operator, collapses: CollapseSet) -> float:
    """Largest RK4 step allowed: min(0.1 / rate scale, 1 ns)."""
    scale = _rate_scale(h, collapses)
    if scale <= 0.0:
        return MAX_STEP_NS
    return min(STEP_SAFETY / scale, MAX_STEP_NS)


def _rk4_step_map(gen: np.ndarray, step: float) -> np.ndarray:
    """One classical RK4 step for the linear system d v/dt = L v."""
    hl = step * gen
    term = np.eye(gen.shape[0], dtype=np.complex128)
    step_map = term.copy()
    for k in range(1, 5):
        term = term @ hl / k
        step_map = step_map + term
    return step_map


def _validate_sample(
    entries: np.ndarray, layout: SpaceLayout, step: float, time: float
) -> DensityMatrix:
    trace_error = abs(complex(np.trace(entries)) - 1.0)
    min_eig = float(np.min(np.linalg.eigvalsh(entries)))
    diagnostics = {"step": step, "time": time, "trace_error": trace_error, "min_eig": min_eig}
    if trace_error > TRACE_TOLERANCE:
        raise NumericalInvariantError(
            f"trace drifted by {trace_error:.3e} at t = {time:.6g} ns", diagnostics
        )
    if min_eig < -POSITIVITY_TOLERANCE:
        raise NumericalInvariantError(
            f"density matrix lost positivity ({min_eig:.3e}) at t = {time:.6g} ns", diagnostics
        )
    return DensityMatrix(layout, entries)


def _check_grid(t_grid: np.ndarray) -> None:
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise GridError("time grid must be a non-empty vector")
    if not np.all(np.isfinite(t_grid)):
        raise GridError("time grid contains non-finite values")
    if np.any(np.diff(t_grid) <= 0):
        raise GridError("time grid must be strictly increasing")


def _propagate(
    rho0: DensityMatrix, gen: np.ndarray, t_grid: np.ndarray, max_step: float
) -> Tuple[List[DensityMatrix], float]:
    layout = rho0.layout
    dim = layout.total_dim
    cache: Dict[Tuple[int, float], np.ndarray] = {}
    vec = rho0.entries.reshape(-1).copy()
    states = [rho0]
    largest = 0.0
    for k in range(1, t_grid.size):
        interval = float(t_grid[k] - t_grid[k - 1])
        n_steps = max(1, math.ceil(interval / max_step - 1e-12))
        step = interval / n_steps
        largest = max(largest, step)
        key = (n_steps, round(interval, 12))
        propagator = cache.get(key)
        if propagator is None:
            propagator = np.linalg.matrix_power(_rk4_step_map(gen, step), n_steps)
            cache[key] = propagator
            logger.debug(f"built propagator: {n_steps} steps of {step:.4g} ns")
        vec = propagator @ vec
        entries = vec.reshape(dim, dim)
        entries = 0.5 * (entries + entries.conj().T)
        vec = entries.reshape(-1).copy()
        states.append(_validate_sample(entries, layout, step, float(t_grid[k])))
    return states, largest


def evolve(
    rho0: DensityMatrix,
    h: Operator,
    collapses: CollapseSet,
    t_grid: Sequence[float],
    *,
    step: Optional[float] = None,
    convergence_check: bool = True,
    observables: Optional[Dict[str, Operator]] = None,
) -> Trajectory:
    """Integrate the master equation with fixed-step RK4.

    The state at t_grid[0] is rho0. Between consecutive samples the step is
    shrunk so that it divides the interval evenly; the state is re-symmetrized
    and validated at every sample.

    Args:
        rho0: Initial state
        h: Time-independent Hamiltonian (rad/ns) in the frame of interest
        collapses: Dissipation channels
        t_grid: Strictly increasing sample times (ns)
        step: Largest step (ns); defaults to default_step(h, collapses)
        convergence_check: Rerun at half the step and require every observable
            (every matrix entry if none are given) to agree within 1e-6
        observables: Named Hermitian projectors to record

    Returns:
        Trajectory with one state per sample time

    Raises:
        GridError: If the time grid is empty or not increasing
        NumericalInvariantError: On trace drift, positivity loss or a failed
            step-halving check
    """
    _require_compatible(rho0.layout, h, collapses)
    times = np.asarray(t_grid, dtype=float)
    _check_grid(times)
    max_step = step if step is not None else default_step(h, collapses)
    if max_step <= 0:
        raise GridError(f"integrator step must be positive, got {max_step}")

    gen = liouvillian(h, collapses)
    states, used = _propagate(rho0, gen, times, max_step)
    trajectory = Trajectory(times=times, states=states, step=used)
    for name, projector in (observables or {}).items():
        trajectory.observables[name] = observable_series(trajectory, projector)

    if convergence_check:
        half_states, _ = _propagate(rho0, gen, times, 0.5 * max_step)
        half = Trajectory(times=times, states=half_states)
        if observables:
            change = max(
                float(np.max(np.abs(observable_series(half, p) - trajectory.observables[n])))
                for n, p in observables.items()
            )
        else:
            change = max(
                float(np.max(np.abs(a.entries - b.entries))) for a, b in zip(states, half_states)
            )
        logger.debug(f"step-halving change {change:.3e}")
        if change >= STEP_HALVING_TOLERANCE:
            raise NumericalInvariantError(
                f"halving the step changed the result by {change:.3e}",
                {"step": used, "change": change},
            )
    return trajectory


@dataclass(frozen=True)
class Segment:
    """Constant Hamiltonian applied for a fixed duration (ns)."""

    hamiltonian: Operator
    duration: float


def evolve_segments(
    rho0: DensityMatrix,
    segments: Sequence[Segment],
    collapses: CollapseSet,
    samples_per_segment: int = 10,
    *,
    convergence_check: bool = True,
    observables: Optional[Dict[str, Operator]] = None,
) -> Trajectory:
    """Evolve through piecewise-constant Hamiltonians, starting at t = 0.

    Each segment contributes samples_per_segment evenly spaced samples after
    its start; the returned trajectory begins with rho0 at t = 0. Every
    segment is step-halving checked unless convergence_check is False.
    """
    if not segments:
        raise GridError("need at least one segment")
    if samples_per_segment < 1:
        raise GridError(f"samples_per_segment must be >= 1, got {samples_per_segment}")
    times = [0.0]
    states = [rho0]
    start = 0.0
    largest = 0.0
    state = rho0
    for segment in segments:
        if segment.duration <= 0:
            raise GridError(f"segment duration must be positive, got {segment.duration}")
        grid = start + np.linspace(0.0, segment.duration, samples_per_segment + 1)
        piece = evolve(
            state, segment.hamiltonian, collapses, grid, convergence_check=convergence_check
        )
        times.extend(piece.times[1:].tolist())
        states.extend(piece.states[1:])
        largest = max(largest, piece.step)
        state = piece.final_state
        start = float(grid[-1])
    trajectory = Trajectory(times=np.asarray(times), states=states, step=largest)
    for name, projector in (observables or {}).items():
        trajectory.observables[name] = observable_series(trajectory, projector)
    return trajectory


def steady_state(h: Operator, collapses: CollapseSet) -> DensityMatrix:
    """Unique stationary state of the Lindblad generator.

    Raises:
        NonUniqueSteadyStateError: If nothing dissipates or the null space of
            the generator is degenerate
        NumericalInvariantError: If the generator has no null space or the
            solution residual exceeds 1e-10
    """
    if not collapses.is_dissipative:
        raise NonUniqueSteadyStateError("no dissipation channel: every eigenstate is stationary")
    gen = liouvillian(h, collapses)
    singular_values = scipy.linalg.svdvals(gen)
    tol = NULL_SPACE_RTOL * singular_values[0]
    null_dim = int(np.sum(singular_values < tol))
    if null_dim > 1:
        raise NonUniqueSteadyStateError(f"Liouvillian null space has dimension {null_dim}")
    if null_dim == 0:
        raise NumericalInvariantError(
            "Liouvillian has no null space; the generator is not trace preserving",
            {"smallest_singular_value": float(singular_values[-1])},
        )

    dim = h.layout.total_dim
    trace_row = np.eye(dim, dtype=np.complex128).reshape(1, -1)
    system = np.vstack([gen, trace_row])
    rhs = np.zeros(dim * dim + 1, dtype=np.complex128)
    rhs[-1] = 1.0
    vec, *_ = scipy.linalg.lstsq(system, rhs)
    residual = float(np.max(np.abs(gen @ vec)))
    logger.debug(f"steady state residual {residual:.3e}")
    if residual >= STEADY_STATE_RESIDUAL:
        raise NumericalInvariantError(
            f"steady-state residual {residual:.3e} too large", {"residual": residual}
        )
    entries = vec.reshape(dim, dim)
    entries = 0.5 * (entries + entries.conj().T)
    return _validate_sample(entries, h.layout, 0.0, math.inf)


def observable_series(trajectory: Trajectory, projector: Operator) -> np.ndarray:
    """tr(rho(t) P) at every sample, clipped to [-1e-8, 1 + 1e-8].

    Raises:
        NotHermitianError: If the projector is not Hermitian
    """
    if not projector.is_hermitian(EIG_HERMITIAN_TOLERANCE):
        raise NotHermitianError("observable projector must be Hermitian")
    values = np.array([rho.expectation(projector) for rho in trajectory.states])
    imaginary = float(np.max(np.abs(values.imag))) if values.size else 0.0
    if imaginary > EIG_HERMITIAN_TOLERANCE:
        raise NumericalInvariantError(
            f"expectation value has imaginary part {imaginary:.3e}", {"imag": imaginary}
        )
    return np.clip(values.real, -POPULATION_SLACK, 1.0 + POPULATION_SLACK)
