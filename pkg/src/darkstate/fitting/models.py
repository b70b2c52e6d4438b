"""Model functions and fit wrappers for lifetime and phase-resolved spectroscopy data."""

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np

from darkstate.core.errors import FitError, GridError
from darkstate.core.models import TWO_PI, LineBranch
from darkstate.experiments.bloch import bloch_detuned_population
from darkstate.fitting.least_squares import FitResult, least_squares

logger = logging.getLogger(__name__)

NON_DECAYING_THRESHOLD = 1e-6
PHASE_COVERAGE = 0.9 * TWO_PI
MAX_IMBALANCE = 10.0
EXPONENTIAL_NAMES = ("amplitude", "t1", "offset")
PHASE_NAMES = ("s0", "phi0", "xi")


def exponential_decay(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    """A exp(-t/T1) + c."""
    amplitude, t1, offset = params
    return np.asarray(amplitude * np.exp(-t / t1) + offset)


def _non_decaying(y: np.ndarray) -> FitResult:
    offset = float(np.mean(y))
    return FitResult(
        parameters={"amplitude": 0.0, "t1": math.inf, "offset": offset},
        standard_errors={"amplitude": 0.0, "t1": math.inf, "offset": 0.0},
        residual_norm=float(np.linalg.norm(y - offset)),
        converged=True,
        iterations=0,
        non_decaying=True,
    )


def _initial_lifetime(t: np.ndarray, z: np.ndarray) -> float:
    """T1 from a log-linear fit to the first decade of the normalized decay."""
    span = float(t[-1] - t[0])
    mask = z > 0.1
    if np.count_nonzero(mask) < 2:
        return 0.5 * span
    slope = np.polyfit(t[mask], np.log(z[mask]), 1)[0]
    if slope >= 0:
        return 0.5 * span
    return float(-1.0 / slope)


def fit_exponential(t: Sequence[float], y: Sequence[float]) -> FitResult:
    """Fit A exp(-t/T1) + c to a population trace.

    Returns a non-decaying result (T1 = inf) when the data, or the fitted
    decay across the time window, changes by less than 1e-6.

    Raises:
        FitError: With fewer than four points or non-finite data
    """
    t_arr = np.asarray(t, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    if t_arr.size < 4 or t_arr.shape != y_arr.shape:
        raise FitError(f"exponential fit needs at least 4 matching points, got {t_arr.size}")
    if not (np.all(np.isfinite(t_arr)) and np.all(np.isfinite(y_arr))):
        raise FitError("lifetime data contain non-finite values")
    if float(np.ptp(y_arr)) < NON_DECAYING_THRESHOLD:
        logger.info("population is constant over the window; reporting T1 = inf")
        return _non_decaying(y_arr)

    offset0 = float(np.min(y_arr))
    height = float(y_arr[0] - offset0)
    if height <= 0:
        offset0 = float(y_arr[-1])
        height = float(y_arr[0] - offset0) or float(np.ptp(y_arr))
    z = (y_arr - offset0) / height
    t1_0 = _initial_lifetime(t_arr, z)

    result = least_squares(
        exponential_decay,
        t_arr,
        y_arr,
        p0=(height, t1_0, offset0),
        bounds=((-np.inf, 1e-12, -np.inf), (np.inf, np.inf, np.inf)),
        names=EXPONENTIAL_NAMES,
    )
    span = float(t_arr[-1] - t_arr[0])
    decay = abs(result["amplitude"]) * -math.expm1(-span / result["t1"])
    if decay < NON_DECAYING_THRESHOLD:
        logger.info(f"fitted decay {decay:.2e} over the window; reporting T1 = inf")
        return _non_decaying(y_arr)
    return result


def phase_response(
    params: np.ndarray,
    phi: np.ndarray,
    *,
    t1: float,
    t2: float,
    epsilon: float,
    branch: LineBranch,
    detuning: float = 0.0,
) -> np.ndarray:
    """S0 times the Bloch population driven at Rabi frequency 2 Omega(xi, phi - phi0)."""
    s0, phi0, xi = params
    interference = 1.0 + xi * xi + branch.sign * 2.0 * xi * np.cos(phi - phi0)
    rabi = 2.0 * epsilon * np.sqrt(np.clip(0.5 * interference, 0.0, None))
    return np.array([s0 * bloch_detuned_population(t1, t2, r, detuning) for r in rabi])


def fit_phase_response(
    phi: Sequence[float],
    s: Sequence[float],
    *,
    t1: float,
    t2: float,
    epsilon: float,
    branch: Union[LineBranch, str],
    detuning: float = 0.0,
    xi0: Optional[float] = None,
) -> FitResult:
    """Fit (s0, phi0, xi) of one spectroscopic line as a function of drive phase.

    phi0 is the phase at which the antisymmetric line is dark; the symmetric
    line is dark at phi0 + pi. The returned phi0 is wrapped into [0, 2pi).

    Args:
        phi: Drive phases (rad) spanning at least 0.9 of a period
        s: Line amplitude at each phase
        t1: Fixed line T1 (ns)
        t2: Fixed line T2 (ns)
        epsilon: Effective drive strength of the line (rad/ns)
        branch: "s" or "a"
        detuning: Drive detuning from the line centre (rad/ns)
        xi0: Initial imbalance, 1 by default

    Raises:
        GridError: If the phases cover less than 0.9 of a period
        RankDeficiencyError: If amplitude and imbalance cannot be separated
    """
    line = LineBranch(branch)
    phi_arr = np.asarray(phi, dtype=float)
    s_arr = np.asarray(s, dtype=float)
    if phi_arr.size == 0 or float(np.ptp(phi_arr)) < PHASE_COVERAGE:
        raise GridError("phase data must cover at least 0.9 of a full period")

    peak = bloch_detuned_population(t1, t2, 2.0 * math.sqrt(2.0) * epsilon, detuning)
    s_max = float(np.max(s_arr))
    s0_0 = s_max / peak if s_max > 0 and peak > 0 else 1.0
    phi0_0 = float(phi_arr[int(np.argmin(s_arr))])
    if line is LineBranch.SYMMETRIC:
        phi0_0 -= math.pi

    def model(params: np.ndarray, x: np.ndarray) -> np.ndarray:
        return phase_response(
            params, x, t1=t1, t2=t2, epsilon=epsilon, branch=line, detuning=detuning
        )

    result = least_squares(
        model,
        phi_arr,
        s_arr,
        p0=(s0_0, phi0_0, 1.0 if xi0 is None else xi0),
        bounds=((0.0, -np.inf, 0.0), (np.inf, np.inf, MAX_IMBALANCE)),
        names=PHASE_NAMES,
    )
    result.parameters["phi0"] = result.parameters["phi0"] % TWO_PI
    logger.info(
        f"{line.value} line: phi0={result['phi0']:.4f} rad, xi={result['xi']:.4f}, "
        f"s0={result['s0']:.4f}"
    )
    return result
