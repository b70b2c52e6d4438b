"""Damped Gauss-Newton (Levenberg-Marquardt) least squares."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from darkstate.core.errors import FitError, RankDeficiencyError

logger = logging.getLogger(__name__)

Model = Callable[[np.ndarray, np.ndarray], np.ndarray]

JACOBIAN_STEP = 1e-6
PARAMETER_TOLERANCE = 1e-10
GRADIENT_TOLERANCE = 1e-8
RANK_TOLERANCE = 1e-8
MAX_ITERATIONS = 200
INITIAL_DAMPING = 1e-3
MAX_DAMPING = 1e16


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    Attributes:
        parameters: Best-fit value per parameter name
        standard_errors: One-sigma error per parameter name
        residual_norm: Euclidean norm of data minus model
        converged: Whether the scaled residual gradient vanished
        iterations: Number of damped steps attempted
        gradient_norm: Largest |J_j . r| / |J_j| at the returned point
        non_decaying: Set by fit_exponential when T1 is reported as infinite
        residual_history: Residual norm at the start and after every accepted step
    """

    parameters: Dict[str, float]
    standard_errors: Dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    gradient_norm: float = 0.0
    non_decaying: bool = False
    covariance: Optional[np.ndarray] = field(default=None, repr=False)
    residual_history: List[float] = field(default_factory=list, repr=False)

    def __getitem__(self, name: str) -> float:
        return self.parameters[name]

    def error(self, name: str) -> float:
        return self.standard_errors[name]

    def to_dict(self) -> Dict[str, object]:
        """Convert to a JSON-friendly dictionary (no covariance)."""
        return {
            "parameters": dict(self.parameters),
            "standard_errors": dict(self.standard_errors),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "non_decaying": self.non_decaying,
        }


def _resolve_bounds(
    bounds: Optional[Tuple[Sequence[float], Sequence[float]]], n: int
) -> Tuple[np.ndarray, np.ndarray]:
    if bounds is None:
        return np.full(n, -np.inf), np.full(n, np.inf)
    lower = np.asarray(bounds[0], dtype=float)
    upper = np.asarray(bounds[1], dtype=float)
    if lower.shape != (n,) or upper.shape != (n,):
        raise FitError(f"bounds must have {n} entries each")
    if np.any(lower >= upper):
        raise FitError("every lower bound must lie below its upper bound")
    return lower, upper


def _jacobian(
    model: Model, p: np.ndarray, x: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> np.ndarray:
    """Central differences; one-sided next to a bound."""
    columns = []
    for j in range(p.size):
        h = JACOBIAN_STEP * max(abs(p[j]), 1.0)
        forward = p.copy()
        backward = p.copy()
        if p[j] + h > upper[j]:
            backward[j] -= h
            columns.append((model(p, x) - model(backward, x)) / h)
        elif p[j] - h < lower[j]:
            forward[j] += h
            columns.append((model(forward, x) - model(p, x)) / h)
        else:
            forward[j] += h
            backward[j] -= h
            columns.append((model(forward, x) - model(backward, x)) / (2.0 * h))
    return np.column_stack(columns)


def _check_rank(jac: np.ndarray, names: Sequence[str]) -> np.ndarray:
    """Column norms of J; raises if the scaled Jacobian is numerically singular."""
    norms = np.linalg.norm(jac, axis=0)
    dead = [names[j] for j in range(len(names)) if norms[j] == 0.0]
    if dead:
        raise RankDeficiencyError(
            f"model does not depend on {', '.join(dead)}", {name: 1.0 for name in dead}
        )
    _, singular, vh = scipy.linalg.svd(jac / norms, full_matrices=False)
    if singular[-1] < RANK_TOLERANCE * singular[0]:
        direction = vh[-1] / norms
        direction = direction / np.max(np.abs(direction))
        combination = {name: float(w) for name, w in zip(names, direction) if abs(w) > 1e-3}
        terms = " + ".join(f"{w:.3g}*{n}" for n, w in combination.items())
        raise RankDeficiencyError(f"parameters not identifiable along {terms}", combination)
    return norms


def _scaled_gradient(
    jac: np.ndarray, residual: np.ndarray, p: np.ndarray, lower: np.ndarray, upper: np.ndarray
) -> float:
    norms = np.linalg.norm(jac, axis=0)
    grad = jac.T @ residual / np.where(norms > 0, norms, 1.0)
    # an active bound blocks the outward part of the gradient
    grad[(p <= lower) & (grad < 0)] = 0.0
    grad[(p >= upper) & (grad > 0)] = 0.0
    return float(np.max(np.abs(grad))) if grad.size else 0.0


def least_squares(
    model: Model,
    x: Sequence[float],
    y: Sequence[float],
    p0: Sequence[float],
    bounds: Optional[Tuple[Sequence[float], Sequence[float]]] = None,
    names: Optional[Sequence[str]] = None,
) -> FitResult:
    """Minimize |y - model(p, x)|^2 with Marquardt-scaled damping.

    The damping factor is multiplied by 10 after a rejected step and divided by
    10 after an accepted one. Iteration stops when the relative parameter
    change (absolute for parameters below 1 in magnitude) drops below 1e-10,
    when no step lowers the cost any more, or after 200 steps.

    Args:
        model: Callable (params, x) -> predicted y
        x: Independent variable
        y: Observed data, same length as x
        p0: Initial parameters, inside bounds
        bounds: Optional (lower, upper) sequences; use +-inf for open sides
        names: Parameter names; defaults to p0, p1, ...

    Returns:
        FitResult; a non-converged fit is flagged and carries the best point seen

    Raises:
        FitError: On malformed input
        RankDeficiencyError: If the normal matrix is singular
    """
    x_arr = np.asarray(x, dtype=float)
    y_arr = np.asarray(y, dtype=float)
    p = np.asarray(p0, dtype=float).copy()
    n = p.size
    labels = list(names) if names is not None else [f"p{j}" for j in range(n)]
    if len(labels) != n:
        raise FitError(f"{len(labels)} names given for {n} parameters")
    if x_arr.shape != y_arr.shape or x_arr.ndim != 1:
        raise FitError("x and y must be vectors of equal length")
    if y_arr.size < n + 1:
        raise FitError(f"need at least {n + 1} points for {n} parameters, got {y_arr.size}")
    if not (np.all(np.isfinite(x_arr)) and np.all(np.isfinite(y_arr))):
        raise FitError("data contain non-finite values")
    lower, upper = _resolve_bounds(bounds, n)
    if np.any(p < lower) or np.any(p > upper):
        raise FitError(f"initial parameters {p.tolist()} lie outside the bounds")

    residual = y_arr - model(p, x_arr)
    cost = float(residual @ residual)
    jac = _jacobian(model, p, x_arr, lower, upper)
    _check_rank(jac, labels)

    damping = INITIAL_DAMPING
    iterations = 0
    history = [math.sqrt(cost)]
    while iterations < MAX_ITERATIONS and cost > 0.0:
        iterations += 1
        normal = jac.T @ jac
        gradient = jac.T @ residual
        diag = np.diag(normal).copy()
        diag[diag == 0.0] = 1.0
        try:
            delta = scipy.linalg.solve(normal + damping * np.diag(diag), gradient, assume_a="sym")
        except (scipy.linalg.LinAlgError, ValueError):
            damping *= 10.0
            continue
        trial = np.clip(p + delta, lower, upper)
        trial_residual = y_arr - model(trial, x_arr)
        trial_cost = float(trial_residual @ trial_residual)
        if np.isfinite(trial_cost) and trial_cost < cost:
            change = float(np.max(np.abs(trial - p) / np.maximum(np.abs(p), 1.0)))
            p, residual, cost = trial, trial_residual, trial_cost
            history.append(math.sqrt(cost))
            damping = max(damping / 10.0, 1e-15)
            if change <= PARAMETER_TOLERANCE:
                break
            jac = _jacobian(model, p, x_arr, lower, upper)
        else:
            damping *= 10.0
            if damping > MAX_DAMPING:
                break

    jac = _jacobian(model, p, x_arr, lower, upper)
    norms = _check_rank(jac, labels)
    residual_norm = math.sqrt(cost)
    gradient_norm = _scaled_gradient(jac, residual, p, lower, upper)
    converged = gradient_norm < GRADIENT_TOLERANCE * (1.0 + residual_norm)
    if not converged:
        logger.warning(
            f"fit did not converge after {iterations} iterations "
            f"(scaled gradient {gradient_norm:.3e})"
        )

    scaled = jac / norms
    dof = y_arr.size - n
    covariance = scipy.linalg.inv(scaled.T @ scaled) / np.outer(norms, norms) * cost / dof
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    logger.debug(f"fit finished in {iterations} iterations, residual {residual_norm:.3e}")
    return FitResult(
        parameters={name: float(v) for name, v in zip(labels, p)},
        standard_errors={name: float(e) for name, e in zip(labels, errors)},
        residual_norm=residual_norm,
        converged=converged,
        iterations=iterations,
        gradient_norm=gradient_norm,
        covariance=covariance,
        residual_history=history,
    )
