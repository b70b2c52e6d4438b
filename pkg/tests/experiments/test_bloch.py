"""Tests for the Bloch steady state and the dressed line parameters."""

import math

import numpy as np
import pytest

from darkstate.core.errors import PhysicsPreconditionError
from darkstate.core.models import SpectroscopyMode, TargetState
from darkstate.dynamics.lindblad import build_collapse_set
from darkstate.experiments.bloch import (
    bloch_detuned_population,
    bloch_steady_state,
    line_parameters,
    secular_rates,
)
from darkstate.experiments.spectroscopy import SpectroscopyConfig, run_spectroscopy
from darkstate.model.tavis_cummings import dressed_single_excitation, ground_state

from .conftest import GAMMA_I, GAMMA_PHI, KAPPA, sample_device

SIN2_THETA = 0.168867


def test_bloch_steady_state_limits():
    """Test zero drive, saturation and the half-saturation point."""
    assert bloch_steady_state(500.0, 300.0, 0.0) == 0.0
    assert bloch_steady_state(500.0, 300.0, 10.0) == pytest.approx(0.5, abs=1e-6)
    omega = 1.0 / math.sqrt(500.0 * 300.0)
    assert bloch_steady_state(500.0, 300.0, omega) == pytest.approx(0.25)


def test_bloch_detuned_population_reduces_on_resonance():
    """Test that zero detuning gives the resonant formula and detuning lowers it."""
    resonant = bloch_steady_state(400.0, 300.0, 0.01)

    assert bloch_detuned_population(400.0, 300.0, 0.01, 0.0) == pytest.approx(resonant)
    assert bloch_detuned_population(400.0, 300.0, 0.01, 0.01) < resonant
    assert bloch_detuned_population(400.0, 300.0, 0.01, 0.01) == pytest.approx(
        bloch_detuned_population(400.0, 300.0, 0.01, -0.01)
    )


@pytest.mark.parametrize("t1,t2", [(0.0, 100.0), (100.0, -1.0)])
def test_bloch_rejects_non_positive_times(t1, t2):
    """Test PhysicsPreconditionError for non-physical lifetimes."""
    with pytest.raises(PhysicsPreconditionError):
        bloch_steady_state(t1, t2, 0.01)
    with pytest.raises(PhysicsPreconditionError):
        bloch_detuned_population(t1, t2, 0.01, 0.0)


def test_line_parameters_default_point(device):
    """Test weights, Bloch times and shelving amplitudes of both lines at delta/2pi = -290 MHz."""
    lines = line_parameters(device)
    dressed = dressed_single_excitation(device)
    dark = lines[TargetState.PSI_A]
    bright = lines[TargetState.PSI_S]

    assert dark.frequency == pytest.approx(dressed.omega_a)
    assert bright.frequency == pytest.approx(dressed.omega_s)
    assert dark.photon_weight == pytest.approx(0.0, abs=1e-20)
    assert dark.weight == pytest.approx(1.0)
    assert bright.photon_weight == pytest.approx(SIN2_THETA, rel=1e-4)
    assert bright.weight == pytest.approx(math.sqrt(1.0 - SIN2_THETA), rel=1e-4)

    assert dark.lifetime == pytest.approx(1.0 / (GAMMA_I + GAMMA_PHI), rel=1e-9)
    assert dark.t2 == pytest.approx(1.0 / (0.5 * GAMMA_I + GAMMA_PHI), rel=1e-9)
    assert dark.t1 == pytest.approx(656.0, rel=0.03)
    assert dark.amplitude == pytest.approx(1.094, rel=0.02)

    assert bright.lifetime == pytest.approx(204.0, rel=0.03)
    assert bright.t2 == pytest.approx(351.5, rel=0.02)
    assert bright.t1 == pytest.approx(285.0, rel=0.03)
    assert bright.amplitude == pytest.approx(1.2075, rel=0.02)

    for line in lines.values():
        assert 1.0 < line.amplitude < 2.0
        assert line.t1 > line.lifetime


def test_dephasing_moves_psi_a_into_symmetric_states(device):
    """Test the psi_a transfer rates split gamma_phi by the qubit weight of the destination."""
    dressed = dressed_single_excitation(device)
    layout = dressed.psi_a.layout
    rates = secular_rates(
        (dressed.psi_s, dressed.psi_a, dressed.psi_r),
        ground_state(layout),
        build_collapse_set(layout, device),
    )
    qubit_weight = 1.0 - SIN2_THETA

    assert rates.transfer[1, 0] == pytest.approx(GAMMA_PHI * qubit_weight, rel=1e-4)
    assert rates.transfer[1, 2] == pytest.approx(GAMMA_PHI * SIN2_THETA, rel=1e-4)
    assert np.all(np.diag(rates.transfer) == 0.0)
    # whatever is not transferred decays to the ground state
    assert np.all(rates.loss >= rates.transfer.sum(axis=1) - 1e-15)


def test_line_parameters_require_decay(cavity_only_device):
    """Test that a dark line without any decay channel is rejected."""
    with pytest.raises(PhysicsPreconditionError):
        line_parameters(cavity_only_device)


def test_line_population_scales_bloch_line(device):
    """Test that a line's population is its amplitude times the detuned Bloch formula."""
    bright = line_parameters(device)[TargetState.PSI_S]

    expected = bright.amplitude * bloch_detuned_population(bright.t1, bright.t2, 0.002, 0.001)
    assert bright.population(0.002, 0.001) == pytest.approx(expected)
    assert bright.population(10.0) == pytest.approx(0.5 * bright.amplitude, rel=1e-6)


def test_bright_line_decays_through_cavity():
    """Test that without dephasing psi_s is a plain two-level line."""
    gamma_i = 1e-6
    device = sample_device(gamma_i=gamma_i, gamma_phi=0.0)
    bright = line_parameters(device)[TargetState.PSI_S]

    expected = KAPPA * SIN2_THETA + gamma_i * (1.0 - SIN2_THETA)
    assert 1.0 / bright.t1 == pytest.approx(expected, rel=1e-4)
    assert bright.lifetime == pytest.approx(bright.t1)
    assert bright.t2 == pytest.approx(2.0 * bright.t1)
    assert bright.amplitude == pytest.approx(1.0)


@pytest.mark.slow
@pytest.mark.parametrize("target", [TargetState.PSI_A, TargetState.PSI_S])
@pytest.mark.parametrize("saturation", [0.25, 0.5, 1.0])
def test_master_equation_matches_line_population(device, target, saturation):
    """Test the driven steady state of each line against its Bloch population."""
    line = line_parameters(device)[target]
    rabi = saturation / math.sqrt(line.t1 * line.t2)
    # the matrix element on the bright phase is sqrt(2) epsilon times the qubit weight
    epsilon = rabi / (2.0 * math.sqrt(2.0) * line.weight)
    phi = math.pi if target is TargetState.PSI_A else 0.0
    cfg = SpectroscopyConfig(
        device=device,
        epsilon=epsilon,
        xi=1.0,
        phi_grid=(phi,),
        omega_d_grid=(line.frequency,),
    )

    (record,) = run_spectroscopy(cfg, SpectroscopyMode.MASTER_EQUATION)

    assert record.value == pytest.approx(line.population(rabi), abs=5e-3)
    assert record.metadata["mode"] == "master_equation"


@pytest.mark.slow
def test_analytic_and_master_modes_agree(device):
    """Test both spectroscopy modes over a small phase and frequency grid."""
    lines = line_parameters(device)
    omega_a = lines[TargetState.PSI_A].frequency
    omega_s = lines[TargetState.PSI_S].frequency
    cfg = SpectroscopyConfig(
        device=device,
        epsilon=2e-4,
        phi_grid=tuple(np.linspace(0.0, 2.0 * math.pi, 5)),
        omega_d_grid=(omega_s, omega_a),
        max_concurrent=2,
    )

    analytic = run_spectroscopy(cfg, "analytic")
    master = run_spectroscopy(cfg, "master_equation")

    peak = max(r.value for r in analytic)
    assert [r.coordinates for r in analytic] == [r.coordinates for r in master]
    for a, m in zip(analytic, master):
        assert m.value == pytest.approx(a.value, abs=0.05 * peak)
