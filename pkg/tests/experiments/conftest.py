"""Shared fixtures for the experiment tests."""

import pytest

from darkstate.core.models import DeviceParams, ghz_to_angular, mhz_to_angular

KAPPA = mhz_to_angular(3.01)
GAMMA_I = 1.0 / 1370.0
GAMMA_PHI = 1.0 / 880.0


def sample_device(
    *, kappa=KAPPA, gamma_i=GAMMA_I, gamma_phi=GAMMA_PHI, n_max=3, delta_mhz=-290.0
):
    """Measured two-transmon sample at the given detuning."""
    omega_r = ghz_to_angular(6.937)
    return DeviceParams.uniform(
        omega_r=omega_r,
        omega_q=omega_r + mhz_to_angular(delta_mhz),
        g=mhz_to_angular(116.0),
        kappa=kappa,
        gamma_i=gamma_i,
        gamma_phi=gamma_phi,
        n_max=n_max,
    )


@pytest.fixture
def device():
    """Sample with full dissipation at delta/2pi = -290 MHz."""
    return sample_device()


@pytest.fixture
def cavity_only_device():
    """Sample with cavity loss as the only dissipation."""
    return sample_device(gamma_i=0.0, gamma_phi=0.0)
