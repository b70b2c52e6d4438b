"""Tests for the Tavis-Cummings model, drive and dressed states."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkstate.core.errors import (
    JUndefinedError,
    LayoutError,
    NormalizationError,
    ResonanceError,
    UnsupportedDriveError,
)
from darkstate.core.models import (
    DeviceParams,
    DriveParams,
    TargetState,
    angular_to_ghz,
    angular_to_mhz,
    ghz_to_angular,
    mhz_to_angular,
)
from darkstate.model.tavis_cummings import (
    bare_qubit_state,
    build_htc,
    collective_ops,
    dark_state_condition,
    device_layout,
    dispersive_purcell_rate,
    dressed_eigenstate,
    dressed_single_excitation,
    drive_hamiltonian,
    excitation_number,
    ground_state,
    j_coupling,
    mixing_angle,
    purcell_rate,
    qubit_operator,
    rotating_frame,
    single_qubit_purcell_rate,
    transition_matrix_element,
)
from darkstate.operators.algebra import (
    Operator,
    SpaceLayout,
    StateVector,
    annihilation,
    basis_state,
    commutator,
    embed,
    hermitian_eig,
    pauli,
)

G = mhz_to_angular(116.0)
KAPPA = mhz_to_angular(3.01)
OMEGA_R = ghz_to_angular(6.937)
SINGLE_EXCITATION = ((1, 0, 0), (0, 1, 0), (0, 0, 1))


def make_device(
    delta_mhz: float = -290.0, g_mhz: float = 116.0, omega_r: float = OMEGA_R
) -> DeviceParams:
    """Resonant pair at the given detuning from the cavity."""
    return DeviceParams.uniform(
        omega_r=omega_r,
        omega_q=omega_r + mhz_to_angular(delta_mhz),
        g=mhz_to_angular(g_mhz),
        kappa=KAPPA,
    )


def single_excitation_energies(device: DeviceParams) -> np.ndarray:
    """Transition frequencies from |0;gg> within the single-excitation block."""
    layout = device_layout(device)
    h = build_htc(layout, device)
    index = [layout.index(labels) for labels in SINGLE_EXCITATION]
    block = h.entries[np.ix_(index, index)]
    ground_energy = np.real(h.entries[0, 0])
    return np.sort(np.linalg.eigvalsh(block)) - ground_energy


@pytest.fixture
def device():
    """Measured device at Delta/2pi = -290 MHz."""
    return make_device()


@pytest.fixture
def dressed(device):
    """Closed-form dressed states of the measured device."""
    return dressed_single_excitation(device)


def test_htc_is_hermitian_and_conserves_excitations(device):
    """Test [H_TC, N_exc] = 0."""
    layout = device_layout(device)
    h = build_htc(layout, device)
    assert h.hermitian
    assert commutator(h, excitation_number(layout)).max_norm() < 1e-12


def test_htc_layout_mismatch(device):
    """Test that the layout must match the device truncation."""
    with pytest.raises(LayoutError):
        build_htc(SpaceLayout.cavity_qubits(4, 2), device)


def test_htc_uncoupled_spectrum():
    """Test bare eigenvalues n omega_r + (excited count) omega_q at g = 0."""
    device = make_device(g_mhz=0.0)
    layout = device_layout(device)
    values, _ = hermitian_eig(build_htc(layout, device))
    omega_q = device.omega_q[0]
    expected = sorted(
        n * device.omega_r + (q1 + q2) * omega_q - omega_q
        for n in range(4)
        for q1 in range(2)
        for q2 in range(2)
    )
    np.testing.assert_allclose(values, expected, atol=1e-9)


def test_htc_resonant_collective_splitting():
    """Test single-excitation lines at omega_r and omega_r +- sqrt(2) g at resonance."""
    device = make_device(delta_mhz=0.0)
    energies = single_excitation_energies(device)
    expected = [OMEGA_R - math.sqrt(2.0) * G, OMEGA_R, OMEGA_R + math.sqrt(2.0) * G]
    np.testing.assert_allclose(energies, expected, atol=1e-9)


def test_collective_ops_commutators():
    """Test [J_z, J_+-] = +-J_+-."""
    layout = SpaceLayout.cavity_qubits(2, 2)
    j_z, j_plus, j_minus = collective_ops(layout)
    assert (commutator(j_z, j_plus) - j_plus).max_norm() < 1e-12
    assert (commutator(j_z, j_minus) + j_minus).max_norm() < 1e-12


def test_collective_raising_on_singlet_and_ground():
    """Test J_+|gg> = sqrt(2)|psi_+>, J_+|psi_-> = 0 and J_z|gg> = -|gg>."""
    layout = SpaceLayout.cavity_qubits(2, 2)
    j_z, j_plus, _ = collective_ops(layout)
    ground = ground_state(layout)
    eg = basis_state(layout, (0, 1, 0)).amplitudes
    ge = basis_state(layout, (0, 0, 1)).amplitudes
    np.testing.assert_allclose(j_plus.entries @ ground.amplitudes, eg + ge)
    singlet = (ge - eg) / math.sqrt(2.0)
    np.testing.assert_allclose(j_plus.entries @ singlet, 0.0, atol=1e-15)
    np.testing.assert_allclose(j_z.entries @ ground.amplitudes, -ground.amplitudes)


def test_dressed_frequencies_at_default_point(dressed):
    """Test omega_a = omega_q, omega_s below it and the dispersive J."""
    assert angular_to_ghz(dressed.omega_a) == pytest.approx(6.647, abs=1e-12)
    assert dressed.omega_s < dressed.omega_a
    assert angular_to_mhz(dressed.splitting) == pytest.approx(73.945, abs=0.01)
    assert angular_to_mhz(dressed.j_coupling) == pytest.approx(-46.4, abs=1e-9)


def test_dressed_states_are_orthonormal(dressed):
    """Test mutual orthonormality and the photon-free dark state."""
    states = [dressed.psi_a, dressed.psi_s, dressed.psi_r]
    for i, a in enumerate(states):
        for j, b in enumerate(states):
            assert abs(a.inner(b)) == pytest.approx(1.0 if i == j else 0.0, abs=1e-10)
    layout = dressed.psi_a.layout
    for n in range(1, layout.n_max + 1):
        for q1 in range(2):
            for q2 in range(2):
                assert abs(dressed.psi_a.amplitudes[layout.index((n, q1, q2))]) < 1e-12


@pytest.mark.parametrize("delta_mhz", [-2000.0, -500.0, -290.0, -232.0, 232.0, 600.0])
def test_dressed_states_match_diagonalization(delta_mhz):
    """Test analytic states and energies against hermitian_eig for |Delta| >= 2g."""
    device = make_device(delta_mhz=delta_mhz)
    dressed = dressed_single_excitation(device)
    layout = device_layout(device)
    h = build_htc(layout, device)
    ground_energy = float(np.real(h.entries[0, 0]))
    for state, frequency in (
        (dressed.psi_a, dressed.omega_a),
        (dressed.psi_s, dressed.omega_s),
        (dressed.psi_r, dressed.omega_r_dressed),
    ):
        numeric, energy = dressed_eigenstate(h, state)
        assert abs(numeric.inner(state)) > 1.0 - 1e-6
        assert energy - ground_energy == pytest.approx(frequency, abs=1e-9)


def test_mixing_angle_branch():
    """Test theta_m -> pi in the dispersive limit and pi + pi/4 at resonance."""
    assert mixing_angle(G, mhz_to_angular(-1e6)) == pytest.approx(math.pi, abs=1e-3)
    assert mixing_angle(G, 0.0) == pytest.approx(math.pi + math.pi / 4.0)
    deltas = np.linspace(-10 * G, 10 * G, 401)
    angles = np.array([mixing_angle(G, d) for d in deltas])
    assert np.all(np.abs(np.diff(angles)) < 0.05)
    assert np.all(angles >= math.pi) and np.all(angles <= 1.5 * math.pi)


def test_photon_admixture_in_dispersive_limit():
    """Test the psi_s photon amplitude approaches sqrt(2) g/|Delta|."""
    device = make_device(delta_mhz=-11600.0, omega_r=ghz_to_angular(20.0))
    dressed = dressed_single_excitation(device)
    photon = basis_state(device_layout(device), (1, 0, 0))
    amplitude = abs(photon.inner(dressed.psi_s))
    assert amplitude == pytest.approx(math.sqrt(2.0) / 100.0, rel=1e-3)


def test_resonant_dressed_states_are_equal_mixtures():
    """Test equal photon and qubit weights at Delta = 0."""
    device = make_device(delta_mhz=0.0)
    dressed = dressed_single_excitation(device)
    photon = basis_state(device_layout(device), (1, 0, 0))
    assert abs(photon.inner(dressed.psi_s)) ** 2 == pytest.approx(0.5)
    assert abs(photon.inner(dressed.psi_r)) ** 2 == pytest.approx(0.5)
    assert math.isnan(dressed.j_coupling)


def test_dressed_requires_resonant_pair(device):
    """Test ResonanceError for detuned qubits or unequal couplings."""
    detuned = DeviceParams(
        omega_r=device.omega_r,
        omega_q=(device.omega_q[0], device.omega_q[0] + 1e-3),
        g=device.g,
        kappa=device.kappa,
        gamma_i=(0.0, 0.0),
        gamma_phi=(0.0, 0.0),
    )
    with pytest.raises(ResonanceError):
        dressed_single_excitation(detuned)
    unequal = DeviceParams(
        omega_r=device.omega_r,
        omega_q=device.omega_q,
        g=(G, 1.1 * G),
        kappa=device.kappa,
        gamma_i=(0.0, 0.0),
        gamma_phi=(0.0, 0.0),
    )
    with pytest.raises(ResonanceError):
        dressed_single_excitation(unequal)


def test_dressed_state_lookup(dressed):
    """Test state and frequency accessors."""
    assert dressed.state(TargetState.PSI_A) is dressed.psi_a
    assert dressed.frequency(TargetState.PSI_S) == dressed.omega_s
    with pytest.raises(ValueError):
        dressed.state(TargetState.EG)


def test_drive_hamiltonian_symmetric_drive(device):
    """Test xi = 1, phi = 0 gives 2 epsilon J_x."""
    layout = device_layout(device)
    epsilon = 0.01
    h_d = drive_hamiltonian(layout, DriveParams(epsilon=epsilon, xi=1.0, phi=0.0))
    _, j_plus, j_minus = collective_ops(layout)
    np.testing.assert_allclose(h_d.entries, epsilon * (j_plus + j_minus).entries, atol=1e-15)
    assert h_d.hermitian


def test_drive_hamiltonian_limits(device):
    """Test zero drive and the single-qubit drive."""
    layout = device_layout(device)
    assert drive_hamiltonian(layout, DriveParams(epsilon=0.0)).max_norm() == 0.0
    single = drive_hamiltonian(layout, DriveParams(epsilon=0.02, xi=0.0))
    np.testing.assert_allclose(single.entries, 0.02 * qubit_operator(layout, "x", 0).entries)


def test_drive_hamiltonian_needs_two_qubits():
    """Test UnsupportedDriveError for three qubits."""
    layout = SpaceLayout.cavity_qubits(2, 3)
    with pytest.raises(UnsupportedDriveError):
        drive_hamiltonian(layout, DriveParams(epsilon=0.01))


@pytest.mark.parametrize(
    "phi, expected_s, expected_a",
    [(0.0, math.sqrt(2.0), 0.0), (math.pi, 0.0, math.sqrt(2.0)), (math.pi / 2, 1.0, 1.0)],
)
def test_selection_rules(phi, expected_s, expected_a):
    """Test Omega(psi_s), Omega(psi_a) in the dispersive limit at xi = 1."""
    device = make_device(delta_mhz=-50 * 116.0)
    dressed = dressed_single_excitation(device)
    ground = ground_state(dressed.psi_a.layout)
    epsilon = 0.01
    drive = DriveParams(epsilon=epsilon, xi=1.0, phi=phi)
    omega_s = transition_matrix_element(drive, dressed.psi_s, ground)
    omega_a = transition_matrix_element(drive, dressed.psi_a, ground)
    assert omega_s == pytest.approx(expected_s * epsilon, rel=1e-3, abs=1e-10 * epsilon)
    assert omega_a == pytest.approx(expected_a * epsilon, rel=1e-12, abs=1e-10 * epsilon)


def test_selection_rule_phase_sweep():
    """Test 64 phases against the dispersive formula at |Delta| = 50 g."""
    device = make_device(delta_mhz=-50 * 116.0)
    dressed = dressed_single_excitation(device)
    ground = ground_state(dressed.psi_a.layout)
    epsilon, xi = 0.01, 0.8
    for phi in np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False):
        drive = DriveParams(epsilon=epsilon, xi=xi, phi=phi)
        for state, sign in ((dressed.psi_s, 1.0), (dressed.psi_a, -1.0)):
            expected = epsilon * math.sqrt((1 + xi**2 + sign * 2 * xi * math.cos(phi)) / 2)
            actual = transition_matrix_element(drive, state, ground)
            assert actual == pytest.approx(expected, rel=1e-3)


@settings(max_examples=100, deadline=None)
@given(
    xi=st.floats(min_value=0.0, max_value=3.0),
    phi=st.floats(min_value=0.0, max_value=2.0 * math.pi),
)
def test_selection_rule_duality(xi, phi):
    """Test Omega_s^2 + Omega_a^2 = epsilon^2 (1 + xi^2) in the dispersive limit."""
    device = make_device(delta_mhz=-50 * 116.0)
    dressed = dressed_single_excitation(device)
    ground = ground_state(dressed.psi_a.layout)
    epsilon = 0.01
    drive = DriveParams(epsilon=epsilon, xi=xi, phi=phi)
    total = (
        transition_matrix_element(drive, dressed.psi_s, ground) ** 2
        + transition_matrix_element(drive, dressed.psi_a, ground) ** 2
    )
    assert total == pytest.approx(epsilon**2 * (1 + xi**2), rel=1e-3)


def test_transition_matrix_element_requires_normalized_states(dressed):
    """Test NormalizationError for an unnormalized target."""
    layout = dressed.psi_a.layout
    loose = StateVector(layout, 2.0 * dressed.psi_a.amplitudes, normalized=False)
    with pytest.raises(NormalizationError):
        transition_matrix_element(DriveParams(epsilon=0.01), loose, ground_state(layout))


def test_dark_state_condition(dressed):
    """Test which state the drive leaves dark."""
    assert dark_state_condition(DriveParams(epsilon=0.01, phi=0.0), dressed) is TargetState.PSI_A
    assert (
        dark_state_condition(DriveParams(epsilon=0.01, phi=math.pi), dressed)
        is TargetState.PSI_S
    )
    assert dark_state_condition(DriveParams(epsilon=0.01, xi=0.5), dressed) is None
    assert dark_state_condition(DriveParams(epsilon=0.0), dressed) is None


def test_purcell_rates_at_default_point(device, dressed):
    """Test gamma(psi_a) = 0 and gamma(psi_s) = kappa sin^2(theta_m)."""
    ground = ground_state(device_layout(device))
    assert purcell_rate(dressed.psi_a, ground, KAPPA) == 0.0
    gamma_s = purcell_rate(dressed.psi_s, ground, KAPPA)
    assert gamma_s == pytest.approx(KAPPA * math.sin(dressed.theta_m) ** 2, rel=1e-12)
    assert gamma_s / KAPPA == pytest.approx(0.1689, abs=1e-3)
    gamma_r = purcell_rate(dressed.psi_r, ground, KAPPA)
    assert gamma_s + gamma_r == pytest.approx(KAPPA, rel=1e-12)


@pytest.mark.parametrize("delta_mhz", [-5000.0, -290.0, 0.0, 400.0])
def test_dark_state_purcell_rate_vanishes(delta_mhz):
    """Test the dark state never decays through the cavity."""
    device = make_device(delta_mhz=delta_mhz)
    dressed = dressed_single_excitation(device)
    assert purcell_rate(dressed.psi_a, ground_state(device_layout(device)), KAPPA) == 0.0


def test_purcell_rate_dispersive_limit():
    """Test kappa sin^2(theta_m) -> 2 (g/Delta)^2 kappa at |Delta| = 20 g."""
    delta = -20 * G
    device = make_device(delta_mhz=angular_to_mhz(delta))
    dressed = dressed_single_excitation(device)
    gamma_s = purcell_rate(dressed.psi_s, ground_state(device_layout(device)), KAPPA)
    assert gamma_s == pytest.approx(2.0 * dispersive_purcell_rate(G, delta, KAPPA), rel=0.03)


@pytest.mark.parametrize("delta_mhz", [-290.0, 290.0])
def test_single_qubit_purcell_rate_matches_diagonalization(delta_mhz):
    """Test the N = 1 closed form against a diagonalized Jaynes-Cummings model on both sides."""
    delta = mhz_to_angular(delta_mhz)
    layout = SpaceLayout.cavity_qubits(3, 1)
    a = embed(annihilation(3), layout, 0)
    sigma_plus = embed(pauli("plus"), layout, 1)
    h = OMEGA_R * (a.dag() @ a) + 0.5 * (OMEGA_R + delta) * embed(pauli("z"), layout, 1)
    h = h + G * (a @ sigma_plus + a.dag() @ sigma_plus.dag())
    h = Operator(layout, h.entries, hermitian=True)
    qubit, _ = dressed_eigenstate(h, basis_state(layout, (0, 1)))
    ground = basis_state(layout, (0, 0))
    exact = purcell_rate(qubit, ground, KAPPA)
    assert single_qubit_purcell_rate(G, delta, KAPPA) == pytest.approx(exact, rel=1e-9)
    assert exact == pytest.approx(dispersive_purcell_rate(G, delta, KAPPA), rel=0.5)


def test_j_coupling():
    """Test value, sign and the resonance error."""
    assert angular_to_mhz(j_coupling(G, mhz_to_angular(-290.0))) == pytest.approx(-46.4)
    assert j_coupling(0.0, -1.0) == 0.0
    assert j_coupling(G, 1.0) > 0
    with pytest.raises(JUndefinedError):
        j_coupling(G, 0.0)
    with pytest.raises(ZeroDivisionError):
        j_coupling(G, 0.0)
    with pytest.raises(JUndefinedError):
        dispersive_purcell_rate(G, 0.0, KAPPA)


def test_rotating_frame_shifts_by_excitation_number(device, dressed):
    """Test eigenvalue shifts of -omega per excitation with unchanged eigenvectors."""
    layout = device_layout(device)
    h = build_htc(layout, device)
    assert rotating_frame(h, layout, 0.0) is h
    omega_d = dressed.omega_a
    framed = rotating_frame(h, layout, omega_d)
    assert framed.hermitian
    ground = ground_state(layout)
    ground_energy = float(np.real(ground.matrix_element(framed, ground)))
    energy = float(np.real(dressed.psi_a.matrix_element(framed, dressed.psi_a)))
    assert energy - ground_energy == pytest.approx(dressed.omega_a - omega_d, abs=1e-9)
    residual = framed.entries @ dressed.psi_s.amplitudes - (
        dressed.omega_s - omega_d + ground_energy
    ) * dressed.psi_s.amplitudes
    assert np.max(np.abs(residual)) < 1e-9


def test_rotating_frame_layout_mismatch(device):
    """Test LayoutError for a frame on another layout."""
    h = build_htc(device_layout(device), device)
    with pytest.raises(LayoutError):
        rotating_frame(h, SpaceLayout.cavity_qubits(4, 2), 1.0)


def test_bare_qubit_states():
    """Test eg has qubit 1 excited and ge qubit 2."""
    layout = SpaceLayout.cavity_qubits(3, 2)
    z1 = qubit_operator(layout, "z", 0)
    eg = bare_qubit_state(layout, TargetState.EG)
    ge = bare_qubit_state(layout, TargetState.GE)
    assert eg.matrix_element(z1, eg) == pytest.approx(1.0)
    assert ge.matrix_element(z1, ge) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        bare_qubit_state(layout, TargetState.PSI_A)


def test_single_qubit_purcell_rate_is_symmetric_in_detuning():
    """Test that the qubit-like state leaks the same at +Delta and -Delta."""
    delta = mhz_to_angular(290.0)
    rate = single_qubit_purcell_rate(G, delta, KAPPA)
    assert rate == pytest.approx(single_qubit_purcell_rate(G, -delta, KAPPA))
    assert rate == pytest.approx(0.002072, rel=1e-3)
    assert rate < 0.5 * KAPPA
