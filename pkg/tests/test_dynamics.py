import numpy as np
import numpy.testing as npt
import pytest
from scipy.linalg import expm

from dcspin import (
    ConstantWaveform,
    DcsWaveform,
    IntegrationPolicy,
    Nucleus,
    QuantumState,
    SpinSystem,
    angular_from_khz,
    angular_from_mhz,
    build_dcs_waveform,
    build_hamiltonian,
    effective_flipflop_signal,
    expectation,
    initial_state,
    magnus_effective_hamiltonian,
    nuclear_frequency,
    optimal_dwell_times,
    propagate,
    propagate_spin_pair,
)
from dcspin.dynamics import sample_grid
from dcspin.spincore import (
    nuclear_x_observable,
    nuclear_z_observable,
    sigma_z_observable,
)
from dcspin.waveform import ResonanceConditionError

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# trivial propagation limits
# ---------------------------------------------------------------------------

def test_zero_hamiltonian_is_identity_evolution():
    system = SpinSystem(field_z=0.0, nuclei=(Nucleus(0.0, 0.0, 0.0),))
    traj = propagate(system, ConstantWaveform(0.0), initial_state("sensing", system),
                     T=1e-3, sample_every=1e-4)
    npt.assert_allclose(traj.observables["sigma_z"], 1.0, atol=1e-14)
    npt.assert_allclose(traj.observables["I_z[1]"], 0.0, atol=1e-14)


def test_free_larmor_precession():
    omega_n = angular_from_mhz(2.0)
    system = SpinSystem(field_z=1.0, nuclei=(Nucleus(omega_n, 0.0, 0.0),))
    # nucleus along +x, electron in |+>
    vec = np.kron([1.0, 0.0], [1.0, 1.0]) / np.sqrt(2)
    times = np.linspace(0.0, 2e-6, 40)
    traj = propagate(system, ConstantWaveform(0.0), QuantumState.pure(vec),
                     T=times[-1], sample_times=times,
                     extra_observables=[nuclear_x_observable(system, 1)])
    npt.assert_allclose(traj.observables["I_x[1]"], 0.5 * np.cos(omega_n * times),
                        atol=1e-10)
    npt.assert_allclose(traj.observables["I_z[1]"], 0.0, atol=1e-12)
    npt.assert_allclose(traj.observables["sigma_z"], 1.0, atol=1e-12)


def test_sample_grid():
    npt.assert_allclose(sample_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    npt.assert_allclose(sample_grid(1.0, None), [0.0, 1.0])
    grid = sample_grid(1.0, 0.3)
    assert grid[0] == 0.0 and grid[-1] == 1.0
    with pytest.raises(ValueError):
        sample_grid(-1.0, 0.1)


# ---------------------------------------------------------------------------
# representation equivalence and sampling invariance
# ---------------------------------------------------------------------------

def test_branch_and_density_propagation_agree(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    w = build_dcs_waveform(carbon_rabi, nu)
    mixture = initial_state("sensing", carbon_system)
    density = QuantumState.from_density(mixture.density_matrix())
    times = np.linspace(0.0, 30e-6, 7)
    t1 = propagate(carbon_system, w, mixture, times[-1], sample_times=times)
    t2 = propagate(carbon_system, w, density, times[-1], sample_times=times)
    for name in t1.observables:
        npt.assert_allclose(t1.observables[name], t2.observables[name], atol=1e-11)
    npt.assert_allclose(t1.final_state.density_matrix(),
                        t2.final_state.density_matrix(), atol=1e-11)


def test_sampling_does_not_change_the_evolution(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    w = build_dcs_waveform(carbon_rabi, nu, switch_fraction=0.1)
    state = initial_state("sensing", carbon_system)
    T = 20e-6
    dense = propagate(carbon_system, w, state, T, sample_every=T / 137)
    sparse = propagate(carbon_system, w, state, T)
    assert dense.observables["sigma_z"][-1] == pytest.approx(
        sparse.observables["sigma_z"][-1], abs=1e-10)


def test_fast_forward_matches_sequential(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    w = build_dcs_waveform(carbon_rabi, nu)
    state = initial_state("sensing", carbon_system)
    T = 15e-6
    fast = propagate(carbon_system, w, state, T)
    slow = propagate(carbon_system, w, state, T,
                     policy=IntegrationPolicy(fast_forward=False))
    assert fast.observables["sigma_z"][-1] == pytest.approx(
        slow.observables["sigma_z"][-1], abs=1e-11)


def test_max_step_split_is_exact_for_constant_segments(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    w = build_dcs_waveform(carbon_rabi, nu)
    state = initial_state("sensing", carbon_system)
    T = 5e-6
    a = propagate(carbon_system, w, state, T)
    b = propagate(carbon_system, w, state, T, policy=IntegrationPolicy(max_step=2e-9))
    assert a.observables["sigma_z"][-1] == pytest.approx(
        b.observables["sigma_z"][-1], abs=1e-11)


def test_ramp_substep_convergence():
    """Halving the ramp step at the default resolution changes the endpoint
    below 1e-8, on the millisecond-horizon ramped configuration."""
    a = angular_from_khz(0.5)
    proton = SpinSystem(field_z=0.35,
                        nuclei=(Nucleus(angular_from_mhz(42.5775), a, a),))
    omega = angular_from_mhz(2.0) * np.sqrt(56.0 / 84.0)
    nu = nuclear_frequency(proton.nuclei[0], proton.field_z)
    w = build_dcs_waveform(omega, nu, switch_fraction=0.14)
    state = initial_state("sensing", proton)
    default_n = IntegrationPolicy().ramp_substeps
    finals = [propagate(proton, w, state, 1e-3,
                        policy=IntegrationPolicy(ramp_substeps=n)
                        ).observables["I_z[1]"][-1]
              for n in (default_n, 2 * default_n)]
    assert abs(finals[1] - finals[0]) < 1e-8


def test_trajectory_validation_bounds(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    w = build_dcs_waveform(carbon_rabi, nu)
    traj = propagate(carbon_system, w, initial_state("sensing", carbon_system), 1e-5)
    assert np.all(np.abs(traj.observables["sigma_z"]) <= 1 + 1e-9)
    assert np.all(np.abs(traj.observables["I_z[1]"]) <= 0.5 + 1e-9)
    assert np.all(np.diff(traj.times) > 0)


# ---------------------------------------------------------------------------
# effective flip-flop model
# ---------------------------------------------------------------------------

def test_effective_signal_examples():
    omega, nu = angular_from_mhz(1.0), angular_from_mhz(10.713)
    a_x = angular_from_khz(13.42)
    assert effective_flipflop_signal(omega, nu, a_x, 0.0) == 1.0
    t_full = np.pi ** 2 * nu / (omega * a_x)
    assert effective_flipflop_signal(omega, nu, a_x, t_full) == pytest.approx(0.0, abs=1e-24)
    assert effective_flipflop_signal(omega, nu, a_x, 0.308e-3) == pytest.approx(0.858, abs=5e-4)


def test_magnus_hamiltonian_flipflop(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    tau_plus, tau_minus = optimal_dwell_times(carbon_rabi, nu)
    w = DcsWaveform(carbon_rabi, tau_plus, tau_minus)
    h = magnus_effective_hamiltonian(carbon_system, w, "flipflop").matrix
    # conserves sigma_z/2 + I_z
    conserved = (0.5 * sigma_z_observable(carbon_system).matrix
                 + nuclear_z_observable(carbon_system, 1).matrix)
    npt.assert_allclose(h @ conserved - conserved @ h, 0, atol=1e-12 * np.abs(h).max())
    # coupling magnitude (largest matrix element) is Omega/(2 pi nu) * A_x
    coeff = carbon_rabi / (TWO_PI * nu) * carbon_system.nuclei[0].hyperfine_x
    assert np.max(np.abs(h)) == pytest.approx(coeff, rel=1e-12)
    assert coeff == pytest.approx(1252.7, rel=1e-3)  # rad/s, i.e. 2pi x 199.4 Hz
    # exact evolution under the effective Hamiltonian conserves the quantity
    state = initial_state("sensing", carbon_system).density_matrix()
    for t in (1e-4, 7e-4):
        u = expm(-1j * h * t)
        rho = u @ state @ u.conj().T
        value = np.trace(rho @ conserved).real
        assert value == pytest.approx(np.trace(state @ conserved).real, abs=1e-12)


def test_magnus_hamiltonian_doublequantum(carbon_rabi):
    a_x, a_z = angular_from_khz(13.42), angular_from_khz(17.09)
    nu = angular_from_mhz(10.713)
    target = nu - 2 * carbon_rabi ** 2 / nu
    gamma = (target - 0.5 * a_z) / 1.0
    system = SpinSystem(field_z=1.0, nuclei=(Nucleus(gamma, a_x, a_z),))
    tau_plus, tau_minus = optimal_dwell_times(carbon_rabi, nu)
    w = DcsWaveform(carbon_rabi, tau_plus, tau_minus)
    h = magnus_effective_hamiltonian(system, w, "doublequantum").matrix
    conserved = (0.5 * sigma_z_observable(system).matrix
                 - nuclear_z_observable(system, 1).matrix)
    npt.assert_allclose(h @ conserved - conserved @ h, 0, atol=1e-12 * np.abs(h).max())


def test_magnus_hamiltonian_preconditions(carbon_system, carbon_rabi):
    nu = nuclear_frequency(carbon_system.nuclei[0], carbon_system.field_z)
    tau_plus, tau_minus = optimal_dwell_times(carbon_rabi, nu)
    off_optimal = DcsWaveform(carbon_rabi, tau_plus * 1.1, tau_minus)
    with pytest.raises(ResonanceConditionError):
        magnus_effective_hamiltonian(carbon_system, off_optimal, "flipflop")
    detuned = DcsWaveform(carbon_rabi, *optimal_dwell_times(carbon_rabi, 1.01 * nu))
    with pytest.raises(ResonanceConditionError):
        magnus_effective_hamiltonian(carbon_system, detuned, "flipflop")
    with pytest.raises(ValueError):
        magnus_effective_hamiltonian(carbon_system,
                                     DcsWaveform(carbon_rabi, tau_plus, tau_minus),
                                     "sideways")


def test_full_dynamics_tracks_effective_model(carbon_system, carbon_rabi):
    """Short-horizon version of the resonance time law (full check in acceptance)."""
    from dcspin.presets import fit_dcs_resonance
    nu_star = fit_dcs_resonance(carbon_system, carbon_rabi, 0.308e-3,
                                nuclear_frequency(carbon_system.nuclei[0], 1.0),
                                TWO_PI * 3e3)
    w = build_dcs_waveform(carbon_rabi, nu_star)
    times = np.linspace(0.0, 0.2e-3, 101)
    traj = propagate(carbon_system, w, initial_state("sensing", carbon_system),
                     times[-1], sample_times=times)
    a_x = carbon_system.nuclei[0].hyperfine_x
    model = np.array([effective_flipflop_signal(carbon_rabi, nu_star, a_x, t)
                      for t in times])
    assert np.max(np.abs(traj.observables["sigma_z"] - model)) < 0.02


# ---------------------------------------------------------------------------
# two-spin exchange model
# ---------------------------------------------------------------------------

def up_down_state():
    vec = np.zeros(4, dtype=complex)
    vec[1] = 1.0  # |up, down>
    return QuantumState.pure(vec)


def test_spin_pair_resonant_exchange():
    omega_n = angular_from_mhz(2.0)
    a = angular_from_khz(5.0)
    t_swap = np.pi / (2 * a)
    times = np.linspace(0.0, 2 * t_swap, 81)
    traj = propagate_spin_pair(ConstantWaveform(omega_n), omega_n, a,
                               up_down_state(), times[-1], sample_times=times)
    iz = traj.observables["I_z[1]"]
    npt.assert_allclose(iz, -0.5 * np.cos(2 * a * times), atol=1e-9)
    assert iz[40] == pytest.approx(0.5, abs=1e-9)  # full transfer at t_swap


def test_spin_pair_off_resonant_suppression():
    omega_n = angular_from_mhz(2.0)
    a = angular_from_khz(1.0)
    omega_e = omega_n - 200 * a  # detuning 200x the coupling
    times = np.linspace(0.0, 4e-4, 400)
    traj = propagate_spin_pair(ConstantWaveform(omega_e), omega_n, a,
                               up_down_state(), times[-1], sample_times=times)
    transfer = traj.observables["I_z[1]"] + 0.5
    assert np.max(transfer) <= (2 * a / (omega_n - omega_e)) ** 2 + 1e-12


def test_spin_pair_requires_two_spins():
    with pytest.raises(ValueError):
        propagate_spin_pair(ConstantWaveform(1.0), 1.0, 0.1,
                            QuantumState.pure(np.array([1.0, 0.0])), 1.0)
