import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from measurement_feedback.dynamics import propagate_exact
from measurement_feedback.measurement import kraus_qubit
from measurement_feedback.qmath import SIGMA_X, SIGMA_Z, hermiticity_residual
from measurement_feedback.systems import (
    PAIR_INDEX,
    PAIR_ORDER,
    T_STATE,
    DilationParams,
    DrivenQubitParams,
    RydbergParams,
    SpinFieldParams,
    driven_qubit_hamiltonians,
    effective_hamiltonian,
    field_direction,
    induced_nuclear_kraus,
    pair_state,
    ramsey_dilation,
    rydberg_hamiltonian,
    spin_hamiltonians,
    validate_effective_model,
)

from conftest import random_state

MHZ = 1e-3  # rad per ns
OMEGA = 2 * math.pi * 15 * MHZ
DELTA = 2 * math.pi * 740 * MHZ
FIG3 = RydbergParams(OMEGA, OMEGA, DELTA, OMEGA)

angles = st.floats(-math.pi, math.pi)


def test_spin_along_z():
    spec = spin_hamiltonians(SpinFieldParams(omega_L=2.0, theta=math.pi / 2, phi=0.3))
    assert np.allclose(field_direction(math.pi / 2, 0.3), [0, 0, 1], atol=1e-16)
    assert np.allclose(spec.h0, SIGMA_Z, atol=1e-16)


def test_spin_fig1_pair():
    th, ph = math.pi / 3, math.pi / 4
    spec = spin_hamiltonians(SpinFieldParams(1.0, th, ph, 0.05, th - th / 50, ph - ph / 50))
    h = spec.hamiltonian(spec.noise.static_amplitudes)
    assert hermiticity_residual(spec.h0) <= 1e-12 and hermiticity_residual(h) <= 1e-12
    # eigenvalues +-(omega_L + omega_eps)/2
    assert np.allclose(np.linalg.eigvalsh(h), [-0.525, 0.525], atol=1e-14)


def test_spin_noiseless_reduction():
    spec = spin_hamiltonians(SpinFieldParams(1.0, 0.4, 0.9, 0.0, 0.4, 0.9))
    assert np.abs(spec.hamiltonian(spec.noise.static_amplitudes) - spec.h0).max() == 0


@given(angles, angles, angles, angles, st.floats(0, 2), st.floats(-0.5, 0.5))
def test_spin_hermitian_unit_directions(th, ph, thp, php, w, we):
    p = SpinFieldParams(w, th, ph, we, thp, php)
    assert abs(np.linalg.norm(p.direction) - 1) <= 1e-12
    assert abs(np.linalg.norm(p.noisy_direction) - 1) <= 1e-12
    spec = spin_hamiltonians(p)
    assert hermiticity_residual(spec.hamiltonian(spec.noise.static_amplitudes)) <= 1e-12


def test_spin_along_x_closed_form():
    spec = spin_hamiltonians(SpinFieldParams(omega_L=1.1, theta=0.0, phi=0.0))
    plus = np.array([1, 0], complex)
    for t in np.linspace(0, 20, 81):
        psi = propagate_exact(spec, plus, t)
        assert abs(np.vdot(psi, SIGMA_Z @ psi).real - math.cos(1.1 * t)) <= 1e-8


def test_driven_qubit_zero_offsets():
    spec = driven_qubit_hamiltonians(DrivenQubitParams(1.0, 1.0))
    assert np.allclose(spec.noise_hamiltonian(spec.noise.static_amplitudes), 0)
    assert np.allclose(spec.h0, 0.5 * SIGMA_X + 0.5 * SIGMA_Z)


def test_driven_qubit_random_offsets_hermitian():
    rng = np.random.default_rng(0)
    for _ in range(100):
        d_eps, d_beta = rng.normal(scale=0.2, size=2)
        spec = driven_qubit_hamiltonians(DrivenQubitParams(1.0, 1.0, d_eps, d_beta))
        h = spec.hamiltonian(spec.noise.static_amplitudes)
        assert hermiticity_residual(h) <= 1e-12
        assert np.allclose(h, 0.5 * (1 + d_eps) * SIGMA_X + 0.5 * (1 + d_beta) * SIGMA_Z)


def test_rydberg_trivial_case():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = rydberg_hamiltonian(RydbergParams(0.0, 0.0, 0.0, 3.0))
    expected = np.zeros((9, 9))
    expected[PAIR_INDEX["rr"], PAIR_INDEX["rr"]] = 3.0
    assert np.array_equal(spec.h0, expected)


def test_rydberg_fig3_structure():
    spec = rydberg_hamiltonian(FIG3)
    h = spec.h0
    assert h.shape == (9, 9) and hermiticity_residual(h) <= 1e-12
    allowed = {("g", "e"), ("e", "g"), ("e", "r"), ("r", "e")}
    for i, a in enumerate(PAIR_ORDER):
        for j, b in enumerate(PAIR_ORDER):
            if i == j or h[i, j] == 0:
                continue
            diff = [(x, y) for x, y in zip(a, b) if x != y]
            # one atom changes, along g<->e or e<->r
            assert len(diff) == 1 and diff[0] in allowed, (a, b)
    for g in spec.noise_generators:
        assert hermiticity_residual(g) <= 1e-12 and g.shape == (9, 9)
    assert abs(h[PAIR_INDEX["ge"], PAIR_INDEX["ge"]] - DELTA) < 1e-15
    assert abs(h[PAIR_INDEX["ee"], PAIR_INDEX["ee"]] - 2 * DELTA) < 1e-15


def test_rydberg_omega_eff_arithmetic():
    assert abs(FIG3.omega_eff / (2 * math.pi * MHZ) - 15**2 / 740) < 1e-12
    assert abs(15**2 / 740 - 0.3041) < 1e-4


def test_rydberg_regime_warning():
    with pytest.warns(UserWarning, match="detuning"):
        rydberg_hamiltonian(RydbergParams(1.0, 1.0, 2.0, 10.0))


def test_T_state():
    assert np.allclose(T_STATE, (pair_state("gr") + pair_state("rg")) / math.sqrt(2))
    h = effective_hamiltonian(FIG3)
    assert hermiticity_residual(h) == 0


def test_effective_model_fig3():
    t_peak = math.pi / (2 * math.sqrt(2) * FIG3.omega_eff)
    report = validate_effective_model(FIG3, 1.5 * t_peak)
    assert report.passed
    assert report.peak_time_error <= 0.05
    assert report.max_rr_population <= 0.05
    assert report.max_excited_population <= 0.05
    assert not report.issues
    assert report.population_T.max() > 0.95


def test_stronger_blockade_reduces_leakage():
    t_peak = math.pi / (2 * math.sqrt(2) * FIG3.omega_eff)
    weak = validate_effective_model(FIG3, 1.5 * t_peak)
    strong = validate_effective_model(RydbergParams(OMEGA, OMEGA, DELTA, 100 * OMEGA), 1.5 * t_peak)
    assert strong.max_rr_population < weak.max_rr_population


def test_halved_coupling_doubles_period():
    slow = RydbergParams(OMEGA, OMEGA, 2 * DELTA, OMEGA)
    t_peak = math.pi / (2 * math.sqrt(2) * FIG3.omega_eff)
    a = validate_effective_model(FIG3, 1.5 * t_peak)
    b = validate_effective_model(slow, 3.0 * t_peak)
    assert abs(b.peak_time / a.peak_time - 2) <= 0.1


@pytest.mark.parametrize("theta", [0.05, 0.32175, 0.7])
def test_dilation_matches_qubit_family(theta):
    res = ramsey_dilation(DilationParams.from_theta(theta, g=2.0, omega_L=1.3))
    assert res.residual <= 1e-10
    assert res.completeness_residual <= 1e-12
    assert abs(res.p0_equiv - 0.5 * (math.cos(theta) - math.sin(theta)) ** 2) < 1e-15
    q = kraus_qubit(res.p0_equiv)
    for alpha, n in ((+1, 1), (-1, 0)):
        m = res.kraus[alpha]
        assert np.abs(m.conj().T @ m - q.operators[n] ** 2).max() <= 1e-10


def test_dilation_p0_02():
    theta = 0.5 * math.asin(0.6)
    assert abs(theta - 0.32175) < 1e-5
    assert abs(DilationParams.from_theta(theta).p0_equiv - 0.2) < 1e-15


def test_dilation_limits():
    res = ramsey_dilation(DilationParams.from_theta(0.0, omega_L=0.4))
    assert res.p0_equiv == 0.5
    for m in res.kraus.values():
        assert np.allclose(m.conj().T @ m, np.eye(2) / 2, atol=1e-14)
    assert DilationParams.from_theta(math.pi / 4 - 1e-9).p0_equiv < 1e-16
    with pytest.raises(ValueError, match="projective"):
        ramsey_dilation(DilationParams.from_theta(math.pi / 4))


@given(st.floats(0, math.pi / 4 - 1e-6), st.floats(-3, 3))
def test_dilation_completeness(theta, omega_L):
    res = ramsey_dilation(DilationParams.from_theta(theta, omega_L=omega_L))
    assert res.completeness_residual <= 1e-12


@given(st.floats(0.01, 0.75), st.floats(-1, 1), st.integers(0, 2**31))
def test_larmor_shift_leaves_distribution(theta, omega_eps, seed):
    psi = random_state(np.random.default_rng(seed), 2)
    a = induced_nuclear_kraus(DilationParams.from_theta(theta, omega_L=0.8))
    b = induced_nuclear_kraus(DilationParams.from_theta(theta, omega_L=0.8 + omega_eps))
    for alpha in (+1, -1):
        assert abs(np.linalg.norm(a[alpha] @ psi) ** 2 - np.linalg.norm(b[alpha] @ psi) ** 2) <= 1e-12
