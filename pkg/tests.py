"""
Test Suite - PT-symmetric dilation simulator
Numbered essentials per module, hypothesis properties and end-to-end CLI runs.
"""
import unittest
import os
import sys
import csv
import json
import math
import shutil
import tempfile
from unittest import mock

# Disable CrewAI telemetry to prevent connection errors
os.environ['OTEL_SDK_DISABLED'] = 'true'
os.environ['DO_NOT_TRACK'] = '1'

# Suppress CrewAI telemetry logging
import logging
logging.getLogger('crewai.telemetry.telemetry').setLevel(logging.CRITICAL)

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
import scipy.linalg
from hypothesis import HealthCheck, assume, given, settings, strategies as st
from pydantic import ValidationError

from optics.compiler import (
    SINGLE_HWP,
    U3_FIXED_CHAIN,
    MAX_RESIDUAL,
    NpbsSpec,
    compile_u1,
    compile_u2,
    compile_u3,
    decompose_unitary,
    npbs_ratio,
    table1_csv_rows,
    table1_report,
    u2_hwp_angle_deg,
)
from optics.jones import (
    ElementChain,
    PlateKind,
    WaveplateSetting,
    chain_matrix,
    chain_of,
    format_chain,
    hwp_matrix,
    jones,
    normalize_angle_deg,
    plate,
    qwp_matrix,
)
from physics.dilation import (
    DilationAngles,
    angles,
    build_circuit,
    lcu_residual,
    printed_angle_pairs,
    postselect,
    postselected_p0,
    run_circuit,
    success_probability,
    success_probability_formula,
    u2_matrix,
    u3_matrix,
)
from physics.linalg import (
    I2,
    KET0,
    KET1,
    PAULI,
    SERIES_CUTOFF,
    SIGMA_X,
    SIGMA_Z,
    avg_abs_diff,
    cos_sinc,
    expm2_closed,
    expm2_taylor,
    fidelity_paper,
    is_density,
    is_unitary,
    kron2,
    partial_trace_ancilla,
    phase_distance,
    projector,
    purity,
    require_density,
)
from physics.pt_model import (
    EXPERIMENT_PARAMS,
    EXPERIMENT_TIMES,
    Phase,
    PTParams,
    derive,
    eigenvalues,
    evolve,
    evolve_normalized,
    h_pt,
    is_pt_symmetric,
    norm_growth,
    omega_squared,
    p0,
    p1,
    rho_theory,
)
from physics.verification import (
    broken_cases,
    exceptional_cases,
    expm_agreement,
    run_suite,
    unbroken_cases,
)
from tomography.measurement import (
    AXES,
    AxisCounts,
    CountData,
    PauliSetting,
    born_probabilities,
    counts_rows,
    density_from_stokes,
    derive_seed,
    exact_counts,
    reconstruct,
    sample_counts,
)
from tomography.monte_carlo import monte_carlo
from utils.config import load_config, load_run_config, parse_config
from utils.errors import (
    DecompositionFailed,
    DegenerateDenominator,
    DegenerateInput,
    InvalidArgument,
    InvalidValue,
    MissingField,
    NonFiniteInput,
    PostselectionImpossible,
)
from utils.output_handler import FIG2_EXP_HEADER, format_value

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
PAPER_CONFIG = os.path.join(PROJECT_ROOT, 'configs', 'paper.config')
T0, T1, T2, T3 = EXPERIMENT_TIMES

PROPERTY = settings(
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
)

# Strategies
unit_floats = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)
small_complex = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)
complex_matrices = st.lists(small_complex, min_size=4, max_size=4).map(
    lambda v: np.array(v, dtype=np.complex128).reshape(2, 2)
)
complex_kets4 = st.lists(small_complex, min_size=4, max_size=4).map(
    lambda v: np.array(v, dtype=np.complex128)
)
pt_params = st.builds(
    PTParams,
    r=st.floats(min_value=0.0, max_value=3.0),
    s=st.floats(min_value=0.2, max_value=3.0),
    mu=st.floats(min_value=0.2, max_value=3.0),
    theta=st.floats(min_value=-math.pi, max_value=math.pi),
)
unbroken_params = pt_params.filter(lambda p: omega_squared(p) >= 0.1)
bloch_vectors = st.tuples(unit_floats, unit_floats, unit_floats).filter(
    lambda v: v[0] ** 2 + v[1] ** 2 + v[2] ** 2 <= 1.0
)
radians = st.floats(min_value=-math.pi, max_value=math.pi)


def density_from_bloch(x, y, z):
    return 0.5 * (I2 + x * PAULI["X"] + y * PAULI["Y"] + z * PAULI["Z"])


def true_stokes(rho):
    return np.array([np.trace(rho @ PAULI[axis.value]).real for axis in AXES])


def read_csv(path):
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return list(csv.DictReader(f))


class TestLinalg(unittest.TestCase):
    """Closed-form exponential, Kronecker helpers and density-matrix utilities."""

    def test_01_closed_form_matches_scipy_expm(self):
        """Test 1: expm2_closed agrees with scipy.linalg.expm."""
        rng = np.random.default_rng(0)
        for _ in range(20):
            m = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
            for scale in (-0.7j, 0.3, 1.2 - 0.4j):
                np.testing.assert_allclose(
                    expm2_closed(m, scale), scipy.linalg.expm(scale * m), atol=1e-10
                )

    def test_02_closed_form_matches_taylor_oracle(self):
        """Test 2: closed form vs Taylor oracle over 100 random matrices, near-nilpotent ones included."""
        self.assertLess(expm_agreement(seed=7, count=100), 1e-9)

        near_ep = np.array([[0.3, 1.0], [1e-13, 0.3]], dtype=np.complex128)
        np.testing.assert_allclose(
            expm2_closed(near_ep, -1j), expm2_taylor(near_ep, -1j), atol=1e-12
        )

    def test_03_nilpotent_exponential_is_linear(self):
        """Test 3: e^{sN} = I + sN for nilpotent N."""
        n = np.array([[0, 1], [0, 0]], dtype=np.complex128)
        np.testing.assert_allclose(expm2_closed(n, 2.5j), I2 + 2.5j * n, atol=1e-15)

    def test_04_series_branch_is_continuous(self):
        """Test 4: cos/sinc agree on both sides of the series cutoff."""
        for x in (0.99 * SERIES_CUTOFF, 1.01 * SERIES_CUTOFF):
            c, s = cos_sinc(x * x)
            self.assertAlmostEqual(c.real, math.cos(x), places=15)
            self.assertAlmostEqual(s.real, math.sin(x) / x, places=15)

    @PROPERTY
    @given(complex_matrices, unit_floats, unit_floats)
    def test_05_semigroup_property(self, m, t1, t2):
        """Test 5: e^{s1 M} e^{s2 M} = e^{(s1 + s2) M}."""
        product = expm2_closed(m, -1j * t1) @ expm2_closed(m, -1j * t2)
        np.testing.assert_allclose(product, expm2_closed(m, -1j * (t1 + t2)), atol=1e-9)

    @PROPERTY
    @given(unit_floats, unit_floats, small_complex, st.floats(min_value=-5.0, max_value=5.0))
    def test_06_hermitian_generator_gives_unitary(self, a, d, b, t):
        """Test 6: Hermitian M with scale -i t exponentiates to a unitary."""
        m = np.array([[a, b], [np.conj(b), d]], dtype=np.complex128)
        self.assertTrue(is_unitary(expm2_closed(m, -1j * t), tol=1e-10))

    @PROPERTY
    @given(complex_matrices, complex_matrices, complex_matrices, complex_matrices)
    def test_07_kron_mixed_product(self, a, b, c, d):
        """Test 7: (A x B)(C x D) = AC x BD."""
        np.testing.assert_allclose(kron2(a, b) @ kron2(c, d), kron2(a @ c, b @ d), atol=1e-12)

    @PROPERTY
    @given(complex_kets4)
    def test_08_partial_trace_is_density(self, phi):
        """Test 8: partial trace over the ancilla is a valid density matrix."""
        assume(np.linalg.norm(phi) > 1e-3)
        self.assertTrue(is_density(partial_trace_ancilla(phi)))

    @PROPERTY
    @given(bloch_vectors, bloch_vectors)
    def test_09_fidelity_is_symmetric(self, u, v):
        """Test 9: fidelity_paper is symmetric."""
        rho_a, rho_b = density_from_bloch(*u), density_from_bloch(*v)
        self.assertAlmostEqual(fidelity_paper(rho_a, rho_b), fidelity_paper(rho_b, rho_a), places=12)

    def test_10_avg_abs_diff_examples(self):
        """Test 10: mean absolute entry difference."""
        rho = np.diag([1.0, 0.0]).astype(np.complex128)
        self.assertEqual(avg_abs_diff(rho, rho), 0.0)
        self.assertAlmostEqual(avg_abs_diff(rho, np.diag([0.9, 0.1])), 0.05, places=15)

    def test_11_density_checks(self):
        """Test 11: density validation and projector."""
        self.assertTrue(is_density(np.diag([0.5, 0.5])))
        self.assertFalse(is_density(np.diag([1.0, 0.1])))
        self.assertFalse(is_density(np.array([[0.5, 0.5], [0.0, 0.5]])))
        with self.assertRaises(InvalidArgument):
            require_density(np.diag([1.2, -0.2]))
        plus = projector(np.array([1.0, 1.0]))
        np.testing.assert_allclose(plus, 0.5 * np.ones((2, 2)), atol=1e-15)
        self.assertAlmostEqual(purity(plus), 1.0, places=14)

    def test_12_errors(self):
        """Test 12: precondition and degenerate-input errors."""
        with self.assertRaises(InvalidArgument):
            expm2_taylor(SIGMA_X, 1.0, tol=0.0)
        with self.assertRaises(NonFiniteInput):
            expm2_closed(np.array([[np.nan, 0], [0, 1]]), 1.0)
        with self.assertRaises(NonFiniteInput):
            expm2_closed(SIGMA_X, 2000.0)
        with self.assertRaises(DegenerateInput):
            partial_trace_ancilla(np.zeros(4))
        with self.assertRaises(DegenerateInput):
            projector(np.zeros(2))
        with self.assertRaises(InvalidArgument):
            kron2(np.eye(3), I2)

    def test_13_kron_basis_order(self):
        """Test 13: the ancilla is the left factor, (X x I)|00> = |10>."""
        ket00 = np.array([1, 0, 0, 0], dtype=np.complex128)
        ket10 = np.array([0, 0, 1, 0], dtype=np.complex128)
        np.testing.assert_array_equal(kron2(SIGMA_X, I2) @ ket00, ket10)
        np.testing.assert_array_equal(kron2(I2, SIGMA_X) @ ket00, np.array([0, 1, 0, 0]))

    def test_14_partial_trace_examples(self):
        """Test 14: tracing out the ancilla keeps the work-qubit state."""
        psi = np.array([0.6, 0.8j], dtype=np.complex128)
        np.testing.assert_allclose(
            partial_trace_ancilla(np.kron(KET0, psi)), np.outer(psi, psi.conj()), atol=1e-15
        )
        bell = np.array([1, 0, 0, 1], dtype=np.complex128) / math.sqrt(2.0)
        np.testing.assert_allclose(partial_trace_ancilla(bell), 0.5 * I2, atol=1e-15)
        np.testing.assert_allclose(
            partial_trace_ancilla(np.kron(KET1, KET0)), np.diag([1.0, 0.0]), atol=1e-15
        )
        np.testing.assert_allclose(
            partial_trace_ancilla(2.0 * np.kron(KET0, KET1)), np.diag([0.0, 1.0]), atol=1e-15
        )

    def test_15_fidelity_examples(self):
        """Test 15: orthogonal states give 0, |0> against |+> gives 1/2."""
        zero = projector(KET0)
        self.assertEqual(fidelity_paper(zero, projector(KET1)), 0.0)
        self.assertAlmostEqual(fidelity_paper(zero, projector(np.array([1.0, 1.0]))), 0.5, places=14)
        self.assertAlmostEqual(fidelity_paper(zero, zero), 1.0, places=15)


class TestPTModel(unittest.TestCase):
    """PT Hamiltonian, phase classification and exact evolution."""

    def test_01_hamiltonian_for_experiment_parameters(self):
        """Test 1: H_PT for r=2, s=mu=1, theta=pi/8."""
        expected = np.array(
            [[2 * np.exp(1j * math.pi / 8), 1], [1, 2 * np.exp(-1j * math.pi / 8)]]
        )
        np.testing.assert_allclose(h_pt(EXPERIMENT_PARAMS), expected, atol=1e-15)

    def test_02_hermitian_limit_and_pt_symmetry(self):
        """Test 2: Hermitian at theta=0, s=mu; PT symmetric iff s=mu."""
        h = h_pt(PTParams(r=1.3, s=0.7, mu=0.7, theta=0.0))
        np.testing.assert_array_equal(h, h.conj().T)
        self.assertTrue(is_pt_symmetric(PTParams(r=1.3, s=0.7, mu=0.7, theta=1.1)))
        self.assertFalse(is_pt_symmetric(PTParams(r=1.3, s=0.7, mu=0.9, theta=1.1)))

    def test_03_phase_classification(self):
        """Test 3: omega and phase in the three regimes."""
        derived = derive(EXPERIMENT_PARAMS)
        self.assertEqual(derived.phase, Phase.UNBROKEN)
        self.assertAlmostEqual(derived.omega.real, 1.28721, places=4)
        self.assertEqual(derived.omega.imag, 0.0)

        exceptional = derive(PTParams(r=1.0, s=1.0, mu=1.0, theta=math.pi / 2))
        self.assertEqual(exceptional.phase, Phase.EXCEPTIONAL)
        self.assertEqual(abs(exceptional.omega), 0.0)

        broken = derive(PTParams(r=2.0, s=1.0, mu=1.0, theta=math.pi / 2))
        self.assertEqual(broken.phase, Phase.BROKEN)
        self.assertAlmostEqual(broken.omega_sq, -12.0, places=12)
        self.assertAlmostEqual(broken.omega.imag, math.sqrt(12.0), places=12)

    @PROPERTY
    @given(pt_params)
    def test_04_omega_squared_identity(self, p):
        """Test 4: omega^2 = 4(s mu - r^2 sin^2 theta)."""
        expected = 4.0 * (p.s * p.mu - (p.r * math.sin(p.theta)) ** 2)
        omega = derive(p).omega
        self.assertLessEqual(abs(omega ** 2 - expected), 1e-12 * max(1.0, abs(expected)))

    def test_05_evolution_examples(self):
        """Test 5: identity at t=0, amplitudes at t1, unitary Hermitian limit."""
        psi = np.array([0.6, 0.8j])
        np.testing.assert_array_equal(evolve(EXPERIMENT_PARAMS, 0.0, psi), psi)

        phase = np.exp(1j * T1 * EXPERIMENT_PARAMS.r * math.cos(EXPERIMENT_PARAMS.theta))
        amplitudes = phase * evolve(EXPERIMENT_PARAMS, T1, KET0)
        np.testing.assert_allclose(amplitudes, [1.45161, -0.75432j], atol=1e-3)

        hermitian = PTParams(r=0.8, s=1.5, mu=1.5, theta=0.0)
        for t in (0.3, 1.7, 9.0):
            self.assertAlmostEqual(np.linalg.norm(evolve(hermitian, t, psi)), 1.0, places=12)

    def test_06_p0_reference_values(self):
        """Test 6: P(|0>_w) at t=0, t1, t3, cross-checked with the Taylor oracle."""
        self.assertEqual(p0(EXPERIMENT_PARAMS, 0.0), 1.0)
        self.assertAlmostEqual(p0(EXPERIMENT_PARAMS, T1), 0.7874, delta=1e-3)
        self.assertAlmostEqual(p0(EXPERIMENT_PARAMS, T3), 0.5819, delta=1e-3)
        for t in EXPERIMENT_TIMES:
            oracle = expm2_taylor(h_pt(EXPERIMENT_PARAMS), -1j * t) @ KET0
            expected = abs(oracle[0]) ** 2 / np.vdot(oracle, oracle).real
            self.assertAlmostEqual(p0(EXPERIMENT_PARAMS, t), expected, places=12)
            self.assertAlmostEqual(p1(EXPERIMENT_PARAMS, t), 1.0 - expected, places=12)

    def test_07_rho_theory(self):
        """Test 7: theory density matrix is the normalized pure state."""
        np.testing.assert_allclose(rho_theory(EXPERIMENT_PARAMS, 0.0), np.diag([1.0, 0.0]), atol=1e-15)
        rho = rho_theory(EXPERIMENT_PARAMS, T1)
        self.assertAlmostEqual(rho[0, 0].real, p0(EXPERIMENT_PARAMS, T1), places=12)
        self.assertAlmostEqual(purity(rho), 1.0, places=10)
        self.assertTrue(is_density(rho))

    @PROPERTY
    @given(pt_params, st.floats(min_value=0.0, max_value=2.0))
    def test_08_rho_theory_is_pure_density(self, p, t):
        """Test 8: trace one and purity one for random (p, t)."""
        rho = rho_theory(p, t)
        self.assertAlmostEqual(np.trace(rho).real, 1.0, places=12)
        self.assertAlmostEqual(purity(rho), 1.0, places=10)

    @PROPERTY
    @given(unbroken_params, st.floats(min_value=0.0, max_value=3.0))
    def test_09_unbroken_dynamics_are_periodic(self, p, t):
        """Test 9: p0(t) = p0(t + 2 pi hbar / omega) in the unbroken phase."""
        period = 2.0 * math.pi * p.hbar / math.sqrt(omega_squared(p))
        self.assertAlmostEqual(p0(p, t), p0(p, t + period), delta=1e-9)

    @PROPERTY
    @given(
        st.floats(min_value=0.2, max_value=2.0),
        st.floats(min_value=1.1, max_value=2.5),
        st.floats(min_value=0.3, max_value=math.pi - 0.3),
    )
    def test_10_broken_norm_grows(self, coupling, ratio, theta):
        """Test 10: with gain on |0> (r sin theta > 0) the broken-phase norm never decreases."""
        p = PTParams(r=ratio * coupling / math.sin(theta), s=coupling, mu=coupling, theta=theta)
        self.assertEqual(derive(p).phase, Phase.BROKEN)
        norms = [norm_growth(p, t) for t in np.linspace(0.0, 2.0, 21)]
        self.assertTrue(all(b >= a for a, b in zip(norms, norms[1:])))

    @PROPERTY
    @given(pt_params)
    def test_11_eigenvalues_match_solver(self, p):
        """Test 11: r cos theta +- omega / 2 are the eigenvalues of H_PT."""
        assume(abs(omega_squared(p)) >= 0.1)
        numeric = np.linalg.eigvals(h_pt(p))
        for value in eigenvalues(p):
            self.assertLess(np.min(np.abs(numeric - value)), 1e-10)
        first, second = eigenvalues(p)
        if derive(p).phase == Phase.UNBROKEN:
            self.assertEqual(first.imag, 0.0)
        else:
            self.assertAlmostEqual(first, second.conjugate(), places=14)

    def test_12_normalized_evolution_and_errors(self):
        """Test 12: normalized evolution, norm growth and parameter validation."""
        self.assertAlmostEqual(norm_growth(EXPERIMENT_PARAMS, 0.0), 1.0, places=15)
        self.assertAlmostEqual(np.linalg.norm(evolve_normalized(EXPERIMENT_PARAMS, T2, KET1)), 1.0, places=14)
        with self.assertRaises(ValidationError):
            PTParams(r=1.0, s=1.0, mu=1.0, theta=0.0, hbar=0.0)
        with self.assertRaises(ValidationError):
            PTParams(r=float('nan'), s=1.0, mu=1.0, theta=0.0)
        with self.assertRaises(NonFiniteInput):
            evolve(EXPERIMENT_PARAMS, float('inf'), KET0)


class TestDilation(unittest.TestCase):
    """Angles, circuit construction, post-selection and the LCU identity."""

    def test_01_angles_at_time_zero(self):
        """Test 1: theta_a = theta_w1 = 0 and c = 1 at t=0."""
        a = angles(EXPERIMENT_PARAMS, 0.0)
        self.assertEqual(a.theta_a, 0.0)
        self.assertEqual(a.theta_w1, 0.0)
        self.assertEqual(a.c, 1.0)

    def test_02_angles_at_t1(self):
        """Test 2: cos^2 : sin^2 of theta_a is 4 : 1 and theta_w1 = -40.78 deg."""
        a = angles(EXPERIMENT_PARAMS, T1)
        ratio = math.cos(a.theta_a) ** 2 / math.sin(a.theta_a) ** 2
        self.assertAlmostEqual(ratio, 4.0, delta=1e-3)
        self.assertAlmostEqual(math.degrees(a.theta_w1), -40.78, delta=0.05)
        self.assertEqual(a.theta_w2, 0.0)

    def test_03_printed_formulas_agree_with_angles(self):
        """Test 3: square-root formulas give unit (cos, sin) pairs matching the atan2 angles."""
        for t in EXPERIMENT_TIMES:
            pairs = printed_angle_pairs(EXPERIMENT_PARAMS, t)
            a = angles(EXPERIMENT_PARAMS, t)
            for (cos_v, sin_v), theta in zip(pairs, (a.theta_a, a.theta_w1, a.theta_w2)):
                self.assertAlmostEqual(cos_v ** 2 + sin_v ** 2, 1.0, delta=1e-12)
                self.assertAlmostEqual(cos_v, math.cos(theta), delta=1e-12)
                self.assertAlmostEqual(sin_v, math.sin(theta), delta=1e-12)

        for p, t in broken_cases():
            for cos_v, sin_v in printed_angle_pairs(p, t):
                self.assertAlmostEqual(cos_v ** 2 + sin_v ** 2, 1.0, delta=1e-12)

        with self.assertRaises(DegenerateDenominator):
            printed_angle_pairs(PTParams(r=1.0, s=1.0, mu=1.0, theta=math.pi / 2), 0.5)

    def test_04_coefficient_modulus_identity(self):
        """Test 4: |c|^2 times the printed denominator equals omega^2."""
        omega = derive(EXPERIMENT_PARAMS).omega.real
        plus_sq = (EXPERIMENT_PARAMS.mu + EXPERIMENT_PARAMS.s) ** 2
        for t in EXPERIMENT_TIMES:
            denom = omega ** 2 * math.cos(omega * t) + 2 * plus_sq * math.sin(omega * t / 2) ** 2
            self.assertAlmostEqual(abs(angles(EXPERIMENT_PARAMS, t).c) ** 2 * denom, omega ** 2, delta=1e-10)

    @PROPERTY
    @given(radians, radians, radians)
    def test_05_gates_are_unitary(self, theta_a, theta_w1, theta_w2):
        """Test 5: every gate is unitary and the controlled blocks are complementary."""
        circuit = build_circuit(DilationAngles(theta_a, theta_w1, theta_w2, 1.0))
        for gate in circuit.gates():
            self.assertTrue(is_unitary(gate, tol=1e-12))
        np.testing.assert_array_equal(circuit.cu2[2:, 2:], I2)
        np.testing.assert_array_equal(circuit.cu3[:2, :2], I2)
        np.testing.assert_array_equal(circuit.cu2 @ circuit.cu3, circuit.cu3 @ circuit.cu2)
        self.assertAlmostEqual(np.linalg.det(u3_matrix(theta_w2)), -1.0, places=12)

    def test_06_u3_is_sigma_z_for_equal_couplings(self):
        """Test 6: mu = s gives U3 = diag(1, -1)."""
        np.testing.assert_allclose(u3_matrix(angles(EXPERIMENT_PARAMS, T2).theta_w2), SIGMA_Z, atol=1e-15)

    def test_07_circuit_output(self):
        """Test 7: (|00> + |10>)/sqrt 2 at t=0 and unnormalized inputs rejected."""
        expected = np.array([1, 0, 1, 0]) / math.sqrt(2)
        np.testing.assert_allclose(run_circuit(EXPERIMENT_PARAMS, 0.0), expected, atol=1e-15)
        with self.assertRaises(InvalidArgument):
            run_circuit(EXPERIMENT_PARAMS, T1, np.array([1.0, 1.0]))

    @PROPERTY
    @given(pt_params, st.floats(min_value=0.0, max_value=1.0), bloch_vectors)
    def test_08_circuit_preserves_norm(self, p, t, bloch):
        """Test 8: the dilated evolution is unitary on the two-qubit register."""
        x, y, z = bloch
        assume(x * x + y * y + z * z > 0.01)
        psi = np.linalg.eigh(density_from_bloch(x, y, z))[1][:, 1]
        self.assertAlmostEqual(np.linalg.norm(run_circuit(p, t, psi)), 1.0, places=12)

    def test_09_postselection(self):
        """Test 9: post-selecting the ancilla on |0>."""
        ket, success = postselect(np.array([1, 0, 1, 0]) / math.sqrt(2))
        np.testing.assert_allclose(ket, KET0, atol=1e-15)
        self.assertAlmostEqual(success, 0.5, places=15)
        with self.assertRaises(PostselectionImpossible):
            postselect(np.array([0, 0, 1, 0]))

    def test_10_success_probability(self):
        """Test 10: 0.8029 at t1, 1/2 at t=0 and in the Hermitian limit."""
        self.assertAlmostEqual(success_probability(EXPERIMENT_PARAMS, T1), 0.8029, delta=1e-3)
        hermitian = PTParams(r=1.1, s=0.9, mu=0.9, theta=0.0)
        for t in np.linspace(0.0, 5.0, 11):
            self.assertAlmostEqual(success_probability(hermitian, t), 0.5, delta=1e-10)

    @PROPERTY
    @given(pt_params, st.floats(min_value=0.0, max_value=1.0))
    def test_11_success_probability_routes_agree(self, p, t):
        """Test 11: circuit read-out equals (|c|^2 / 2) ||e^{-iHt} psi||^2; 1/2 at t=0."""
        self.assertAlmostEqual(success_probability(p, 0.0), 0.5, places=12)
        self.assertAlmostEqual(success_probability(p, t), success_probability_formula(p, t), delta=1e-10)

    def test_12_lcu_identity(self):
        """Test 12: LCU residual is zero at t=0 and below 1e-10 across phases."""
        self.assertEqual(lcu_residual(EXPERIMENT_PARAMS, 0.0), 0.0)
        for name, cases in (
            ("unbroken_random", unbroken_cases(seed=11, count=200, times_per_set=1)),
            ("broken", broken_cases()),
            ("exceptional", exceptional_cases()),
        ):
            suite = run_suite(name, cases)
            self.assertEqual(suite.failures, [], name)
            self.assertLess(suite.max_residual, 1e-10, name)

    def test_13_postselected_state_matches_exact_evolution(self):
        """Test 13: fidelity >= 1 - 1e-10 for the experiment and 200 random unbroken sets."""
        cases = [(EXPERIMENT_PARAMS, t) for t in EXPERIMENT_TIMES] + unbroken_cases(seed=3, count=200, times_per_set=1)
        suite = run_suite("fidelity", cases)
        self.assertTrue(suite.passed)
        self.assertLess(suite.max_fidelity_deficit, 1e-10)
        for t in np.linspace(0.0, T3, 25):
            self.assertAlmostEqual(postselected_p0(EXPERIMENT_PARAMS, t), p0(EXPERIMENT_PARAMS, t), delta=1e-9)

    def test_14_overflowing_normalization(self):
        """Test 14: unrepresentable broken-phase times raise a typed error."""
        broken = PTParams(r=2.0, s=1.0, mu=1.0, theta=math.pi / 2)
        with self.assertRaises(DegenerateDenominator):
            angles(broken, 1000.0)

    @PROPERTY
    @given(pt_params, st.floats(min_value=0.0, max_value=1.0))
    def test_15_full_circuit_unitary(self, p, t):
        """Test 15: the 4x4 circuit is unitary and matches gate-by-gate execution."""
        circuit = build_circuit(angles(p, t))
        u = circuit.unitary()
        self.assertTrue(is_unitary(u, tol=1e-12))
        psi = np.array([0.6, 0.8], dtype=np.complex128)
        np.testing.assert_allclose(u @ np.kron(KET0, psi), run_circuit(p, t, psi), atol=1e-13)


class TestOptics(unittest.TestCase):
    """Jones matrices, gate compilation and the optical settings table."""

    def test_01_jones_anchors(self):
        """Test 1: HWP(0), QWP(0) and HWP(22.5)."""
        np.testing.assert_allclose(hwp_matrix(0.0), np.diag([1, -1]), atol=1e-15)
        np.testing.assert_allclose(qwp_matrix(0.0), np.diag([1, 1j]), atol=1e-15)
        np.testing.assert_allclose(hwp_matrix(22.5), (SIGMA_Z + SIGMA_X) / math.sqrt(2), atol=1e-12)
        np.testing.assert_allclose(jones(plate("QWP", 0.0)), np.diag([1, 1j]), atol=1e-15)

    @PROPERTY
    @given(st.sampled_from(list(PlateKind)), st.floats(min_value=-89.999, max_value=90.0))
    def test_02_jones_matrices_are_unitary(self, kind, angle):
        """Test 2: wave-plate matrices are unitary."""
        self.assertTrue(is_unitary(jones(WaveplateSetting(kind=kind, angle_deg=angle)), tol=1e-12))

    def test_03_chain_matrix(self):
        """Test 3: empty chain, involution and the published t1 U2 chain."""
        np.testing.assert_array_equal(chain_matrix(ElementChain()), I2)
        np.testing.assert_allclose(chain_matrix(chain_of(("HWP", 0.0), ("HWP", 0.0))), I2, atol=1e-15)
        published = chain_of(("HWP", 0), ("QWP", 0), ("HWP", 20.4), ("QWP", 0), ("HWP", 0))
        target = u2_matrix(angles(EXPERIMENT_PARAMS, T1).theta_w1)
        self.assertLess(phase_distance(chain_matrix(published), target), 2e-3)

    def test_04_npbs_ratios(self):
        """Test 4: T/R of 1:0, 4:1, 3:1, 2:1 at the four experiment times."""
        first = compile_u1(angles(EXPERIMENT_PARAMS, T0))
        self.assertEqual((first.T, first.R), (1.0, 0.0))
        self.assertEqual(npbs_ratio(first), math.inf)
        for t, expected in ((T1, 4.0), (T2, 3.0), (T3, 2.0)):
            self.assertAlmostEqual(npbs_ratio(compile_u1(angles(EXPERIMENT_PARAMS, t))), expected, delta=1e-3)

    @PROPERTY
    @given(radians)
    def test_05_npbs_is_lossless(self, theta_a):
        """Test 5: T + R = 1 and T/R = cot^2(theta_a)."""
        spec = compile_u1(DilationAngles(theta_a, 0.0, 0.0, 1.0))
        self.assertAlmostEqual(spec.T + spec.R, 1.0, delta=1e-12)
        if spec.R > 1e-6:
            self.assertAlmostEqual(npbs_ratio(spec), math.cos(theta_a) ** 2 / math.sin(theta_a) ** 2, delta=1e-6)

    def test_06_central_hwp_angles(self):
        """Test 6: central HWP angles 20.4, 24.5 and 33.75 deg (printed rounded as 33.8)."""
        expected = {T0: 0.0, T1: 20.4, T2: 24.5, T3: 33.75}
        for t, phi in expected.items():
            self.assertAlmostEqual(u2_hwp_angle_deg(angles(EXPERIMENT_PARAMS, t)), phi, delta=0.05)

    @PROPERTY
    @given(radians)
    def test_07_u2_compilation_round_trip(self, theta_w1):
        """Test 7: the compiled U2 chain reproduces U2 up to global phase."""
        chain = compile_u2(DilationAngles(0.0, theta_w1, 0.0, 1.0))
        self.assertEqual([w.kind for w in chain.elements], [PlateKind.HWP, PlateKind.QWP, PlateKind.HWP, PlateKind.QWP, PlateKind.HWP])
        self.assertLess(phase_distance(chain_matrix(chain), u2_matrix(theta_w1)), 1e-10)

    def test_08_u3_compilation(self):
        """Test 8: fixed chain for mu = s, sigma_x via one HWP, fitted chains otherwise."""
        chain = compile_u3(angles(EXPERIMENT_PARAMS, T1))
        self.assertEqual(chain, U3_FIXED_CHAIN)
        self.assertLess(phase_distance(chain_matrix(chain), SIGMA_Z), 1e-12)

        sigma_x_chain, residual = decompose_unitary(SIGMA_X)
        self.assertLess(residual, 1e-10)
        self.assertEqual(len(sigma_x_chain.elements), 1)
        self.assertAlmostEqual(abs(sigma_x_chain.elements[0].angle_deg), 45.0, delta=1e-3)

        for theta_w2 in (0.4, 1.3, 2.2, 2.9):
            fitted = compile_u3(DilationAngles(0.0, 0.0, theta_w2, 1.0))
            self.assertLess(phase_distance(chain_matrix(fitted), u3_matrix(theta_w2)), 1e-8)

        _, residual = decompose_unitary(u3_matrix(1.3), templates=(SINGLE_HWP,))
        self.assertGreater(residual, MAX_RESIDUAL)
        self.assertIn("residual", str(DecompositionFailed("no chain", residual)))

    def test_09_waveplate_settings(self):
        """Test 9: angle range, normalization and chain formatting."""
        self.assertEqual(normalize_angle_deg(135.0), -45.0)
        self.assertEqual(normalize_angle_deg(-90.0), 90.0)
        self.assertEqual(normalize_angle_deg(20.4), 20.4)
        with self.assertRaises(ValidationError):
            WaveplateSetting(kind=PlateKind.HWP, angle_deg=-90.0)
        self.assertEqual(format_chain(U3_FIXED_CHAIN), "QWP@0.0->HWP@0.0->QWP@0.0->HWP@0.0")
        with self.assertRaises(ValidationError):
            NpbsSpec(T=0.7, R=0.4)

    def test_10_table1_report(self):
        """Test 10: four deterministic rows with the fixed U3 chain."""
        rows = table1_report(EXPERIMENT_PARAMS, EXPERIMENT_TIMES)
        self.assertEqual(len(rows), 4)
        self.assertEqual((rows[0].npbs.T, rows[0].npbs.R, rows[0].u2_phi_deg), (1.0, 0.0, 0.0))
        self.assertTrue(all(row.u3_chain == U3_FIXED_CHAIN for row in rows))
        csv_rows = table1_csv_rows(rows)
        self.assertEqual(csv_rows, table1_csv_rows(table1_report(EXPERIMENT_PARAMS, EXPERIMENT_TIMES)))
        self.assertTrue(csv_rows[1][3].startswith("HWP@0.0->QWP@0.0->HWP@20.3"))


class TestTomography(unittest.TestCase):
    """Simulated counts, reconstruction and Monte Carlo error bars."""

    def test_01_born_probabilities(self):
        """Test 1: Born rule examples."""
        zero = projector(KET0)
        self.assertEqual(born_probabilities(zero, PauliSetting.Z), (1.0, 0.0))
        self.assertEqual(born_probabilities(zero, PauliSetting.X), (0.5, 0.5))

    @PROPERTY
    @given(bloch_vectors, st.sampled_from(list(PauliSetting)))
    def test_02_born_matches_projector_traces(self, bloch, axis):
        """Test 2: p+ equals Tr(rho P+) for the +1 eigenprojector."""
        rho = density_from_bloch(*bloch)
        plus_state = np.linalg.eigh(PAULI[axis.value])[1][:, 1]
        expected = np.trace(rho @ projector(plus_state)).real
        p_plus, p_minus = born_probabilities(rho, axis)
        self.assertAlmostEqual(p_plus, expected, delta=1e-12)
        self.assertAlmostEqual(p_plus + p_minus, 1.0, places=15)

    def test_03_sample_counts(self):
        """Test 3: deterministic under a seed, consistent sums, shots > 0."""
        rho = rho_theory(EXPERIMENT_PARAMS, T1)
        first = sample_counts(rho, 1000, seed=9)
        self.assertEqual(first, sample_counts(rho, 1000, seed=9))
        for axis in AXES:
            pair = first.axes[axis]
            self.assertEqual(pair.n_plus + pair.n_minus, 1000)
        with self.assertRaises(InvalidArgument):
            sample_counts(rho, 0, seed=9)
        with self.assertRaises(ValidationError):
            CountData(axes={PauliSetting.X: AxisCounts(n_plus=1, n_minus=0)}, shots_per_axis=1)

    def test_04_binomial_statistics(self):
        """Test 4: mean n+/shots over 1000 seeds sits within binomial bounds."""
        rho = density_from_bloch(0.3, -0.5, 0.2)
        shots, seeds = 100, 1000
        rates = {axis: [] for axis in AXES}
        for seed in range(seeds):
            counts = sample_counts(rho, shots, seed)
            for axis in AXES:
                rates[axis].append(counts.axes[axis].n_plus / shots)
        for axis in AXES:
            p_plus = born_probabilities(rho, axis)[0]
            sigma = math.sqrt(p_plus * (1 - p_plus) / (shots * seeds))
            self.assertLess(abs(np.mean(rates[axis]) - p_plus), 4 * sigma)

    def test_05_noiseless_round_trip(self):
        """Test 5: exact counts reconstruct the state."""
        rho = density_from_bloch(0.2, -0.4, 0.6)
        np.testing.assert_allclose(reconstruct(exact_counts(rho, 1000)), rho, atol=1e-12)
        for t in EXPERIMENT_TIMES:
            truth = rho_theory(EXPERIMENT_PARAMS, t)
            self.assertAlmostEqual(fidelity_paper(density_from_stokes(true_stokes(truth)), truth), 1.0, delta=1e-10)

    def test_06_unphysical_stokes_are_projected(self):
        """Test 6: s = (1, 1, 1) maps to the nearest physical state."""
        rho = density_from_stokes([1.0, 1.0, 1.0])
        self.assertTrue(is_density(rho))
        self.assertAlmostEqual(np.trace(rho).real, 1.0, places=14)
        self.assertAlmostEqual(np.linalg.eigvalsh(rho).min(), 0.0, delta=1e-12)

    @PROPERTY
    @given(st.integers(1, 500).flatmap(
        lambda shots: st.tuples(st.just(shots), st.lists(st.integers(0, shots), min_size=3, max_size=3))
    ))
    def test_07_reconstruction_is_always_physical(self, data):
        """Test 7: any count table reconstructs to a valid density matrix."""
        shots, plus = data
        counts = CountData(
            axes={axis: AxisCounts(n_plus=n, n_minus=shots - n) for axis, n in zip(AXES, plus)},
            shots_per_axis=shots,
        )
        self.assertTrue(is_density(reconstruct(counts)))

    def test_08_high_shot_reconstruction(self):
        """Test 8: 10^6 shots per axis reconstruct rho(t1) to better than 0.01."""
        truth = rho_theory(EXPERIMENT_PARAMS, T1)
        estimate = reconstruct(sample_counts(truth, 1_000_000, seed=2024))
        self.assertLess(avg_abs_diff(estimate, truth), 0.01)

    def test_09_fidelity_on_random_pure_states(self):
        """Test 9: fidelity >= 0.99 for at least 95 of 100 seeds."""
        rng = np.random.default_rng(17)
        good = 0
        for index in range(100):
            direction = rng.normal(size=3)
            rho = density_from_bloch(*(direction / np.linalg.norm(direction)))
            counts = sample_counts(rho, 10_000, derive_seed(17, index))
            good += fidelity_paper(reconstruct(counts), rho) >= 0.99
        self.assertGreaterEqual(good, 95)

    def test_10_monte_carlo_basics(self):
        """Test 10: deterministic estimates with small, non-negative error bars."""
        truth = rho_theory(EXPERIMENT_PARAMS, T2)
        counts = exact_counts(truth, 1_000_000)
        first = monte_carlo(counts, 50, seed=4, rho_ref=truth)
        second = monte_carlo(counts, 50, seed=4, rho_ref=truth)
        np.testing.assert_array_equal(first.element_std, second.element_std)
        self.assertEqual(first.fidelity_std, second.fidelity_std)
        self.assertTrue(is_density(first.rho))
        self.assertTrue(np.all(first.element_std >= 0.0))
        self.assertTrue(np.all(first.element_std < 1e-2))
        self.assertGreaterEqual(first.fidelity_std, 0.0)
        with self.assertRaises(InvalidArgument):
            monte_carlo(counts, 1, seed=4, rho_ref=truth)

    def test_11_error_bars_scale_with_shots(self):
        """Test 11: std ~ 1/sqrt(shots) (log-log slope -0.5 +- 0.1)."""
        rho = density_from_bloch(0.3, 0.2, 0.4)
        shots = [100, 10_000, 1_000_000]
        stds = [float(np.mean(monte_carlo(exact_counts(rho, n), 400, seed=1, rho_ref=rho).element_std)) for n in shots]
        slope = np.polyfit(np.log10(shots), np.log10(stds), 1)[0]
        self.assertAlmostEqual(slope, -0.5, delta=0.1)

    def test_12_fidelity_regime(self):
        """Test 12: mean fidelity >= 0.999 over 100 seeds at 10^4 shots, per experiment time."""
        for index, t in enumerate(EXPERIMENT_TIMES):
            truth = rho_theory(EXPERIMENT_PARAMS, t)
            fidelities = [
                fidelity_paper(reconstruct(sample_counts(truth, 10_000, derive_seed(seed, index))), truth)
                for seed in range(100)
            ]
            self.assertGreaterEqual(np.mean(fidelities), 0.999)

    def test_13_density_error_regime(self):
        """Test 13: average |rho_exp - rho_theory| lies in [0.001, 0.05] at default shots."""
        for index, t in enumerate(EXPERIMENT_TIMES):
            truth = rho_theory(EXPERIMENT_PARAMS, t)
            diffs = [
                avg_abs_diff(reconstruct(sample_counts(truth, 10_000, derive_seed(seed, index))), truth)
                for seed in range(20)
            ]
            self.assertGreaterEqual(np.mean(diffs), 0.001)
            self.assertLessEqual(max(diffs), 0.05)

    def test_14_seed_derivation_and_rows(self):
        """Test 14: child seeds are deterministic and distinct; count rows per axis."""
        self.assertEqual(derive_seed(42, 3), derive_seed(42, 3))
        self.assertEqual(len({derive_seed(42, i) for i in range(50)}), 50)
        rows = counts_rows(exact_counts(projector(KET0), 10))
        self.assertEqual(rows, [["X", 5, 5, 10], ["Y", 5, 5, 10], ["Z", 10, 0, 10]])


class TestConfig(unittest.TestCase):
    """Application config and run documents."""

    def test_01_app_config(self):
        """Test 1: app_config.json carries run defaults and logging."""
        config = load_config()
        self.assertIn('run_defaults', config)
        self.assertEqual(config['logging']['level'], 'INFO')

    def test_02_minimal_document(self):
        """Test 2: only params given -> defaults applied."""
        cfg = parse_config(json.dumps({"params": {"r": 2, "s": 1, "mu": 1, "theta": 0.3}}))
        self.assertEqual(cfg.params.hbar, 1.0)
        self.assertEqual((cfg.shots_per_axis, cfg.mc_resamples, cfg.seed), (10_000, 500, 42))
        self.assertEqual(cfg.time_points(), list(EXPERIMENT_TIMES))
        self.assertEqual(len(cfg.sweep_points()), cfg.sweep_steps)
        self.assertEqual(cfg.sweep_points()[-1], T3)

    def test_03_missing_field(self):
        """Test 3: omitting r names the dotted field."""
        with self.assertRaises(MissingField) as ctx:
            parse_config(json.dumps({"params": {"s": 1, "mu": 1, "theta": 0.3}}))
        self.assertEqual(ctx.exception.field, "params.r")
        self.assertIn("params.r", str(ctx.exception))

    def test_04_shipped_experiment_config(self):
        """Test 4: configs/paper.config is the experiment run."""
        cfg = load_run_config(PAPER_CONFIG)
        self.assertEqual((cfg.params.r, cfg.params.s, cfg.params.mu), (2.0, 1.0, 1.0))
        self.assertAlmostEqual(cfg.params.theta, math.pi / 8, places=15)
        self.assertEqual(cfg.time_points(), [0.0, 0.7876, 0.9894, 1.5521])

    def test_05_invalid_values(self):
        """Test 5: validation failures map to InvalidValue with field paths."""
        params = {"r": 2, "s": 1, "mu": 1, "theta": 0.3}
        cases = {
            "shots_per_axis": {"params": params, "shots_per_axis": 0},
            "grid.steps": {"params": params, "grid": {"t_start": 0, "t_end": 1, "steps": 0}},
            "colour": {"params": params, "colour": "blue"},
            "params.hbar": {"params": dict(params, hbar=-1)},
        }
        for field, document in cases.items():
            with self.assertRaises(InvalidValue) as ctx:
                parse_config(json.dumps(document))
            self.assertEqual(ctx.exception.field, field)
        with self.assertRaises(InvalidValue) as ctx:
            parse_config('{"params": {"r": NaN, "s": 1, "mu": 1, "theta": 0}}')
        self.assertEqual(ctx.exception.field, "params.r")
        with self.assertRaises(InvalidValue) as ctx:
            parse_config("{not json")
        self.assertEqual(ctx.exception.field, "<document>")

    def test_06_grid_and_overrides(self):
        """Test 6: grid form and command-line overrides."""
        cfg = parse_config(json.dumps({
            "params": {"r": 2, "s": 1, "mu": 1, "theta": 0.3},
            "grid": {"t_start": 0.0, "t_end": 1.0, "steps": 5},
        }))
        self.assertEqual(cfg.time_points(), [0.0, 0.25, 0.5, 0.75, 1.0])
        self.assertEqual(cfg.sweep_points(), cfg.time_points())
        updated = cfg.with_overrides(output_dir="elsewhere", seed=7)
        self.assertEqual((updated.output_dir, updated.seed), ("elsewhere", 7))
        with self.assertRaises(InvalidValue):
            cfg.with_overrides(seed=-1)

    def test_07_times_and_grid_are_exclusive(self):
        """Test 7: a document may give times or grid, not both."""
        with self.assertRaises(InvalidValue) as ctx:
            parse_config(json.dumps({
                "params": {"r": 2, "s": 1, "mu": 1, "theta": 0.3},
                "times": [0.0, 0.5],
                "grid": {"t_start": 0.0, "t_end": 1.0, "steps": 5},
            }))
        self.assertEqual(ctx.exception.field, "times")

    def test_08_overrides_are_validated(self):
        """Test 8: an empty output directory override is rejected."""
        cfg = load_run_config(PAPER_CONFIG)
        with self.assertRaises(InvalidValue) as ctx:
            cfg.with_overrides(output_dir="")
        self.assertEqual(ctx.exception.field, "output_dir")
        self.assertIs(cfg.with_overrides(), cfg)
        updated = cfg.with_overrides(seed=3)
        self.assertEqual(updated.params, cfg.params)
        self.assertEqual(updated.time_points(), cfg.time_points())


class TestPipeline(unittest.TestCase):
    """CLI commands, pipeline steps and the experiment Flow."""

    def setUp(self):
        """Set up a scratch directory and a small run document."""
        self.tmp = tempfile.mkdtemp()
        self.small_config = self.write_config({
            "params": {"r": 2.0, "s": 1.0, "mu": 1.0, "theta": math.pi / 8},
            "times": list(EXPERIMENT_TIMES),
            "shots_per_axis": 2000,
            "mc_resamples": 20,
            "seed": 5,
            "sweep_steps": 20,
            "output_dir": os.path.join(self.tmp, "outputs"),
        })

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def write_config(self, document, name="run.config"):
        path = os.path.join(self.tmp, name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(document, f)
        return path

    def run_cli(self, *argv):
        from main import main
        return main(list(argv))

    def test_01_verify_experiment_config(self):
        """Test 1: verify on paper.config exits 0."""
        from flows.experiment_steps import verify
        result = verify(load_run_config(PAPER_CONFIG))
        self.assertEqual(result["exit_code"], 0)
        self.assertLess(result["max_residual"], 1e-10)
        self.assertEqual(set(result["suites"]), {"configured", "unbroken_random", "broken", "exceptional"})
        self.assertEqual(self.run_cli("verify", "--config", PAPER_CONFIG, "--out", self.tmp), 0)

    def test_02_evolve_writes_theory(self):
        """Test 2: fig2_theory.csv has the header and |0><0| at t=0."""
        out = os.path.join(self.tmp, "evolve")
        self.assertEqual(self.run_cli("evolve", "--config", PAPER_CONFIG, "--out", out), 0)
        rows = read_csv(os.path.join(out, "fig2_theory.csv"))
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[0]["t"], "0.0")
        self.assertEqual(rows[0]["rho00_re"], "1.0")
        self.assertAlmostEqual(float(rows[1]["rho00_re"]), p0(EXPERIMENT_PARAMS, T1), places=12)

    def test_03_sweep_population(self):
        """Test 3: 200-point sweep, p0 = 1 at t=0, post-selected p0 matches theory."""
        config = self.write_config({
            "params": {"r": 2.0, "s": 1.0, "mu": 1.0, "theta": math.pi / 8},
            "grid": {"t_start": 0.0, "t_end": T3, "steps": 200},
        }, name="sweep.config")
        out = os.path.join(self.tmp, "sweep")
        self.assertEqual(self.run_cli("sweep", "--config", config, "--out", out), 0)
        rows = read_csv(os.path.join(out, "fig3b.csv"))
        self.assertEqual(len(rows), 200)
        self.assertEqual(float(rows[0]["p0_theory"]), 1.0)
        self.assertAlmostEqual(float(rows[0]["success_prob"]), 0.5, places=12)
        for row in rows:
            self.assertAlmostEqual(float(row["p0_theory"]), float(row["p0_postselected"]), delta=1e-9)

    def test_04_table1_csv(self):
        """Test 4: table1.csv reproduces the NPBS ratios and HWP angles."""
        out = os.path.join(self.tmp, "table")
        self.assertEqual(self.run_cli("table1", "--config", PAPER_CONFIG, "--out", out), 0)
        rows = read_csv(os.path.join(out, "table1.csv"))
        self.assertEqual(list(rows[0]), ["time", "npbs_T", "npbs_R", "u2_chain", "u2_phi_deg", "u3_chain"])
        self.assertEqual(float(rows[0]["npbs_R"]), 0.0)
        for row, ratio, phi in zip(rows[1:], (4.0, 3.0, 2.0), (20.4, 24.5, 33.75)):
            self.assertAlmostEqual(float(row["npbs_T"]) / float(row["npbs_R"]), ratio, delta=1e-3)
            self.assertAlmostEqual(float(row["u2_phi_deg"]), phi, delta=0.05)
            self.assertEqual(row["u3_chain"], "QWP@0.0->HWP@0.0->QWP@0.0->HWP@0.0")

    def test_05_tomo_is_deterministic(self):
        """Test 5: identical config and seed give byte-identical files."""
        first, second = os.path.join(self.tmp, "a"), os.path.join(self.tmp, "b")
        self.assertEqual(self.run_cli("tomo", "--config", self.small_config, "--out", first), 0)
        self.assertEqual(self.run_cli("tomo", "--config", self.small_config, "--out", second), 0)
        for name in ("fig2_exp.csv", "fidelities.csv", "counts.csv"):
            with open(os.path.join(first, name), 'rb') as f1, open(os.path.join(second, name), 'rb') as f2:
                self.assertEqual(f1.read(), f2.read(), name)

        exp_rows = read_csv(os.path.join(first, "fig2_exp.csv"))
        self.assertEqual(list(exp_rows[0]), FIG2_EXP_HEADER)
        self.assertEqual(len(read_csv(os.path.join(first, "counts.csv"))), 4 * 3)
        for row in read_csv(os.path.join(first, "fidelities.csv")):
            self.assertGreater(float(row["fidelity"]), 0.99)

    def test_06_seed_override(self):
        """Test 6: --seed changes the simulated counts."""
        first, second = os.path.join(self.tmp, "s1"), os.path.join(self.tmp, "s2")
        self.assertEqual(self.run_cli("tomo", "--config", self.small_config, "--out", first, "--seed", "1"), 0)
        self.assertEqual(self.run_cli("tomo", "--config", self.small_config, "--out", second, "--seed", "2"), 0)
        with open(os.path.join(first, "counts.csv"), 'rb') as f1, open(os.path.join(second, "counts.csv"), 'rb') as f2:
            self.assertNotEqual(f1.read(), f2.read())

    def test_07_configuration_failures_exit_2(self):
        """Test 7: unreadable or invalid configs exit with 2."""
        self.assertEqual(self.run_cli("verify", "--config", os.path.join(self.tmp, "missing.config")), 2)
        bad = self.write_config({"params": {"s": 1, "mu": 1, "theta": 0}}, name="bad.config")
        self.assertEqual(self.run_cli("evolve", "--config", bad), 2)

    def test_08_io_failure_exit_2(self):
        """Test 8: an unwritable output directory is reported as exit 2."""
        from flows.experiment_steps import evolve
        blocker = os.path.join(self.tmp, "blocker")
        with open(blocker, 'w') as f:
            f.write("not a directory")
        cfg = load_run_config(PAPER_CONFIG).with_overrides(output_dir=os.path.join(blocker, "out"))
        result = evolve(cfg)
        self.assertEqual(result["status"], "failed")
        self.assertEqual(result["exit_code"], 2)

    def test_09_physics_failure_exit_1(self):
        """Test 9: an overflowing broken-phase evolution exits with 1."""
        config = self.write_config({
            "params": {"r": 2.0, "s": 1.0, "mu": 1.0, "theta": math.pi / 2},
            "times": [1000.0],
            "output_dir": os.path.join(self.tmp, "broken"),
        }, name="broken.config")
        self.assertEqual(self.run_cli("evolve", "--config", config), 1)

    def test_10_reproduce_flow(self):
        """Test 10: the experiment Flow writes every data product."""
        out = os.path.join(self.tmp, "reproduce")
        self.assertEqual(self.run_cli("reproduce", "--config", self.small_config, "--out", out), 0)
        for name in ("fig2_theory.csv", "fig2_exp.csv", "fidelities.csv", "counts.csv", "fig3b.csv", "table1.csv"):
            self.assertTrue(os.path.exists(os.path.join(out, name)), name)

    def test_11_flow_skips_products_when_verification_fails(self):
        """Test 11: data steps are skipped and the run fails if verification fails."""
        from flows.experiment_flow import ExperimentFlow
        cfg = load_run_config(self.small_config).with_overrides(output_dir=os.path.join(self.tmp, "skipped"))
        failed = {"status": "failed", "exit_code": 1, "duration": 0.0}
        with mock.patch("flows.experiment_steps.verify", return_value=failed):
            result = ExperimentFlow(cfg, verbose=False).kickoff()
        self.assertEqual(result["exit_code"], 1)
        self.assertEqual(result["results"]["tomo"]["status"], "skipped")
        self.assertFalse(os.path.exists(cfg.output_dir))

    def test_12_csv_number_format(self):
        """Test 12: shortest round-trip floats, no negative zero."""
        self.assertEqual(format_value(0.1), "0.1")
        self.assertEqual(format_value(-0.0), "0.0")
        self.assertEqual(float(format_value(1 / 3)), 1 / 3)
        self.assertEqual(format_value(np.int64(7)), "7")

    def test_13_operations_are_documented(self):
        """Test 13: every public operation carries a docstring with its contract."""
        operations = [
            expm2_closed, expm2_taylor, kron2, partial_trace_ancilla, fidelity_paper, avg_abs_diff,
            h_pt, derive, evolve, p0, rho_theory,
            angles, build_circuit, run_circuit, postselect, lcu_residual, success_probability,
            jones, chain_matrix, compile_u1, compile_u2, compile_u3, table1_report,
            born_probabilities, sample_counts, reconstruct, monte_carlo, parse_config,
        ]
        for operation in operations:
            with self.subTest(operation=operation.__name__):
                self.assertTrue(operation.__doc__ and operation.__doc__.strip())

    def test_14_empty_output_override_is_config_error(self):
        """Test 14: --out with an empty path exits 2."""
        self.assertEqual(self.run_cli("table1", "--config", self.small_config, "--out", ""), 2)


def run_tests():
    """Run the test suite with nice output."""
    print("=" * 70)
    print("PT DILATION SIMULATOR - TEST SUITE")
    print("=" * 70)

    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for case in (TestLinalg, TestPTModel, TestDilation, TestOptics, TestTomography, TestConfig, TestPipeline):
        suite.addTests(loader.loadTestsFromTestCase(case))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)

    print("\n" + "=" * 70)
    print("TEST SUMMARY")
    print("=" * 70)
    print(f"Tests run: {result.testsRun}")
    print(f"Successes: {result.testsRun - len(result.failures) - len(result.errors)}")
    print(f"Failures: {len(result.failures)}")
    print(f"Errors: {len(result.errors)}")

    if result.wasSuccessful():
        print("\n[PASS] ALL TESTS PASSED!")
        print("=" * 70)
        return 0
    else:
        print("\n[FAIL] SOME TESTS FAILED")
        print("=" * 70)
        return 1


if __name__ == '__main__':
    exit_code = run_tests()
    sys.exit(exit_code)
