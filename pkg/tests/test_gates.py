import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import SX, SZ, phases_close
from nodalfree.bloch import bit_flip_family, evolve_qubit
from nodalfree.errors import DimensionMismatch, NotPowerOfTwo, SearchSpaceTooLarge
from nodalfree.gates import (NAMED_GATES, Assignment, build_gate, compare_to_named, cycle_family,
                             cycle_gamma, cyclic_shift, equal_up_to_global_phase,
                             find_product_assignment, sequential_assignment)
from nodalfree.holonomy import Spectrum, nodal_free_spectrum, sigma_matrix
from nodalfree.linalg import char_poly
from nodalfree.transport import evolve, pt_residual

Z = [0.0, np.pi]
S = [0.0, np.pi / 2]
T = [0.0, np.pi / 4]


def _cycle_spectrum(n, basis=None):
    b = np.eye(n) if basis is None else basis
    res = evolve(cycle_family(n, basis), 8)
    return nodal_free_spectrum(sigma_matrix(res.final, b, res)), res


def _brute_force(phases, factors):
    """Lexicographically first permutation matching the product up to a global phase."""
    target = np.zeros(1)
    for f in factors:
        target = np.add.outer(target, f).ravel()
    lam = np.exp(1j * np.asarray(phases))
    for perm in itertools.permutations(range(len(phases))):
        diag = np.empty(len(phases), dtype=complex)
        diag[list(perm)] = lam
        ratio = diag / np.exp(1j * target)
        if np.max(np.abs(ratio - ratio[0])) < 1e-8:
            return perm
    return None


class TestCycleFamily:
    @pytest.mark.parametrize("n", [2, 4, 8])
    def test_structure(self, n):
        spec, res = _cycle_spectrum(n)
        assert pt_residual(res, np.eye(n)) < 1e-9
        assert abs(np.linalg.det(res.final) - 1) < 1e-9
        sigma = spec.source.entries
        mask = cyclic_shift(n) != 0
        assert np.max(np.abs(sigma[~mask])) < 1e-9
        assert np.allclose(sigma[mask], np.exp(-1j * np.pi / n), atol=1e-12)
        assert phases_close(spec.phases, (2 * np.arange(n) + 1) * np.pi / n, 1e-9)
        assert abs(cycle_gamma(spec.source) + 1) < 1e-9
        # lambda^n = gamma: secular polynomial is (-1)^n (lambda^n - gamma)
        c = char_poly(sigma)
        assert abs(c[0] - (-1) ** (n + 1) * cycle_gamma(spec.source)) < 1e-9
        assert np.max(np.abs(c[1:-1])) < 1e-9

    def test_n4_phases_exact(self):
        spec, _ = _cycle_spectrum(4)
        assert np.allclose(spec.phases, np.pi / 4 * np.array([-3, -1, 1, 3]), atol=1e-9)

    def test_random_basis(self, rng):
        from conftest import haar
        b = haar(4, rng)
        spec, res = _cycle_spectrum(4, b)
        assert pt_residual(res, b) < 1e-9
        assert abs(cycle_gamma(spec.source) + 1) < 1e-9

    def test_rejects_small(self):
        with pytest.raises(ValueError):
            cycle_family(1)


class TestAssignment:
    def test_validation(self):
        with pytest.raises(ValueError):
            Assignment(("0", "0"))
        with pytest.raises(ValueError):
            Assignment(("00", "1", "10", "11"))
        with pytest.raises(NotPowerOfTwo):
            Assignment(("0", "1", "2"))
        assert Assignment.from_indices((0, 3, 2, 1)).labels == ("00", "11", "10", "01")

    def test_sequential_from_origin(self):
        spec, _ = _cycle_spectrum(4)
        a = sequential_assignment(spec, ("00", "01", "10", "11"))
        # phases ascending from 0: pi/4, 3pi/4, 5pi/4, 7pi/4
        gate = build_gate(spec, a)
        assert np.allclose(gate.phases, np.angle(np.exp(1j * np.pi / 4 * np.array([1, 3, 5, 7]))))


class TestBuildGate:
    def test_phase_flip_eq9_labels(self):
        res = evolve_qubit(bit_flip_family(0.0))
        spec = nodal_free_spectrum(sigma_matrix(res.final, np.eye(2)))
        # lambda = +i labelled |0>, lambda = -i labelled |1>
        gate = build_gate(spec, sequential_assignment(spec, ("0", "1")))
        assert np.allclose(gate.matrix, 1j * SZ, atol=1e-12)
        assert equal_up_to_global_phase(gate, NAMED_GATES["Z"]) == (True, pytest.approx(np.pi / 2))

    def test_phase_flip_phi_minus_as_zero(self):
        res = evolve_qubit(bit_flip_family(0.0))
        spec = nodal_free_spectrum(sigma_matrix(res.final, np.eye(2)))
        gate = build_gate(spec, Assignment(("0", "1")))   # ascending phases: -i first
        assert np.allclose(gate.matrix, -1j * SZ, atol=1e-12)
        eq, theta = equal_up_to_global_phase(gate, NAMED_GATES["Z"])
        assert eq and abs(theta + np.pi / 2) < 1e-12

    def test_gate_b(self):
        spec, _ = _cycle_spectrum(4)
        gate = build_gate(spec, sequential_assignment(spec, ("00", "01", "11", "10")))
        assert equal_up_to_global_phase(gate, NAMED_GATES["B"])[0]
        assert np.max(np.abs(gate.matrix - NAMED_GATES["B"])) < 1e-9

    def test_printed_product_assignment_gives_s_dagger(self):
        spec, _ = _cycle_spectrum(4)
        gate = build_gate(spec, sequential_assignment(spec, ("00", "11", "10", "01")))
        z_sdg = np.diag(np.exp(1j * np.add.outer(Z, [0.0, -np.pi / 2]).ravel()))
        assert equal_up_to_global_phase(gate, z_sdg)[0]
        assert not equal_up_to_global_phase(gate, NAMED_GATES["Z⊗S"])[0]

    @given(st.integers(0, 10_000))
    def test_diagonal_with_spectrum_phases(self, seed):
        rng = np.random.default_rng(seed)
        spec, _ = _cycle_spectrum(8)
        gate = build_gate(spec, Assignment.from_indices(rng.permutation(8)))
        m = gate.matrix
        assert np.max(np.abs(m - np.diag(np.diag(m)))) == 0
        assert np.allclose(np.abs(np.diag(m)), 1)
        assert phases_close(np.angle(np.diag(m)), spec.phases, 1e-12)

    def test_dimension_mismatch(self):
        spec, _ = _cycle_spectrum(4)
        with pytest.raises(DimensionMismatch):
            build_gate(spec, Assignment(("0", "1")))


class TestEquality:
    def test_global_phase(self, rng):
        a = np.diag(np.exp(1j * rng.uniform(-3, 3, 4)))
        eq, theta = equal_up_to_global_phase(np.exp(0.7j) * a, a)
        assert eq and abs(theta - 0.7) < 1e-12

    def test_different_sparsity(self):
        assert not equal_up_to_global_phase(SZ, SX)[0]

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            equal_up_to_global_phase(np.eye(2), np.eye(4))


class TestProductSearch:
    def test_z_s(self):
        spec, _ = _cycle_spectrum(4)
        a = find_product_assignment(spec, [Z, S])
        assert a is not None
        assert equal_up_to_global_phase(build_gate(spec, a), NAMED_GATES["Z⊗S"])[0]
        # factor phases given as a shifted multiset also work
        assert find_product_assignment(spec, [Z, [np.pi / 4, 3 * np.pi / 4]]) is not None

    def test_z_z_impossible(self):
        spec, _ = _cycle_spectrum(4)
        assert find_product_assignment(spec, [Z, Z]) is None
        assert _brute_force(spec.phases, [Z, Z]) is None

    def test_z_s_t(self):
        spec, _ = _cycle_spectrum(8)
        a = find_product_assignment(spec, [Z, S, T])
        assert a is not None
        assert equal_up_to_global_phase(build_gate(spec, a), NAMED_GATES["Z⊗S⊗T"])[0]

    @pytest.mark.parametrize("factors", [[Z, S], [S, Z], [Z, Z], [S, S], [T, S]])
    def test_lexicographically_first(self, factors):
        spec, _ = _cycle_spectrum(4)
        a = find_product_assignment(spec, factors)
        expected = _brute_force(spec.phases, factors)
        assert (a is None and expected is None) or a.indices == expected

    def test_lexicographically_first_n8(self):
        spec, _ = _cycle_spectrum(8)
        assert find_product_assignment(spec, [Z, S, T]).indices == _brute_force(spec.phases, [Z, S, T])

    def test_without_global_phase(self):
        spec = Spectrum(np.array([0.0, np.pi / 2, np.pi, -np.pi / 2]), np.eye(4))
        a = find_product_assignment(spec, [Z, S], global_phase=False)
        gate = build_gate(spec, a)
        assert np.max(np.abs(gate.matrix - NAMED_GATES["Z⊗S"])) < 1e-12

    def test_limits(self):
        spec = Spectrum(np.zeros(16), np.eye(16))
        with pytest.raises(SearchSpaceTooLarge):
            find_product_assignment(spec, [Z] * 4)
        spec4, _ = _cycle_spectrum(4)
        with pytest.raises(DimensionMismatch):
            find_product_assignment(spec4, [Z])


def test_comparison_table():
    spec, _ = _cycle_spectrum(4)
    rows = compare_to_named(build_gate(spec, find_product_assignment(spec, [Z, S])))
    names = {name: eq for name, eq, _ in rows}
    assert set(names) == {"B", "Z⊗S"}
    assert names["Z⊗S"] and not names["B"]
