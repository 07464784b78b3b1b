import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import SX, haar, phases_close
from nodalfree.errors import IncompleteExtraction
from nodalfree.gates import cycle_family
from nodalfree.interferometer import (InterferenceRecord, extract_phases, intensity_curve,
                                      interference_fn)
from nodalfree.linalg import eig_unitary
from nodalfree.transport import evolve

BIT_FLIP = -1j * SX


def _random_state(n, rng):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


class TestInterference:
    def test_eigenvector_has_unit_visibility(self, rng):
        u = haar(3, rng)
        phases, vecs = eig_unitary(u)
        for k in range(3):
            rec = interference_fn(u, vecs[:, k])
            assert abs(rec.visibility - 1) < 1e-12
            assert abs(np.angle(np.exp(1j * (rec.arg_F - phases[k])))) < 1e-12

    def test_balanced_bit_flip_state(self):
        phases, vecs = eig_unitary(BIT_FLIP)
        rec = interference_fn(BIT_FLIP, (vecs[:, 0] + vecs[:, 1]) / np.sqrt(2))
        assert abs(rec.F) < 1e-15

    def test_weighted_combination(self):
        phases, vecs = eig_unitary(BIT_FLIP)
        state = np.sqrt(0.75) * vecs[:, 1] + np.sqrt(0.25) * vecs[:, 0]   # +i weighted 3/4
        rec = interference_fn(BIT_FLIP, state)
        assert abs(rec.F - 0.5j) < 1e-15

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            interference_fn(BIT_FLIP, [1, 1])

    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_convexity(self, n, seed):
        rng = np.random.default_rng(seed)
        u = haar(n, rng)
        phases, _ = eig_unitary(u)
        for _ in range(20):
            rec = interference_fn(u, _random_state(n, rng))
            assert 0 <= rec.visibility <= 1 + 1e-12
            assert np.all(rec.weights >= -1e-15) and abs(rec.weights.sum() - 1) < 1e-12
            assert abs(np.sum(rec.weights * np.exp(1j * phases)) - rec.F) < 1e-10

    def test_unit_visibility_iff_eigenvector(self, rng):
        u = haar(4, rng)
        _, vecs = eig_unitary(u)
        for _ in range(200):
            v = _random_state(4, rng)
            # push toward a random eigenvector by a random amount
            k = rng.integers(4)
            t = rng.uniform(0, 1) ** 8
            v = t * v + (1 - t) * vecs[:, k]
            v /= np.linalg.norm(v)
            rec = interference_fn(u, v)
            overlap = np.max(np.abs(vecs.conj().T @ v) ** 2)
            if rec.visibility > 1 - 1e-8:
                assert overlap > 1 - 1e-4
            if overlap > 1 - 1e-12:
                assert rec.visibility > 1 - 1e-8


class TestIntensity:
    def test_unit_visibility(self):
        chi = np.linspace(-np.pi, np.pi, 721)
        rec = InterferenceRecord(np.array([1.0, 0]), np.exp(0.5j))
        i = intensity_curve(rec, chi)
        assert abs(i.max() - 2) < 1e-5 and abs(chi[np.argmax(i)] - 0.5) < 1e-2
        assert abs(intensity_curve(rec, 0.5) - 2) < 1e-15

    def test_flat(self):
        assert np.allclose(intensity_curve(0j, np.linspace(0, 6, 7)), 1)

    def test_half_visibility(self):
        i = intensity_curve(0.5 * np.exp(-1j), np.linspace(0, 2 * np.pi, 1001))
        assert abs(i.max() - 1.5) < 1e-5 and abs(i.min() - 0.5) < 1e-5


class TestExtraction:
    def test_bit_flip(self):
        found = extract_phases(BIT_FLIP, seed=3)
        assert phases_close([p for p, _ in found], [np.pi / 2, -np.pi / 2], 1e-3)
        for phase, w in found:
            assert abs(np.vdot(w, BIT_FLIP @ w)) > 1 - 1e-6

    def test_scalar_matrix(self):
        found = extract_phases(np.exp(0.9j) * np.eye(3), seed=0)
        assert len(found) == 1 and abs(found[0][0] - 0.9) < 1e-12

    def test_four_cycle(self):
        u = evolve(cycle_family(4), 1).final
        found = extract_phases(u, seed=1)
        assert phases_close([p for p, _ in found], (2 * np.arange(4) + 1) * np.pi / 4, 1e-3)

    def test_degenerate_eigenspace(self, rng):
        q = haar(4, rng)
        u = q @ np.diag(np.exp(1j * np.array([0.4, 0.4, -2.0, 1.0]))) @ q.conj().T
        found = [p for p, _ in extract_phases(u, seed=2)]
        assert phases_close(found, [0.4, -2.0, 1.0], 1e-3)

    def test_deterministic(self, rng):
        u = haar(4, rng)
        a = extract_phases(u, seed=5)
        b = extract_phases(u, seed=5)
        assert all(pa == pb and np.array_equal(wa, wb) for (pa, wa), (pb, wb) in zip(a, b))

    @pytest.mark.parametrize("n", [2, 4])
    def test_random_unitaries(self, n):
        rng = np.random.default_rng(100 + n)
        for i in range(50):
            u = haar(n, rng)
            found = [p for p, _ in extract_phases(u, seed=i)]
            assert phases_close(found, eig_unitary(u)[0], 1e-3)

    def test_incomplete(self, rng):
        u = haar(4, rng)
        with pytest.raises(IncompleteExtraction) as info:
            extract_phases(u, seed=0, restarts=1, steps=1)
        assert info.value.missing_dim == 4


def test_extraction_does_not_consult_eigensolver(monkeypatch):
    import nodalfree.interferometer as mod
    import nodalfree.linalg as linalg

    def forbidden(*args, **kwargs):
        raise AssertionError("eigensolver consulted")

    monkeypatch.setattr(mod, "eig_unitary", forbidden)
    monkeypatch.setattr(linalg, "eig_unitary", forbidden)
    found = extract_phases(BIT_FLIP, seed=0)
    assert len(found) == 2
