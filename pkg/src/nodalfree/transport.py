"""Hamiltonian families, unitary paths and the parallel-transport condition.

A family is a sequence of piecewise-constant Hermitian segments on the unit
interval. ``evolve`` samples the generated unitary path exactly,
``pt_residual`` measures how far the path is from parallel-transporting a
basis, and ``parallelize`` removes the dynamical phases so that it does.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IntegrationTooCoarse
from .linalg import PAULI, as_hermitian, as_matrix, dagger, max_abs, propagators
from .policy import DEFAULT

__all__ = [
    "HamiltonianFamily", "Basis", "SegmentSamples", "TransportResult",
    "qubit_pulse", "as_basis", "evolve", "pt_residual", "parallelize",
    "dynamical_phase", "path_states",
]


def _readonly(a, dtype=complex):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HamiltonianFamily:
    """Piecewise-constant ``H(s)`` on ``s in [0, 1]``.

    Durations are rescaled to sum to one and each Hamiltonian is multiplied
    by the original total duration, so the generated unitaries are unchanged.
    """

    segments: tuple

    def __init__(self, segments):
        segments = list(segments)
        if not segments:
            raise ValueError("a Hamiltonian family needs at least one segment")
        hs, ds = [], []
        for h, d in segments:
            d = float(d)
            if not np.isfinite(d) or d <= 0:
                raise ValueError(f"segment duration must be positive, got {d}")
            hs.append(as_hermitian(h))
            ds.append(d)
        dim = hs[0].shape[0]
        if any(h.shape[0] != dim for h in hs):
            raise DimensionMismatch("all segment Hamiltonians must share one dimension")
        total = sum(ds)
        norm = tuple((_readonly(h * total), d / total) for h, d in zip(hs, ds))
        object.__setattr__(self, "segments", norm)

    @property
    def dim(self):
        return self.segments[0][0].shape[0]

    @property
    def boundaries(self):
        """Segment start points plus the final point ``s = 1``."""
        return np.concatenate([[0.0], np.cumsum([d for _, d in self.segments])])

    def hamiltonian_at(self, s):
        """``H(s)``; at a boundary the later segment wins."""
        b = self.boundaries
        i = int(np.clip(np.searchsorted(b, s, side="right") - 1, 0, len(self.segments) - 1))
        return self.segments[i][0]


def qubit_pulse(axis, angle, duration=1.0):
    """Segment rotating the Bloch vector by ``angle`` about ``axis``.

    ``H = (angle / duration) * (n . sigma) / 2`` with ``n`` the normalized axis.
    """
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if norm == 0:
        raise ValueError("pulse axis must be nonzero")
    n = n / norm
    ndots = n[0] * PAULI["x"] + n[1] * PAULI["y"] + n[2] * PAULI["z"]
    return (angle / duration) * ndots / 2, duration


Basis = np.ndarray  # orthonormal basis vectors psi_k as columns


def as_basis(vectors, tol=DEFAULT.structural):
    """Validate an orthonormal basis given as matrix columns."""
    b = as_matrix(vectors)
    err = max_abs(dagger(b) @ b - np.eye(len(b)))
    if err >= tol:
        raise ValueError(f"basis Gram matrix deviates from identity by {err:.3e}")
    return b


@dataclass(frozen=True)
class SegmentSamples:
    """Samples of one segment on a closed sub-grid (both endpoints included).

    ``constant`` marks segments whose Hamiltonian does not vary, which lets
    integrals along the segment be evaluated in closed form.
    """

    s: np.ndarray
    unitaries: np.ndarray
    hamiltonians: np.ndarray
    constant: bool


@dataclass(frozen=True)
class TransportResult:
    family: HamiltonianFamily
    segments: tuple
    parallelized: bool = False
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def dim(self):
        return self.family.dim

    @property
    def grid(self):
        if "grid" not in self._cache:
            parts = [self.segments[0].s] + [seg.s[1:] for seg in self.segments[1:]]
            self._cache["grid"] = _readonly(np.concatenate(parts), float)
        return self._cache["grid"]

    @property
    def unitaries(self):
        if "unitaries" not in self._cache:
            parts = [self.segments[0].unitaries] + [seg.unitaries[1:] for seg in self.segments[1:]]
            self._cache["unitaries"] = _readonly(np.concatenate(parts))
        return self._cache["unitaries"]

    @property
    def final(self):
        return self.segments[-1].unitaries[-1]

    @property
    def segment_ids(self):
        """Segment index of every grid point; a boundary belongs to the later segment."""
        ids = [np.zeros(len(self.segments[0].s), dtype=int)]
        for i, seg in enumerate(self.segments[1:], start=1):
            ids[-1][-1] = i
            ids.append(np.full(len(seg.s) - 1, i))
        ids[-1][-1] = len(self.segments) - 1
        return np.concatenate(ids)


def evolve(family, samples_per_segment=64):
    """Sample the unitary path generated by ``family``.

    Each segment is propagated exactly, ``U(s) = exp(-i (s - s0) H) U(s0)``,
    on ``samples_per_segment`` equal steps. Segment boundaries are always grid
    points and later segments act on the left.
    """
    m = int(samples_per_segment)
    if m < 1:
        raise ValueError("samples_per_segment must be >= 1")
    u0 = np.eye(family.dim, dtype=complex)
    start = 0.0
    out = []
    for k, (h, d) in enumerate(family.segments):
        end = 1.0 if k == len(family.segments) - 1 else start + d
        times = np.linspace(0.0, d, m + 1)
        us = propagators(h, times) @ u0
        s = np.linspace(start, end, m + 1)
        hs = np.broadcast_to(h, (m + 1,) + h.shape)
        out.append(SegmentSamples(_readonly(s, float), _readonly(us), _readonly(hs), True))
        u0, start = us[-1], end
    return TransportResult(family, tuple(out))


def _expectations(seg, vectors):
    """``<psi_k(s)|H(s)|psi_k(s)>`` for each sample and each column of ``vectors``."""
    states = seg.unitaries @ vectors            # (M, N, K)
    return np.sum(states.conj() * (seg.hamiltonians @ states), axis=1).real


def _check_dim(result, vectors):
    if vectors.shape[0] != result.dim:
        raise DimensionMismatch(
            f"basis dimension {vectors.shape[0]} does not match family dimension {result.dim}")


def pt_residual(result, basis):
    """Largest ``|<psi_k| U^dagger(s) H(s) U(s) |psi_k>|`` over the grid.

    Uses ``U^dagger dU/ds = -i U^dagger H U`` so no derivative is
    finite-differenced. Boundary points are checked against both adjacent
    segments.
    """
    b = np.asarray(basis, dtype=complex)
    _check_dim(result, b)
    return max(float(np.max(np.abs(_expectations(seg, b)))) for seg in result.segments)


def _cumulative(seg, values, tol):
    """Running integral of ``values`` (shape (M, K)) along the segment."""
    s = seg.s
    if seg.constant:
        return np.outer(s - s[0], values.mean(axis=0))
    steps = np.diff(s)[:, None] * (values[1:] + values[:-1]) / 2
    running = np.vstack([np.zeros((1, values.shape[1])), np.cumsum(steps, axis=0)])
    n = len(s) - 1
    if n >= 2 and n % 2 == 0:
        coarse = np.sum(np.diff(s[::2])[:, None] * (values[2::2] + values[:-2:2]) / 2, axis=0)
        err = float(np.max(np.abs(running[-1] - coarse))) / 3
        if err > tol:
            raise IntegrationTooCoarse(
                f"phase integration error estimate {err:.2e} exceeds {tol:.1e}; "
                "use more samples per segment")
    return running


def parallelize(result, basis, tol=DEFAULT.transport):
    """Remove dynamical phases so the path parallel-transports ``basis``.

    The output path is ``U(s) D(s)`` with ``D`` diagonal in the basis and
    phases ``phi_k(s) = int_0^s <psi_k(s')|H(s')|psi_k(s')> ds'``. Its
    Hamiltonian is ``H - sum_k phi_k'(s) |psi_k(s)><psi_k(s)|``. Rays of the
    transported basis vectors are unchanged.
    """
    b = np.asarray(basis, dtype=complex)
    _check_dim(result, b)
    offset = np.zeros(b.shape[1])
    out = []
    for seg in result.segments:
        rates = _expectations(seg, b)
        phases = offset + _cumulative(seg, rates, tol)
        offset = phases[-1]
        d = (b * np.exp(1j * phases)[:, None, :]) @ dagger(b)
        us = seg.unitaries @ d
        states = seg.unitaries @ b
        projected = (states * rates[:, None, :]) @ dagger(states)
        hs = seg.hamiltonians - projected
        hs = (hs + dagger(hs)) / 2
        out.append(SegmentSamples(seg.s, _readonly(us), _readonly(hs), False))
    res = TransportResult(result.family, tuple(out), parallelized=True)
    residual = pt_residual(res, b)
    if residual >= tol:
        raise IntegrationTooCoarse(f"residual {residual:.2e} after parallelization exceeds {tol:.1e}")
    return res


def path_states(result, state):
    """``U(s_j) |state>`` on the full grid, shape (M, N)."""
    return result.unitaries @ np.asarray(state, dtype=complex)


def dynamical_phase(result, state):
    """``int_0^1 <phi(s)|H(s)|phi(s)> ds`` with ``phi(s) = U(s) phi``.

    Exact on constant segments, composite trapezoidal otherwise.
    """
    v = np.asarray(state, dtype=complex).reshape(-1, 1)
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise ValueError("state must be normalized")
    _check_dim(result, v)
    total = 0.0
    for seg in result.segments:
        vals = _expectations(seg, v)[:, 0]
        if seg.constant:
            total += (seg.s[-1] - seg.s[0]) * vals.mean()
        else:
            total += np.sum(np.diff(seg.s) * (vals[1:] + vals[:-1]) / 2)
    return float(total)
