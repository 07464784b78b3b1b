"""Phase gates from nodal-free spectra.

A gate is obtained by declaring the eigenvectors of the final unitary to be
the computational basis: eigenvector ``k`` gets a bit-string label and the
gate is diagonal with the eigenvalue ``lambda_k`` at that label.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionMismatch, NotPowerOfTwo, SearchSpaceTooLarge
from .holonomy import gamma, wrap_angle
from .linalg import dagger, eig_unitary
from .policy import DEFAULT
from .transport import HamiltonianFamily

__all__ = [
    "Assignment", "GateMatrix", "cyclic_shift", "cycle_family", "cycle_gamma",
    "sequential_assignment", "build_gate", "equal_up_to_global_phase",
    "find_product_assignment", "NAMED_GATES", "compare_to_named",
]


def _num_bits(n):
    bits = int(round(np.log2(n))) if n > 0 else -1
    if bits < 0 or 2**bits != n:
        raise NotPowerOfTwo(f"dimension {n} is not a power of two; bit labels undefined")
    return bits


def cyclic_shift(n):
    """``C = sum_k |k><k+1 mod n|``: nonzero entries at ``(k, k+1)`` and ``(n-1, 0)``."""
    c = np.zeros((n, n), dtype=complex)
    c[np.arange(n), (np.arange(n) + 1) % n] = 1.0
    return c


def cycle_family(n, basis=None):
    """Constant-Hamiltonian family whose final unitary is ``exp(-i pi/n) C_n``.

    The generator is the principal logarithm of the cyclic shift with its
    (uniform) diagonal removed. It commutes with the path and has zero
    diagonal in ``basis``, so the family parallel-transports that basis and
    ends in SU(n) for even ``n``.
    """
    if n < 2:
        raise ValueError("cycle length must be at least 2")
    b = np.eye(n, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if b.shape != (n, n):
        raise DimensionMismatch(f"basis must be {n}x{n}")
    phases, vecs = eig_unitary(cyclic_shift(n))
    log_c = (vecs * (1j * phases)) @ dagger(vecs)
    gen = log_c - (np.trace(log_c) / n) * np.eye(n)
    h = 1j * gen
    h = (h + dagger(h)) / 2
    return HamiltonianFamily([(b @ h @ dagger(b), 1.0)])


def cycle_gamma(sigma):
    """Full-length gamma along the chain ``sigma_12 sigma_23 ... sigma_N1``.

    For a single-cycle sigma the secular equation is ``lambda^N = cycle_gamma``.
    """
    n = sigma.dim if hasattr(sigma, "dim") else len(sigma)
    return gamma(sigma, tuple(range(n)), orientation="reversed").value


@dataclass(frozen=True)
class Assignment:
    """``labels[k]`` is the computational bit string given to eigenvector ``k``."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        bits = _num_bits(len(labels))
        if any(len(x) != bits or set(x) - {"0", "1"} for x in labels):
            raise ValueError(f"labels must be {bits}-bit strings, got {labels}")
        if len(set(labels)) != len(labels):
            raise ValueError(f"labels must be distinct, got {labels}")

    @property
    def indices(self):
        """Computational index of each eigenvector."""
        return tuple(int(x, 2) if x else 0 for x in self.labels)

    @classmethod
    def from_indices(cls, indices):
        bits = _num_bits(len(indices))
        return cls(tuple(format(i, f"0{bits}b") if bits else "" for i in indices))


def sequential_assignment(spectrum, labels, origin=0.0):
    """Label eigenvectors in order of increasing phase measured from ``origin``.

    ``labels[0]`` goes to the eigenvalue with the smallest phase in
    ``[origin, origin + 2 pi)``, and so on.
    """
    if len(labels) != len(spectrum.phases):
        raise DimensionMismatch("one label per eigenvector is required")
    offsets = np.mod(np.asarray(spectrum.phases) - origin + 1e-12, 2 * np.pi)
    order = np.argsort(offsets, kind="stable")
    out = [None] * len(labels)
    for lab, k in zip(labels, order):
        out[k] = lab
    return Assignment(tuple(out))


@dataclass(frozen=True)
class GateMatrix:
    matrix: np.ndarray
    spectrum: object = None
    assignment: Assignment = None

    @property
    def phases(self):
        return np.angle(np.diag(self.matrix))


def build_gate(spectrum, assignment):
    """``sum_k lambda_k |label(k)><label(k)|``."""
    n = len(spectrum.phases)
    if len(assignment.labels) != n:
        raise DimensionMismatch(f"assignment has {len(assignment.labels)} labels for {n} eigenvectors")
    diag = np.zeros(n, dtype=complex)
    diag[list(assignment.indices)] = np.exp(1j * np.asarray(spectrum.phases))
    m = np.diag(diag)
    m.setflags(write=False)
    return GateMatrix(m, spectrum, assignment)


def _matrix(g):
    return np.asarray(g.matrix if isinstance(g, GateMatrix) else g, dtype=complex)


def equal_up_to_global_phase(a, b, tol=DEFAULT.gate):
    """Whether ``a = exp(i theta) b``; ``theta`` is read off the first nonzero entry of ``b``.

    Returns ``(equal, theta)``; ``theta`` is ``None`` when no phase can be read.
    """
    a, b = _matrix(a), _matrix(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    nz = np.flatnonzero(np.abs(b.ravel()) > tol)
    if nz.size == 0:
        return bool(np.max(np.abs(a)) < tol), None
    i = nz[0]
    if abs(a.ravel()[i]) <= tol:
        return False, None
    theta = float(np.angle(a.ravel()[i] / b.ravel()[i]))
    return bool(np.max(np.abs(a - np.exp(1j * theta) * b)) < tol), theta


def _product_phases(factors):
    """Diagonal phases of a tensor product; the first factor is the most significant digit."""
    return reduce(lambda acc, f: np.add.outer(acc, np.asarray(f, float)).ravel(),
                  factors, np.zeros(1))


def find_product_assignment(spectrum, factors, global_phase=True, tol=DEFAULT.gate, max_dim=8):
    """Search for labels that make the gate a tensor product of diagonal factors.

    ``factors`` lists the diagonal phases of each factor (``[0, pi]`` for Z).
    All assignments are enumerated depth-first in lexicographic order of the
    computational indices, pruning as soon as an eigenphase does not match
    its target; the first complete match is returned, or ``None``. With
    ``global_phase`` the product only has to match up to an overall phase.
    """
    phases = np.asarray(spectrum.phases, dtype=float)
    n = len(phases)
    if n > max_dim:
        raise SearchSpaceTooLarge(f"exhaustive search limited to N <= {max_dim}, got {n}")
    target = _product_phases(factors)
    if len(target) != n:
        raise DimensionMismatch(f"factors span dimension {len(target)}, spectrum has {n}")
    _num_bits(n)

    def close(x, y):
        return abs(wrap_angle(x - y)) < tol

    def same_multiset(xs, ys):
        free = list(ys)
        for x in xs:
            hit = next((i for i, y in enumerate(free) if close(x, y)), None)
            if hit is None:
                return False
            free.pop(hit)
        return True

    def extend(k, offset, used, perm):
        if k == n:
            return True
        for c in range(n):
            if not used[c] and close(phases[k], target[c] + offset):
                used[c], perm[k] = True, c
                if extend(k + 1, offset, used, perm):
                    return True
                used[c] = False
        return False

    for c0 in range(n):
        offset = phases[0] - target[c0] if global_phase else 0.0
        if not close(phases[0], target[c0] + offset):
            continue
        if not same_multiset(phases, target + offset):
            continue
        used, perm = [False] * n, [0] * n
        used[c0], perm[0] = True, c0
        if extend(1, offset, used, perm):
            return Assignment.from_indices(perm)
    return None


def _diag_gate(phases):
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float)))


_Z = [0.0, np.pi]
_S = [0.0, np.pi / 2]
_T = [0.0, np.pi / 4]

NAMED_GATES = {
    "Z": _diag_gate(_Z),
    "S": _diag_gate(_S),
    "T": _diag_gate(_T),
    "B": _diag_gate(np.pi / 4 * np.array([1, 3, 7, 5])),   # |00>, |01>, |10>, |11>
    "Z⊗S": _diag_gate(_product_phases([_Z, _S])),
    "Z⊗S⊗T": _diag_gate(_product_phases([_Z, _S, _T])),
}


def compare_to_named(gate, tol=DEFAULT.gate):
    """Rows ``(name, equal, theta)`` against every named gate of matching size."""
    m = _matrix(gate)
    rows = []
    for name, target in NAMED_GATES.items():
        if target.shape == m.shape:
            eq, theta = equal_up_to_global_phase(m, target, tol)
            rows.append((name, eq, theta))
    return rows
