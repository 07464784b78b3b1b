"""Holonomy of a parallel-transporting family.

The matrix of the final unitary in the transported basis (``SigmaMatrix``)
carries everything: its diagonal and cyclic products of its entries are the
gauge-invariant ``gamma`` quantities, and its eigenphases are the nodal-free
geometric phases, defined for every evolution.

Basis labels are 0-based throughout.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (NodalPoint, NotParallelTransported, RepeatedIndex,
                     VanishingOverlap)
from .linalg import as_unitary, dagger, eig_unitary
from .policy import DEFAULT
from .transport import dynamical_phase, path_states, pt_residual

__all__ = [
    "SigmaMatrix", "GammaValue", "Spectrum", "sigma_matrix", "gamma",
    "phi_of", "nodal_free_spectrum", "gauge_transform", "secular_coefficients",
    "cycle_index_sets", "bargmann_phase", "aa_cyclic_phase",
    "pancharatnam_phase", "wrap_angle",
]


def wrap_angle(x):
    """Reduce an angle to (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi
    y = np.where(y <= -np.pi, np.pi, y)
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class SigmaMatrix:
    entries: np.ndarray
    basis: np.ndarray

    @property
    def dim(self):
        return self.entries.shape[0]

    def __getitem__(self, kl):
        return self.entries[kl]


@dataclass(frozen=True)
class GammaValue:
    order: int
    indices: tuple
    value: complex


@dataclass(frozen=True)
class Spectrum:
    """Nodal-free eigenphases with their eigenvectors (columns).

    Eigenvectors are expressed in the coordinates of ``source`` when it is a
    ``SigmaMatrix``, i.e. in the transported basis.
    """

    phases: np.ndarray
    vectors: np.ndarray
    source: object = None

    @property
    def eigenvalues(self):
        return np.exp(1j * self.phases)

    def __len__(self):
        return len(self.phases)


def sigma_matrix(final, basis, result=None, tol=DEFAULT.transport):
    """``sigma_kl = <psi_k| U(1) |psi_l>``.

    When the ``TransportResult`` that produced ``final`` is supplied its
    parallel-transport residual is checked, and a ``NotParallelTransported``
    warning is issued if it is not below ``tol``.
    """
    u = as_unitary(final)
    b = np.asarray(basis, dtype=complex)
    if result is not None:
        residual = pt_residual(result, b)
        if residual >= tol:
            warnings.warn(
                f"family does not parallel-transport the basis (residual {residual:.2e})",
                NotParallelTransported, stacklevel=2)
    s = dagger(b) @ u @ b
    s.setflags(write=False)
    return SigmaMatrix(s, b)


def _as_entries(sigma):
    return sigma.entries if isinstance(sigma, SigmaMatrix) else np.asarray(sigma, dtype=complex)


def gamma(sigma, indices, orientation="standard"):
    """Cyclic product of sigma entries over distinct basis labels.

    For ``indices = (j1, ..., jl)`` the default orientation multiplies
    ``sigma[j1, jl] * sigma[jl, j(l-1)] * ... * sigma[j2, j1]``;
    ``orientation="reversed"`` walks the chain the other way,
    ``sigma[j1, j2] * sigma[j2, j3] * ... * sigma[jl, j1]``. A single index
    gives the diagonal entry.
    """
    s = _as_entries(sigma)
    idx = tuple(int(j) for j in indices)
    if not idx:
        raise ValueError("gamma needs at least one index")
    if len(set(idx)) != len(idx):
        raise RepeatedIndex(f"indices must be distinct, got {idx}")
    if any(j < 0 or j >= len(s) for j in idx):
        raise IndexError(f"indices {idx} out of range for dimension {len(s)}")
    if orientation == "standard":
        chain = (idx[0],) + idx[:0:-1] + (idx[0],)
    elif orientation == "reversed":
        chain = idx + (idx[0],)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    value = complex(np.prod([s[a, b] for a, b in zip(chain, chain[1:])]))
    return GammaValue(len(idx), idx, value)


def phi_of(z, nodal_tolerance=DEFAULT.nodal):
    """Phase factor ``z / |z|``; raises ``NodalPoint`` when ``|z|`` vanishes."""
    z = complex(z)
    if abs(z) <= nodal_tolerance:
        raise NodalPoint(f"|z| = {abs(z):.3e} <= {nodal_tolerance:.1e}: phase factor undefined")
    return z / abs(z)


def nodal_free_spectrum(sigma):
    phases, vectors = eig_unitary(_as_entries(sigma))
    return Spectrum(phases, vectors, sigma)


def gauge_transform(sigma, alphas):
    """Effect of ``|psi_k> -> exp(i alpha_k) |psi_k>`` on the sigma matrix.

    ``sigma_kl -> sigma_kl exp(-i (alpha_k - alpha_l))``, i.e. ``V sigma V^dagger``
    with ``V = diag(exp(-i alpha_k))``.
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (sigma.dim,):
        raise ValueError(f"expected {sigma.dim} gauge phases, got shape {alphas.shape}")
    v = np.exp(-1j * alphas)
    s = v[:, None] * sigma.entries * v.conj()[None, :]
    s.setflags(write=False)
    return SigmaMatrix(s, sigma.basis * np.exp(1j * alphas)[None, :])


# ---------------------------------------------------------------------------
# secular equation in terms of gamma quantities

def _cycles(perm):
    """Cycles of a permutation given as a dict ``i -> perm(i)``."""
    seen, out = set(), []
    for start in sorted(perm):
        if start in seen:
            continue
        cyc, j = [], start
        while j not in seen:
            seen.add(j)
            cyc.append(j)
            j = perm[j]
        out.append(tuple(cyc))
    return out


def cycle_index_sets(n):
    """Every cyclic index tuple that appears in the secular expansion.

    Each tuple is written starting from its smallest label, in the standard
    chain orientation of :func:`gamma`.
    """
    out = []
    for l in range(1, n + 1):
        for subset in itertools.combinations(range(n), l):
            first, rest = subset[0], subset[1:]
            for tail in itertools.permutations(rest):
                out.append((first,) + tail)
    return out


def secular_coefficients(sigma, max_dim=8):
    """Coefficients of ``det(sigma - lambda 1)`` assembled from gamma values.

    Expands the determinant over permutations: every cycle of length ``l``
    contributes ``(-1)^(l-1)`` times a gamma of order ``l``. Returns
    ``c_0 .. c_N`` in the same convention as :func:`nodalfree.linalg.char_poly`.
    """
    s = _as_entries(sigma)
    n = len(s)
    if n > max_dim:
        raise ValueError(f"gamma expansion limited to N <= {max_dim}")
    cache = {}

    def cycle_term(cyc):
        if cyc not in cache:
            # sigma[i, perm(i)] along i -> perm(i) is the standard chain read backwards
            chain = (cyc[0],) + cyc[:0:-1]
            cache[cyc] = (-1) ** (len(cyc) - 1) * gamma(s, chain).value
        return cache[cyc]

    coeffs = np.zeros(n + 1, dtype=complex)
    for size in range(n + 1):
        total = 0j
        for subset in itertools.combinations(range(n), size):
            for image in itertools.permutations(subset):
                term = 1 + 0j
                for cyc in _cycles(dict(zip(subset, image))):
                    term *= cycle_term(cyc)
                total += term
        # sum over principal minors of size |S| multiplies (-lambda)^(N-|S|)
        coeffs[n - size] = (-1) ** (n - size) * total
    return coeffs


# ---------------------------------------------------------------------------
# cyclic (Aharonov-Anandan) phases and the discrete oracle

def _cyclic_state(result, k):
    phases, vectors = eig_unitary(result.final)
    return phases[k], vectors[:, k]


def aa_cyclic_phase(result, k):
    """Cyclic geometric phase of the k-th eigenvector of ``U(1)``.

    ``beta_k = tau_k + int_0^1 <phi_k(s)|H(s)|phi_k(s)> ds`` reduced to
    (-pi, pi]. ``k`` indexes the canonical ordering of ``eig_unitary``.
    """
    tau, vec = _cyclic_state(result, k)
    return wrap_angle(tau + dynamical_phase(result, vec))


def bargmann_phase(states, min_overlap=1e-6):
    """Geometric phase of a closed chain of states.

    Returns ``-arg(<v0|v1><v1|v2>...<vM|v0>)``, which converges to the
    geometric phase of the ray loop as the chain is refined.
    """
    v = np.asarray(states, dtype=complex)
    overlaps = np.einsum("mi,mi->m", v.conj(), np.roll(v, -1, axis=0))
    small = np.abs(overlaps) < min_overlap
    if np.any(small):
        j = int(np.flatnonzero(small)[0])
        raise VanishingOverlap(
            f"overlap {abs(overlaps[j]):.2e} at step {j} is below {min_overlap:.0e}; refine the grid")
    # sum of logs avoids under/overflow of long products
    return wrap_angle(-np.sum(np.angle(overlaps)))


def pancharatnam_phase(result, k, min_overlap=1e-6):
    """Discrete oracle for :func:`aa_cyclic_phase`.

    Bargmann phase of ``U(s_j) |phi_k>`` on the sampling grid. The chain is
    closed by ``<phi_k(1)|phi_k(0)> = conj(lambda_k)``, so the ray loop is
    projectively closed.
    """
    _, vec = _cyclic_state(result, k)
    return bargmann_phase(path_states(result, vec), min_overlap)
