"""Dense complex linear algebra for small matrices (2 <= N <= 16).

Matrices are plain ``numpy`` complex arrays. The ``as_*`` helpers validate
structure and return a fresh read-only copy, so values handed around the
library cannot be mutated behind a caller's back.
"""

import numpy as np

from .errors import (ConvergenceFailure, DimensionMismatch, NotHermitian,
                     NotSkewHermitian, NotUnitary)
from .policy import DEFAULT

__all__ = [
    "as_matrix", "as_unitary", "as_hermitian", "dagger", "max_abs",
    "expm_skew", "propagators", "eig_unitary", "char_poly",
    "random_unitary", "random_hermitian", "PAULI",
]

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def as_matrix(a):
    """Return ``a`` as a finite square complex matrix."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return _frozen(a)


def as_unitary(u, tol=DEFAULT.structural):
    u = as_matrix(u)
    err = max_abs(dagger(u) @ u - np.eye(len(u)))
    if err >= tol:
        raise NotUnitary(f"||U^dagger U - 1||_max = {err:.3e} >= {tol:.1e}")
    det_err = abs(abs(np.linalg.det(u)) - 1.0)
    if det_err >= tol:
        raise NotUnitary(f"| |det U| - 1 | = {det_err:.3e} >= {tol:.1e}")
    return u


def as_hermitian(h, tol=DEFAULT.hermitian):
    h = as_matrix(h)
    err = max_abs(h - dagger(h))
    if err >= tol:
        raise NotHermitian(f"||H - H^dagger||_max = {err:.3e} >= {tol:.1e}")
    return h


# ---------------------------------------------------------------------------
# matrix exponential

# Pade(13) coefficients and the 1-norm bound below which no scaling is needed
# (Higham, SIAM J. Matrix Anal. Appl. 26, 2005).
_PADE13 = (64764752532480000., 32382376266240000., 7771770303897600.,
           1187353796428800., 129060195264000., 10559470521600.,
           670442572800., 33522128640., 1323241920., 40840800., 960960.,
           16380., 182., 1.)
_THETA13 = 5.371920351148152


def _expm_pade13(a):
    b = _PADE13
    n = len(a)
    norm1 = np.linalg.norm(a, 1)
    s = 0 if norm1 <= _THETA13 else int(np.ceil(np.log2(norm1 / _THETA13)))
    a = a / 2.0**s
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2)
             + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = (a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2)
         + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident)
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


def expm_skew(generator, tol=DEFAULT.hermitian):
    """Exponential of a skew-Hermitian matrix.

    Uses scaling and squaring around a degree-13 Pade approximant, with an
    exact shortcut for diagonal generators.

    Raises
    ------
    NotSkewHermitian
        If ``||G + G^dagger||_max >= tol``.
    """
    g = as_matrix(generator)
    err = max_abs(g + dagger(g))
    if err >= tol:
        raise NotSkewHermitian(f"||G + G^dagger||_max = {err:.3e} >= {tol:.1e}")
    diag = np.diag(g)
    if not np.any(g - np.diag(diag)):
        return _frozen(np.diag(np.exp(diag)))
    return _frozen(_expm_pade13(np.array(g)))


def propagators(h, times):
    """Stack of ``exp(-i t H)`` for each ``t`` in ``times``.

    ``H`` is diagonalized once, so sampling a constant-Hamiltonian segment
    densely costs one ``eigh`` plus batched products.
    """
    h = as_hermitian(h)
    times = np.asarray(times, dtype=float)
    w, vecs = np.linalg.eigh(h)
    phases = np.exp(-1j * np.multiply.outer(times, w))
    return (vecs[None, :, :] * phases[:, None, :]) @ dagger(vecs)[None]


# ---------------------------------------------------------------------------
# eigendecomposition of unitary (normal) matrices

_CLUSTER_GAP = 1e-3       # relative to the spread of the current block
_DEGENERATE = 1e-14       # blocks narrower than this are treated as scalar
_TIE = 1e-9


def _clusters(w, gap):
    """Split sorted eigenvalues ``w`` into runs separated by more than ``gap``."""
    cuts = np.flatnonzero(np.diff(w) > gap) + 1
    return np.split(np.arange(len(w)), cuts)


def _diagonalize_normal(m):
    """Unitary ``V`` with ``V^dagger m V`` diagonal, for normal ``m``.

    The Hermitian part is diagonalized first; each cluster of (nearly) equal
    real parts is then resolved by the anti-Hermitian part, recursing on the
    compressed block after removing its mean and rescaling. Every level thus
    works at unit scale, so near-degeneracies are split with full relative
    accuracy.
    """
    k = len(m)
    if k == 1:
        return np.ones((1, 1), dtype=complex)
    shifted = m - (np.trace(m) / k) * np.eye(k)
    scale = np.max(np.abs(shifted))
    if scale <= _DEGENERATE:
        return np.eye(k, dtype=complex)
    shifted = shifted / scale
    herm = (shifted + dagger(shifted)) / 2
    skew = (shifted - dagger(shifted)) / 2j
    for part in (herm, skew):
        w, vecs = np.linalg.eigh(part)
        groups = _clusters(w, _CLUSTER_GAP)
        if len(groups) > 1:
            out = np.empty((k, k), dtype=complex)
            for idx in groups:
                block = vecs[:, idx]
                sub = dagger(block) @ shifted @ block
                out[:, idx] = block @ _diagonalize_normal(sub)
            return out
    # A normal block of unit scale cannot have both parts clustered.
    return vecs


def _fix_phase(v):
    mags = np.abs(v)
    lead = int(np.flatnonzero(mags >= mags.max() - _TIE)[0])
    return v * (np.conj(v[lead]) / mags[lead])


def _canonical_order(phases, vecs):
    order = sorted(range(len(phases)), key=lambda i: phases[i])
    # ties in phase are resolved by the rounded eigenvector components
    out, run = [], [order[0]]
    for i in order[1:]:
        if phases[i] - phases[run[0]] <= _TIE:
            run.append(i)
        else:
            out.extend(_sort_run(run, vecs))
            run = [i]
    out.extend(_sort_run(run, vecs))
    return out


def _sort_run(run, vecs):
    def key(i):
        v = np.round(vecs[:, i], 9) + 0.0
        return tuple(x for c in v for x in (c.real, c.imag))
    return sorted(run, key=key)


def eig_unitary(u, tol=DEFAULT.structural, max_refine=3):
    """Eigenphases and eigenvectors of a unitary matrix.

    Returns
    -------
    phases : ndarray, shape (N,)
        Principal arguments in (-pi, pi], ascending.
    vectors : ndarray, shape (N, N)
        Orthonormal eigenvectors as columns, each with its largest component
        real and positive. Ties in phase are ordered lexicographically.

    Raises
    ------
    ConvergenceFailure
        If the reconstruction residual stays above ``tol`` after refinement.
    """
    u = as_unitary(u, tol=max(tol, 1e-10))
    vecs = _diagonalize_normal(np.array(u))
    for _ in range(max_refine + 1):
        rayleigh = dagger(vecs) @ u @ vecs
        lam = np.diag(rayleigh)
        residual = max_abs(u @ vecs - vecs * (lam / np.abs(lam)))
        if residual < tol:
            break
        vecs = vecs @ _diagonalize_normal(rayleigh)
    else:
        raise ConvergenceFailure(
            f"unitary eigensolver residual {residual:.3e} >= {tol:.1e}", residual)
    phases = np.angle(lam)
    phases[phases <= -np.pi + 1e-12] = np.pi
    vecs = np.column_stack([_fix_phase(vecs[:, i]) for i in range(len(phases))])
    order = _canonical_order(phases, vecs)
    phases = np.array(phases[order], dtype=float)
    phases.setflags(write=False)
    return phases, _frozen(vecs[:, order])


# ---------------------------------------------------------------------------
# characteristic polynomial

def char_poly(a):
    """Coefficients ``c_0 .. c_N`` of ``det(A - lambda 1)``.

    Faddeev-LeVerrier recursion; ``c_N = (-1)^N`` and ``c_0 = det A``.
    """
    a = np.array(as_matrix(a))
    n = len(a)
    ident = np.eye(n, dtype=complex)
    monic = np.zeros(n + 1, dtype=complex)   # det(lambda 1 - A)
    monic[n] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + monic[n - k + 1] * ident
        monic[n - k] = -np.trace(a @ m) / k
    return (-1) ** n * monic


# ---------------------------------------------------------------------------
# random test matrices

def random_unitary(n, rng):
    """Haar-distributed unitary (QR of a Ginibre matrix with phase fix)."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_hermitian(n, rng, scale=1.0):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (z + dagger(z)) / 2
