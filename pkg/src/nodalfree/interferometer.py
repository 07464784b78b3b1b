"""Two-beam interferometry of a parallel-transporting evolution.

One beam carries the internal state through ``U(1)``, the other picks up a
variable phase ``chi``. The fringe pattern depends on
``F = <phi|U(1)|phi>``, a convex combination of the nodal-free phase factors,
and reaches unit visibility exactly on eigenvectors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, IncompleteExtraction
from .holonomy import wrap_angle
from .linalg import as_unitary, dagger, eig_unitary
from .policy import DEFAULT

__all__ = ["InterferenceRecord", "interference_fn", "intensity_curve", "extract_phases"]


@dataclass(frozen=True)
class InterferenceRecord:
    input_state: np.ndarray
    F: complex
    weights: np.ndarray = None

    @property
    def visibility(self):
        return abs(self.F)

    @property
    def arg_F(self):
        return float(np.angle(self.F))


def _normalized(state, tol=1e-10):
    v = np.asarray(state, dtype=complex).ravel()
    if abs(np.linalg.norm(v) - 1) > tol:
        raise ValueError("input state must be normalized")
    return v


def interference_fn(final, state, tol=DEFAULT.structural):
    """``F = <phi|U|phi>`` with its eigen-decomposition check.

    The record carries the weights ``|<phi_k|phi>|^2`` (canonical eigenvector
    order); ``sum_k w_k lambda_k`` must reproduce ``F`` within ``tol``.
    """
    u = as_unitary(final)
    v = _normalized(state)
    f = complex(np.vdot(v, u @ v))
    phases, vecs = eig_unitary(u)
    weights = np.abs(dagger(vecs) @ v) ** 2
    mix = complex(np.sum(weights * np.exp(1j * phases)))
    if abs(mix - f) >= tol:
        raise ConvergenceFailure(f"convex decomposition misses F by {abs(mix - f):.2e}", abs(mix - f))
    return InterferenceRecord(v, f, weights)


def intensity_curve(record, chi):
    """Output-port intensity ``1 + |F| cos(chi - arg F)``."""
    f = record.F if isinstance(record, InterferenceRecord) else complex(record)
    chi = np.asarray(chi, dtype=float)
    return 1.0 + abs(f) * np.cos(chi - np.angle(f))


# ---------------------------------------------------------------------------
# unit-visibility search

def _coords(amp, ph):
    """Unit vectors from hyperspherical amplitudes and relative phases, batched.

    ``amp`` and ``ph`` have shape (R, m-1); the first component is real.
    """
    r, k = amp.shape
    out = np.ones((r, k + 1), dtype=complex)
    sines = np.ones(r)
    for j in range(k):
        out[:, j] = sines * np.cos(amp[:, j]) * (np.exp(1j * ph[:, j - 1]) if j else 1.0)
        sines = sines * np.sin(amp[:, j])
    out[:, k] = sines * np.exp(1j * ph[:, k - 1])
    return out


_MIN_STEP = 1e-8
_CONVERGED = 1 - 1e-13   # squared visibility; unit visibility is the global maximum


def _ascend(u, q, rng, restarts, steps):
    """Compass search for the state in span(q) maximizing ``|<v|U|v>|``.

    Returns the best witness and its visibility. Step sizes halve per restart
    whenever a full sweep over the ``2m - 2`` angles brings no improvement.
    """
    m = q.shape[1]
    if m == 1:
        v = q[:, 0]
        return v, abs(np.vdot(v, u @ v))
    uq = dagger(q) @ u @ q
    k = m - 1

    def visibility2(x):
        c = _coords(x[:, :k], x[:, k:])
        f = np.einsum("ri,ij,rj->r", c.conj(), uq, c)
        return np.abs(f) ** 2

    x = np.hstack([rng.uniform(0, np.pi / 2, (restarts, k)),
                   rng.uniform(-np.pi, np.pi, (restarts, k))])
    best = visibility2(x)
    step = np.full(restarts, 0.5)
    for _ in range(steps):
        active = np.flatnonzero(step >= _MIN_STEP)
        if active.size == 0 or best.max() >= _CONVERGED:
            break
        xa, ba, sa = x[active], best[active], step[active]
        improved = np.zeros(active.size, dtype=bool)
        for j in range(2 * k):
            for sign in (1.0, -1.0):
                trial = xa.copy()
                trial[:, j] += sign * sa
                val = visibility2(trial)
                better = val > ba
                xa[better] = trial[better]
                ba[better] = val[better]
                improved |= better
        sa[~improved] /= 2
        x[active], best[active], step[active] = xa, ba, sa
    i = int(np.argmax(best))
    v = q @ _coords(x[i:i + 1, :k], x[i:i + 1, k:])[0]
    return v / np.linalg.norm(v), float(np.sqrt(best[i]))


def _complement(q, w):
    """Orthonormal basis of the part of span(q) orthogonal to ``w``."""
    p = q - np.outer(w, w.conj() @ q)
    left, _, _ = np.linalg.svd(p, full_matrices=False)
    return left[:, : q.shape[1] - 1]


def extract_phases(final, seed=0, restarts=None, steps=500,
                   visibility_tol=1e-6, merge_tol=1e-3):
    """Nodal-free phases found by maximizing fringe visibility.

    Uses derivative-free ascent with random restarts over input states,
    without consulting the eigensolver. After each unit-visibility witness
    is found the search continues in the orthogonal complement of the
    witnesses found so far, until the whole space is exhausted.

    Returns
    -------
    list of (phase, witness)
        Distinct phases (merged within ``merge_tol``) in ascending order,
        each with its best witness state.

    Raises
    ------
    IncompleteExtraction
        If some stage fails to reach visibility ``1 - visibility_tol``.
    """
    u = np.array(as_unitary(final))
    n = len(u)
    restarts = 8 * n if restarts is None else int(restarts)
    rng = np.random.default_rng(seed)
    q = np.eye(n, dtype=complex)
    found = []
    while q.shape[1] > 0:
        w, vis = _ascend(u, q, rng, restarts, steps)
        if vis < 1 - visibility_tol:
            raise IncompleteExtraction(
                f"best visibility {vis:.8f} below 1 - {visibility_tol:.0e}; "
                f"{q.shape[1]} of {n} dimensions unresolved",
                found=[p for p, _, _ in found], missing_dim=q.shape[1])
        found.append((float(np.angle(np.vdot(w, u @ w))), w, vis))
        q = _complement(q, w)
    found.sort(key=lambda t: t[0])
    merged = []
    for phase, w, vis in found:
        if merged and abs(wrap_angle(phase - merged[-1][0])) < merge_tol:
            if vis > merged[-1][2]:
                merged[-1] = (phase, w, vis)
            continue
        merged.append((phase, w, vis))
    if len(merged) > 1 and abs(wrap_angle(merged[0][0] - merged[-1][0])) < merge_tol:
        head, tail = merged[0], merged.pop()
        merged[0] = head if head[2] >= tail[2] else tail
    return [(p, w) for p, w, _ in merged]
