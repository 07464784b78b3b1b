"""Qubit geometry on the Bloch sphere.

Builds the pulse sequences used for the one-qubit phase gates, traces Bloch
paths, and measures the degree of cyclicity ``eta`` and the geodesically
closed solid angle ``Omega`` of a transported basis state.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateVertex, GeodesicAmbiguous, InvariantViolation
from .holonomy import sigma_matrix, wrap_angle
from .transport import HamiltonianFamily, evolve, path_states, qubit_pulse

__all__ = [
    "BlochPath", "QubitInvariants", "bloch_vectors", "bloch_path",
    "geodesic_arc", "solid_angle", "slice_family", "orange_slice_family",
    "bit_flip_family", "meridian_arc_family", "evolve_qubit",
    "extract_invariants", "closed_form_spectrum", "equatorial_azimuth",
    "exchange_loop",
]

_MAX_STEP = 0.1


def bloch_vectors(states):
    """Bloch vectors of normalized qubit states, shape (..., 3)."""
    v = np.asarray(states, dtype=complex)
    a, b = v[..., 0], v[..., 1]
    cross = np.conj(a) * b
    return np.stack([2 * cross.real, 2 * cross.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=-1)


def equatorial_azimuth(state):
    x, y, _ = bloch_vectors(state)
    return float(np.arctan2(y, x))


@dataclass(frozen=True)
class BlochPath:
    points: np.ndarray
    segment_markers: tuple = ()
    s: np.ndarray = None

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError("Bloch path points must have shape (M, 3)")
        if np.max(np.abs(np.linalg.norm(p, axis=1) - 1)) > 1e-10:
            raise ValueError("Bloch path points must be unit vectors")
        steps = _angles(p[:-1], p[1:])
        if steps.size and steps.max() >= _MAX_STEP:
            raise ValueError(f"angular step {steps.max():.3f} rad exceeds {_MAX_STEP}; sample more densely")

    @property
    def segment_ids(self):
        ids = np.zeros(len(self.points), dtype=int)
        for m in self.segment_markers:
            ids[m:] += 1
        return ids


def _angles(a, b):
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


def bloch_path(result, state):
    """Bloch path of ``U(s)|state>`` over the sampling grid of ``result``."""
    points = bloch_vectors(path_states(result, state))
    sizes = [len(seg.s) - 1 for seg in result.segments]
    markers = tuple(int(m) for m in np.cumsum(sizes)[:-1])
    return BlochPath(points, markers, np.array(result.grid))


def geodesic_arc(a, b, via=None, max_step=0.05):
    """Points along the great-circle arc from ``a`` to ``b``, endpoints included.

    Without ``via`` the shorter arc is used; antipodal endpoints then raise
    ``GeodesicAmbiguous``. With ``via`` the arc passes through that point.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if via is not None:
        via = np.asarray(via, dtype=float)
        via = via / np.linalg.norm(via)
        first = geodesic_arc(a, via, max_step=max_step)
        return np.vstack([first, geodesic_arc(via, b, max_step=max_step)[1:]])
    cross = np.linalg.norm(np.cross(a, b))
    angle = float(np.arctan2(cross, np.dot(a, b)))
    if angle < 1e-12:
        return np.vstack([a, b])
    if cross < 1e-9:
        raise GeodesicAmbiguous("endpoints are antipodal; the closing geodesic is not unique")
    perp = b - np.dot(a, b) * a
    perp /= np.linalg.norm(perp)
    t = np.linspace(0.0, angle, max(2, int(np.ceil(angle / max_step)) + 1))
    pts = np.outer(np.cos(t), a) + np.outer(np.sin(t), perp)
    pts[-1] = b
    return pts


def _fan_center(p):
    """Fan apex whose antipode stays as far as possible from the loop."""
    area = np.sum(np.cross(p, np.roll(p, -1, axis=0)), axis=0)
    cands = [np.eye(3), -np.eye(3),
             np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)]) / np.sqrt(3)]
    for extra in (area, p.sum(axis=0)):
        n = np.linalg.norm(extra)
        if n > 1e-9:
            cands.append(np.array([extra / n, -extra / n]))
    cands = np.vstack(cands)
    margin = np.min(1.0 + cands @ p.T, axis=1)
    return cands[int(np.argmax(margin))]


def solid_angle(path):
    """Oriented solid angle enclosed by a closed Bloch path.

    Sums signed geodesic triangles fanned from an apex ``c`` chosen so that
    ``-c`` stays away from the loop; the result is the area of the region not
    containing ``-c``, counter-clockwise positive, in (-4 pi, 4 pi).

    Raises
    ------
    DegenerateVertex
        For repeated adjacent points.
    """
    p = np.asarray(path.points if isinstance(path, BlochPath) else path, dtype=float)
    if np.max(np.abs(p[0] - p[-1])) > 1e-8:
        raise ValueError("path is not closed: first and last points differ")
    p = p[:-1]
    if len(p) < 3:
        return 0.0
    gaps = np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
    if np.any(gaps < 1e-12):
        raise DegenerateVertex(f"repeated adjacent vertex at index {int(np.argmin(gaps))}")
    c = _fan_center(p)
    a, b = p, np.roll(p, -1, axis=0)
    num = np.einsum("j,ij->i", c, np.cross(a, b))
    den = 1.0 + a @ c + np.sum(a * b, axis=1) + b @ c
    total = float(np.sum(2.0 * np.arctan2(num, den)))
    return float(np.fmod(total, 4 * np.pi))


# ---------------------------------------------------------------------------
# pulse families

_X, _Y, _Z = np.eye(3)


def _meridian_axis(phi):
    # rotating about this axis by +t moves a point on meridian phi away from the north pole
    return np.array([-np.sin(phi), np.cos(phi), 0.0])


def slice_family(phi, eta=1.0):
    """Pole -> equator -> along the equator by ``phi`` -> back up meridian ``phi``.

    The last leg stops at polar angle ``2 arccos(eta)``, so the north-pole
    state returns with overlap modulus ``eta``. Every leg is a great-circle
    arc rotated about an axis perpendicular to the Bloch vector, which
    parallel-transports the computational basis. The enclosed solid angle,
    closed along meridian ``phi``, equals ``phi`` for every ``eta``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    polar_end = 2.0 * np.arccos(eta)
    return HamiltonianFamily([
        qubit_pulse(_Y, np.pi / 2),
        qubit_pulse(_Z, phi),
        qubit_pulse(_meridian_axis(phi), polar_end - np.pi / 2),
    ])


def orange_slice_family(phi):
    """Cyclic pole-equator-pole loop enclosing solid angle ``phi``."""
    if not 0.0 <= phi < 2 * np.pi:
        raise ValueError("azimuth must lie in [0, 2 pi)")
    return slice_family(phi, 1.0)


def bit_flip_family(alpha):
    """A pi pulse about the equatorial axis at azimuth ``alpha``."""
    if not 0.0 <= alpha < 2 * np.pi:
        raise ValueError("azimuth must lie in [0, 2 pi)")
    return HamiltonianFamily([qubit_pulse([np.cos(alpha), np.sin(alpha), 0.0], np.pi)])


def meridian_arc_family(theta):
    """Single arc from the north pole down meridian 0 to polar angle ``theta``."""
    return HamiltonianFamily([qubit_pulse(_Y, theta)])


def evolve_qubit(family, max_step=0.05):
    """``evolve`` with enough samples that Bloch steps stay below ``max_step``."""
    widest = 0.0
    for h, d in family.segments:
        w = np.linalg.eigvalsh(h)
        widest = max(widest, d * (w[-1] - w[0]))
    return evolve(family, max(8, int(np.ceil(widest / max_step))))


# ---------------------------------------------------------------------------
# invariants and the closed-form spectrum

@dataclass(frozen=True)
class QubitInvariants:
    eta: float
    omega: float
    closure_geodesic: str = "shortest"

    def __post_init__(self):
        if not -1e-12 <= self.eta <= 1 + 1e-12:
            raise InvariantViolation(f"eta = {self.eta} outside [0, 1]")


def _dedupe(points):
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.linalg.norm(np.diff(points, axis=0), axis=1) > 1e-12
    return points[keep]


def extract_invariants(result, basis, closure=None, tol=1e-6):
    """Degree of cyclicity and geodesically closed solid angle of ``psi_1``.

    ``eta = |sigma_11|``; ``Omega`` is the solid angle of the Bloch path of
    the first basis vector closed by the shortest geodesic, reported in
    [0, 4 pi). For antipodal endpoints a ``closure`` point (any unit vector
    the closing great semicircle passes through) must be given.

    Raises
    ------
    GeodesicAmbiguous
        Endpoints antipodal and no closure supplied.
    InvariantViolation
        ``arg sigma_11`` disagrees with ``-Omega / 2`` by more than ``tol``.
    """
    b = np.asarray(basis, dtype=complex)
    if b.shape != (2, 2):
        raise ValueError("extract_invariants is defined for qubits only")
    sigma = sigma_matrix(result.final, b, result)
    eta = float(abs(sigma[0, 0]))
    points = _dedupe(bloch_vectors(path_states(result, b[:, 0])))
    start, end = points[0], points[-1]
    antipodal = eta < 1e-9
    if antipodal and closure is None:
        raise GeodesicAmbiguous(
            "eta = 0: endpoints are antipodal and the geodesic closure is not unique; "
            "pass closure=<unit vector on the closing semicircle>")
    arc = geodesic_arc(end, start, via=closure)
    loop = _dedupe(np.vstack([points, arc[1:]]))
    omega = float(np.mod(solid_angle(loop), 4 * np.pi)) if len(loop) > 3 else 0.0
    if 4 * np.pi - omega < 1e-9:
        omega = 0.0
    if eta > tol:
        mismatch = abs(wrap_angle(np.angle(sigma[0, 0]) + omega / 2))
        if mismatch > tol:
            raise InvariantViolation(
                f"arg sigma_11 differs from -Omega/2 by {mismatch:.2e}; refine the grid")
    return QubitInvariants(eta, omega, "shortest" if closure is None else "supplied")


def closed_form_spectrum(inv):
    """Eigenphases ``arg(eta cos(Omega/2) +- i sqrt(1 - eta^2 cos^2(Omega/2)))``.

    Returned ascending, so the ``-`` branch comes first.
    """
    c = inv.eta * np.cos(inv.omega / 2)
    if c * c > 1 + 1e-12:
        raise InvariantViolation(f"eta^2 cos^2(Omega/2) = {c * c} exceeds 1")
    root = np.sqrt(max(0.0, (1 - c) * (1 + c)))
    phases = np.angle(np.array([c - 1j * root, c + 1j * root]))
    phases[phases <= -np.pi + 1e-12] = np.pi
    return np.sort(phases)


def exchange_loop(result, basis):
    """Bloch loop of ``psi_1`` followed by the path of ``psi_2``.

    Closed when the evolution exchanges the two rays (``eta = 0``); half its
    solid angle is the off-diagonal phase ``arg gamma_12``.
    """
    b = np.asarray(basis, dtype=complex)
    first = bloch_vectors(path_states(result, b[:, 0]))
    second = bloch_vectors(path_states(result, b[:, 1]))
    loop = _dedupe(np.vstack([first, second[1:]]))
    if np.max(np.abs(loop[0] - loop[-1])) > 1e-8:
        raise ValueError("the two paths do not form a closed loop (eta != 0)")
    loop[-1] = loop[0]
    return loop
