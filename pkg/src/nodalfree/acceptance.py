"""Reproducible acceptance checks for the whole library.

Each check runs one end-to-end criterion from a seed and returns a
``CheckResult`` holding the worst observed metric and the tolerance it was
held to. ``run_all`` evaluates every library-side check in a fixed order;
the results depend only on the seed.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import bloch, gates, holonomy, interferometer, linalg, transport
from .errors import NodalPoint, NodalFreeError
from .holonomy import wrap_angle
from .workers import ordered_map

__all__ = ["CheckResult", "random_family", "CHECKS", "run_all"]


@dataclass(frozen=True)
class CheckResult:
    number: int
    name: str
    passed: bool
    metric: float
    tolerance: float
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number:2d} {self.name}: "
                f"metric={self.metric:.3e} tol={self.tolerance:.0e} {self.detail}").rstrip()

    def as_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "metric": self.metric, "tolerance": self.tolerance, "detail": self.detail}


def _result(number, name, metric, tol, detail="", ok=True):
    metric = float(metric)
    return CheckResult(number, name, bool(ok and np.isfinite(metric) and metric < tol), metric, tol, detail)


def random_family(n, rng, segments=3, scale=1.0):
    """Random piecewise-constant family with ``segments`` pieces of random length."""
    durations = rng.uniform(0.5, 1.5, segments)
    return transport.HamiltonianFamily(
        [(linalg.random_hermitian(n, rng, scale), d) for d in durations])


def _phase_distance(a, b):
    """Largest wrapped gap between two phase lists after sorting both on the circle."""
    a = np.sort(np.mod(np.asarray(a, float), 2 * np.pi))
    b = np.sort(np.mod(np.asarray(b, float), 2 * np.pi))
    if len(a) != len(b):
        return np.inf
    best = np.inf
    for shift in range(len(b)):    # sorting breaks ties across the 0 / 2 pi seam
        best = min(best, np.max(np.abs(wrap_angle(a - np.roll(b, shift)))))
    return float(best)


def _children(seed, count):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


# ---------------------------------------------------------------------------
# 1-2: closed-form qubit spectrum

def _grid_point(args):
    eta, omega = args
    result = bloch.evolve_qubit(bloch.slice_family(omega, eta))
    closure = np.array([np.cos(omega), np.sin(omega), 0.0]) if eta == 0 else None
    inv = bloch.extract_invariants(result, np.eye(2), closure=closure)
    sigma = holonomy.sigma_matrix(result.final, np.eye(2))
    numeric = holonomy.nodal_free_spectrum(sigma).phases
    g12 = holonomy.gamma(sigma, (0, 1)).value
    return _phase_distance(numeric, bloch.closed_form_spectrum(inv)), sigma, g12


def _eta_omega_grid():
    etas = np.linspace(0.0, 1.0, 20)
    omegas = np.linspace(0.0, 2 * np.pi, 20, endpoint=False)
    return [(float(e), float(o)) for e in etas for o in omegas]


def check_closed_form(seed=0):
    rows = ordered_map(_grid_point, _eta_omega_grid())
    worst = max(r[0] for r in rows)
    return _result(1, "closed-form qubit spectrum on 20x20 (eta, Omega) grid", worst, 1e-6,
                   f"points={len(rows)}")


def check_exact_values(seed=0):
    errs = []
    # eta = 0: lambda = +-i for every bit flip
    for alpha in np.linspace(0, 2 * np.pi, 8, endpoint=False):
        res = bloch.evolve_qubit(bloch.bit_flip_family(alpha))
        ph = holonomy.nodal_free_spectrum(holonomy.sigma_matrix(res.final, np.eye(2))).phases
        errs.append(_phase_distance(ph, [-np.pi / 2, np.pi / 2]))
    # eta = 1: lambda = cos(Omega/2) +- i |sin(Omega/2)|
    for omega in np.linspace(0.1, 6.2, 62):
        res = bloch.evolve_qubit(bloch.orange_slice_family(omega))
        ph = holonomy.nodal_free_spectrum(holonomy.sigma_matrix(res.final, np.eye(2))).phases
        target = np.cos(omega / 2) + np.array([-1, 1]) * 1j * abs(np.sin(omega / 2))
        errs.append(_phase_distance(ph, np.angle(target)))
    # gamma_12 = eta^2 - 1 and its phase factor on the grid
    nodal_ok = True
    for (eta, omega), (_, _, g12) in zip(_eta_omega_grid(), ordered_map(_grid_point, _eta_omega_grid())):
        errs.append(abs(g12 - (eta**2 - 1)))
        if eta < 1:
            errs.append(abs(holonomy.phi_of(g12) + 1))
        else:
            try:
                holonomy.phi_of(g12)
                nodal_ok = False
            except NodalPoint:
                pass
    return _result(2, "exact qubit values (+-i, eta=1 pair, eta^2-1, Phi=-1, nodal point)",
                   max(errs), 1e-8, "" if nodal_ok else "NodalPoint not raised at eta=1", nodal_ok)


# ---------------------------------------------------------------------------
# 3-5: sigma-matrix structure

def check_gauge_invariance(seed=0, trials=1000):
    rng = np.random.default_rng(seed)
    worst_spec = worst_entry = 0.0
    for i in range(trials):
        n = (2, 3, 4)[i % 3]
        sigma = holonomy.SigmaMatrix(linalg.random_unitary(n, rng), np.eye(n, dtype=complex))
        alphas = rng.uniform(-np.pi, np.pi, n)
        moved = holonomy.gauge_transform(sigma, alphas)
        worst_spec = max(worst_spec, _phase_distance(holonomy.nodal_free_spectrum(sigma).phases,
                                                     holonomy.nodal_free_spectrum(moved).phases))
        expected = sigma.entries * np.exp(-1j * np.subtract.outer(alphas, alphas))
        worst_entry = max(worst_entry, float(np.max(np.abs(moved.entries - expected))))
    return _result(3, "gauge invariance of the spectrum (1000 trials)", max(worst_spec, worst_entry),
                   1e-10, f"spectrum={worst_spec:.1e} entries={worst_entry:.1e}")


def _parallel_sample(rng, n):
    fam = random_family(n, rng)
    basis = linalg.random_unitary(n, rng)
    res = transport.parallelize(transport.evolve(fam, 64), basis)
    return res, basis


def check_secular_expansion(seed=0, families=200):
    worst = 0.0
    for rng in _children(seed, families):
        res, basis = _parallel_sample(rng, 3)
        sigma = holonomy.sigma_matrix(res.final, basis, res)
        diff = holonomy.secular_coefficients(sigma) - linalg.char_poly(sigma.entries)
        worst = max(worst, float(np.max(np.abs(diff))))
    return _result(4, "N=3 gamma expansion equals characteristic polynomial (200 families)",
                   worst, 1e-10)


def check_su_n(seed=0, families=60):
    worst_det = worst_c0 = 0.0
    checked = 0
    for i, rng in enumerate(_children(seed, families)):
        res, basis = _parallel_sample(rng, (2, 3, 4)[i % 3])
        if transport.pt_residual(res, basis) >= 1e-8:
            continue
        checked += 1
        worst_det = max(worst_det, float(np.max(np.abs(np.linalg.det(res.unitaries) - 1))))
        c0 = linalg.char_poly(holonomy.sigma_matrix(res.final, basis).entries)[0]
        worst_c0 = max(worst_c0, abs(abs(c0) - 1))
    for n in (2, 4, 8):
        res = transport.evolve(gates.cycle_family(n), 16)
        worst_det = max(worst_det, float(np.max(np.abs(np.linalg.det(res.unitaries) - 1))))
    ok = checked == families and worst_det < 1e-7
    return _result(5, "det U(s) = 1 on transported paths, |c0| = 1", worst_c0, 1e-9,
                   f"families={checked} det={worst_det:.1e}", ok)


# ---------------------------------------------------------------------------
# 6: cyclic phases against the discrete oracle

def _aa_gap(args):
    rng, n = args
    res, basis = _parallel_sample_fine(rng, n)
    return max(abs(wrap_angle(holonomy.aa_cyclic_phase(res, k) - holonomy.pancharatnam_phase(res, k)))
               for k in range(n))


def _parallel_sample_fine(rng, n, points=10_000, segments=4):
    fam = random_family(n, rng, segments)
    basis = linalg.random_unitary(n, rng)
    return transport.parallelize(transport.evolve(fam, points // segments), basis), basis


def check_cyclic_phases(seed=0, families=100):
    rngs = _children(seed, 2 * families)
    jobs = [(rng, 2) for rng in rngs[:families]] + [(rng, 4) for rng in rngs[families:]]
    gaps = ordered_map(_aa_gap, jobs)
    return _result(6, "cyclic phase equals discrete Bargmann phase (100 qubit + 100 4-level, 1e4 points)",
                   max(gaps), 1e-4)


# ---------------------------------------------------------------------------
# 7: interferometer

def check_interferometer(seed=0, states=1000, unitaries=100):
    rng = np.random.default_rng(seed)
    worst_mix = 0.0
    for i in range(states):
        n = (2, 3, 4)[i % 3]
        u = linalg.random_unitary(n, rng)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        v /= np.linalg.norm(v)
        rec = interferometer.interference_fn(u, v)
        phases, _ = linalg.eig_unitary(u)
        mix = np.sum(rec.weights * np.exp(1j * phases))
        worst_mix = max(worst_mix, abs(mix - rec.F), abs(np.sum(rec.weights) - 1), -min(rec.weights.min(), 0))
    worst_phase = 0.0
    missing = 0
    for i in range(unitaries):
        n = 2 if i < unitaries // 2 else 4
        u = linalg.random_unitary(n, rng)
        try:
            found = [p for p, _ in interferometer.extract_phases(u, seed=seed + i)]
        except NodalFreeError:
            missing += 1
            continue
        truth = linalg.eig_unitary(u)[0]
        worst_phase = max(worst_phase, _phase_distance(found, truth))
    metric = max(worst_phase / 1e-3, worst_mix / 1e-10)
    detail = f"convexity={worst_mix:.1e} extraction={worst_phase:.1e} failures={missing}"
    return _result(7, "convex combination and unit-visibility phase extraction", metric, 1.0,
                   detail, missing == 0)


# ---------------------------------------------------------------------------
# 8: gates

def _cycle_spectrum(n):
    res = transport.evolve(gates.cycle_family(n), 8)
    return holonomy.nodal_free_spectrum(holonomy.sigma_matrix(res.final, np.eye(n), res))


def check_gates(seed=0):
    errs = {}
    spec4 = _cycle_spectrum(4)
    errs["phases"] = _phase_distance(spec4.phases, np.pi / 4 * np.array([1, 3, 5, 7]))
    errs["gamma4"] = abs(gates.cycle_gamma(spec4.source) + 1)
    b = gates.build_gate(spec4, gates.sequential_assignment(spec4, ("00", "01", "11", "10")))
    eq_b, _ = gates.equal_up_to_global_phase(b, gates.NAMED_GATES["B"])
    zs = gates.find_product_assignment(spec4, [[0, np.pi], [0, np.pi / 2]])
    eq_zs = zs is not None and gates.equal_up_to_global_phase(
        gates.build_gate(spec4, zs), gates.NAMED_GATES["Z⊗S"])[0]
    spec8 = _cycle_spectrum(8)
    zst = gates.find_product_assignment(spec8, [[0, np.pi], [0, np.pi / 2], [0, np.pi / 4]])
    eq_zst = zst is not None and gates.equal_up_to_global_phase(
        gates.build_gate(spec8, zst), gates.NAMED_GATES["Z⊗S⊗T"])[0]
    flip = bloch.evolve_qubit(bloch.bit_flip_family(0.0))
    spec2 = holonomy.nodal_free_spectrum(holonomy.sigma_matrix(flip.final, np.eye(2), flip))
    iz = gates.build_gate(spec2, gates.sequential_assignment(spec2, ("0", "1"), origin=0.0))
    eq_z, theta = gates.equal_up_to_global_phase(iz, gates.NAMED_GATES["Z"])
    errs["iZ"] = abs(wrap_angle(theta - np.pi / 2)) if eq_z else np.inf
    ok = eq_b and eq_zs and eq_zst and eq_z
    detail = f"B={eq_b} Z⊗S={eq_zs} Z⊗S⊗T={eq_zst} iZ={eq_z}"
    return _result(8, "cycle gates, B, Z⊗S, Z⊗S⊗T and the phase flip", max(errs.values()), 1e-9, detail, ok)


# ---------------------------------------------------------------------------
# 9: orange slices and the bit-flip sweep

def check_bloch_sweeps(seed=0):
    worst_omega = 0.0
    for phi in np.round(np.arange(1, 63) * 0.1, 10):
        res = bloch.evolve_qubit(bloch.orange_slice_family(phi))
        inv = bloch.extract_invariants(res, np.eye(2))
        worst_omega = max(worst_omega, abs(wrap_angle(inv.omega - phi)), abs(inv.eta - 1))
    alphas = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    gates_ok, azimuths, worst_loop = True, [], 0.0
    for alpha in alphas:
        res = bloch.evolve_qubit(bloch.bit_flip_family(alpha))
        sigma = holonomy.sigma_matrix(res.final, np.eye(2), res)
        spec = holonomy.nodal_free_spectrum(sigma)
        gate = gates.build_gate(spec, gates.sequential_assignment(spec, ("0", "1")))
        gates_ok &= gates.equal_up_to_global_phase(gate, gates.NAMED_GATES["Z"])[0]
        azimuths.append([bloch.equatorial_azimuth(spec.vectors[:, k]) for k in range(2)])
        omega = np.mod(bloch.solid_angle(bloch.exchange_loop(res, np.eye(2))), 4 * np.pi)
        arg_g = np.angle(holonomy.gamma(sigma, (0, 1)).value)
        worst_loop = max(worst_loop, abs(omega - 2 * np.pi), abs(wrap_angle(arg_g - omega / 2)))
    az = np.unwrap(np.array(azimuths), axis=0)
    affine = 0.0
    for k in range(2):
        slope, icpt = np.polyfit(alphas, az[:, k], 1)
        affine = max(affine, float(np.max(np.abs(az[:, k] - (slope * alphas + icpt)))), abs(slope - 1))
    metric = max(worst_omega / 1e-6, worst_loop / 1e-4, affine / 1e-6)
    detail = f"omega={worst_omega:.1e} loop={worst_loop:.1e} affine={affine:.1e} gate_fixed={gates_ok}"
    return _result(9, "orange slices, bit-flip sweep and exchange loop", metric, 1.0, detail, gates_ok)


CHECKS = (check_closed_form, check_exact_values, check_gauge_invariance, check_secular_expansion,
          check_su_n, check_cyclic_phases, check_interferometer, check_gates, check_bloch_sweeps)


def run_all(seed=0):
    """Run every library-side check; warnings raised inside are suppressed."""
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for check in CHECKS:
            out.append(check(seed))
    return out
