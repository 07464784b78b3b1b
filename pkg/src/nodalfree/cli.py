"""Scenario runner.

A single JSON config describes one scenario::

    {"kind": "qubit-sweep", "seed": 0,
     "params": {"etas": {"num": 20}, "omegas": {"num": 20}},
     "output": {"path": "sweep.csv", "format": "csv"}}

Exit codes: 0 success, 1 failed acceptance check, 2 invalid config,
3 numerical failure.
"""

import argparse
import json
import logging
import math
import os
import sys
import warnings
from dataclasses import dataclass

import numpy as np

from . import acceptance, bloch, gates, holonomy, interferometer, io, transport
from .errors import ConfigError, NodalFreeError, NumericalFailure
from .linalg import as_unitary
from .policy import DEFAULT
from .workers import ordered_map

__all__ = ["Diagnostic", "KINDS", "validate", "load_config", "run", "main"]

log = logging.getLogger("nodalfree")


@dataclass(frozen=True)
class Diagnostic:
    field: str
    message: str
    line: int = None

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.field}: {self.message}"


# ---------------------------------------------------------------------------
# schema checks

def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


class _Checker:
    def __init__(self):
        self.diags = []

    def add(self, field, message):
        self.diags.append(Diagnostic(field, message))

    def keys(self, obj, field, allowed, required=()):
        if not isinstance(obj, dict):
            self.add(field, "must be an object")
            return False
        for k in required:
            if k not in obj:
                self.add(f"{field}.{k}" if field else k, "missing required field")
        for k in obj:
            if k not in allowed:
                self.add(f"{field}.{k}" if field else k, "unknown field")
        return True

    def positive_int(self, obj, key, field, low=1, high=None):
        if key not in obj:
            return
        v = obj[key]
        if not _is_int(v):
            self.add(f"{field}.{key}", f"must be an integer, got {v!r}")
        elif v < low or (high is not None and v > high):
            bound = f"[{low}, {high}]" if high is not None else f">= {low}"
            self.add(f"{field}.{key}", f"out of range: {v} not in {bound}")

    def boolean(self, obj, key, field):
        if key in obj and not isinstance(obj[key], bool):
            self.add(f"{field}.{key}", "must be true or false")

    def matrix(self, obj, field, kind=None):
        try:
            m = io.matrix_from_literal(obj)
        except io.FormatError as exc:
            self.add(field, str(exc))
            return None
        tol = DEFAULT.hermitian if kind == "hermitian" else DEFAULT.structural
        if kind == "hermitian" and np.max(np.abs(m - m.conj().T)) >= tol:
            self.add(field, "matrix is not Hermitian")
            return None
        if kind == "unitary":
            try:
                as_unitary(m)
            except ValueError as exc:
                self.add(field, str(exc))
                return None
        return m

    def angles(self, obj, key, field, low=None, high=None):
        """A list of angles or a ``{"start", "stop", "num"}`` range."""
        if key not in obj:
            return
        v, f = obj[key], f"{field}.{key}"
        if isinstance(v, dict):
            if self.keys(v, f, {"start", "stop", "num", "endpoint"}, ("num",)):
                for k in ("start", "stop"):
                    if k in v and not _is_number(v[k]):
                        self.add(f"{f}.{k}", "must be a finite number")
                self.positive_int(v, "num", f)
                self.boolean(v, "endpoint", f)
            return
        if not isinstance(v, list) or not v or not all(_is_number(x) for x in v):
            self.add(f, "must be a non-empty list of finite numbers or a {start, stop, num} range")
            return
        bad = [x for x in v if (low is not None and x < low) or (high is not None and x >= high)]
        if bad:
            self.add(f, f"out of range: {bad[0]} not in [{low}, {high})")

    def family(self, params, field, required=True):
        if "segments" not in params:
            if required:
                self.add(f"{field}.segments", "missing required field")
            return None
        segs = params["segments"]
        if not isinstance(segs, list) or not segs:
            self.add(f"{field}.segments", "must be a non-empty list")
            return None
        dim = None
        for i, seg in enumerate(segs):
            f = f"{field}.segments[{i}]"
            if not self.keys(seg, f, {"h", "duration", "axis", "angle"}):
                continue
            if "duration" in seg:
                d = seg["duration"]
                if not _is_number(d):
                    self.add(f"{f}.duration", f"must be a finite number, got {d!r}")
                elif d <= 0:
                    self.add(f"{f}.duration", f"out of range: duration must be > 0, got {d}")
            if "h" in seg:
                if "axis" in seg or "angle" in seg:
                    self.add(f, 'give either "h" or "axis"/"angle", not both')
                m = self.matrix(seg["h"], f"{f}.h", "hermitian")
                n = None if m is None else len(m)
            elif "axis" in seg or "angle" in seg:
                n = 2
                axis = seg.get("axis")
                if not (isinstance(axis, list) and len(axis) == 3 and all(_is_number(x) for x in axis)):
                    self.add(f"{f}.axis", "must be three finite numbers")
                elif not any(axis):
                    self.add(f"{f}.axis", "out of range: axis must be nonzero")
                if not _is_number(seg.get("angle")):
                    self.add(f"{f}.angle", "must be a finite number")
            else:
                self.add(f, 'needs "h" or "axis" and "angle"')
                continue
            if n is not None:
                if dim is None:
                    dim = n
                elif n != dim:
                    self.add(f, f"dimension {n} differs from earlier segments ({dim})")
        return dim


_FAMILY = {"segments", "samples_per_segment", "basis", "parallelize"}

_PARAMS = {
    "evolve": _FAMILY | {"state"},
    "spectrum": _FAMILY | {"gammas"},
    "qubit-sweep": {"etas", "omegas"},
    "fig1": {"orange_azimuths", "flip_azimuths"},
    "gates": {"n", "labels", "factors", "origin"},
    "interfere": _FAMILY | {"unitary", "cycle", "state", "chi", "extract", "restarts"},
    "verify-all": {"only"},
}
KINDS = tuple(_PARAMS)
_FORMATS = {"evolve": ("json", "csv"), "spectrum": ("json",), "qubit-sweep": ("csv",),
            "fig1": ("json",), "gates": ("json",), "interfere": ("csv",), "verify-all": ("json",)}


def _check_family_params(c, p, dim):
    c.positive_int(p, "samples_per_segment", "params", 1, 1_000_000)
    c.boolean(p, "parallelize", "params")
    if "basis" in p:
        b = c.matrix(p["basis"], "params.basis", "unitary")
        if b is not None and dim is not None and len(b) != dim:
            c.add("params.basis", f"dimension {len(b)} does not match the family ({dim})")


def _check_state(c, p, dim):
    if "state" not in p:
        return
    v = p["state"]
    if not (isinstance(v, list) and v and all(
            isinstance(z, list) and len(z) == 2 and all(_is_number(x) for x in z) for z in v)):
        c.add("params.state", "must be a list of [re, im] pairs")
        return
    z = np.array([complex(*pair) for pair in v])
    if dim is not None and len(z) != dim:
        c.add("params.state", f"length {len(z)} does not match dimension {dim}")
    if abs(np.linalg.norm(z) - 1) > 1e-10:
        c.add("params.state", "out of range: state must be normalized within 1e-10")


def validate(config):
    """Schema diagnostics for a parsed config; empty iff ``run`` would accept it."""
    c = _Checker()
    if not c.keys(config, "", {"kind", "seed", "params", "output"}, ("kind",)):
        return c.diags
    kind = config.get("kind")
    if kind not in _PARAMS:
        if "kind" in config:
            c.add("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
        return c.diags
    if "seed" in config and not (_is_int(config["seed"]) and config["seed"] >= 0):
        c.add("seed", "out of range: seed must be a non-negative integer")
    out = config.get("output", {})
    if c.keys(out, "output", {"path", "format"}):
        if "path" in out and (not isinstance(out["path"], str) or not out["path"]):
            c.add("output.path", "must be a non-empty string")
        if "format" in out and out["format"] not in _FORMATS[kind]:
            c.add("output.format", f"{kind} supports {', '.join(_FORMATS[kind])}, got {out['format']!r}")
    p = config.get("params", {})
    if not c.keys(p, "params", _PARAMS[kind]):
        return c.diags
    if kind in ("evolve", "spectrum"):
        dim = c.family(p, "params")
        _check_family_params(c, p, dim)
        if kind == "evolve":
            _check_state(c, p, dim)
        if kind == "spectrum" and "gammas" in p:
            g = p["gammas"]
            if not (isinstance(g, list) and all(
                    isinstance(t, list) and t and all(_is_int(j) for j in t) for t in g)):
                c.add("params.gammas", "must be a list of index lists")
            elif dim is not None:
                for t in g:
                    if len(set(t)) != len(t) or min(t) < 0 or max(t) >= dim:
                        c.add("params.gammas", f"out of range: indices {t} must be distinct labels in [0, {dim})")
    elif kind == "qubit-sweep":
        for key in ("etas", "omegas"):
            c.angles(p, key, "params")
        if isinstance(p.get("etas"), list):
            c.angles(p, "etas", "params", 0.0, 1.0 + 1e-15)
    elif kind == "fig1":
        c.angles(p, "orange_azimuths", "params", 0.0, 2 * np.pi)
        c.angles(p, "flip_azimuths", "params", 0.0, 2 * np.pi)
    elif kind == "gates":
        c.positive_int(p, "n", "params", 2, 8)
        n = p.get("n", 4)
        if _is_int(n) and n & (n - 1):
            c.add("params.n", f"out of range: {n} is not a power of two")
        if "labels" in p:
            labs = p["labels"]
            if not (isinstance(labs, list) and all(isinstance(x, str) for x in labs)):
                c.add("params.labels", "must be a list of bit strings")
            else:
                try:
                    gates.Assignment(tuple(labs))
                    if _is_int(n) and len(labs) != n:
                        c.add("params.labels", f"needs {n} labels, got {len(labs)}")
                except ValueError as exc:
                    c.add("params.labels", str(exc))
        if "factors" in p:
            f = p["factors"]
            if not (isinstance(f, list) and f and all(
                    isinstance(x, list) and len(x) == 2 and all(_is_number(y) for y in x) for x in f)):
                c.add("params.factors", "must be a list of two-phase lists, one per qubit")
            elif _is_int(n) and 2 ** len(f) != n:
                c.add("params.factors", f"{len(f)} qubit factors do not span dimension {n}")
        if "labels" in p and "factors" in p:
            c.add("params", 'give either "labels" or "factors", not both')
        if "origin" in p and not _is_number(p["origin"]):
            c.add("params.origin", "must be a finite number")
    elif kind == "interfere":
        sources = [k for k in ("segments", "unitary", "cycle") if k in p]
        dim = None
        if len(sources) != 1:
            c.add("params", 'exactly one of "segments", "unitary" or "cycle" is required')
        elif sources[0] == "segments":
            dim = c.family(p, "params")
            _check_family_params(c, p, dim)
        elif sources[0] == "unitary":
            u = c.matrix(p["unitary"], "params.unitary", "unitary")
            dim = None if u is None else len(u)
        else:
            c.positive_int(p, "cycle", "params", 2, 16)
            dim = p["cycle"] if _is_int(p["cycle"]) else None
        _check_state(c, p, dim)
        c.boolean(p, "extract", "params")
        c.positive_int(p, "restarts", "params", 1, 10_000)
        if "chi" in p:
            chi = p["chi"]
            if c.keys(chi, "params.chi", {"num"}, ("num",)):
                c.positive_int(chi, "num", "params.chi", 2, 100_000)
    elif kind == "verify-all":
        only = p.get("only", [])
        if not (isinstance(only, list) and all(_is_int(x) and 1 <= x <= len(acceptance.CHECKS) for x in only)):
            c.add("params.only", f"must be a list of check numbers in [1, {len(acceptance.CHECKS)}]")
    return c.diags


def load_config(path):
    """Parse a config file; syntax errors become line-numbered diagnostics."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([Diagnostic("config", f"cannot read {path}: {exc.strerror}")]) from None
    try:
        return io.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([Diagnostic("config", f"{exc.msg} (column {exc.colno})", exc.lineno)]) from None
    except io.FormatError as exc:
        raise ConfigError([Diagnostic("config", str(exc))]) from None


# ---------------------------------------------------------------------------
# scenarios

def _grid(spec, start, stop, endpoint):
    if isinstance(spec, list):
        return np.array(spec, dtype=float)
    return np.linspace(spec.get("start", start), spec.get("stop", stop), spec["num"],
                       endpoint=spec.get("endpoint", endpoint))


def _state(p, dim):
    if "state" in p:
        return np.array([complex(*z) for z in p["state"]])
    e = np.zeros(dim, dtype=complex)
    e[0] = 1.0
    return e


def _transport(p):
    """Family, sampled (and optionally parallelized) result and basis from params."""
    family = io.family_from_json({"segments": p["segments"]})
    result = transport.evolve(family, p.get("samples_per_segment", 64))
    basis = io.matrix_from_literal(p["basis"]) if "basis" in p else np.eye(family.dim, dtype=complex)
    if p.get("parallelize", False):
        result = transport.parallelize(result, basis)
    return family, result, basis


def _run_evolve(p, seed, out):
    family, result, basis = _transport(p)
    if out["format"] == "csv":
        path = bloch.bloch_path(result, _state(p, family.dim)) if family.dim == 2 else None
        if path is None:
            raise ConfigError([Diagnostic("output.format", "Bloch path CSV needs a qubit family")])
        io.write_csv(out["path"], io.PATH_COLUMNS, io.path_rows(path))
        return 0
    io.write_json(out["path"], {
        "dim": family.dim,
        "samples": len(result.grid),
        "parallelized": result.parallelized,
        "pt_residual": transport.pt_residual(result, basis),
        "det_final": [float(np.linalg.det(result.final).real), float(np.linalg.det(result.final).imag)],
        "final": io.matrix_to_literal(result.final),
    })
    return 0


def _run_spectrum(p, seed, out):
    p = {"parallelize": True, **p}
    family, result, basis = _transport(p)
    sigma = holonomy.sigma_matrix(result.final, basis, result)
    spec = holonomy.nodal_free_spectrum(sigma)
    idx = p.get("gammas")
    if idx is None:
        idx = holonomy.cycle_index_sets(family.dim) if family.dim <= 4 else [[k] for k in range(family.dim)]
    io.write_json(out["path"], io.spectrum_to_json(spec, [tuple(t) for t in idx]))
    return 0


def _sweep_row(args):
    eta, omega = args
    result = bloch.evolve_qubit(bloch.slice_family(omega, eta))
    sigma = holonomy.sigma_matrix(result.final, np.eye(2))
    lo, hi = holonomy.nodal_free_spectrum(sigma).phases
    g = holonomy.gamma(sigma, (0, 1)).value
    return eta, omega, float(hi), float(lo), g.real, g.imag


def _run_qubit_sweep(p, seed, out):
    etas = _grid(p.get("etas", {"num": 20}), 0.0, 1.0, True)
    omegas = _grid(p.get("omegas", {"num": 20}), 0.0, 2 * np.pi, False)
    jobs = [(float(e), float(o)) for e in etas for o in omegas]
    rows = ordered_map(_sweep_row, jobs)
    io.write_csv(out["path"], ("eta", "omega", "tau_plus", "tau_minus", "gamma2_re", "gamma2_im"), rows)
    return 0


def _orange(phi):
    res = bloch.evolve_qubit(bloch.orange_slice_family(phi))
    inv = bloch.extract_invariants(res, np.eye(2))
    ph = holonomy.nodal_free_spectrum(holonomy.sigma_matrix(res.final, np.eye(2), res)).phases
    return {"phi": phi, "eta": inv.eta, "omega": inv.omega, "phases": list(ph)}


def _flip(alpha):
    res = bloch.evolve_qubit(bloch.bit_flip_family(alpha))
    sigma = holonomy.sigma_matrix(res.final, np.eye(2), res)
    spec = holonomy.nodal_free_spectrum(sigma)
    gate = gates.build_gate(spec, gates.sequential_assignment(spec, ("0", "1")))
    eq, theta = gates.equal_up_to_global_phase(gate, gates.NAMED_GATES["Z"])
    loop = bloch.exchange_loop(res, np.eye(2))
    az = [bloch.equatorial_azimuth(spec.vectors[:, k]) for k in range(2)]
    return {
        "alpha": alpha,
        "phases": list(spec.phases),
        "labels": list(gate.assignment.labels),
        "gate_equals_Z": eq,
        "global_phase": theta,
        "eigenvector_azimuths": az,
        # the caption puts phi_- (lambda = -i) at azimuth (pi - phi) / 2
        "caption_phi": float(np.mod(np.pi - 2 * az[int(np.argmin(spec.phases))], 4 * np.pi)),
        "exchange_solid_angle": float(np.mod(bloch.solid_angle(loop), 4 * np.pi)),
        "arg_gamma12": float(np.angle(holonomy.gamma(sigma, (0, 1)).value)),
    }


def _run_fig1(p, seed, out):
    phis = _grid(p.get("orange_azimuths", list(np.round(np.arange(1, 63) * 0.1, 10))), 0, 0, False)
    alphas = _grid(p.get("flip_azimuths", {"num": 12}), 0.0, 2 * np.pi, False)
    orange = ordered_map(_orange, [float(x) for x in phis])
    flips = ordered_map(_flip, [float(a) for a in alphas])
    report = {
        "orange_slices": orange,
        "max_omega_minus_phi": max(abs(holonomy.wrap_angle(r["omega"] - r["phi"])) for r in orange),
        "bit_flips": flips,
        "gate_fixed_at_Z": all(r["gate_equals_Z"] for r in flips),
    }
    if len(alphas) >= 2:
        az = np.unwrap(np.array([r["eigenvector_azimuths"] for r in flips]), axis=0)
        fits = [np.polyfit(alphas, az[:, k], 1) for k in range(2)]
        report["azimuth_fits"] = [{"slope": f[0], "intercept": f[1],
                                   "max_residual": float(np.max(np.abs(az[:, k] - np.polyval(f, alphas))))}
                                  for k, f in enumerate(fits)]
    io.write_json(out["path"], report)
    return 0


def _run_gates(p, seed, out):
    n = p.get("n", 4)
    res = transport.evolve(gates.cycle_family(n), 8)
    spec = holonomy.nodal_free_spectrum(holonomy.sigma_matrix(res.final, np.eye(n), res))
    bits = int(np.log2(n))
    if "factors" in p:
        assignment = gates.find_product_assignment(spec, p["factors"])
        if assignment is None:
            log.error("no product assignment matches factors %s", p["factors"])
            return 1
    else:
        labels = p.get("labels") or [format(k, f"0{bits}b") for k in range(n)]
        assignment = gates.sequential_assignment(spec, labels, p.get("origin", 0.0))
    gate = gates.build_gate(spec, assignment)
    rows = gates.compare_to_named(gate)
    data = io.gate_to_json(gate)
    data["cycle_gamma"] = [gates.cycle_gamma(spec.source).real, gates.cycle_gamma(spec.source).imag]
    data["comparison"] = [{"target": name, "equal": eq, "global_phase": theta} for name, eq, theta in rows]
    io.write_json(out["path"], data)
    print(f"{'target':<8} {'equal':<6} global_phase")
    for name, eq, theta in rows:
        print(f"{name:<8} {'yes' if eq else 'no':<6} {'-' if theta is None else format(theta, '.6f')}")
    return 0


def _run_interfere(p, seed, out):
    if "segments" in p:
        _, result, _ = _transport(p)
        u = result.final
    elif "unitary" in p:
        u = io.matrix_from_literal(p["unitary"])
    else:
        n = p["cycle"]
        u = transport.evolve(gates.cycle_family(n), 1).final
    state = _state(p, len(u))
    rec = interferometer.interference_fn(u, state)
    chi = np.linspace(-np.pi, np.pi, p.get("chi", {}).get("num", 181))
    io.write_csv(out["path"], io.SCAN_COLUMNS, io.scan_rows(chi, interferometer.intensity_curve(rec, chi)))
    summary = {"F": [rec.F.real, rec.F.imag], "visibility": rec.visibility, "arg_F": rec.arg_F}
    if p.get("extract", True):
        found = interferometer.extract_phases(u, seed=seed, restarts=p.get("restarts"))
        summary["extracted"] = [{"phase": ph, "witness": [[z.real, z.imag] for z in w]} for ph, w in found]
    root, _ = os.path.splitext(out["path"])
    io.write_json(root + ".json", summary)
    return 0


def _run_verify_all(p, seed, out):
    only = set(p.get("only", [])) or set(range(1, len(acceptance.CHECKS) + 1))
    results = []
    for number, check in enumerate(acceptance.CHECKS, start=1):
        if number in only:
            r = check(seed)
            print(r.line())
            results.append(r)
    passed = all(r.passed for r in results)
    io.write_json(out["path"], {"seed": seed, "passed": passed, "checks": [r.as_dict() for r in results]})
    return 0 if passed else 1


_RUNNERS = {
    "evolve": _run_evolve, "spectrum": _run_spectrum, "qubit-sweep": _run_qubit_sweep,
    "fig1": _run_fig1, "gates": _run_gates, "interfere": _run_interfere,
    "verify-all": _run_verify_all,
}


def run(config, out_dir=".", seed_override=None):
    """Validate and execute one scenario; returns the process exit code."""
    diags = validate(config)
    if diags:
        raise ConfigError(diags)
    kind = config["kind"]
    seed = config.get("seed", 0) if seed_override is None else seed_override
    out = dict(config.get("output", {}))
    out.setdefault("format", _FORMATS[kind][0])
    out.setdefault("path", f"{kind}.{out['format']}")
    out["path"] = os.path.join(out_dir, out["path"])
    log.info("running %s (seed %d) -> %s", kind, seed, out["path"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore" if kind == "verify-all" else "default")
        return _RUNNERS[kind](config.get("params", {}), seed, out)


def _report(exc):
    module = getattr(exc, "module", "nodalfree")
    log.error("[%s] %s: %s", module, type(exc).__name__, exc)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="nodalfree", description=__doc__.splitlines()[0])
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out-dir", default=".", help="directory for output files")
    parser.add_argument("--seed-override", type=int, default=None, help="replace the config seed")
    parser.add_argument("--verify", action="store_true", help="validate the config and exit")
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        config = load_config(args.config)
        if args.seed_override is not None and args.seed_override < 0:
            raise ConfigError([Diagnostic("--seed-override", "out of range: must be non-negative")])
        if args.verify:
            diags = validate(config)
            for d in diags:
                log.error("%s", d)
            if not diags:
                log.info("config is valid")
            return 2 if diags else 0
        return run(config, args.out_dir, args.seed_override)
    except ConfigError as exc:
        for d in exc.diagnostics:
            log.error("%s", d)
        return 2
    except NumericalFailure as exc:
        _report(exc)
        return 3
    except NodalFreeError as exc:
        _report(exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
