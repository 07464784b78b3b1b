"""JSON and CSV formats shared by the library and the command line.

Floats are written with 17 significant digits so that identical inputs give
byte-identical files and every value survives a round trip exactly. Files
are written to a temporary sibling and moved into place.
"""

import csv
import io
import json
import math
import os
import tempfile

import numpy as np

from .holonomy import Spectrum, gamma
from .transport import HamiltonianFamily, qubit_pulse

__all__ = [
    "FormatError", "matrix_to_literal", "matrix_from_literal", "family_from_json",
    "family_to_json", "spectrum_to_json", "spectrum_from_json", "gate_to_json",
    "gate_from_json", "path_rows", "scan_rows", "dumps", "loads", "write_json",
    "write_csv", "atomic_write",
]


class FormatError(ValueError):
    """Malformed matrix literal, family description or export file."""


def _reject_constant(name):
    raise FormatError(f"non-finite value {name} is not allowed")


def loads(text):
    """``json.loads`` that rejects NaN and infinities."""
    return json.loads(text, parse_constant=_reject_constant)


def _fmt(x):
    x = float(x)
    if not math.isfinite(x):
        raise FormatError(f"cannot serialize non-finite value {x}")
    out = format(x, ".17g")
    if out == "-0":
        out = "0"
    return out


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        # numeric rows stay on one line
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON text; floats at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write(path, dumps(obj))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")   # RFC 4180 line endings
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    atomic_write(path, _csv_text(header, rows))


# ---------------------------------------------------------------------------
# matrix literal

def matrix_to_literal(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise FormatError(f"matrix literal must be square, got shape {m.shape}")
    return {"dim": int(m.shape[0]),
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in m]}


def matrix_from_literal(obj):
    """Parse ``{"dim": N, "entries": [[[re, im], ...], ...]}`` (row-major)."""
    if isinstance(obj, str):
        obj = loads(obj)
    if not isinstance(obj, dict) or "dim" not in obj or "entries" not in obj:
        raise FormatError('matrix literal needs "dim" and "entries"')
    n = obj["dim"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise FormatError(f'"dim" must be a positive integer, got {n!r}')
    rows = obj["entries"]
    if not isinstance(rows, list) or len(rows) != n or any(
            not isinstance(r, list) or len(r) != n for r in rows):
        raise FormatError(f'"entries" must be {n} rows of {n} [re, im] pairs')
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"matrix entries are not numeric pairs: {exc}") from None
    if a.shape != (n, n, 2):
        raise FormatError(f'"entries" must be {n} rows of {n} [re, im] pairs')
    if not np.all(np.isfinite(a)):
        raise FormatError("matrix entries must be finite")
    return a[..., 0] + 1j * a[..., 1]


# ---------------------------------------------------------------------------
# Hamiltonian families

def _segment(obj, i):
    if not isinstance(obj, dict):
        raise FormatError(f"segments[{i}] must be an object")
    duration = obj.get("duration", 1.0)
    if "h" in obj:
        return matrix_from_literal(obj["h"]), duration
    if "axis" in obj and "angle" in obj:
        return qubit_pulse(obj["axis"], float(obj["angle"]), float(duration))
    raise FormatError(f'segments[{i}] needs "h" or "axis" and "angle"')


def family_from_json(obj):
    """Family from ``{"segments": [{"h": <literal>, "duration": d} | {"axis", "angle", "duration"}]}``."""
    if isinstance(obj, str):
        obj = loads(obj)
    if not isinstance(obj, dict) or not isinstance(obj.get("segments"), list):
        raise FormatError('family needs a "segments" list')
    return HamiltonianFamily([_segment(seg, i) for i, seg in enumerate(obj["segments"])])


def family_to_json(family):
    return {"segments": [{"h": matrix_to_literal(h), "duration": float(d)}
                         for h, d in family.segments]}


# ---------------------------------------------------------------------------
# spectra and gates

def spectrum_to_json(spectrum, gammas=()):
    """``{"phases", "eigenvectors", "gammas"}``; ``gammas`` lists index tuples."""
    out = {"phases": [float(p) for p in spectrum.phases],
           "eigenvectors": matrix_to_literal(spectrum.vectors),
           "gammas": []}
    source = spectrum.source
    for idx in gammas:
        g = gamma(source, idx)
        out["gammas"].append({"indices": list(g.indices), "re": g.value.real, "im": g.value.imag})
    return out


def spectrum_from_json(obj):
    if isinstance(obj, str):
        obj = loads(obj)
    try:
        phases = np.array(obj["phases"], dtype=float)
        vectors = matrix_from_literal(obj["eigenvectors"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"spectrum export missing field {exc}") from None
    gammas = {tuple(g["indices"]): complex(g["re"], g["im"]) for g in obj.get("gammas", [])}
    return Spectrum(phases, vectors, None), gammas


def gate_to_json(gate):
    return {"labels": list(gate.assignment.labels) if gate.assignment else None,
            "phases": [float(p) for p in np.angle(np.diag(gate.matrix))],
            "matrix": matrix_to_literal(gate.matrix)}


def gate_from_json(obj):
    if isinstance(obj, str):
        obj = loads(obj)
    try:
        return obj["labels"], np.array(obj["phases"], dtype=float), matrix_from_literal(obj["matrix"])
    except (KeyError, TypeError) as exc:
        raise FormatError(f"gate export missing field {exc}") from None


# ---------------------------------------------------------------------------
# tables

PATH_COLUMNS = ("s", "nx", "ny", "nz", "segment_id")
SCAN_COLUMNS = ("chi", "intensity")


def path_rows(path):
    """Rows ``(s, nx, ny, nz, segment_id)`` of a ``BlochPath``."""
    ids = path.segment_ids
    return [(float(s), float(p[0]), float(p[1]), float(p[2]), int(i))
            for s, p, i in zip(path.s, path.points, ids)]


def scan_rows(chi, intensity):
    return [(float(c), float(v)) for c, v in zip(chi, intensity)]
