"""File formats: JSON scene configs, raw voxel lattices, CSV and binary field output.

Voxel files start with one ASCII header line::

    SMALLINC-VOXELS <nx> <ny> <nz> <cell>

followed by ``nx*ny*nz`` bytes (0 or 1) in C order.
"""
import json
import math
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .scene import Ball, DipoleSource, InclusionSpec, Scene, VoxelShape, WaveContext

VOXEL_MAGIC = "SMALLINC-VOXELS"

_TOP_REQUIRED = ("wave", "alpha", "inclusions", "source", "c0")
_TOP_OPTIONAL = ("source_clearance", "energy_weight", "probes", "voxels_per_diameter", "resolution",
                 "tol", "alphas")


def write_voxels(path, mask, cell):
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 3:
        raise ValueError("voxel mask must be three-dimensional")
    header = f"{VOXEL_MAGIC} {mask.shape[0]} {mask.shape[1]} {mask.shape[2]} {float(cell)!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(mask, dtype=np.uint8).tobytes())


def read_voxels(path):
    """Return ``(mask, cell)`` from a voxel file."""
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise ConfigError(f"{path}: missing voxel header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 5 or parts[0] != VOXEL_MAGIC:
        raise ConfigError(f"{path}: header must read '{VOXEL_MAGIC} nx ny nz cell'")
    try:
        dims = tuple(int(p) for p in parts[1:4])
        cell = float(parts[4])
    except ValueError as exc:
        raise ConfigError(f"{path}: bad header values ({exc})") from None
    body = np.frombuffer(data[nl + 1:], dtype=np.uint8)
    if body.size != math.prod(dims):
        raise ConfigError(f"{path}: expected {math.prod(dims)} voxel bytes, found {body.size}")
    if np.any(body > 1):
        raise ConfigError(f"{path}: voxel bytes must be 0 or 1")
    return body.reshape(dims).astype(bool), cell


# -- config parsing ---------------------------------------------------------

def _keys(obj, where, required, optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = sorted(set(obj) - set(required) - set(optional))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")


def _number(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _vector(obj, key, where, n=3):
    v = obj[key]
    if not (isinstance(v, list) and len(v) == n
            and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        raise ConfigError(f"{where}.{key}: expected a list of {n} numbers")
    return [float(c) for c in v]


def _shape(obj, where, base):
    _keys(obj, where, (), ("ball", "voxels"))
    if len(obj) != 1:
        raise ConfigError(f"{where}: exactly one of 'ball' or 'voxels' is required")
    if "ball" in obj:
        _keys(obj["ball"], f"{where}.ball", ("radius",))
        return Ball(_number(obj["ball"], "radius", f"{where}.ball"))
    vx = obj["voxels"]
    _keys(vx, f"{where}.voxels", ("path", "cell"))
    if not isinstance(vx["path"], str):
        raise ConfigError(f"{where}.voxels.path: expected a string")
    cell = _number(vx, "cell", f"{where}.voxels")
    path = Path(vx["path"])
    if not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(f"{where}.voxels.path: no such file {path}")
    mask, header_cell = read_voxels(path)
    if not math.isclose(header_cell, cell, rel_tol=1e-12):
        raise ConfigError(f"{where}.voxels.cell: {cell!r} disagrees with file header cell {header_cell!r}")
    return VoxelShape(mask, cell)


def parse_config(text, base=".", name="<config>"):
    """Build ``(scene, options)`` from JSON text.

    ``options`` holds the optional top-level keys that are not part of the
    scene itself. Relative voxel paths are resolved against ``base``.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{name}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    _keys(raw, name, _TOP_REQUIRED, _TOP_OPTIONAL)
    base = Path(base)
    wv = raw["wave"]
    _keys(wv, "wave", ("eps0", "mu0", "omega"))
    try:
        wave = WaveContext(*(_number(wv, k, "wave") for k in ("eps0", "mu0", "omega")))
    except ValueError as exc:
        raise ConfigError(f"wave: {exc}") from None
    if not isinstance(raw["inclusions"], list) or not raw["inclusions"]:
        raise ConfigError("inclusions: expected a non-empty list")
    incs = []
    for j, item in enumerate(raw["inclusions"]):
        where = f"inclusions[{j}]"
        _keys(item, where, ("center", "shape", "eps", "mu"))
        incs.append(InclusionSpec(_vector(item, "center", where), _shape(item["shape"], f"{where}.shape", base),
                                  _number(item, "eps", where), _number(item, "mu", where)))
    src = raw["source"]
    _keys(src, "source", ("position", "moment_re", "moment_im"))
    moment = np.array(_vector(src, "moment_re", "source")) + 1j * np.array(_vector(src, "moment_im", "source"))
    source = DipoleSource(_vector(src, "position", "source"), moment)
    clearance = _number(raw, "source_clearance", name) if "source_clearance" in raw else None
    scene = Scene(wave, _number(raw, "alpha", name), incs, source, _number(raw, "c0", name), clearance)

    opts = {}
    if "energy_weight" in raw:
        if raw["energy_weight"] not in ("paper", "conventional"):
            raise ConfigError(f"energy_weight: expected 'paper' or 'conventional', got {raw['energy_weight']!r}")
        opts["energy_weight"] = raw["energy_weight"]
    if "probes" in raw:
        pts = raw["probes"]
        if not isinstance(pts, list) or not pts:
            raise ConfigError("probes: expected a non-empty list of points")
        opts["probes"] = [_vector({"p": p}, "p", f"probes[{i}]") for i, p in enumerate(pts)]
    for key in ("voxels_per_diameter", "resolution"):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 8:
                raise ConfigError(f"{key}: expected an integer >= 8, got {v!r}")
            opts[key] = v
    if "tol" in raw:
        opts["tol"] = _number(raw, "tol", name)
    if "alphas" in raw:
        if not isinstance(raw["alphas"], list):
            raise ConfigError("alphas: expected a list of numbers")
        opts["alphas"] = [_number({"a": a}, "a", f"alphas[{i}]") for i, a in enumerate(raw["alphas"])]
    return scene, opts


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, path.parent, str(path))


# -- output -----------------------------------------------------------------

def format_float(x):
    """Shortest round-trip decimal form; rejects NaN and infinities."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x}")
    return repr(x)


def write_csv(path, header, rows):
    """Write rows of numbers (or strings) with ``\\n`` line endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else format_float(c) for c in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path):
    """Points from a CSV with columns ``x,y,z``; a non-numeric first row is a header."""
    rows = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    out = []
    for i, ln in enumerate(rows):
        cells = [c.strip() for c in ln.split(",")]
        try:
            vals = [float(c) for c in cells]
        except ValueError:
            if i == 0:
                continue
            raise ConfigError(f"{path}:{i + 1}: non-numeric point row") from None
        if len(vals) != 3:
            raise ConfigError(f"{path}:{i + 1}: expected 3 coordinates, got {len(vals)}")
        out.append(vals)
    if not out:
        raise ConfigError(f"{path}: no points")
    return np.array(out)


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def write_lattice(path, dims, index, values):
    """Dense ``(nx, ny, nz, 3)`` little-endian complex128 lattice, zero off the shape."""
    grid = np.zeros(tuple(dims) + (3,), dtype="<c16")
    grid[tuple(np.asarray(index).T)] = values
    Path(path).write_bytes(grid.tobytes())


def read_lattice(path, dims):
    return np.frombuffer(Path(path).read_bytes(), dtype="<c16").reshape(tuple(dims) + (3,))
