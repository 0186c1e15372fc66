"""Command-line runner.

::

    smallinc <fields|ptensor|oracle|convergence|energy> --config <path> [--out <dir>] [--seed <n>]
    smallinc replay <run.json> [--out <dir>]

Every run writes its artifacts plus ``run.json``, which records the manifest
and the resolved defaults; ``replay`` re-executes a run from it. Exit status
is 0 on success, 2 for configuration or validation errors and 3 when an
iterative solver fails (a ``residual_history.csv`` is written).
"""
import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import CONVENTIONS, asymptotic_E, asymptotic_H, default_tensors
from .energy import ProbeRegion, energy_scaling_fit
from .errors import ConfigError, DomainError, SolverError
from .fileio import load_config, read_points, write_csv, write_json, write_lattice
from .oracle import convergence_study, solve_interior, worker_count
from .polarization import ContrastProblem, ptensor_ball, ptensor_numeric
from .scene import Ball, probe_points, validate_scene
from .sources import background_E, background_H

SUBCOMMANDS = ("fields", "ptensor", "oracle", "convergence", "energy")
DEFAULT_ALPHAS = (0.2, 0.1, 0.05)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3


@dataclass
class RunManifest:
    """Everything needed to reproduce a run."""

    config: str
    subcommand: str
    out: str = "."
    seed: int = 0
    version: str = __version__
    options: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text())
        known = {k: data[k] for k in ("config", "subcommand", "out", "seed", "version", "options") if k in data}
        return cls(**known)


def _components(prefix, E, H):
    names, cols = [], []
    for fname, F in (("E", E), ("H", H)):
        for i, ax in enumerate("xyz"):
            names += [f"{prefix}_{fname}{ax}_re", f"{prefix}_{fname}{ax}_im"]
            cols += [F[:, i].real, F[:, i].imag]
    return names, cols


def _validated(scene, alphas=None):
    for a in ([scene.alpha] if alphas is None else alphas):
        report = validate_scene(scene.with_alpha(a))
        if not report.ok:
            raise ConfigError(f"invalid scene at alpha={a}: {report}")


def _probes(scene, opts, manifest):
    if manifest.options.get("points"):
        return read_points(manifest.options["points"]), "points-file"
    if "probes" in opts:
        return np.array(opts["probes"]), "config"
    return probe_points(scene, seed=manifest.seed), "sphere"


def _alphas(manifest, opts):
    a = manifest.options.get("alphas") or opts.get("alphas") or list(DEFAULT_ALPHAS)
    return [float(x) for x in a]


def cmd_fields(scene, opts, manifest, out):
    _validated(scene)
    pts, origin = _probes(scene, opts, manifest)
    convention = manifest.options.get("convention", "consistent")
    tensors = default_tensors(scene, opts.get("resolution", 16))
    names, cols = _components("background", background_E(scene, pts), background_H(scene, pts))
    n2, c2 = _components("asymptotic", asymptotic_E(scene, pts, tensors),
                         asymptotic_H(scene, pts, tensors, convention))
    write_csv(out / "fields.csv", ["x", "y", "z"] + names + n2,
              np.column_stack([pts] + cols + c2))
    return {"probes": origin, "points": len(pts), "convention": convention,
            "resolution": opts.get("resolution", 16)}


def cmd_ptensor(scene, opts, manifest, out):
    _validated(scene)
    res = opts.get("resolution", 32)
    numeric = bool(manifest.options.get("numeric", False))
    w = scene.wave
    result = []
    for j, inc in enumerate(scene.inclusions):
        entry = {"inclusion": j}
        for label, q0, qj in (("eps", w.eps0, inc.eps), ("mu", w.mu0, inc.mu)):
            if isinstance(inc.shape, Ball) and not numeric:
                M = ptensor_ball(q0, qj, inc.shape.volume)
                method, diag = "closed-form", {}
            else:
                M = ptensor_numeric(ContrastProblem(inc.shape, q0, qj, res))
                method = "numeric"
                diag = {"iterations": M.diagnostics["iterations"],
                        "residuals": M.diagnostics["residuals"]}
            entry[label] = {"entries": np.asarray(M.entries).tolist(), "contrast": M.contrast,
                            "shape_volume": M.shape_volume, "method": method, "diagnostics": diag}
        result.append(entry)
    write_json(out / "ptensor.json", result)
    return {"resolution": res, "numeric": numeric}


def cmd_oracle(scene, opts, manifest, out):
    _validated(scene)
    vpd = opts.get("voxels_per_diameter", 12)
    tol = opts.get("tol", 1e-8)
    sol = solve_interior(scene, vpd, tol)
    meta = {"iterations": sol.iterations, "final_residual": sol.final_residual, "tol": tol,
            "voxels_per_diameter": vpd, "dtype": "<c16", "layout": "C-order (nx, ny, nz, 3), zero off shape",
            "inclusions": []}
    for g, e in zip(sol.grids, sol.interior_E):
        name = f"interior_{g.inclusion}.bin"
        write_lattice(out / name, g.dims, g.index, e)
        inc = scene.inclusions[g.inclusion]
        lat = inc.shape.lattice(vpd)
        origin = inc.center + scene.alpha * lat.centers[0] - g.cell * lat.index[0]
        meta["inclusions"].append({"file": name, "dims": list(g.dims), "cell": g.cell,
                                   "origin": origin.tolist(), "voxels": len(g)})
    write_json(out / "oracle.json", meta)
    return {"voxels_per_diameter": vpd, "tol": tol}


def cmd_convergence(scene, opts, manifest, out):
    alphas = _alphas(manifest, opts)
    _validated(scene, alphas)
    vpd = opts.get("voxels_per_diameter", 12)
    tol = opts.get("tol", 1e-8)
    probes = None
    if manifest.options.get("points") or "probes" in opts:
        probes, _ = _probes(scene, opts, manifest)
    else:
        probes = probe_points(scene.with_alpha(max(alphas)), seed=manifest.seed)
    rep = convergence_study(scene, alphas, vpd, probes, tol)
    n = len(rep.probes)
    header = (["alpha", "leading_max", "remainder_max"] + [f"leading_p{i}" for i in range(n)]
              + [f"remainder_p{i}" for i in range(n)] + ["leading_slope", "remainder_slope"])
    rows = [[a, lead.max(), rem.max(), *lead, *rem, rep.leading_fit.slope, rep.remainder_fit.slope]
            for a, lead, rem, _ in rep.rows()]
    write_csv(out / "convergence.csv", header, rows)
    write_csv(out / "probes.csv", ["x", "y", "z"], rep.probes)
    return {"alphas": alphas, "voxels_per_diameter": vpd, "tol": tol}


def parse_region(tokens):
    """``["c=x,y,z", "r=R"]`` (or one string with both) to a :class:`ProbeRegion`."""
    if isinstance(tokens, str):
        tokens = tokens.split()
    parts = {}
    for tok in tokens:
        key, sep, val = tok.partition("=")
        if not sep or key not in ("c", "r", "order"):
            raise ConfigError(f"--region: cannot parse {tok!r}; expected c=x,y,z r=R")
        parts[key] = val
    try:
        center = [float(v) for v in parts["c"].split(",")]
        radius = float(parts["r"])
        order = int(parts.get("order", 8))
    except (KeyError, ValueError):
        raise ConfigError("--region: expected c=x,y,z r=R") from None
    if len(center) != 3:
        raise ConfigError("--region: centre needs three coordinates")
    try:
        return ProbeRegion(tuple(center), radius, order)
    except ValueError as exc:
        raise ConfigError(f"--region: {exc}") from None


def cmd_energy(scene, opts, manifest, out):
    alphas = _alphas(manifest, opts)
    _validated(scene, alphas)
    o = manifest.options
    if not o.get("region"):
        raise ConfigError("energy: --region c=x,y,z r=R is required")
    region = parse_region(o["region"])
    t = float(o.get("t", 0.0))
    weight = o.get("weight") or opts.get("energy_weight", "paper")
    vpd = opts.get("voxels_per_diameter", 12)
    tol = opts.get("tol", 1e-8)
    fit = energy_scaling_fit(scene, alphas, region, t, weight, vpd, tol=tol)
    nan_to_none = lambda v: None if not np.isfinite(v) else v
    write_json(out / "energy.json", {
        "slope": nan_to_none(fit.slope), "intercept": nan_to_none(fit.intercept),
        "residual": nan_to_none(fit.residual), "constant": fit.constant, "degenerate": fit.degenerate,
        "weight": weight, "t": t, "region": {"center": list(region.center), "radius": region.radius,
                                             "order": region.order}})
    write_csv(out / "energy.csv", ["alpha", "energy", "background", "difference"], fit.rows())
    return {"alphas": alphas, "weight": weight, "t": t, "voxels_per_diameter": vpd, "tol": tol}


_COMMANDS = {"fields": cmd_fields, "ptensor": cmd_ptensor, "oracle": cmd_oracle,
             "convergence": cmd_convergence, "energy": cmd_energy}


def run(manifest, stderr=None):
    """Execute a manifest; returns the exit status."""
    stderr = stderr or sys.stderr
    out = Path(manifest.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if manifest.subcommand not in _COMMANDS:
            raise ConfigError(f"unknown subcommand {manifest.subcommand!r}")
        conv = manifest.options.get("convention", "consistent")
        if conv not in CONVENTIONS:
            raise ConfigError(f"--convention must be one of {CONVENTIONS}")
        scene, opts = load_config(manifest.config)
        resolved = _COMMANDS[manifest.subcommand](scene, opts, manifest, out)
    except (ConfigError, DomainError, ValueError) as exc:
        print(f"smallinc: error: {exc}", file=stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"smallinc: solver failure: {exc}", file=stderr)
        write_csv(out / "residual_history.csv", ["step", "relative_residual"],
                  [[float(i), r] for i, r in enumerate(exc.residual_history)])
        return EXIT_SOLVER
    record = asdict(manifest)
    record["resolved"] = dict(resolved, source_clearance=scene.clearance,
                              workers=worker_count())
    write_json(out / "run.json", record)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="smallinc", description="Small-inclusion field expansions and oracle.")
    p.add_argument("--version", action="version", version=f"smallinc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--out", default=".")
        s.add_argument("--seed", type=int, default=0)
        if name in ("fields", "convergence"):
            s.add_argument("--points", help="CSV of x,y,z evaluation points")
        if name == "fields":
            s.add_argument("--convention", choices=CONVENTIONS, default="consistent")
        if name == "ptensor":
            s.add_argument("--numeric", action="store_true", help="solve numerically even for balls")
        if name in ("convergence", "energy"):
            s.add_argument("--alphas", help="comma-separated scales, e.g. 0.2,0.1,0.05")
        if name == "energy":
            s.add_argument("--region", nargs="+", metavar="SPEC", help="c=x,y,z r=R")
            s.add_argument("--t", type=float, default=0.0)
            s.add_argument("--weight", choices=("paper", "conventional"))
    r = sub.add_parser("replay")
    r.add_argument("manifest")
    r.add_argument("--out")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "replay":
        try:
            manifest = RunManifest.load(args.manifest)
        except (OSError, ValueError, TypeError) as exc:
            print(f"smallinc: error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        if args.out:
            manifest.out = args.out
        return run(manifest)
    opts = {}
    if getattr(args, "points", None):
        opts["points"] = str(Path(args.points).resolve())
    if getattr(args, "convention", None):
        opts["convention"] = args.convention
    if getattr(args, "numeric", False):
        opts["numeric"] = True
    if getattr(args, "alphas", None):
        try:
            opts["alphas"] = [float(a) for a in args.alphas.split(",")]
        except ValueError:
            print(f"smallinc: error: --alphas: cannot parse {args.alphas!r}", file=sys.stderr)
            return EXIT_CONFIG
    if args.command == "energy":
        opts["region"] = " ".join(args.region) if args.region else None
        opts["t"] = args.t
        if args.weight:
            opts["weight"] = args.weight
    manifest = RunManifest(str(Path(args.config).resolve()), args.command, args.out, args.seed, __version__, opts)
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
