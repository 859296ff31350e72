"""``mixsky`` command-line interface.

Every subcommand reads an optional JSON config (``--config``), applies the
flags given on the command line on top of it, writes its outputs to
``--out`` (or ``$MIXSKY_OUT``, else the working directory) and finishes with
a ``<command>.manifest.json`` listing each output with its SHA-256 digest.

Exit codes: 0 success, 1 usage or IO error, 2 validation failure,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bipartite import build_two_photon, nested_report, subspace_fields
from .errors import FormatError, MixskyError, NumericalFailure, ValidationFailure
from .io import (
    dumps_json,
    manifest_outputs,
    read_json,
    read_qdm,
    read_stokes_csv,
    write_json,
    write_qdm,
    write_stokes_csv,
    write_table,
)
from .mesh import complete_isometry, mesh_decompose, mesh_unitary, phase_scan, sign_changes, to_mesh_bins
from .multiphoton import VarrhoSpec, multiphoton_nested_report
from .noise import CHANNEL_PARAMS, breakdown_threshold, sweep
from .qstate import LabeledState, ModeGrid, photon_factors, validate_density
from .render import render_texture
from .synth import SkyrmionSpec, analytic_modes_q1, build_single_photon_skyrmion
from .texture import classify_texture, skyrmion_number, stokes_from_density

OUT_ENV = "MIXSKY_OUT"
# "eq8" is kept as a synonym for existing scripts and configs
ANALYTIC_MODES = ("analytic", "eq8")
U64_MAX = 2**64 - 1


class UsageError(MixskyError):
    exit_code = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# shared helpers
# ---------------------------------------------------------------------------

def _resolve_config(args, defaults: dict, flag_keys: dict) -> dict:
    cfg = dict(defaults)
    if args.config:
        loaded = read_json(args.config)
        if not isinstance(loaded, dict):
            raise FormatError("config must be a JSON object")
        cfg.update(loaded)
    for attr, key in flag_keys.items():
        v = getattr(args, attr, None)
        if v is not None:
            cfg[key] = v
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    try:
        seed = int(seed)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"seed must be an integer, got {seed!r}") from exc
    if not 0 <= seed <= U64_MAX:
        raise UsageError("seed must be an unsigned 64-bit integer")
    cfg["seed"] = seed
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise FormatError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write_manifest(out: Path, command: str, cfg: dict, outputs: list) -> Path:
    manifest = {
        "version": __version__,
        "command": command,
        "config": cfg,
        "seed": cfg["seed"],
        "outputs": manifest_outputs(outputs, out),
    }
    return write_json(out / f"{command}.manifest.json", manifest)


def _modes(cfg: dict, party: str = "A"):
    """Mode pair from the config: ``"analytic"`` (closed form) or a factored ``.qdm`` file."""
    src = cfg.get("modes", "analytic")
    if src in ANALYTIC_MODES:
        return analytic_modes_q1(ModeGrid(int(cfg["m"]), float(cfg.get("x_max", 1.0))), int(cfg.get("sign", -1)), party)
    path = Path(src)
    if not path.exists():
        raise FormatError(f"mode file {path} not found")
    rho = read_qdm(path)
    if rho.storage != "factored" or len(rho.factors) != 2:
        raise FormatError("a mode file must hold a factored single-photon state")
    M = rho.factors[1].dim
    return tuple(LabeledState(photon_factors(party, M), v / np.linalg.norm(v)) for v in rho.vectors)


def _summary(rep) -> dict:
    return {k: getattr(rep, k) for k in ("Q_raw", "Q_rounded", "integer_residual", "method", "texture_class")}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = _resolve_config(
        args,
        {"l": 1, "m": 64, "x_max": 1.0, "phi0": 0.0, "method": "spectral", "charge_method": "lattice"},
        {"l": "l", "m": "m", "d": "d", "phi0": "phi0", "method": "method", "charge_method": "charge_method"},
    )
    out = _out_dir(args)
    spec = SkyrmionSpec.from_dict(cfg)
    rho = build_single_photon_skyrmion(spec, method=cfg["method"])
    field = stokes_from_density(rho, spec.grid)
    rep = classify_texture(field, cfg["charge_method"])
    report = rep.to_dict()
    report["skyrmion"] = bool(rep.Q_rounded != 0 and rep.integer_residual < 0.05)
    report["validation"] = asdict(validate_density(rho))
    qdm = write_qdm(out / "synth.qdm", rho)
    outputs = [
        qdm,
        qdm.with_name(qdm.name + ".bin"),
        write_stokes_csv(out / "synth.stokes.csv", field),
        write_json(out / "synth_report.json", report),
    ]
    _write_manifest(out, "synth", cfg, outputs)
    print(dumps_json(_summary(rep)), end="")
    return 0


def cmd_nested(args) -> int:
    cfg = _resolve_config(
        args,
        {"state": "conjugate", "m": 80, "sign": -1, "phi": 0.0, "modes": "analytic", "method": "lattice", "textures": True},
        {"state": "state", "m": "m", "phi": "phi", "modes": "modes", "charge_method": "method"},
    )
    out = _out_dir(args)
    if cfg["state"] not in ("conjugate", "bell"):
        raise UsageError("state must be 'conjugate' or 'bell'")
    modes = _modes(cfg)
    psi = build_two_photon(modes, conjugate_B=cfg["state"] == "conjugate", phi=float(cfg["phi"]))
    report = nested_report(psi, method=cfg["method"])
    outputs = [write_json(out / "nested_report.json", report.to_dict())]
    if cfg.get("textures", True):
        for name, f in subspace_fields(psi).items():
            outputs.append(write_stokes_csv(out / f"nested_{name}.stokes.csv", f))
    _write_manifest(out, "nested", cfg, outputs)
    print(dumps_json({n: r.Q_rounded for n, r in report.items() if r is not None} | {"nested": report.nested}), end="")
    return 0


def cmd_sweep(args) -> int:
    cfg = _resolve_config(
        args,
        {"channel": "dephasing", "grid": {}, "observable": "nonlocal_Q", "sign": -1},
        {"channel": "channel", "observable": "observable", "charge_method": "method"},
    )
    channel = cfg["channel"]
    if channel not in CHANNEL_PARAMS:
        raise UsageError(f"channel must be one of {sorted(CHANNEL_PARAMS)}")
    # finite differences resolve the dephasing breakdown, the lattice index the rest
    cfg.setdefault("method", "integral" if channel == "dephasing" else "lattice")
    grid = cfg["grid"]
    if not isinstance(grid, dict):
        raise UsageError("grid must map parameter names to lists")
    out = _out_dir(args)
    extra = {k: cfg[k] for k in ("mode", "shots", "mu") if k in cfg}
    rows = sweep(
        channel,
        grid,
        observable=cfg["observable"],
        seed=cfg["seed"],
        method=cfg["method"],
        threads=args.threads,
        sign=int(cfg["sign"]),
        **extra,
    )
    params = list(rows[0].keys())[: list(rows[0].keys()).index("seed")] if rows else list(CHANNEL_PARAMS[channel])
    columns = params + ["Q_raw", "Q_rounded", "class", "residual", "seed", "error"]
    outputs = [write_table(out / f"sweep_{channel}.csv", rows, columns)]
    if channel == "dephasing" and rows:
        by_m = {}
        for m in sorted({r["m"] for r in rows}):
            by_m[str(m)] = breakdown_threshold([r for r in rows if r["m"] == m])
        outputs.append(write_json(out / "sweep_dephasing_thresholds.json", {"sigma_star": by_m}))
    _write_manifest(out, "sweep", cfg, outputs)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} points, {failed} failed")
    if rows and failed == len(rows):
        print(rows[0]["error"], file=sys.stderr)
        return NumericalFailure.exit_code
    return 0


def cmd_multiphoton(args) -> int:
    cfg = _resolve_config(
        args,
        {"n": 5, "m": 80, "varrho": {"kind": "uniform"}, "modes": "analytic", "sign": -1, "method": "integral"},
        {"n": "n", "m": "m", "modes": "modes", "charge_method": "method"},
    )
    varrho = dict(cfg["varrho"]) if isinstance(cfg["varrho"], dict) else {"kind": cfg["varrho"]}
    if args.varrho is not None:
        varrho["kind"] = args.varrho
    if args.edge_bins is not None:
        varrho["edge_bins"] = args.edge_bins
    modes = _modes(cfg)
    M = modes[0].dims[1]
    vspec = VarrhoSpec(varrho["kind"], M, varrho.get("edge_bins"))
    if vspec.edge_bins is not None:
        varrho["edge_bins"] = vspec.edge_bins  # record the value actually used
    cfg["varrho"] = varrho
    out = _out_dir(args)
    report = multiphoton_nested_report(int(cfg["n"]), vspec, modes, method=cfg["method"])
    outputs = [write_json(out / "multiphoton_report.json", report.to_dict() | {"n": int(cfg["n"]), "varrho": varrho})]
    _write_manifest(out, "multiphoton", cfg, outputs)
    print(dumps_json({n: r.Q_raw for n, r in report.items() if r is not None}), end="")
    return 0


def cmd_phase_scan(args) -> int:
    cfg = _resolve_config(
        args,
        {"m": 11, "points": 256, "subspace": "joint", "modes": "analytic", "sign": -1, "method": "lattice"},
        {"m": "m", "points": "points", "subspace": "subspace", "modes": "modes", "charge_method": "method"},
    )
    out = _out_dir(args)
    modes = _modes(cfg)
    phis = 2 * math.pi * np.arange(int(cfg["points"])) / int(cfg["points"])
    rows = phase_scan(modes, phis, subspace=cfg["subspace"], method=cfg["method"], threads=args.threads)
    outputs = [write_table(out / "phase_scan.csv", rows, ["phi", "Q_raw", "Q_rounded", "class"])]
    _write_manifest(out, "phase-scan", cfg, outputs)
    print(f"{len(rows)} points, {sign_changes(rows)} sign changes")
    return 0


def cmd_mesh(args) -> int:
    cfg = _resolve_config(args, {"m": 11, "modes": "analytic", "sign": -1}, {"m": "m", "modes": "modes"})
    out = _out_dir(args)
    modes = _modes(cfg)
    M = modes[0].dims[1]
    U = complete_isometry([to_mesh_bins(u.amplitudes, M) for u in modes])
    program = mesh_decompose(U)
    err = float(np.max(np.abs(mesh_unitary(program) - U)))
    outputs = [
        write_json(out / "mesh_program.json", program.to_dict()),
        write_json(out / "mesh_summary.json", {"dim": program.dim, "elements": len(program.elements), "depth": program.depth, "roundtrip_max_error": err}),
    ]
    _write_manifest(out, "mesh", cfg, outputs)
    print(f"{len(program.elements)} elements, depth {program.depth}, round-trip error {err:.3g}")
    return 0


def cmd_render(args) -> int:
    cfg = _resolve_config(args, {"style": "default", "format": "svg"}, {"input": "input", "style": "style", "format": "format"})
    if "input" not in cfg:
        raise UsageError("render needs an input texture file")
    if cfg["format"] not in ("svg", "png"):
        raise UsageError("format must be svg or png")
    out = _out_dir(args)
    field = read_stokes_csv(cfg["input"])
    q = skyrmion_number(field).Q_raw if field.undefined_fraction < 0.01 else None
    stem = Path(cfg["input"]).name.split(".")[0]
    img = render_texture(field, out / f"{stem}.{cfg['format']}", q_raw=q, style=cfg["style"])
    _write_manifest(out, "render", cfg, [img])
    print(img)
    return 0


def cmd_validate(args) -> int:
    cfg = _resolve_config(args, {"tol": 1e-10}, {"input": "input", "tol": "tol"})
    if "input" not in cfg:
        raise UsageError("validate needs a .qdm file")
    out = _out_dir(args)
    rep = validate_density(read_qdm(cfg["input"]), tol=float(cfg["tol"]))
    result = dict(asdict(rep), passed=rep.passed)
    outputs = [write_json(out / "validate_report.json", result)]
    _write_manifest(out, "validate", cfg, outputs)
    print(dumps_json(result), end="")
    return 0 if rep.passed else ValidationFailure.exit_code


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its entries")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps and scans")
    common.add_argument("--charge-method", choices=("lattice", "integral"), help="charge estimator")

    parser = _Parser(prog="mixsky", description="Skyrmion textures in density matrices.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="single-photon skyrmion density matrix")
    p.add_argument("--l", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--phi0", type=float)
    p.add_argument("--method", choices=("spectral", "analytic_q1"))
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("nested", parents=[common], help="nested topology of a two-photon state")
    p.add_argument("--state", choices=("conjugate", "bell"), help="conjugate: second photon carries u*; bell: plain pair")
    p.add_argument("--m", type=int)
    p.add_argument("--phi", type=float)
    p.add_argument("--modes", help="'analytic' or a factored .qdm file")
    p.set_defaults(func=cmd_nested)

    p = sub.add_parser("sweep", parents=[common], help="noise robustness sweep")
    p.add_argument("--channel", choices=sorted(CHANNEL_PARAMS))
    p.add_argument("--observable", choices=("local_Q", "nonlocal_Q", "class"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("multiphoton", parents=[common], help="pair reduction of the N-photon mixture")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--varrho", choices=("uniform", "edge_concentrated"))
    p.add_argument("--edge-bins", type=int)
    p.add_argument("--modes")
    p.set_defaults(func=cmd_multiphoton)

    p = sub.add_parser("phase-scan", parents=[common], help="charge versus relative phase")
    p.add_argument("--m", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--subspace", choices=("joint", "local_A", "local_B", "nonlocal"))
    p.add_argument("--modes")
    p.set_defaults(func=cmd_phase_scan)

    p = sub.add_parser("mesh", parents=[common], help="interferometer mesh for the mode pair")
    p.add_argument("--m", type=int)
    p.add_argument("--modes")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("render", parents=[common], help="draw a .stokes.csv texture")
    p.add_argument("input", nargs="?")
    p.add_argument("--style", choices=("default", "paper"))
    p.add_argument("--format", choices=("svg", "png"))
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("validate", parents=[common], help="check a .qdm density matrix")
    p.add_argument("input", nargs="?")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except MixskyError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (MemoryError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
