"""Command-line front end: config in, deterministic CSV out.

Every subcommand reads one JSON config, materializes defaults, echoes the
config next to its outputs and writes CSV files whose numeric cells use
the shortest round-trip decimal representation, so a repeated run is
byte-identical.

Exit codes: 0 success, 2 config/schema error, 3 numerical-contract
violation, 4 internal fault.
"""

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, tolerances
from .cranknicolson import compare_fields, crank_nicolson_propagate, staggered_grid
from .clocks import sweep_barrier_width, compute_clock
from .errors import INTERNAL_ERRORS, SchemaError, TunnelSplitError
from .packets import build_mode_table, diagnostics_series, fields_at, synthesize
from .parallel import WorkerMap
from .runconfig import RunConfig, parse_config
from .splitting import build_decomposition
from .stationary import EnergyMode, solve_full
from .tolerances import ORACLE_L2

SUBCOMMANDS = (
    "stationary",
    "decompose",
    "evolve",
    "diagnostics",
    "oracle-check",
    "clock",
    "hartman-sweep",
)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def write_csv(path: Path, header: list[str], rows, footer_comments=()):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    for comment in footer_comments:
        lines.append(f"# {comment}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _tolerance_echo() -> dict:
    return {
        name: getattr(tolerances, name)
        for name in dir(tolerances)
        if name.isupper()
    }


def _write_run_files(out: Path, cfg: RunConfig, subcommand: str, started: float,
                     extra: dict | None = None):
    out.mkdir(parents=True, exist_ok=True)
    echo = json.dumps(cfg.echo(), indent=2, sort_keys=True)
    (out / "config_echo.json").write_text(echo + "\n", encoding="utf-8")
    meta = {
        "subcommand": subcommand,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "python_version": sys.version.split()[0],
        "workers": cfg.workers,
        "wall_time_s": time.monotonic() - started,
        "tolerances": _tolerance_echo(),
    }
    if extra:
        meta.update(extra)
    (out / "run_metadata.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _energies(cfg: RunConfig) -> np.ndarray:
    if cfg.energy_grid is not None:
        return cfg.energy_grid
    if cfg.mode is not None:
        return np.array([cfg.mode.E])
    raise SchemaError("energy", "this subcommand needs an energy section")


def _need_packet(cfg: RunConfig):
    if cfg.packet is None:
        raise SchemaError("packet", "this subcommand needs a packet section")


def _table_grid(cfg: RunConfig) -> np.ndarray | None:
    if cfg.x_grid_spec is None:
        return None
    g = cfg.x_grid_spec
    n = int(round((g["x_max"] - g["x_min"]) / g["dx"])) + 1
    return g["x_min"] + g["dx"] * np.arange(n)


def cmd_stationary(cfg: RunConfig, out: Path) -> dict:
    rows = []
    for E in _energies(cfg):
        mode = EnergyMode(float(E))
        amps = solve_full(cfg.potential, mode)
        rows.append(
            (mode.E, mode.k, amps.T, amps.R,
             amps.A_T.real, amps.A_T.imag, amps.A_R.real, amps.A_R.imag,
             amps.T + amps.R - 1.0)
        )
    write_csv(
        out / "stationary.csv",
        ["E", "k", "T", "R", "re_A_T", "im_A_T", "re_A_R", "im_A_R", "unitarity_residual"],
        rows,
    )
    worst = max(abs(r[-1]) for r in rows)
    return {"max_unitarity_residual": worst, "rows": len(rows)}


def cmd_decompose(cfg: RunConfig, out: Path) -> dict:
    if cfg.mode is None:
        raise SchemaError("energy.E", "decompose needs one energy")
    spec = cfg.potential
    pad = float(cfg.decompose_grid["pad"])
    n = int(cfg.decompose_grid["n"])
    half = spec.width / 2.0 + pad
    x = spec.x_c + np.linspace(-half, half, n)
    dec = build_decomposition(spec, cfg.mode, x)
    rows = zip(
        x,
        dec.full.real, dec.full.imag,
        dec.tr_solution.real, dec.tr_solution.imag,
        dec.ref_solution.real, dec.ref_solution.imag,
        dec.tr_component.real, dec.tr_component.imag,
        dec.ref_component.real, dec.ref_component.imag,
    )
    report = {
        "identity_residual": dec.identity_residual,
        "parity_residual": dec.parity_residual,
        "midpoint_odd": dec.midpoint_residuals[0],
        "midpoint_even": dec.midpoint_residuals[1],
        "T": dec.amplitudes.T,
        "R": dec.amplitudes.R,
        "root_sign": dec.split.root_sign,
    }
    write_csv(
        out / "decompose.csv",
        ["x",
         "re_full", "im_full",
         "re_tr_solution", "im_tr_solution",
         "re_ref_solution", "im_ref_solution",
         "re_tr", "im_tr",
         "re_ref", "im_ref"],
        rows,
        footer_comments=[f"{key} = {_fmt(val)}" for key, val in report.items()],
    )
    return {"invariants": report}


def cmd_evolve(cfg: RunConfig, out: Path, pmap) -> dict:
    _need_packet(cfg)
    table = build_mode_table(
        cfg.potential, cfg.packet, _table_grid(cfg),
        n_k=cfg.n_k, span_sigmas=cfg.k_span_sigmas,
        map_fn=pmap, n_chunks=4 * cfg.workers,
    )
    stride = max(1, cfg.evolve_x_stride)
    rows = []
    worst_identity = 0.0
    for t in cfg.snapshot_times:
        fld = fields_at(table, float(t))
        worst_identity = max(worst_identity, fld.identity_residual)
        xs = fld.x[::stride]
        for j, xv in enumerate(xs):
            i = j * stride
            rows.append(
                (t, xv,
                 fld.full[i].real, fld.full[i].imag,
                 fld.tr[i].real, fld.tr[i].imag,
                 fld.ref[i].real, fld.ref[i].imag)
            )
    write_csv(
        out / "evolve.csv",
        ["t", "x", "re_full", "im_full", "re_tr", "im_tr", "re_ref", "im_ref"],
        rows,
    )
    return {"max_identity_residual": worst_identity, "snapshots": len(cfg.snapshot_times)}


def cmd_diagnostics(cfg: RunConfig, out: Path, pmap) -> dict:
    _need_packet(cfg)
    table = build_mode_table(
        cfg.potential, cfg.packet, _table_grid(cfg),
        n_k=cfg.n_k, span_sigmas=cfg.k_span_sigmas,
        map_fn=pmap, n_chunks=4 * cfg.workers,
    )
    series = diagnostics_series(table, cfg.times, fd_dt=cfg.fd_dt)
    rows = zip(
        series.t, series.T, series.R,
        series.overlap.real, series.overlap.imag,
        series.xbar_full, series.pbar_full, series.varx_full,
        series.xbar_tr, series.xbar_ref,
        series.continuity,
        series.pbar_tr, series.pbar_ref,
        series.varx_tr, series.varx_ref,
        series.ref_cut_flux, series.identity_residual,
    )
    write_csv(
        out / "diagnostics.csv",
        ["t", "T", "R", "Re_overlap", "Im_overlap",
         "xbar_full", "pbar_full", "varx_full",
         "xbar_tr", "xbar_ref", "continuity_residual",
         "pbar_tr", "pbar_ref", "varx_tr", "varx_ref",
         "ref_cut_flux", "identity_residual"],
        rows,
    )
    return {
        "norm_drift": float(np.max(np.abs(series.T - series.T[0]))),
        "max_re_overlap": float(np.max(np.abs(series.overlap.real))),
        "max_identity_residual": float(np.max(series.identity_residual)),
        "moments_note": (
            "sub-wave momentum means use the analytic one-sided derivative "
            "at the midpoint cut; the cut cell contributes O(dx)"
        ),
    }


def cmd_oracle_check(cfg: RunConfig, out: Path) -> dict:
    _need_packet(cfg)
    spec, packet = cfg.potential, cfg.packet
    oracle = cfg.oracle
    checkpoints = sorted(float(t) for t in oracle["checkpoints"])
    t_max = checkpoints[-1]
    grid = staggered_grid(
        spec,
        packet.x0 - float(oracle["margin_left"]),
        spec.b + float(oracle["margin_right"]),
        float(oracle["dx"]),
        float(oracle["dt"]),
        t_max,
    )
    x = grid.x()
    initial = synthesize(spec, packet, "full", 0.0, x,
                         n_k=cfg.n_k, span_sigmas=cfg.k_span_sigmas)
    result = crank_nicolson_propagate(spec, initial, grid, sample_times=checkpoints)
    l2_max = linf_max = 0.0
    per_checkpoint = {}
    for sample in result.samples:
        spectral = synthesize(spec, packet, "full", sample.t, x,
                              n_k=cfg.n_k, span_sigmas=cfg.k_span_sigmas)
        l2, linf = compare_fields(spectral, sample)
        per_checkpoint[str(sample.t)] = {"l2": l2, "linf": linf}
        l2_max, linf_max = max(l2_max, l2), max(linf_max, linf)
    passed = l2_max < ORACLE_L2
    write_csv(
        out / "oracle_check.csv",
        ["t_max", "l2", "linf", "pass", "norm_drift"],
        [(t_max, l2_max, linf_max, passed, result.norm_drift)],
    )
    return {
        "per_checkpoint": per_checkpoint,
        "norm_drift": result.norm_drift,
        "pass": bool(passed),
    }


_CLOCK_HEADER = [
    "E", "L", "tau_dwell_tr", "tau_dwell_ref",
    "tau_larmor_tr", "tau_larmor_ref", "omega_min", "residual",
]


def _clock_row(res) -> tuple:
    return (res.E, res.barrier_length, res.tau_dwell_tr, res.tau_dwell_ref,
            res.tau_larmor_tr, res.tau_larmor_ref, res.omega_min, res.residual)


def cmd_clock(cfg: RunConfig, out: Path) -> dict:
    if cfg.mode is None:
        raise SchemaError("energy.E", "clock needs one energy")
    res = compute_clock(cfg.potential, cfg.mode, cfg.clock_config,
                        n_quad=int(cfg.clock_raw["n_quad"]))
    write_csv(out / "clock.csv", _CLOCK_HEADER, [_clock_row(res)])
    return {
        "tau_dwell_tr": res.tau_dwell_tr,
        "tau_larmor_tr": res.tau_larmor_tr,
        "raw_larmor_tr": list(res.larmor_tr.raw_times),
        "residuals_tr": list(res.larmor_tr.residuals),
    }


def cmd_hartman_sweep(cfg: RunConfig, out: Path, pmap) -> dict:
    sw = cfg.sweep
    kappa_ls = np.linspace(float(sw["kappa_l_min"]), float(sw["kappa_l_max"]), int(sw["num"]))
    results = sweep_barrier_width(
        float(sw["v0"]), float(sw["energy_ratio"]), kappa_ls,
        config_factors=tuple(cfg.clock_raw["omega_factors"]),
        extrapolation_order=int(cfg.clock_raw["extrapolation_order"]),
        n_quad=int(cfg.clock_raw["n_quad"]),
        map_fn=pmap,
    )
    taus = [r.tau_dwell_tr for r in results]
    monotonic = all(b > a for a, b in zip(taus, taus[1:]))
    write_csv(
        out / "hartman_sweep.csv",
        _CLOCK_HEADER,
        [_clock_row(r) for r in results],
        footer_comments=[f"dwell_tr_strictly_increasing = {_fmt(monotonic)}"],
    )
    return {"dwell_tr_strictly_increasing": bool(monotonic)}


def run(subcommand: str, cfg: RunConfig, out_dir: str | None = None) -> int:
    started = time.monotonic()
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with WorkerMap(cfg.workers) as pmap:
        if subcommand == "stationary":
            extra = cmd_stationary(cfg, out)
        elif subcommand == "decompose":
            extra = cmd_decompose(cfg, out)
        elif subcommand == "evolve":
            extra = cmd_evolve(cfg, out, pmap)
        elif subcommand == "diagnostics":
            extra = cmd_diagnostics(cfg, out, pmap)
        elif subcommand == "oracle-check":
            extra = cmd_oracle_check(cfg, out)
        elif subcommand == "clock":
            extra = cmd_clock(cfg, out)
        elif subcommand == "hartman-sweep":
            extra = cmd_hartman_sweep(cfg, out, pmap)
        else:
            raise SchemaError("", f"unknown subcommand {subcommand!r}")
    _write_run_files(out, cfg, subcommand, started, extra)
    return 0


def _error_record(out_dir: str, exc: Exception, code: int):
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        record = {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": code,
        }
        (out / "error.json").write_text(
            json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    except OSError:
        pass


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tunnelsplit",
        description="1D barrier scattering split into transmitted/reflected sub-waves",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("config", help="path to the JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--workers", type=int, default=None, help="worker count override")
    args = parser.parse_args(argv)

    out_dir = args.out or "out"
    try:
        cfg = parse_config(args.config)
        if args.workers is not None:
            cfg.workers = max(1, args.workers)
            cfg.raw["workers"] = cfg.workers
        if args.out is not None:
            cfg.raw["out_dir"] = args.out
        out_dir = args.out or cfg.out_dir
        return run(args.subcommand, cfg, out_dir)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _error_record(out_dir, exc, 2)
        return 2
    except INTERNAL_ERRORS as exc:
        print(f"internal fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        _error_record(out_dir, exc, 4)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _error_record(out_dir, exc, 2)
        return 2
    except TunnelSplitError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        _error_record(out_dir, exc, 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
