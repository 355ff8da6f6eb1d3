"""Command-line entry point: ``ambienc <subcommand> [--config FILE] [flags]``.

Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import experiments as ex
from .array import steering_matrix
from .encoding import (
    SamplingConditionWarning,
    SingularSystemError,
    asm_filters,
    channel_partition,
    encodability,
    residual_filters,
    save_filterbanks,
)
from .sh import acn_to_nm, num_channels

log = logging.getLogger("ambienc")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_FLAGS = {
    "arrays": ("--arrays", "comma-separated array kinds"),
    "num_mics": ("--num-mics", "microphones per array"),
    "radius": ("--radius", "sphere radius [m]"),
    "f_min": ("--f-min", "lowest frequency [Hz]"),
    "f_max": ("--f-max", "highest frequency [Hz]"),
    "num_freqs": ("--num-freqs", "number of frequency bins"),
    "snr_db": ("--snr-db", "signal to microphone noise ratio [dB]"),
    "N_a": ("--ambi-order", "Ambisonics order N_a"),
    "residual_orders": ("--residual-orders", "comma-separated N_h values for residual sets"),
    "reference_order": ("--reference-order", "HRTF reference order"),
    "grid_size": ("--grid-size", "plane-wave directions in the diffuse model"),
    "rank_tol": ("--rank-tol", "relative singular value cutoff for the null space"),
    "threshold_db": ("--threshold-db", "encodability threshold [dB]"),
    "output_dir": ("--output-dir", "directory for CSV and plot outputs"),
    "seed": ("--seed", "random seed"),
    "workers": ("--workers", "threads for the frequency axis"),
    "geometry_file": ("--geometry", "geometry table for array kind 'custom'"),
    "hrtf_file": ("--hrtf", "HRTF coefficient file (hrtf-sh v1)"),
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    for key, (flag, help_) in _FLAGS.items():
        common.add_argument(flag, dest=key, default=None, help=help_)
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="ambienc", description="Ambisonics encoding analysis for arbitrary arrays")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig1", parents=[common], help="null-space encodability of first-order channels")
    sub.add_parser("fig2", parents=[common], help="Ambisonics error of truncated encoders vs ASM")
    sub.add_parser("fig3", parents=[common], help="binaural error of ASM, ASM+residual and BSM")
    sub.add_parser("encodability", parents=[common], help="null-space measure for all channels up to N_a")
    design = sub.add_parser("design", parents=[common], help="write ASM (and residual) filter banks")
    design.add_argument("--residual-order", type=int, default=None, help="also design residual filters up to N_h")
    sub.add_parser("render-error", parents=[common], help="binaural error table (optionally with --hrtf)")
    return parser


def _config(args) -> ex.ExperimentConfig:
    overrides = {key: getattr(args, key) for key in _FLAGS}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ex.ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    return ex.parse_config(args.config, overrides)


def _cmd_figure(cfg: ex.ExperimentConfig, name: str) -> list[Path]:
    tables = ex.FIGURES[name](cfg)
    return ex.emit_outputs(name, tables, cfg.output_dir)


def _cmd_encodability(cfg: ex.ExperimentConfig) -> list[Path]:
    grid = cfg.diffuse_grid()
    Y = grid.sh(cfg.N_a)
    channels = [acn_to_nm(j) for j in range(num_channels(cfg.N_a))]
    columns = ("f_hz",) + tuple(f"xi_{ex.channel_tag(n, m)}" for n, m in channels)
    tables = {}
    for kind in cfg.arrays:
        geom = cfg.geometry(kind)
        rows = []
        for f in cfg.freqs():
            V = steering_matrix(geom, grid, f)
            rows.append([f] + [encodability(V, Y[:, j], cfg.rank_tol) for j in range(len(channels))])
        table = ex.ResultTable(f"encodability_{kind}", columns, np.array(rows))
        tables[kind] = table
        ok = [c for c in columns[1:] if np.all(table.column(c) <= cfg.threshold_db)]
        print(f"{kind}: channels below {cfg.threshold_db} dB at every frequency: {', '.join(ok) or 'none'}")
    return ex.emit_outputs("encodability", tables, cfg.output_dir)


def _cmd_design(cfg: ex.ExperimentConfig, residual_order) -> list[Path]:
    grid = cfg.diffuse_grid()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for kind in cfg.arrays:
        geom = cfg.geometry(kind)
        banks, res_banks = [], []
        for f in cfg.freqs():
            V = steering_matrix(geom, grid, f)
            banks.append(asm_filters(V, grid.sh(cfg.N_a), cfg.snr_db, f))
            if residual_order is not None:
                part = channel_partition(cfg.N_a, residual_order)
                res_banks.append(residual_filters(V, grid.sh(residual_order)[:, part.residual],
                                                  cfg.snr_db, f, partition=part))
        path = out_dir / f"design_asm_{kind}.txt"
        save_filterbanks(path, banks)
        written.append(path)
        if res_banks:
            path = out_dir / f"design_residual_{kind}.txt"
            save_filterbanks(path, res_banks)
            written.append(path)
    return written


def _cmd_render_error(cfg: ex.ExperimentConfig) -> list[Path]:
    tables = ex.run_fig3(cfg)
    tables = {k: ex.ResultTable(f"render_error_{k}", t.columns, t.data) for k, t in tables.items()}
    for kind, table in tables.items():
        means = ", ".join(f"{c} {table.band_mean(c):.2f} dB" for c in table.columns[1:])
        print(f"{kind}: band-averaged binaural NMSE: {means}")
    return ex.emit_outputs("render_error", tables, cfg.output_dir)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", SamplingConditionWarning)
            cfg = _config(args)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if args.command in ex.FIGURES:
            written = _cmd_figure(cfg, args.command)
        elif args.command == "encodability":
            written = _cmd_encodability(cfg)
        elif args.command == "design":
            written = _cmd_design(cfg, args.residual_order)
        else:
            written = _cmd_render_error(cfg)
    except (ex.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SingularSystemError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
