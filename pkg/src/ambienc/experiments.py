"""Configuration, figure-reproduction runs and CSV / plot-script output."""

from __future__ import annotations

import dataclasses
import json
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .array import ArrayGeometry, auto_order, load_geometry, make_array, steering_matrix, steering_sh
from .binaural import HEAD_RADIUS, HrtfSh, decomposed_renderer, sphere_hrtf_sh
from .encoding import (
    SamplingConditionWarning,
    asm_filters,
    bsm_filters,
    channel_partition,
    encodability,
    residual_filters,
    truncated_sh_encoder,
)
from .metrics import DiffuseModel, nmse_ambisonics, nmse_binaural
from .sh import N_MAX, SamplingGrid, acn, make_grid, num_channels

STANDARD_ARRAYS = ("semicircular", "circular", "spherical")
FIRST_ORDER = ((0, 0), (1, -1), (1, 0), (1, 1))
FIG2_CHANNELS = ((0, 0), (1, -1), (1, 1))


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def channel_tag(n: int, m: int) -> str:
    return f"{n}m{-m}" if m < 0 else f"{n}{m}"


@dataclass(frozen=True)
class ExperimentConfig:
    arrays: tuple[str, ...] = STANDARD_ARRAYS
    num_mics: int = 4
    radius: float = 0.1
    f_min: float = 100.0
    f_max: float = 8000.0
    num_freqs: int = 120
    log_spaced: bool = True
    snr_db: float = 20.0
    N_a: int = 1
    residual_orders: tuple[int, ...] = (2, 5)
    reference_order: int = 30
    truncated_orders: tuple[int, ...] = (1, 4)
    grid_size: Optional[int] = None
    rank_tol: float = 1e-6
    threshold_db: float = -10.0
    head_radius: float = HEAD_RADIUS
    output_dir: str = "results"
    seed: int = 0
    workers: int = 1
    geometry_file: Optional[str] = None
    hrtf_file: Optional[str] = None

    def freqs(self) -> np.ndarray:
        if self.log_spaced:
            return np.geomspace(self.f_min, self.f_max, self.num_freqs)
        return np.linspace(self.f_min, self.f_max, self.num_freqs)

    def diffuse_grid(self) -> SamplingGrid:
        # twice the channel count of the larger of the reference and steering orders
        order = max(self.reference_order, auto_order(self.f_max, self.radius))
        count = self.grid_size or 2 * num_channels(order)
        return make_grid("fibonacci", count=count)

    def model(self) -> DiffuseModel:
        return DiffuseModel.from_snr(self.diffuse_grid(), self.snr_db)

    def geometry(self, kind: str) -> ArrayGeometry:
        if kind == "custom":
            if not self.geometry_file:
                raise ConfigError("array kind 'custom' needs geometry_file")
            return load_geometry(self.geometry_file)
        return make_array(kind, self.num_mics, self.radius)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, value, default):
    """Convert ``value`` to the type of ``default``; errors name the key."""
    def fail(expected):
        raise ConfigError(f"{key}: expected {expected}, got {value!r}")

    if key in ("grid_size",):
        if value is None:
            return None
        default = 0
    if key in ("geometry_file", "hrtf_file"):
        if value is None or isinstance(value, str):
            return value
        fail("a path string")
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
            return value.lower() in ("true", "1", "yes")
        fail("a boolean")
    if isinstance(default, int):
        if isinstance(value, bool):
            fail("an integer")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
        fail("an integer")
    if isinstance(default, float):
        if isinstance(value, bool):
            fail("a number")
        if isinstance(value, (int, float)):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        fail("a number")
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        fail("a string")
    if isinstance(default, tuple):
        items = value.split(",") if isinstance(value, str) else value
        if not isinstance(items, (list, tuple)):
            fail("a list")
        inner = default[0] if default else 0
        return tuple(_coerce(key, v.strip() if isinstance(v, str) else v, inner) for v in items)
    return value


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    def bad(key, why):
        raise ConfigError(f"{key}: {why}")

    for kind in cfg.arrays:
        if kind not in STANDARD_ARRAYS + ("custom",):
            bad("arrays", f"unknown array kind {kind!r}")
    if not cfg.arrays:
        bad("arrays", "at least one array is required")
    if cfg.num_mics < 1:
        bad("num_mics", "must be >= 1")
    if cfg.radius <= 0:
        bad("radius", "must be > 0")
    if cfg.head_radius <= 0:
        bad("head_radius", "must be > 0")
    if not 0 < cfg.f_min < cfg.f_max:
        bad("f_min", "need 0 < f_min < f_max")
    if cfg.num_freqs < 2:
        bad("num_freqs", "must be >= 2")
    if not 0 <= cfg.N_a <= N_MAX:
        bad("N_a", f"must lie in [0, {N_MAX}]")
    if not 0 <= cfg.reference_order <= N_MAX:
        bad("reference_order", f"must lie in [0, {N_MAX}]")
    for N_h in cfg.residual_orders:
        if not 0 <= N_h <= cfg.reference_order:
            bad("residual_orders", f"order {N_h} must lie in [0, reference_order]")
    for N_v in cfg.truncated_orders:
        if not 0 <= N_v <= N_MAX:
            bad("truncated_orders", f"order {N_v} must lie in [0, {N_MAX}]")
    if cfg.grid_size is not None and cfg.grid_size < num_channels(cfg.reference_order):
        bad("grid_size", f"must be >= (reference_order+1)^2 = {num_channels(cfg.reference_order)}")
    if cfg.rank_tol <= 0 or cfg.rank_tol >= 1:
        bad("rank_tol", "must lie in (0, 1)")
    if cfg.workers < 1:
        bad("workers", "must be >= 1")
    if num_channels(cfg.N_a) > cfg.num_mics:
        warnings.warn(
            f"N_a = {cfg.N_a} needs {num_channels(cfg.N_a)} channels but only {cfg.num_mics} microphones; "
            "(N_a+1)^2 <= M is violated",
            SamplingConditionWarning,
            stacklevel=3,
        )
    return cfg


def parse_config(path: Optional[str | os.PathLike] = None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Load a JSON config file (optional) and apply ``overrides`` on top.

    Missing keys take the defaults of :class:`ExperimentConfig`. Unknown
    keys, wrong types and out-of-range values raise :class:`ConfigError`
    naming the offending key.
    """
    values: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            loaded = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be an object")
        values.update(loaded)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {}
    for key, value in values.items():
        if key not in _FIELDS:
            raise ConfigError(f"{key}: unknown configuration key")
        kwargs[key] = _coerce(key, value, _FIELDS[key].default)
    return _validate(ExperimentConfig(**kwargs))


@dataclass(frozen=True, eq=False)
class ResultTable:
    """Rows of ``(frequency, value per series)``; the first column is ``f_hz``."""

    name: str
    columns: tuple[str, ...]
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise ValueError(f"table {self.name}: data shape {data.shape} does not match {len(self.columns)} columns")
        if self.columns[0] != "f_hz":
            raise ValueError("first column must be f_hz")
        if np.any(np.diff(data[:, 0]) <= 0):
            raise ValueError(f"table {self.name}: frequency column is not strictly increasing")
        object.__setattr__(self, "data", data)

    @property
    def freqs(self) -> np.ndarray:
        return self.data[:, 0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def band_mean(self, name: str, f_lo: float = 0.0, f_hi: float = np.inf) -> float:
        sel = (self.freqs >= f_lo) & (self.freqs <= f_hi)
        return float(self.column(name)[sel].mean())


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_fig1(config: ExperimentConfig) -> dict[str, ResultTable]:
    """Null-space measure of the first-order channels versus frequency, per array."""
    grid = config.diffuse_grid()
    Y = grid.sh(1)
    freqs = config.freqs()
    columns = ("f_hz",) + tuple(f"xi_{channel_tag(n, m)}" for n, m in FIRST_ORDER)
    tables = {}
    for kind in config.arrays:
        geom = config.geometry(kind)

        def row(f):
            V = steering_matrix(geom, grid, f)
            return [f] + [encodability(V, Y[:, acn(n, m)], config.rank_tol) for n, m in FIRST_ORDER]

        data = np.array(_map(row, freqs, config.workers))
        tables[kind] = ResultTable(f"fig1_{kind}", columns, data,
                                   {"threshold_db": config.threshold_db, "rank_tol": config.rank_tol})
    return tables


def run_fig2(config: ExperimentConfig) -> dict[str, ResultTable]:
    """Ambisonics NMSE of truncated SH-domain encoders and full-model ASM, per array."""
    for N_v in config.truncated_orders:
        if N_v < config.N_a:
            raise ConfigError(f"truncated_orders: order {N_v} is below N_a = {config.N_a}")
    grid = config.diffuse_grid()
    model = config.model()
    Y = grid.sh(config.N_a)
    freqs = config.freqs()
    encoders = [f"nv{N_v}" for N_v in config.truncated_orders] + ["asm"]
    columns = ("f_hz",) + tuple(f"{e}_{channel_tag(n, m)}" for e in encoders for n, m in FIG2_CHANNELS)
    tables = {}
    for kind in config.arrays:
        geom = config.geometry(kind)

        def row(f):
            V = steering_matrix(geom, grid, f)
            banks = [truncated_sh_encoder(steering_sh(geom, f, N_v), config.N_a, f, singular="pinv")
                     for N_v in config.truncated_orders]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SamplingConditionWarning)
                banks.append(asm_filters(V, Y, config.snr_db, f))
            out = [f]
            for bank in banks:
                for n, m in FIG2_CHANNELS:
                    j = acn(n, m)
                    out.append(nmse_ambisonics(V, bank.weights[:, j], Y[:, j], model).value_db)
            return out

        data = np.array(_map(row, freqs, config.workers))
        tables[kind] = ResultTable(f"fig2_{kind}", columns, data, {"snr_db": config.snr_db})
    return tables


def reference_hrtfs(config: ExperimentConfig, freqs: Optional[Sequence[float]] = None) -> list[HrtfSh]:
    """HRTF SH coefficients at the reference order.

    Uses the sphere head model at ``freqs`` (default: the config axis), or,
    when ``hrtf_file`` is set, every frequency stored in that file.
    """
    if config.hrtf_file:
        from .binaural import load_hrtf

        try:
            loaded = load_hrtf(config.hrtf_file)
        except OSError as exc:
            raise ConfigError(f"hrtf_file: {exc}") from exc
        if loaded[0].order < config.reference_order:
            raise ConfigError(f"hrtf_file: order {loaded[0].order} below reference_order {config.reference_order}")
        return [h.truncated(config.reference_order) for h in loaded]
    if freqs is None:
        freqs = config.freqs()
    return _map(lambda f: sphere_hrtf_sh(f, config.reference_order, config.head_radius), freqs, config.workers)


def fig3_columns(config: ExperimentConfig) -> tuple[str, ...]:
    counts = [num_channels(N_h) - num_channels(config.N_a) for N_h in config.residual_orders]
    return ("f_hz", "asm") + tuple(f"asm_res{c}" for c in counts) + ("bsm",)


def binaural_errors(geom: ArrayGeometry, grid: SamplingGrid, model: DiffuseModel, h: HrtfSh,
                    config: ExperimentConfig) -> list[float]:
    """Binaural NMSE in dB of ASM, ASM plus each residual set, and BSM at one frequency."""
    f = h.freq
    V = steering_matrix(geom, grid, f)
    d = h.on_grid(grid)
    Y = grid.sh(max((config.N_a,) + tuple(config.residual_orders)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SamplingConditionWarning)
        asm = asm_filters(V, Y[:, : num_channels(config.N_a)], config.snr_db, f)
    out = []
    for N_h in (config.N_a,) + tuple(config.residual_orders):
        part = channel_partition(config.N_a, N_h)
        res = residual_filters(V, Y[:, part.residual], config.snr_db, f, partition=part)
        w = decomposed_renderer(asm, res, h, part)
        out.append(nmse_binaural(V, w.weights, d, model).value_db)
    bsm = bsm_filters(V, d, config.snr_db, f)
    out.append(nmse_binaural(V, bsm.weights, d, model).value_db)
    return out


def run_fig3(config: ExperimentConfig, hrtfs: Optional[Sequence[HrtfSh]] = None) -> dict[str, ResultTable]:
    """Binaural NMSE of ASM, ASM with residual channels, and BSM, per array."""
    for N_h in config.residual_orders:
        if N_h < config.N_a:
            raise ConfigError(f"residual_orders: order {N_h} is below N_a = {config.N_a}")
    grid = config.diffuse_grid()
    model = config.model()
    if hrtfs is None:
        hrtfs = reference_hrtfs(config)
    columns = fig3_columns(config)
    tables = {}
    for kind in config.arrays:
        geom = config.geometry(kind)
        rows = _map(lambda h: [h.freq] + binaural_errors(geom, grid, model, h, config), hrtfs, config.workers)
        tables[kind] = ResultTable(f"fig3_{kind}", columns, np.array(rows),
                                   {"reference_order": config.reference_order})
    return tables


FIGURES = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3}

_PLOT_TEMPLATE = '''"""Plot {figure} from the CSV tables next to this script (requires matplotlib)."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
TABLES = {tables!r}

fig, axes = plt.subplots(1, len(TABLES), figsize=(5 * len(TABLES), 4), squeeze=False)
for ax, name in zip(axes[0], TABLES):
    with open(HERE / (name + ".csv")) as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], [[float(v) for v in r] for r in rows[1:]]
    freqs = [r[0] for r in body]
    for j, label in enumerate(header[1:], start=1):
        ax.semilogx(freqs, [r[j] for r in body], label=label)
    ax.set_title(name)
    ax.set_xlabel("frequency [Hz]")
    ax.set_ylabel("dB")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
fig.tight_layout()
fig.savefig(HERE / "{figure}.png", dpi=150)
'''


def table_to_csv(table: ResultTable) -> str:
    lines = [",".join(table.columns)]
    for row in table.data:
        lines.append(",".join([f"{row[0]:.10g}"] + [f"{v:.6g}" for v in row[1:]]))
    return "\n".join(lines) + "\n"


def emit_outputs(figure: str, tables: dict[str, ResultTable], out_dir: str | os.PathLike) -> list[Path]:
    """Write one CSV per table plus ``<figure>_plot.py``; returns the written paths."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    written = []
    for table in tables.values():
        path = out_dir / f"{table.name}.csv"
        try:
            path.write_text(table_to_csv(table))
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)
    script = out_dir / f"{figure}_plot.py"
    script.write_text(_PLOT_TEMPLATE.format(figure=figure, tables=[t.name for t in tables.values()]))
    written.append(script)
    return written
