"""Configuration-driven experiment harness and command-line interface.

A sweep config names a dataset, an axis (qubit count or layer count) with
its values, and a grid of strategies (init family, with/without data
prior, with/without diffusion).  Each (strategy, axis value) cell runs
``repeats`` seeded repetitions; the harness records, per epoch boundary,
the pooled variance of first-layer expectation gradients over all repeats
and all samples of a fixed evaluation batch.  Cells are isolated: one
failure is recorded and the rest of the grid still runs.

Outputs: a records CSV with a fixed column order, per-run JSON training
reports, a records JSON (the CSV's round-trippable twin), a hand-written
deterministic SVG chart (one polyline per strategy, log10 variance on the
y-axis), and matplotlib PNG figures alongside.  Same config + same base
seed reproduces every CSV/JSON/SVG byte.

Config files are INI: an [experiment] section, an optional [train]
section, and one [strategy <id>] section per grid entry.  CLI flags
override file values.  Exit codes: 0 full success, 1 config error, 2
partial cell failures.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import datasets
from .ansatz import build_circuit, gradient_batch, pad_angles, single_z, zero_projector
from .regularize import PRIOR_FAMILIES, InitStrategy, PriorStats, fit_prior, sample_init
from .streams import derived_seed
from .trainer import DiffusionConfig, TrainConfig, TrainReport, train

__all__ = [
    "DEFAULT_DR_CANDIDATES",
    "CSV_HEADER",
    "OUT_ENV_VAR",
    "ConfigError",
    "StrategySpec",
    "ExperimentConfig",
    "VarianceRecord",
    "CellFailure",
    "run_sweep",
    "select_dr_max",
    "emit",
    "records_to_csv_text",
    "parse_records_csv",
    "records_svg_text",
    "render_figures",
    "load_config",
    "main",
]

# Covers every per-scenario optimum the diffusion-rate selection can land on.
DEFAULT_DR_CANDIDATES = (0.01, 0.02, 0.04, 0.16, 0.20, 0.30, 0.50)

CSV_HEADER = "dataset,strategy,axis,axis_value,epoch,variance,n_samples"
OUT_ENV_VAR = "VQCLAB_OUT"

_OBSERVABLES = {"z0": single_z, "zero-projector": zero_projector}
_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class ConfigError(Exception):
    """Bad config file or CLI usage; maps to exit code 1."""


@dataclass(frozen=True)
class StrategySpec:
    """One grid entry: how to initialize and whether to diffuse.

    ``init_range`` draws Uniform(low, high) regardless of any data prior
    (e.g. 0..2pi for scaling baselines); valid only for the Uniform family
    and exclusive with use_prior.
    """

    id: str
    init: InitStrategy
    diffusion: bool = False
    dr_max: float | None = None
    dr_min: float = 1e-4
    diffusion_mode: str = "cumulative"
    init_range: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.id or not all(c.isalnum() or c in "-_." for c in self.id):
            raise ConfigError(f"strategy id {self.id!r} must be filesystem-safe")
        if self.diffusion and self.dr_max is None:
            raise ConfigError(f"strategy {self.id}: diffusion needs dr_max")
        if self.init_range is not None:
            if self.init.family != "Uniform" or self.init.use_prior:
                raise ConfigError(
                    f"strategy {self.id}: explicit range is Uniform-only and "
                    f"exclusive with use_prior"
                )
            low, high = self.init_range
            if not (np.isfinite(low) and np.isfinite(high) and low < high):
                raise ConfigError(f"strategy {self.id}: bad range {self.init_range}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    data_path: str
    strategies: tuple[StrategySpec, ...]
    sweep_axis: str = "qubits"
    sweep_values: tuple[int, ...] = (2, 4, 6, 8, 10)
    fixed_layers: int = 5
    fixed_qubits: int = 6
    n_rot: int = 3
    repeats: int = 5
    base_seed: int = 7
    epochs: int = 50
    batch_size: int = 20
    learning_rate: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    observable: str = "z0"
    eval_split: str = "train"
    out_dir: str = ""
    dr_candidates: tuple[float, ...] = DEFAULT_DR_CANDIDATES

    def __post_init__(self):
        if self.sweep_axis not in ("qubits", "layers"):
            raise ConfigError(f"sweep axis must be qubits or layers, got {self.sweep_axis!r}")
        values = self.sweep_values
        if not values or any(v < 1 for v in values) or any(
            b <= a for a, b in zip(values, values[1:])
        ):
            raise ConfigError(
                f"sweep values must be strictly increasing and >= 1, got {values}"
            )
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0 (0 = record at init only)")
        if not self.strategies:
            raise ConfigError("need at least one [strategy <id>] section")
        ids = [s.id for s in self.strategies]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate strategy ids in {ids}")
        if self.observable not in _OBSERVABLES:
            raise ConfigError(
                f"observable must be one of {sorted(_OBSERVABLES)}, got {self.observable!r}"
            )
        if self.eval_split not in ("train", "valid", "test"):
            raise ConfigError(f"eval_split must be train/valid/test, got {self.eval_split!r}")


@dataclass(frozen=True)
class VarianceRecord:
    """One measured point: pooled first-layer gradient variance."""

    dataset: str
    strategy: str
    axis: str
    axis_value: int
    epoch: int
    variance: float
    n_samples: int

    def __post_init__(self):
        if self.variance < 0 or not np.isfinite(self.variance):
            raise ValueError(f"variance must be finite and >= 0, got {self.variance}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class CellFailure:
    strategy: str
    axis_value: int
    error: str


def _strategy_prior(strat: StrategySpec, train_angles: np.ndarray) -> PriorStats | None:
    if strat.init_range is not None:
        low, high = strat.init_range
        return PriorStats(
            low, high, 0.5 * (low + high), (high - low) / math.sqrt(12.0), None, None
        )
    if strat.init.use_prior:
        return fit_prior(train_angles)
    return None


def _effective_init(strat: StrategySpec) -> InitStrategy:
    if strat.init_range is not None:
        return InitStrategy("Uniform", use_prior=True)
    return strat.init


def _cell_shape(config: ExperimentConfig, value: int) -> tuple[int, int]:
    if config.sweep_axis == "qubits":
        return value, config.fixed_layers
    return config.fixed_qubits, value


def _init_only_grads(circuit, data, strat, obs, config, seed) -> np.ndarray:
    """Epoch-0 eval-batch record without a training loop (epochs == 0)."""
    prior = _strategy_prior(strat, data.train[0])
    params = sample_init(
        _effective_init(strat), prior, circuit.param_shape, derived_seed(seed, "init")
    )
    split = {"train": data.train, "valid": data.valid, "test": data.test}[config.eval_split]
    eval_x = pad_angles(split[0], circuit.n_qubits)[: config.batch_size]
    grads = gradient_batch(circuit, params, eval_x, obs, first_layer_only=True)
    return grads[None]


def _train_config(config: ExperimentConfig, strat: StrategySpec, data, obs, seed) -> TrainConfig:
    diffusion = None
    if strat.diffusion:
        diffusion = DiffusionConfig(
            dr_max=strat.dr_max, dr_min=strat.dr_min, mode=strat.diffusion_mode
        )
    return TrainConfig(
        init=_effective_init(strat),
        seed=seed,
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        epochs=config.epochs,
        adam_beta1=config.adam_beta1,
        adam_beta2=config.adam_beta2,
        adam_eps=config.adam_eps,
        diffusion=diffusion,
        record_observable=obs,
        eval_split=config.eval_split,
        prior_override=_strategy_prior(strat, data.train[0]),
    )


def run_sweep(
    config: ExperimentConfig,
) -> tuple[list[VarianceRecord], dict[str, TrainReport], list[CellFailure]]:
    """Run the full grid; cells fail independently.

    Returns (records, per-run reports keyed by run id, failures).  The
    variance estimator pools, per epoch boundary, the first-layer gradient
    components over repeats x evaluation-batch samples; n_samples is that
    repeats x batch count.
    """
    raw = datasets.load(config.dataset, config.data_path)
    split_seed = derived_seed(config.base_seed, "split", config.dataset)
    prepared: dict[int, datasets.SplitDataset] = {}
    records: list[VarianceRecord] = []
    reports: dict[str, TrainReport] = {}
    failures: list[CellFailure] = []

    for strat in config.strategies:
        for value in config.sweep_values:
            n_qubits, n_layers = _cell_shape(config, value)
            try:
                if n_qubits not in prepared:
                    prepared[n_qubits] = datasets.prepare(raw, n_qubits, split_seed)
                data = prepared[n_qubits]
                circuit = build_circuit(n_qubits, config.n_rot, n_layers)
                obs = _OBSERVABLES[config.observable](n_qubits)
                cell_grads = []
                for rep in range(config.repeats):
                    seed = derived_seed(
                        config.base_seed, strat.id, config.sweep_axis, value, rep
                    )
                    if config.epochs == 0:
                        grads = _init_only_grads(circuit, data, strat, obs, config, seed)
                    else:
                        tc = _train_config(config, strat, data, obs, seed)
                        report = train(circuit, data, tc)
                        run_id = f"{strat.id}__{config.sweep_axis}-{value}__rep{rep}"
                        reports[run_id] = report
                        grads = report.eval_grads
                    cell_grads.append(grads)
                stacked = np.stack(cell_grads)  # (repeats, epochs+1, batch, slots)
                n_samples = stacked.shape[0] * stacked.shape[2]
                for epoch in range(stacked.shape[1]):
                    pooled = stacked[:, epoch].reshape(-1)
                    records.append(
                        VarianceRecord(
                            config.dataset,
                            strat.id,
                            config.sweep_axis,
                            value,
                            epoch,
                            float(pooled.var()),
                            n_samples,
                        )
                    )
            except Exception as exc:  # cell isolation: record and continue
                failures.append(
                    CellFailure(strat.id, value, f"{type(exc).__name__}: {exc}")
                )
    return records, reports, failures


def _argmax_smallest_tie(scores: dict[float, float]) -> float:
    best_key = None
    best = -math.inf
    for key in sorted(scores):
        if scores[key] > best:
            best, best_key = scores[key], key
    return best_key


def select_dr_max(
    config: ExperimentConfig, candidates: tuple[float, ...] | None = None
) -> tuple[float, dict[float, float]]:
    """Pick the dr_max whose validation variance curve has the largest mean.

    Each candidate reruns the config's diffusion strategies on the
    validation split with dr_max forced to the candidate; its score is the
    mean over all resulting records (axis values x epochs).  Ties go to
    the smaller rate.
    """
    if candidates is None:
        candidates = config.dr_candidates
    if not candidates:
        raise ValueError("empty dr_max candidate list")
    if config.epochs < 1:
        raise ConfigError("select-dr needs epochs >= 1 (diffusion acts during training)")
    diffusion_strats = tuple(s for s in config.strategies if s.diffusion)
    if not diffusion_strats:
        raise ConfigError("select-dr needs at least one diffusion strategy")
    scores: dict[float, float] = {}
    for candidate in candidates:
        strategies = tuple(
            dataclasses.replace(s, dr_max=float(candidate)) for s in diffusion_strats
        )
        trial = dataclasses.replace(
            config, strategies=strategies, eval_split="valid"
        )
        records, _, failures = run_sweep(trial)
        if not records:
            details = "; ".join(f.error for f in failures[:3])
            raise RuntimeError(f"no records for dr_max={candidate}: {details}")
        scores[float(candidate)] = float(np.mean([r.variance for r in records]))
    return _argmax_smallest_tie(scores), scores


# --- emission ---------------------------------------------------------------


def records_to_csv_text(records: list[VarianceRecord]) -> str:
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.dataset},{r.strategy},{r.axis},{r.axis_value},{r.epoch},"
            f"{r.variance!r},{r.n_samples}"
        )
    return "\n".join(lines) + "\n"


def parse_records_csv(text: str) -> list[VarianceRecord]:
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"bad records CSV header: {lines[:1]}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"bad records CSV row: {ln!r}")
        out.append(
            VarianceRecord(
                parts[0], parts[1], parts[2], int(parts[3]), int(parts[4]),
                float(parts[5]), int(parts[6]),
            )
        )
    return out


def _strategy_series(records: list[VarianceRecord]):
    """Group records into per-strategy (x, variance) series.

    X is the sweep axis value when the records span several, otherwise the
    epoch index (single-cell runs chart their training curve).  For the
    axis chart each strategy contributes its epoch-0 (headline) variance.
    """
    strategies = []
    for r in records:
        if r.strategy not in strategies:
            strategies.append(r.strategy)
    axis_values = sorted({r.axis_value for r in records})
    by_axis = len(axis_values) > 1
    series = {}
    for name in strategies:
        if by_axis:
            first_epoch = min(r.epoch for r in records if r.strategy == name)
            pts = [
                (r.axis_value, r.variance)
                for r in records
                if r.strategy == name and r.epoch == first_epoch
            ]
        else:
            pts = [(r.epoch, r.variance) for r in records if r.strategy == name]
        series[name] = sorted(pts)
    x_label = records[0].axis if by_axis else "epoch"
    return strategies, series, x_label


def records_svg_text(records: list[VarianceRecord]) -> str:
    """Deterministic SVG line chart: one polyline per strategy, log10 y."""
    if not records:
        raise ValueError("svg emission needs at least one record")
    strategies, series, x_label = _strategy_series(records)

    width, height = 640.0, 480.0
    left, right, top, bottom = 70.0, 20.0, 20.0, 50.0
    xs = [x for pts in series.values() for x, _ in pts]
    logies = [math.log10(v) for pts in series.values() for _, v in pts if v > 0]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(logies), max(logies)) if logies else (-1.0, 0.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def px(x: float) -> float:
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y: float) -> float:
        return height - bottom - (y - y_lo) / (y_hi - y_lo) * (height - top - bottom)

    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">\n'
    )
    out.write(f'<rect width="{width:.0f}" height="{height:.0f}" fill="white"/>\n')
    # frame
    out.write(
        f'<rect x="{left:.3f}" y="{top:.3f}" width="{width - left - right:.3f}" '
        f'height="{height - top - bottom:.3f}" fill="none" stroke="black"/>\n'
    )
    # y gridlines at integer exponents
    exp_lo, exp_hi = math.ceil(y_lo), math.floor(y_hi)
    if exp_hi - exp_lo <= 24:
        for e in range(exp_lo, exp_hi + 1):
            y = py(float(e))
            out.write(
                f'<line x1="{left:.3f}" y1="{y:.3f}" x2="{width - right:.3f}" '
                f'y2="{y:.3f}" stroke="#dddddd"/>\n'
            )
            out.write(
                f'<text x="{left - 8:.3f}" y="{y + 4:.3f}" font-size="12" '
                f'text-anchor="end">1e{e}</text>\n'
            )
    # x ticks at data values when few
    tick_xs = sorted(set(xs))
    if len(tick_xs) > 12:
        tick_xs = [x_lo, x_hi]
    for x in tick_xs:
        out.write(
            f'<text x="{px(x):.3f}" y="{height - bottom + 18:.3f}" font-size="12" '
            f'text-anchor="middle">{x:g}</text>\n'
        )
    out.write(
        f'<text x="{(left + width - right) / 2:.3f}" y="{height - 12:.3f}" '
        f'font-size="13" text-anchor="middle">{x_label}</text>\n'
    )
    out.write(
        f'<text x="16" y="{(top + height - bottom) / 2:.3f}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 16 '
        f'{(top + height - bottom) / 2:.3f})">log10 variance</text>\n'
    )
    for i, name in enumerate(strategies):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(
            f"{px(x):.3f},{py(math.log10(v)):.3f}" for x, v in series[name] if v > 0
        )
        out.write(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{pts}"/>\n'
        )
        out.write(
            f'<text x="{width - right - 8:.3f}" y="{top + 16 + 16 * i:.3f}" '
            f'font-size="12" text-anchor="end" fill="{color}">{name}</text>\n'
        )
    out.write("</svg>\n")
    return out.getvalue()


def render_figures(records: list[VarianceRecord], out_dir: Path) -> list[Path]:
    """Matplotlib PNG figures next to the delimited outputs."""
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    if not records:
        return []
    written = []
    strategies, series, x_label = _strategy_series(records)

    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for i, name in enumerate(strategies):
        pts = [(x, v) for x, v in series[name] if v > 0]
        if pts:
            ax.semilogy(*zip(*pts), marker="o", label=name,
                        color=_PALETTE[i % len(_PALETTE)])
    ax.set_xlabel(x_label)
    ax.set_ylabel("first-layer gradient variance")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "variance.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    epochs = sorted({r.epoch for r in records})
    if len(epochs) > 1:
        top_value = max(r.axis_value for r in records)
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for i, name in enumerate(strategies):
            pts = sorted(
                (r.epoch, r.variance)
                for r in records
                if r.strategy == name and r.axis_value == top_value and r.variance > 0
            )
            if pts:
                ax.semilogy(*zip(*pts), label=name,
                            color=_PALETTE[i % len(_PALETTE)])
        ax.set_xlabel("epoch")
        ax.set_ylabel("first-layer gradient variance")
        ax.set_title(f"{records[0].axis} = {top_value}")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / "variance_epochs.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def emit(
    records: list[VarianceRecord],
    reports: dict[str, TrainReport] | None,
    out_dir: str | Path,
    formats: tuple[str, ...] = ("csv", "json", "svg", "png"),
    failures: list[CellFailure] | None = None,
) -> list[Path]:
    """Write the requested artifact formats; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    unknown = set(formats) - {"csv", "json", "svg", "png"}
    if unknown:
        raise ValueError(f"unknown emit formats {sorted(unknown)}")
    if "csv" in formats:
        path = out_dir / "records.csv"
        path.write_text(records_to_csv_text(records), encoding="utf-8")
        written.append(path)
    if "json" in formats:
        payload = {
            "records": [r.to_dict() for r in records],
            "failures": [dataclasses.asdict(f) for f in failures or []],
        }
        path = out_dir / "records.json"
        path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(path)
        for run_id, report in (reports or {}).items():
            rp_dir = out_dir / "reports"
            rp_dir.mkdir(exist_ok=True)
            rp = rp_dir / f"{run_id}.json"
            rp.write_text(
                json.dumps(report.to_jsonable(), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
            written.append(rp)
    if "svg" in formats:
        path = out_dir / "variance.svg"
        path.write_text(records_svg_text(records), encoding="utf-8")
        written.append(path)
    if "png" in formats:
        written.extend(render_figures(records, out_dir))
    return written


# --- config files -----------------------------------------------------------


def _parse_float(text: str, where: str) -> float:
    text = text.strip().lower()
    if text in ("2pi", "2*pi", "tau"):
        return 2.0 * math.pi
    if text == "pi":
        return math.pi
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: not a number: {text!r}") from None


def _parse_int_list(text: str, where: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{where}: expected integers, got {text!r}") from None


def _parse_bool(text: str, where: str) -> bool:
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


def _parse_strategy(section: str, items: dict[str, str]) -> StrategySpec:
    sid = section.split(None, 1)[1]
    family = items.get("family", "Uniform")
    use_prior = _parse_bool(items.get("use_prior", "false"), section)
    init_range = None
    if "range" in items:
        parts = items["range"].replace(",", " ").split()
        if len(parts) != 2:
            raise ConfigError(f"{section}: range needs two numbers, got {items['range']!r}")
        init_range = (
            _parse_float(parts[0], section),
            _parse_float(parts[1], section),
        )
    try:
        init = InitStrategy(family, use_prior=use_prior)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from None
    return StrategySpec(
        id=sid,
        init=init,
        diffusion=_parse_bool(items.get("diffusion", "false"), section),
        dr_max=_parse_float(items["dr_max"], section) if "dr_max" in items else None,
        dr_min=_parse_float(items.get("dr_min", "1e-4"), section),
        diffusion_mode=items.get("diffusion_mode", "cumulative"),
        init_range=init_range,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse an INI experiment config, applying CLI overrides on top."""
    overrides = overrides or {}
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if "experiment" not in cp:
        raise ConfigError(f"{path}: missing [experiment] section")
    exp = dict(cp["experiment"])
    tr = dict(cp["train"]) if "train" in cp else {}

    strategies = tuple(
        _parse_strategy(section, dict(cp[section]))
        for section in cp.sections()
        if section.startswith("strategy ")
    )

    def pick(key: str, default=None):
        if key in overrides and overrides[key] is not None:
            return overrides[key]
        return exp.get(key, default)

    dataset = pick("dataset")
    data_path = pick("path") if "path" in exp or "path" in overrides else None
    if "data_path" in overrides and overrides["data_path"] is not None:
        data_path = overrides["data_path"]
    if not dataset:
        raise ConfigError("dataset is required (config [experiment] dataset= or --dataset)")
    if not data_path:
        raise ConfigError("data path is required (config [experiment] path= or --data-path)")

    out_dir = pick("out") or os.environ.get(OUT_ENV_VAR, "results")

    values = pick("values")
    sweep_values = (
        _parse_int_list(values, "[experiment] values")
        if isinstance(values, str)
        else (tuple(values) if values else ExperimentConfig.sweep_values)
    )
    dr_cands = exp.get("dr_candidates")
    dr_candidates = (
        tuple(_parse_float(p, "dr_candidates") for p in dr_cands.replace(",", " ").split())
        if dr_cands
        else DEFAULT_DR_CANDIDATES
    )

    def num(source, key, default, conv):
        val = source.get(key)
        if val is None:
            return default
        return conv(val) if not isinstance(val, str) else conv(val)

    try:
        return ExperimentConfig(
            dataset=str(dataset).lower(),
            data_path=str(data_path),
            strategies=strategies,
            sweep_axis=str(pick("sweep", "qubits")),
            sweep_values=sweep_values,
            fixed_layers=int(pick("fixed_layers", 5)),
            fixed_qubits=int(pick("fixed_qubits", 6)),
            n_rot=int(pick("rotations", 3)),
            repeats=int(pick("repeats", 5)),
            base_seed=int(pick("seed", 7)),
            epochs=int(pick("epochs", 50)),
            batch_size=int(tr.get("batch_size", 20)),
            learning_rate=_parse_float(str(tr.get("learning_rate", "1e-2")), "[train]"),
            adam_beta1=_parse_float(str(tr.get("adam_beta1", "0.9")), "[train]"),
            adam_beta2=_parse_float(str(tr.get("adam_beta2", "0.999")), "[train]"),
            adam_eps=_parse_float(str(tr.get("adam_eps", "1e-8")), "[train]"),
            observable=str(pick("observable", "z0")),
            eval_split=str(pick("eval_split", "train")),
            out_dir=str(out_dir),
            dr_candidates=dr_candidates,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


# --- CLI ---------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; 2 is reserved for partial failures.
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="INI experiment config")
    sub.add_argument("--dataset", help="override dataset name")
    sub.add_argument("--data-path", help="override dataset file/directory")
    sub.add_argument("--sweep", choices=("qubits", "layers"), help="override sweep axis")
    sub.add_argument("--values", help="override sweep values, e.g. 2,4,6")
    sub.add_argument("--repeats", type=int, help="override repeat count")
    sub.add_argument("--seed", type=int, help="override base seed")
    sub.add_argument("--epochs", type=int, help="override training epochs")
    sub.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or results)")


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "dataset": args.dataset,
        "data_path": args.data_path,
        "sweep": args.sweep,
        "values": args.values,
        "repeats": args.repeats,
        "seed": args.seed,
        "epochs": args.epochs,
        "out": args.out,
    }


def _cmd_sweep(args) -> int:
    config = load_config(args.config, _overrides(args))
    formats = tuple(args.formats.split(",")) if args.formats else ("csv", "json", "svg", "png")
    records, reports, failures = run_sweep(config)
    paths = emit(records, reports, config.out_dir, formats, failures)
    for p in paths:
        print(p)
    for f in failures:
        print(f"FAILED cell strategy={f.strategy} value={f.axis_value}: {f.error}",
              file=sys.stderr)
    return 2 if failures else 0


def _cmd_select_dr(args) -> int:
    config = load_config(args.config, _overrides(args))
    candidates = None
    if args.candidates:
        candidates = tuple(
            _parse_float(p, "--candidates")
            for p in args.candidates.replace(",", " ").split()
        )
    chosen, scores = select_dr_max(config, candidates)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "chosen_dr_max": chosen,
        "scores": {repr(k): v for k, v in sorted(scores.items())},
        "dataset": config.dataset,
        "sweep": config.sweep_axis,
    }
    path = out_dir / "dr_selection.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"dr_max = {chosen!r}")
    print(path)
    return 0


def _cmd_train_one(args) -> int:
    config = load_config(args.config, _overrides(args))
    if config.epochs < 1:
        raise ConfigError("train-one needs epochs >= 1")
    by_id = {s.id: s for s in config.strategies}
    strat = by_id.get(args.strategy or config.strategies[0].id)
    if strat is None:
        raise ConfigError(f"unknown strategy {args.strategy!r}; have {sorted(by_id)}")
    value = args.value if args.value is not None else config.sweep_values[-1]
    n_qubits, n_layers = _cell_shape(config, value)
    raw = datasets.load(config.dataset, config.data_path)
    data = datasets.prepare(
        raw, n_qubits, derived_seed(config.base_seed, "split", config.dataset)
    )
    circuit = build_circuit(n_qubits, config.n_rot, n_layers)
    obs = _OBSERVABLES[config.observable](n_qubits)
    seed = derived_seed(config.base_seed, strat.id, config.sweep_axis, value, 0)
    report = train(circuit, data, _train_config(config, strat, data, obs, seed))
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"train_{strat.id}_{config.sweep_axis}-{value}.json"
    path.write_text(
        json.dumps(report.to_jsonable(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    print(f"test_accuracy = {report.test_acc:.4f}")
    print(path)
    return 0


def _cmd_emit(args) -> int:
    src = Path(args.records)
    if not src.exists():
        raise ConfigError(f"records file not found: {src}")
    payload = json.loads(src.read_text(encoding="utf-8"))
    records = [VarianceRecord(**d) for d in payload.get("records", [])]
    failures = [CellFailure(**d) for d in payload.get("failures", [])]
    out_dir = args.out or os.environ.get(OUT_ENV_VAR, "results")
    formats = tuple(args.formats.split(",")) if args.formats else ("csv", "svg", "png")
    paths = emit(records, None, out_dir, formats, failures)
    for p in paths:
        print(p)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _Parser(prog="vqclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a variance sweep grid")
    _add_common(p_sweep)
    p_sweep.add_argument("--formats", help="comma list of csv,json,svg,png")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sel = sub.add_parser("select-dr", help="pick dr_max by validation variance")
    _add_common(p_sel)
    p_sel.add_argument("--candidates", help="comma list of dr_max candidates")
    p_sel.set_defaults(func=_cmd_select_dr)

    p_one = sub.add_parser("train-one", help="train a single cell and dump its report")
    _add_common(p_one)
    p_one.add_argument("--strategy", help="strategy id (default: first in config)")
    p_one.add_argument("--value", type=int, help="axis value (default: largest)")
    p_one.set_defaults(func=_cmd_train_one)

    p_emit = sub.add_parser("emit", help="re-render artifacts from records.json")
    p_emit.add_argument("--records", required=True, help="records.json from a sweep")
    p_emit.add_argument("--out", help="output directory")
    p_emit.add_argument("--formats", help="comma list of csv,json,svg,png")
    p_emit.set_defaults(func=_cmd_emit)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"vqclab: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"vqclab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
