"""End-to-end experiment runs: data, split, train, evaluate, write reports.

A run is fully described by a RunConfig (data source, loss, model shape,
optimizer, split policy, seed) and is deterministic given that config: the
run seed fans out into fixed sub-seeds for generation, splitting,
initialization, and batch shuffling. Reports are byte-stable across
re-runs; the only volatile line is the "# generated ..." timestamp at the
top of summary files.

Config files are flat key = value text with section prefixes::

    seed = 7
    data.preset = DDI-DB171
    loss.kind = tfl
    loss.beta = 2.0
    model.hidden_dim = 256
    optim.epochs = 50
    split.test_fraction = 0.2

Every run writes its effective config next to its outputs, and that file
reproduces the run exactly when fed back in.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from datetime import datetime, timezone

import numpy as np

from .analysis import curve_table, fl_vanishing_threshold, tfl_vanishing_threshold, write_curve
from .datagen import (
    DatasetSpec,
    generate_dataset,
    preset_spec,
    read_dataset,
    records_to_arrays,
)
from .errors import ConfigError, DataFormatError
from .fusion import (
    VARIANTS,
    EpochStats,
    ModelConfig,
    OptimizerConfig,
    init_params,
    predict_proba,
    save_model,
    train,
)
from .imbalance import ClassStats, TailPartition, class_stats_from_counts, tail_partition
from .losses import LOSS_KINDS, LossSpec
from .metrics import MetricsReport, format_per_class, format_summary, metrics_report

__all__ = [
    "DataConfig",
    "LossConfig",
    "NetConfig",
    "OptimConfig",
    "SplitConfig",
    "SweepConfig",
    "RunConfig",
    "RunResult",
    "split_indices",
    "build_loss_spec",
    "load_run_data",
    "run_training",
    "compare_losses",
    "ablate",
    "sweep",
    "analyze",
    "config_to_text",
    "config_from_text",
    "parse_config_file",
    "write_generated_dataset",
]


@dataclass(frozen=True)
class DataConfig:
    """Where the records come from: a file, a named preset, or generator fields."""

    preset: str | None = None
    path: str | None = None
    n_classes: int = 10
    n_samples: int = 2000
    cir: float = 100.0
    n_drugs: int = 50
    embed_dims: tuple[int, int, int, int] = (64, 64, 64, 64)
    signal_scale: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    offset_scale: float = 0.1
    noise_scale: float = 0.5


@dataclass(frozen=True)
class LossConfig:
    kind: str = "tfl"
    gamma: float = 2.0
    beta: float = 2.0
    ts: float = 0.9
    lam: float = 0.999
    margin_c: float = 0.5


@dataclass(frozen=True)
class NetConfig:
    hidden_dim: int = 256
    k_stages: int = 2
    classifier_dims: tuple[int, int, int, int] | None = None
    activation: str = "relu"
    pool_window: int = 4
    variant: str = "GSTE"


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.2
    val_fraction: float = 0.1
    stratified: bool = True


@dataclass(frozen=True)
class OptimConfig:
    lr: float = 1e-3
    batch_size: int = 256
    epochs: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    patience: int | None = 10


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "beta"
    grid: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    repeats: int = 3

    def __post_init__(self):
        if self.parameter not in ("beta", "gamma", "ts"):
            raise ConfigError(f"sweep parameter must be beta/gamma/ts, got {self.parameter!r}")
        if not self.grid:
            raise ConfigError("sweep grid is empty")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    model: NetConfig = field(default_factory=NetConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    seed: int = 0


@dataclass
class RunResult:
    report: MetricsReport
    trace: list[EpochStats]
    model_config: ModelConfig
    params: dict
    train_stats: ClassStats
    tail: TailPartition
    test_labels: np.ndarray


# ---------------------------------------------------------------------------
# splitting


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_indices(labels, test_fraction: float, seed: int, stratified: bool = True):
    """Deterministic train/test index split.

    Stratified mode samples per class, keeps at least one test sample for
    any class with two or more, and routes singleton classes entirely to
    train (their metrics would be meaningless and training needs them more).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise ConfigError("labels must be a non-empty 1-D sequence")
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigError(f"test_fraction must be in [0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(labels.size)
        n_test = _round_half_up(labels.size * test_fraction)
        return np.sort(perm[n_test:]), np.sort(perm[:n_test])

    train_parts = []
    test_parts = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size == 1 or test_fraction == 0.0:
            train_parts.append(idx)
            continue
        shuffled = idx[rng.permutation(idx.size)]
        n_test = min(idx.size - 1, max(1, _round_half_up(idx.size * test_fraction)))
        test_parts.append(shuffled[:n_test])
        train_parts.append(shuffled[n_test:])
    train_idx = np.sort(np.concatenate(train_parts))
    test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=np.int64)
    return train_idx, test_idx


# ---------------------------------------------------------------------------
# assembling runs


def build_loss_spec(cfg: LossConfig, stats: ClassStats) -> LossSpec:
    """Materialize a LossSpec against concrete class statistics."""
    tail = tail_partition(stats, cfg.ts) if cfg.kind.lower() == "tfl" else None
    return LossSpec(
        kind=cfg.kind,
        gamma=cfg.gamma,
        beta=cfg.beta,
        lam=cfg.lam,
        margin_c=cfg.margin_c,
        stats=stats,
        tail=tail,
    )


def _dataset_spec(data: DataConfig, seed: int) -> DatasetSpec:
    if data.preset is not None:
        return preset_spec(
            data.preset,
            seed=seed,
            embed_dims=data.embed_dims,
            signal_scale=data.signal_scale,
            offset_scale=data.offset_scale,
            noise_scale=data.noise_scale,
        )
    return DatasetSpec(
        n_classes=data.n_classes,
        n_samples=data.n_samples,
        cir=data.cir,
        n_drugs=data.n_drugs,
        embed_dims=data.embed_dims,
        seed=seed,
        signal_scale=data.signal_scale,
        offset_scale=data.offset_scale,
        noise_scale=data.noise_scale,
    )


def load_run_data(run: RunConfig):
    """Resolve a run's data source into (feats_a, feats_b, labels, n_classes)."""
    if run.data.path is not None:
        records, stats = read_dataset(run.data.path)
        if not records:
            raise ConfigError(f"dataset file {run.data.path} holds no records")
        labels_max = max(r.label for r in records)
        n_classes = stats.n_classes if stats is not None else labels_max + 1
        feats_a, feats_b, labels = records_to_arrays(records)
        return feats_a, feats_b, labels, n_classes
    spec = _dataset_spec(run.data, seed=run.seed)
    records, stats = generate_dataset(spec)
    feats_a, feats_b, labels = records_to_arrays(records)
    return feats_a, feats_b, labels, stats.n_classes


def _take(feats: dict, idx: np.ndarray) -> dict:
    return {m: v[idx] for m, v in feats.items()}


def run_training(run: RunConfig, out_dir=None, _data=None) -> RunResult:
    """One full experiment: resolve data, split, train, evaluate, write reports.

    _data lets sibling runs (loss comparisons, sweeps) reuse already-built
    arrays; it must come from load_run_data on an identical data config
    and seed.
    """
    if run.model.variant.upper() not in VARIANTS:
        raise ConfigError(
            f"unknown variant {run.model.variant!r}; expected one of {', '.join(VARIANTS)}"
        )
    feats_a, feats_b, labels, n_classes = _data if _data is not None else load_run_data(run)

    train_idx, test_idx = split_indices(
        labels, run.split.test_fraction, seed=run.seed + 1, stratified=run.split.stratified
    )
    if test_idx.size == 0:
        raise ConfigError("split produced an empty test set")
    val_idx = np.array([], dtype=np.int64)
    if run.split.val_fraction > 0.0:
        sub_train, sub_val = split_indices(
            labels[train_idx],
            run.split.val_fraction,
            seed=run.seed + 4,
            stratified=run.split.stratified,
        )
        val_idx = train_idx[sub_val]
        train_idx = train_idx[sub_train]

    tally = np.bincount(labels[train_idx], minlength=n_classes)
    train_stats = class_stats_from_counts(tally)
    loss_spec = build_loss_spec(run.loss, train_stats)
    tail = loss_spec.tail if loss_spec.tail is not None else tail_partition(train_stats, run.loss.ts)

    embed_dims = tuple(feats_a[m].shape[1] for m in ("g", "s", "t", "e"))
    model_config = ModelConfig(
        n_classes=n_classes,
        embed_dims=embed_dims,
        hidden_dim=run.model.hidden_dim,
        k_stages=run.model.k_stages,
        classifier_dims=run.model.classifier_dims,
        activation=run.model.activation,
        pool_window=run.model.pool_window,
        modalities=VARIANTS[run.model.variant.upper()],
    )
    params = init_params(model_config, seed=run.seed + 2)
    opt = OptimizerConfig(
        lr=run.optim.lr,
        batch_size=run.optim.batch_size,
        epochs=run.optim.epochs,
        beta1=run.optim.beta1,
        beta2=run.optim.beta2,
        eps=run.optim.eps,
        seed=run.seed + 3,
        patience=run.optim.patience,
    )
    train_data = (_take(feats_a, train_idx), _take(feats_b, train_idx), labels[train_idx])
    val_data = None
    if val_idx.size:
        val_data = (_take(feats_a, val_idx), _take(feats_b, val_idx), labels[val_idx])
    trace = train(model_config, params, train_data, loss_spec, opt, val_data=val_data)

    probs = predict_proba(model_config, params, _take(feats_a, test_idx), _take(feats_b, test_idx))
    report = metrics_report(probs, labels[test_idx])

    result = RunResult(
        report=report,
        trace=trace,
        model_config=model_config,
        params=params,
        train_stats=train_stats,
        tail=tail,
        test_labels=labels[test_idx],
    )
    if out_dir is not None:
        _write_run_outputs(out_dir, run, result)
    return result


def _timestamp_line() -> str:
    return f"# generated {datetime.now(timezone.utc).isoformat()}\n"


def _write_run_outputs(out_dir, run: RunConfig, result: RunResult) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "effective.cfg"), "w") as fh:
        fh.write(config_to_text(run))
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(_timestamp_line())
        fh.write(format_summary(result.report))
    with open(os.path.join(out_dir, "per_class.csv"), "w") as fh:
        fh.write(format_per_class(result.report))
    with open(os.path.join(out_dir, "trace.csv"), "w") as fh:
        fh.write("epoch,train_loss,val_macro_f1\n")
        for row in result.trace:
            val = "" if row.val_macro_f1 is None else f"{row.val_macro_f1:.12g}"
            fh.write(f"{row.epoch},{row.train_loss:.12g},{val}\n")
    save_model(os.path.join(out_dir, "checkpoint.npz"), result.model_config, result.params)


_METRIC_COLUMNS = (
    ("accuracy", lambda r: r.accuracy),
    ("macro_precision", lambda r: r.macro_precision),
    ("macro_recall", lambda r: r.macro_recall),
    ("macro_f1", lambda r: r.macro_f1),
    ("macro_auc", lambda r: r.macro_auc),
    ("macro_aupr", lambda r: r.macro_aupr),
)


def _metric_row(report: MetricsReport) -> list[float]:
    return [fn(report) for _, fn in _METRIC_COLUMNS]


def compare_losses(run: RunConfig, kinds=LOSS_KINDS, out_dir=None):
    """Train once per loss on the same data, split, and init; tabulate metrics."""
    data = load_run_data(run)
    rows = []
    for kind in kinds:
        sub = replace(run, loss=replace(run.loss, kind=kind))
        result = run_training(sub, _data=data)
        rows.append((kind, _metric_row(result.report)))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "losses.csv"), "w") as fh:
            fh.write("loss," + ",".join(name for name, _ in _METRIC_COLUMNS) + "\n")
            for kind, vals in rows:
                fh.write(kind + "," + ",".join(f"{v:.12g}" for v in vals) + "\n")
        with open(os.path.join(out_dir, "effective.cfg"), "w") as fh:
            fh.write(config_to_text(run))
    return rows


def ablate(run: RunConfig, variants=tuple(VARIANTS), out_dir=None):
    """Train the configured loss once per modality variant; tabulate metrics."""
    data = load_run_data(run)
    rows = []
    for variant in variants:
        if variant.upper() not in VARIANTS:
            raise ConfigError(f"unknown variant {variant!r}")
        sub = replace(run, model=replace(run.model, variant=variant.upper()))
        result = run_training(sub, _data=data)
        rows.append((variant.upper(), _metric_row(result.report)))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "ablation.csv"), "w") as fh:
            fh.write("variant," + ",".join(name for name, _ in _METRIC_COLUMNS) + "\n")
            for variant, vals in rows:
                fh.write(variant + "," + ",".join(f"{v:.12g}" for v in vals) + "\n")
        with open(os.path.join(out_dir, "effective.cfg"), "w") as fh:
            fh.write(config_to_text(run))
    return rows


def sweep(run: RunConfig, cfg: SweepConfig, out_dir=None):
    """Grid over one TFL hyperparameter with repeated seeds; mean and spread per point."""
    rows = []
    per_value = {v: [] for v in cfg.grid}
    for r in range(cfg.repeats):
        seed = run.seed + r
        rep_run = replace(run, seed=seed)
        data = load_run_data(rep_run)
        for value in cfg.grid:
            loss = rep_run.loss
            if cfg.parameter == "beta":
                loss = replace(loss, beta=float(value))
            elif cfg.parameter == "gamma":
                loss = replace(loss, gamma=float(value))
            else:
                loss = replace(loss, ts=float(value))
            result = run_training(replace(rep_run, loss=loss), _data=data)
            per_value[value].append(_metric_row(result.report))
    for value in cfg.grid:
        arr = np.array(per_value[value])
        rows.append((float(value), arr.mean(axis=0), arr.std(axis=0)))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        header = [cfg.parameter]
        for name, _ in _METRIC_COLUMNS:
            header += [f"mean_{name}", f"std_{name}"]
        with open(os.path.join(out_dir, "sweep.csv"), "w") as fh:
            fh.write(",".join(header) + "\n")
            for value, mean, std in rows:
                cells = [f"{value:.12g}"]
                for k in range(mean.size):
                    cells += [f"{mean[k]:.12g}", f"{std[k]:.12g}"]
                fh.write(",".join(cells) + "\n")
        with open(os.path.join(out_dir, "effective.cfg"), "w") as fh:
            fh.write(config_to_text(run))
    return rows


def analyze(gamma: float = 2.0, beta: float = 2.0, out_dir=None) -> str:
    """Report gradient-vanishing crossovers and write ce/fl/tfl curve tables."""
    fl = fl_vanishing_threshold(gamma)
    tfl = tfl_vanishing_threshold(gamma, beta)
    lines = [
        f"fl gamma={gamma:g}: gradient crossover at P_y = {fl.crossover_p:.12g}",
        f"tfl gamma={gamma:g} beta={beta:g}: gradient crossover at P_y = {tfl.crossover_p:.12g}",
        f"tfl crossover inside unit interval: {tfl.in_unit_interval}",
    ]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        write_curve(os.path.join(out_dir, "curve_ce.csv"), curve_table("ce"))
        write_curve(os.path.join(out_dir, "curve_fl.csv"), curve_table("fl", gamma=gamma))
        write_curve(
            os.path.join(out_dir, "curve_tfl.csv"), curve_table("tfl", gamma=gamma, beta=beta)
        )
        lines.append(f"curve tables written to {out_dir}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# config file round trip


def _fmt_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    return str(v)


def config_to_text(run: RunConfig) -> str:
    """Flatten a RunConfig to the key = value text format (full round trip)."""
    lines = [f"seed = {run.seed}"]
    for section in ("data", "loss", "model", "optim", "split"):
        obj = getattr(run, section)
        for f in fields(obj):
            lines.append(f"{section}.{f.name} = {_fmt_value(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def _parse_int(v):
    return int(v)


def _parse_float(v):
    return float(v)


def _parse_str(v):
    return v


def _parse_bool(v):
    low = v.lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _parse_opt_str(v):
    return None if v.lower() == "none" else v


def _parse_opt_int(v):
    return None if v.lower() == "none" else int(v)


def _parse_int_tuple(v):
    return tuple(int(x) for x in v.split(","))


def _parse_opt_int_tuple(v):
    return None if v.lower() == "none" else _parse_int_tuple(v)


def _parse_float_tuple(v):
    return tuple(float(x) for x in v.split(","))


_PARSERS = {
    "seed": _parse_int,
    "data.preset": _parse_opt_str,
    "data.path": _parse_opt_str,
    "data.n_classes": _parse_int,
    "data.n_samples": _parse_int,
    "data.cir": _parse_float,
    "data.n_drugs": _parse_int,
    "data.embed_dims": _parse_int_tuple,
    "data.signal_scale": _parse_float_tuple,
    "data.offset_scale": _parse_float,
    "data.noise_scale": _parse_float,
    "loss.kind": _parse_str,
    "loss.gamma": _parse_float,
    "loss.beta": _parse_float,
    "loss.ts": _parse_float,
    "loss.lam": _parse_float,
    "loss.margin_c": _parse_float,
    "model.hidden_dim": _parse_int,
    "model.k_stages": _parse_int,
    "model.classifier_dims": _parse_opt_int_tuple,
    "model.activation": _parse_str,
    "model.pool_window": _parse_int,
    "model.variant": _parse_str,
    "optim.lr": _parse_float,
    "optim.batch_size": _parse_int,
    "optim.epochs": _parse_int,
    "optim.beta1": _parse_float,
    "optim.beta2": _parse_float,
    "optim.eps": _parse_float,
    "optim.patience": _parse_opt_int,
    "split.test_fraction": _parse_float,
    "split.val_fraction": _parse_float,
    "split.stratified": _parse_bool,
}


def config_from_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse config text into a RunConfig, overriding `base` (defaults if None)."""
    run = base if base is not None else RunConfig()
    updates: dict[str, dict] = {"data": {}, "loss": {}, "model": {}, "optim": {}, "split": {}}
    seed = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _PARSERS:
            raise DataFormatError(f"line {lineno}: unknown config key {key!r}")
        try:
            parsed = _PARSERS[key](value)
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad value for {key}: {exc}") from None
        if key == "seed":
            seed = parsed
        else:
            section, _, name = key.partition(".")
            updates[section][name] = parsed

    run = replace(
        run,
        data=replace(run.data, **updates["data"]),
        loss=replace(run.loss, **updates["loss"]),
        model=replace(run.model, **updates["model"]),
        optim=replace(run.optim, **updates["optim"]),
        split=replace(run.split, **updates["split"]),
    )
    if seed is not None:
        run = replace(run, seed=seed)
    return run


def parse_config_file(path, base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return config_from_text(fh.read(), base=base)


def write_generated_dataset(data: DataConfig, seed: int, out_path) -> ClassStats:
    """cmd-gen workhorse: generate per config and write the dataset file."""
    from .datagen import write_dataset

    spec = _dataset_spec(data, seed=seed)
    records, stats = generate_dataset(spec)
    write_dataset(out_path, records, n_classes=spec.n_classes)
    return stats
