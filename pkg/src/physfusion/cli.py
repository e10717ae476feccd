"""Command-line front end.

Subcommands pass files between stages::

    physfusion synth --n 17 --seed 7 --out data/
    physfusion preprocess --data-dir data/ --out clean/
    physfusion featurize --data-dir data/ --out feats/ --windows 3,5
    physfusion sweep --config run.cfg
    physfusion report --report out/report.json --out figs/

Run configs are ``key=value`` text files; lines starting with ``#`` are
comments. Every config key has a flag of the same name with dashes; flags
win. Failures print one line, ``error <Kind>: <message>``, to stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import dsp, ingest, synth
from .core import WINDOWS_S
from .epoch import EpochingConfig, build_dataset
from .errors import ConfigError, IoError, PipelineError
from .evaluation import ComparisonTask, ExperimentConfig, ExperimentReport, SignalSource, run_experiment
from .features import extract_features
from .models import DEFAULT_GRIDS, MODEL_KINDS

EXIT_PIPELINE = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _csv_list(text):
    return [p.strip() for p in str(text).split(",") if p.strip()]


def _bool(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_float(text):
    v = str(text).strip().lower()
    return None if v in ("", "none") else float(v)


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = ""
    fs_override: float | None = None
    windows: tuple = WINDOWS_S
    tasks: tuple = tuple(t.value for t in ComparisonTask)
    models: tuple = MODEL_KINDS
    seeds: int = 10
    master_seed: int = 0
    baseline_guard_s: float = 60.0
    notch_q: float = dsp.DEFAULT_NOTCH_Q
    ppg_extra_hp: bool = False
    grids: dict = field(default_factory=dict)
    output_dir: str = "out"
    n_jobs: int = 0  # 0 means one worker per available core

    _PARSERS = {
        "data_dir": str,
        "fs_override": _opt_float,
        "windows": lambda s: tuple(int(w) for w in _csv_list(s)),
        "tasks": lambda s: tuple(_csv_list(s)),
        "models": lambda s: tuple(_csv_list(s)),
        "seeds": int,
        "master_seed": int,
        "baseline_guard_s": float,
        "notch_q": float,
        "ppg_extra_hp": _bool,
        "grids": json.loads,
        "output_dir": str,
        "n_jobs": int,
    }

    def __post_init__(self):
        bad = [w for w in self.windows if w not in WINDOWS_S]
        if bad or not self.windows:
            raise ConfigError(f"windows must be a non-empty subset of {WINDOWS_S}")
        known = {t.value for t in ComparisonTask}
        if not self.tasks or any(t not in known for t in self.tasks):
            raise ConfigError(f"tasks must be drawn from {sorted(known)}")
        if not self.models or any(m not in MODEL_KINDS for m in self.models):
            raise ConfigError(f"models must be drawn from {list(MODEL_KINDS)}")
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if self.baseline_guard_s < 0:
            raise ConfigError("baseline_guard_s must be >= 0")
        if not self.notch_q > 0:
            raise ConfigError("notch_q must be > 0")
        if self.fs_override is not None and not self.fs_override > 0:
            raise ConfigError("fs_override must be > 0")
        if self.n_jobs < 0:
            raise ConfigError("n_jobs must be >= 0")
        if not isinstance(self.grids, dict):
            raise ConfigError("grids must be a JSON object keyed by model kind")
        for kind, grid in self.grids.items():
            if kind not in DEFAULT_GRIDS:
                raise ConfigError(f"grids: unknown model kind {kind!r}")
            if not isinstance(grid, list) or not grid or not all(isinstance(g, dict) for g in grid):
                raise ConfigError(f"grids[{kind!r}] must be a non-empty list of objects")

    @classmethod
    def keys(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def parse_value(cls, key, text):
        if key not in cls._PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            return cls._PARSERS[key](text)
        except (ValueError, json.JSONDecodeError) as err:
            raise ConfigError(f"bad value for {key}: {err}") from None

    @classmethod
    def from_text(cls, text, base=None):
        values = {}
        for i, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"line {i}: expected key=value")
            key = key.strip()
            if key in values:
                raise ConfigError(f"line {i}: duplicate key {key!r}")
            values[key] = cls.parse_value(key, value.strip())
        return replace(base or cls(), **values)

    def to_text(self):
        out = []
        for key in self.keys():
            v = getattr(self, key)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, dict):
                v = json.dumps(v, sort_keys=True)
            elif v is None:
                v = "none"
            elif isinstance(v, bool):
                v = str(v).lower()
            out.append(f"{key}={v}")
        return "\n".join(out) + "\n"

    def experiment_config(self):
        n_jobs = self.n_jobs or os.cpu_count() or 1
        return ExperimentConfig(windows=self.windows, tasks=self.tasks, models=self.models,
                                n_seeds=self.seeds, master_seed=self.master_seed,
                                baseline_guard_s=self.baseline_guard_s, grids=dict(self.grids),
                                notch_q=self.notch_q, ppg_extra_hp=self.ppg_extra_hp,
                                n_jobs=n_jobs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _read(path):
    try:
        return Path(path).read_bytes()
    except OSError as err:
        raise IoError(f"cannot read {path}: {err.strerror}") from None


def _write(path, data):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data if isinstance(data, bytes) else data.encode("utf-8"))
    except OSError as err:
        raise IoError(f"cannot write {path}: {err.strerror}") from None


def load_recordings(data_dir, fs_override=None):
    """Read every ``rec_<id>.csv`` with its ``ann_<id>.csv`` from ``data_dir``."""
    d = Path(data_dir)
    if not d.is_dir():
        raise IoError(f"data directory {data_dir} does not exist")
    recs = sorted(d.glob("rec_*.csv"))
    if not recs:
        raise IoError(f"no rec_*.csv files in {data_dir}")
    out = []
    for path in recs:
        pid = path.stem[len("rec_"):]
        ann_path = d / f"ann_{pid}.csv"
        try:
            rec = ingest.parse_recording(_read(path), fs_override, pid)
            anns = ingest.parse_annotations(_read(ann_path), rec)
        except PipelineError as err:
            raise err.with_context(path.name)
        out.append((rec.with_annotations(anns), anns))
    return out


def cmd_synth(args):
    params = synth.EffectParams().with_separability(args.separability)
    data = synth.synth_benchmark(args.n, args.seed, params, args.duration, args.fs, args.onset)
    out = Path(args.out)
    for rec, anns in data:
        pid = rec.participant_id
        _write(out / f"rec_{pid}.csv", ingest.write_recording(rec))
        _write(out / f"ann_{pid}.csv", ingest.write_annotations(anns))
    return [f"wrote {len(data)} recordings to {out}"]


def cmd_preprocess(args):
    out = Path(args.out)
    data = load_recordings(args.data_dir, args.fs_override)
    for rec, anns in data:
        clean = dsp.preprocess_recording(rec, args.notch_q, args.ppg_extra_hp)
        _write(out / f"rec_{rec.participant_id}.csv", ingest.write_recording(clean, precision=17))
        _write(out / f"ann_{rec.participant_id}.csv", ingest.write_annotations(anns))
    return [f"filtered {len(data)} recordings into {out}"]


def cmd_featurize(args):
    windows = tuple(int(w) for w in _csv_list(args.windows))
    RunConfig(windows=windows)  # validates the window set
    data = load_recordings(args.data_dir, args.fs_override)
    if not args.preprocessed:
        data = [(dsp.preprocess_recording(r, args.notch_q, args.ppg_extra_hp), a) for r, a in data]
    out = Path(args.out)
    lines = []
    for w in windows:
        ds = build_dataset(data, EpochingConfig(w, args.baseline_guard_s))
        table = [(extract_features(ep), label) for ep, label in ds]
        _write(out / f"features_w{w}.csv", ingest.write_feature_table(table))
        lines.append(f"window {w} s: {len(table)} rows")
    return lines


def _sweep_config(args):
    cfg = RunConfig()
    if args.config:
        cfg = RunConfig.from_text(_read(args.config).decode("utf-8"), cfg)
    overrides = {}
    for key in RunConfig.keys():
        v = getattr(args, key, None)
        if v is not None:
            overrides[key] = RunConfig.parse_value(key, v)
    cfg = replace(cfg, **overrides)
    if not cfg.data_dir:
        raise ConfigError("data_dir is required")
    return cfg


def cmd_sweep(args):
    cfg = _sweep_config(args)
    out = Path(cfg.output_dir)
    _write(out / "effective_config.cfg", cfg.to_text())
    data = load_recordings(cfg.data_dir, cfg.fs_override)
    report = run_experiment(data, cfg.experiment_config())
    _write(out / "report.csv", report.to_csv())
    _write(out / "report.json", report.to_json())
    return [f"wrote {len(report.cells)} cells to {out / 'report.csv'}"]


def render_tables(report):
    """Per-task text tables: rows are (source, model), columns are windows."""
    tables = {}
    keys = report.sorted_keys()
    for task in ComparisonTask:
        tkeys = [k for k in keys if k[0] is task]
        if not tkeys:
            continue
        windows = sorted({k[1] for k in tkeys})
        rows = sorted({(k[2], k[3]) for k in tkeys},
                      key=lambda r: (list(SignalSource).index(r[0]), MODEL_KINDS.index(r[1])))
        head = f"{'source':<13}{'model':<6}" + "".join(f"{f'{w} s':>22}" for w in windows)
        lines = [f"{task.value} (chance {task.chance_level:.3f})", head]
        for source, model in rows:
            cells = []
            for w in windows:
                c = report.cells.get((task, w, source, model))
                cells.append(f"{'-':>22}" if c is None else
                             f"{c.mean_accuracy:>8.3f} [{c.ci_low:.3f},{c.ci_high:.3f}]")
            lines.append(f"{source.value:<13}{model:<6}" + "".join(cells))
        tables[task] = "\n".join(lines) + "\n"
    return tables


def panel_csv(report, task, window):
    """Bar heights and CI bounds for one (task, window) panel."""
    lines = ["source,model,mean_acc,ci_low,ci_high,chance"]
    for k in report.sorted_keys():
        if k[0] is task and k[1] == window:
            c = report.cells[k]
            lines.append(f"{k[2].value},{k[3]},{c.mean_accuracy:.17g},{c.ci_low:.17g},"
                         f"{c.ci_high:.17g},{task.chance_level:.17g}")
    return "\n".join(lines) + "\n"


def cmd_report(args):
    text = _read(args.report).decode("utf-8")
    try:
        report = ExperimentReport.from_json(text)
    except (KeyError, ValueError, TypeError) as err:
        raise PipelineError(f"{args.report} is not a report: {err}") from None
    out = Path(args.out)
    written = 0
    for task, table in render_tables(report).items():
        _write(out / f"table_{task.value}.txt", table)
        for w in sorted({k[1] for k in report.cells if k[0] is task}):
            _write(out / f"panel_{task.value}_w{w}.csv", panel_csv(report, task, w))
            written += 1
    return [f"wrote {written} panels to {out}"]


def build_parser():
    p = _Parser(prog="physfusion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic benchmark")
    s.add_argument("--n", type=int, default=17, help="recordings per event class")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--separability", type=float, default=1.0)
    s.add_argument("--duration", type=float, default=synth.DEFAULT_DURATION_S)
    s.add_argument("--onset", type=float, default=synth.DEFAULT_ONSET_S)
    s.add_argument("--fs", type=float, default=synth.DEFAULT_FS_HZ)
    s.set_defaults(func=cmd_synth)

    def filter_flags(q):
        q.add_argument("--data-dir", required=True)
        q.add_argument("--out", required=True)
        q.add_argument("--fs-override", type=float, default=None)
        q.add_argument("--notch-q", type=float, default=dsp.DEFAULT_NOTCH_Q)
        q.add_argument("--ppg-extra-hp", action="store_true")

    s = sub.add_parser("preprocess", help="filter recordings")
    filter_flags(s)
    s.set_defaults(func=cmd_preprocess)

    s = sub.add_parser("featurize", help="epoch and extract feature tables")
    filter_flags(s)
    s.add_argument("--windows", default=",".join(map(str, WINDOWS_S)))
    s.add_argument("--baseline-guard-s", type=float, default=60.0)
    s.add_argument("--preprocessed", action="store_true",
                   help="inputs were already written by 'preprocess'")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("sweep", help="run the experiment grid")
    s.add_argument("--config")
    for key in RunConfig.keys():
        s.add_argument("--" + key.replace("_", "-"), dest=key, default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("report", help="render tables and plot-ready CSVs")
    s.add_argument("--report", required=True, help="report.json written by 'sweep'")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return p


def _exit_code(err):
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, IoError):
        return EXIT_IO
    return EXIT_PIPELINE


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        lines = args.func(args)
    except PipelineError as err:
        msg = " ".join(str(err).split())
        print(f"error {type(err).__name__}: {msg}", file=sys.stderr)
        return _exit_code(err)
    for line in lines:
        print(line)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
