"""Splitting, cross-validated grid search, bootstrap intervals and the
experiment sweep over (task, window, signal source, model) cells.

Every cell runs split -> grid search on the training part -> refit on the
whole training part -> predict the held-out part, repeated over several split
seeds. The reported mean accuracy is the mean over split seeds; the interval
is a percentile bootstrap over the pooled per-sample correctness.
"""

from __future__ import annotations

import json
import zlib
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import dsp
from .core import WINDOWS_S, ChannelKind, ClassLabel, round_half_up
from .epoch import DEFAULT_BASELINE_GUARD_S, EpochingConfig, build_dataset
from .errors import (ClassSmallerThanKError, ClassTooSmallError, EmptyGridError,
                     EmptyVectorError, PipelineError)
from .features import extract_features
from .fusion import late_fuse_batch
from .models import DEFAULT_GRIDS, MODEL_KINDS, fit_model, predict_model
from .models.gbt import labels_from_scores, staged_raw_scores

REPORT_COLUMNS = ("task", "window_s", "source", "model", "mean_acc", "ci_low", "ci_high",
                  "seed_count")


class ComparisonTask(Enum):
    STARTLE_VS_SURPRISE = "startle_vs_surprise"
    STARTLE_VS_BASELINE = "startle_vs_baseline"
    SURPRISE_VS_BASELINE = "surprise_vs_baseline"
    THREE_CLASS = "three_class"

    @property
    def classes(self):
        S, U, B = ClassLabel.STARTLE, ClassLabel.SURPRISE, ClassLabel.BASELINE
        return {
            "startle_vs_surprise": (S, U),
            "startle_vs_baseline": (S, B),
            "surprise_vs_baseline": (U, B),
            "three_class": (S, U, B),
        }[self.value]

    @property
    def chance_level(self):
        return 1.0 / len(self.classes)


class SignalSource(Enum):
    ECG = "ecg"
    EDA = "eda"
    PPG = "ppg"
    RESP = "resp"
    EARLY_FUSION = "early_fusion"
    LATE_FUSION = "late_fusion"

    @property
    def channel(self):
        return ChannelKind[self.name] if self.name in ChannelKind.__members__ else None


MODALITY_SOURCES = (SignalSource.ECG, SignalSource.EDA, SignalSource.PPG, SignalSource.RESP)


def _order(enum_cls):
    return {m: i for i, m in enumerate(enum_cls)}


# --------------------------------------------------------------------------- splits

def split_train_test(labels, ratio=0.8, seed=0):
    """Stratified split into sorted ``(train_idx, test_idx)`` position arrays.

    Per class, ``round(n * (1 - ratio))`` samples (at least one) go to test.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < 5:
            raise ClassTooSmallError(f"class {c} has {idx.size} samples, need at least 5")
        perm = rng.permutation(idx)
        n_test = max(1, round_half_up(idx.size * (1 - ratio)))
        test.append(perm[:n_test])
        train.append(perm[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def kfold(labels, k=5, seed=0):
    """Stratified k folds as ``[(fit_idx, val_idx), ...]``.

    Shuffled samples are dealt round-robin with the fold counter carried over
    from one class to the next, so fold sizes differ by at most one both per
    class and overall.
    """
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=int)
    offset = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size < k:
            raise ClassSmallerThanKError(f"class {c} has {idx.size} samples, fewer than k={k}")
        perm = rng.permutation(idx)
        fold_of[perm] = (offset + np.arange(idx.size)) % k
        offset += idx.size
    pos = np.arange(labels.size)
    return [(pos[fold_of != f], pos[fold_of == f]) for f in range(k)]


# --------------------------------------------------------------------------- search

def _cv_scores_gbt(grid, X, y, folds, classes):
    """CV accuracy for every GBT grid entry; entries differing only in
    ``n_rounds`` share one fit and are scored at staged checkpoints."""
    groups = defaultdict(list)
    for i, params in enumerate(grid):
        key = tuple(sorted((k, v) for k, v in params.items() if k != "n_rounds"))
        groups[key].append(i)
    scores = np.zeros(len(grid))
    for key, members in groups.items():
        rounds = [grid[i].get("n_rounds", 50) for i in members]
        base = dict(key)
        for fit_idx, val_idx in folds:
            fm = fit_model("gbt", X[fit_idx], y[fit_idx], {**base, "n_rounds": max(rounds)},
                           classes)
            staged = staged_raw_scores(fm.model, X[val_idx], rounds)
            for i, r in zip(members, rounds):
                pred, _ = labels_from_scores(fm.model, staged[r])
                scores[i] += np.mean(pred == y[val_idx])
    return scores / len(folds)


def cv_scores(model_kind, grid, X, y, k=5, seed=0, classes=None):
    """Mean validation accuracy of each grid entry over stratified k folds."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes = np.unique(y) if classes is None else np.array(sorted(classes))
    folds = kfold(y, k, seed)
    if model_kind == "gbt":
        return _cv_scores_gbt(grid, X, y, folds, classes)
    scores = np.zeros(len(grid))
    for i, params in enumerate(grid):
        for fit_idx, val_idx in folds:
            fm = fit_model(model_kind, X[fit_idx], y[fit_idx], params, classes)
            pred, _ = predict_model(fm, X[val_idx])
            scores[i] += np.mean(pred == y[val_idx])
    return scores / len(folds)


def grid_search(model_kind, grid, X, y, k=5, seed=0, classes=None):
    """Grid entry with the best mean CV accuracy; ties go to the earlier entry."""
    grid = list(grid)
    if not grid:
        raise EmptyGridError("grid search needs at least one candidate")
    if len(grid) == 1:
        return dict(grid[0])
    scores = cv_scores(model_kind, grid, X, y, k, seed, classes)
    return dict(grid[int(np.argmax(scores))])


# --------------------------------------------------------------------------- metrics

def bootstrap_ci(correct, n_boot=10000, alpha=0.05, seed=0):
    """Percentile bootstrap interval for the mean of a 0/1 correctness vector."""
    correct = np.asarray(correct, dtype=float)
    if correct.size == 0:
        raise EmptyVectorError("bootstrap needs a non-empty vector")
    rng = np.random.default_rng(seed)
    means = correct[rng.integers(0, correct.size, size=(n_boot, correct.size))].mean(axis=1)
    lo, hi = np.quantile(means, [alpha / 2, 1 - alpha / 2], method="inverted_cdf")
    return float(lo), float(hi)


def confusion_matrix(y_true, y_pred, classes):
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=int)
    for t, p in zip(y_true, y_pred):
        cm[index[t], index[p]] += 1
    return cm


def accuracy_from_confusion(cm):
    cm = np.asarray(cm)
    return float(np.trace(cm) / cm.sum())


def stream_seed(master_seed, *key):
    """Deterministic 63-bit seed for a named stream under ``master_seed``."""
    tag = zlib.crc32("|".join(str(k) for k in key).encode("utf-8"))
    state = np.random.SeedSequence([int(master_seed), tag]).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])


# --------------------------------------------------------------------------- sweep

@dataclass
class ExperimentConfig:
    windows: tuple = WINDOWS_S
    tasks: tuple = tuple(ComparisonTask)
    models: tuple = MODEL_KINDS
    n_seeds: int = 10
    master_seed: int = 0
    baseline_guard_s: float = DEFAULT_BASELINE_GUARD_S
    k: int = 5
    train_ratio: float = 0.8
    n_boot: int = 10000
    grids: dict = field(default_factory=dict)
    notch_q: float = dsp.DEFAULT_NOTCH_Q
    ppg_extra_hp: bool = False
    shuffle_labels: bool = False
    n_jobs: int = 1

    def __post_init__(self):
        self.windows = tuple(int(w) for w in self.windows)
        self.tasks = tuple(ComparisonTask(t) for t in self.tasks)
        self.models = tuple(self.models)
        bad = [w for w in self.windows if w not in WINDOWS_S]
        if bad or not self.windows:
            raise PipelineError(f"windows must be a non-empty subset of {WINDOWS_S}")
        unknown = [m for m in self.models if m not in MODEL_KINDS]
        if unknown or not self.models:
            raise PipelineError(f"models must be a non-empty subset of {MODEL_KINDS}")
        if not self.tasks:
            raise PipelineError("at least one task is required")
        if self.n_seeds < 1:
            raise PipelineError("n_seeds must be >= 1")

    def grid(self, kind):
        return list(self.grids.get(kind, DEFAULT_GRIDS[kind]))


@dataclass
class CellResult:
    mean_accuracy: float
    ci_low: float
    ci_high: float
    confusion_matrix: list
    chosen_hyperparams: list
    seed: int
    seed_count: int
    per_seed_accuracy: list


@dataclass
class ExperimentReport:
    cells: dict          # (ComparisonTask, window_s, SignalSource, model) -> CellResult
    metadata: dict

    def sorted_keys(self):
        to, so, mo = _order(ComparisonTask), _order(SignalSource), {m: i for i, m in
                                                                    enumerate(MODEL_KINDS)}
        return sorted(self.cells, key=lambda k: (to[k[0]], k[1], so[k[2]], mo[k[3]]))

    def cell(self, task, window_s, source, model):
        return self.cells[(ComparisonTask(task), int(window_s), SignalSource(source), model)]

    def to_csv(self):
        lines = [",".join(REPORT_COLUMNS)]
        for key in self.sorted_keys():
            c = self.cells[key]
            lines.append(f"{key[0].value},{key[1]},{key[2].value},{key[3]},"
                         f"{c.mean_accuracy:.17g},{c.ci_low:.17g},{c.ci_high:.17g},"
                         f"{c.seed_count}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    def to_json(self):
        cells = {}
        for key in self.sorted_keys():
            name = f"{key[0].value}|{key[1]}|{key[2].value}|{key[3]}"
            cells[name] = asdict(self.cells[key])
        return json.dumps({"metadata": self.metadata, "cells": cells}, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        payload = json.loads(text)
        cells = {}
        for name, d in payload["cells"].items():
            task, window, source, model = name.split("|")
            cells[(ComparisonTask(task), int(window), SignalSource(source), model)] = CellResult(**d)
        return cls(cells, payload["metadata"])


@dataclass
class WindowFeatures:
    """Full 20-feature rows for one window, ordered like ``build_dataset``."""

    window_s: int
    participant_ids: list
    labels: np.ndarray
    X: np.ndarray
    layout: tuple


def featurize_recordings(recordings, windows=WINDOWS_S,
                         baseline_guard_s=DEFAULT_BASELINE_GUARD_S,
                         notch_q=dsp.DEFAULT_NOTCH_Q, ppg_extra_hp=False, preprocessed=False):
    """Filter each recording once and extract features for every window."""
    rows = {w: [] for w in windows}
    layout = None
    for rec, anns in sorted(recordings, key=lambda p: p[0].participant_id):
        clean = rec if preprocessed else dsp.preprocess_recording(rec, notch_q, ppg_extra_hp)
        for w in windows:
            for ep, label in build_dataset([(clean, anns)], EpochingConfig(w, baseline_guard_s)):
                fv = extract_features(ep)
                layout = fv.layout
                rows[w].append((rec.participant_id, label, fv.values))
    out = {}
    for w in windows:
        pids = [r[0] for r in rows[w]]
        labels = np.array([int(r[1]) for r in rows[w]], dtype=int)
        X = np.array([r[2] for r in rows[w]]) if rows[w] else np.empty((0, 20))
        out[w] = WindowFeatures(w, pids, labels, X, layout)
    return out


def task_samples(wf, task):
    """Rows used for one task; Baseline is capped to the event-class count by
    taking the lowest participant ids."""
    task = ComparisonTask(task)
    events = [c for c in task.classes if c is not ClassLabel.BASELINE]
    keep = np.isin(wf.labels, [int(c) for c in events])
    if ClassLabel.BASELINE in task.classes:
        cap = min(int(np.sum(wf.labels == int(c))) for c in events)
        base = [i for i in np.flatnonzero(wf.labels == int(ClassLabel.BASELINE))]
        base.sort(key=lambda i: wf.participant_ids[i])
        keep[base[:cap]] = True
    idx = np.flatnonzero(keep)
    return wf.X[idx], wf.labels[idx]


def _source_columns(source, layout):
    if source is SignalSource.EARLY_FUSION:
        return np.arange(len(layout))
    return np.array([i for i, (k, _) in enumerate(layout) if k == source.channel])


def _run_unit(args):
    """All cells of one (task, window): every seed, model and source."""
    task, wf, cfg = args
    classes = [int(c) for c in task.classes]
    X_all, y_all = task_samples(wf, task)
    acc = defaultdict(lambda: {"y": [], "p": [], "seed_acc": [], "params": []})
    split_seeds = []
    for s in range(cfg.n_seeds):
        split_seed = stream_seed(cfg.master_seed, task.value, wf.window_s, s, "split")
        cv_seed = stream_seed(cfg.master_seed, task.value, wf.window_s, s, "cv")
        split_seeds.append(split_seed)
        y = y_all
        if cfg.shuffle_labels:
            rng = np.random.default_rng(
                stream_seed(cfg.master_seed, task.value, wf.window_s, s, "shuffle"))
            y = rng.permutation(y_all)
        train, test = split_train_test(y, cfg.train_ratio, split_seed)
        for model in cfg.models:
            grid = cfg.grid(model)
            modality_preds = []
            sources = MODALITY_SOURCES + (SignalSource.EARLY_FUSION,)
            for source in sources:
                cols = _source_columns(source, wf.layout)
                Xtr, Xte = X_all[np.ix_(train, cols)], X_all[np.ix_(test, cols)]
                params = grid_search(model, grid, Xtr, y[train], cfg.k, cv_seed, classes)
                fm = fit_model(model, Xtr, y[train], params, classes)
                pred, scores = predict_model(fm, Xte)
                if source is not SignalSource.EARLY_FUSION:
                    modality_preds.append((pred, scores, params))
                cell = acc[(source, model)]
                cell["y"].append(y[test])
                cell["p"].append(pred)
                cell["params"].append(params)
            fused = late_fuse_batch([p for p, _, _ in modality_preds],
                                    [sc for _, sc, _ in modality_preds], classes)
            cell = acc[(SignalSource.LATE_FUSION, model)]
            cell["y"].append(y[test])
            cell["p"].append(fused)
            cell["params"].append({src.value: params for src, (_, _, params)
                                   in zip(MODALITY_SOURCES, modality_preds)})
    results = {}
    for (source, model), d in acc.items():
        seed_acc = [float(np.mean(p == t)) for t, p in zip(d["y"], d["p"])]
        yt, yp = np.concatenate(d["y"]), np.concatenate(d["p"])
        cm = confusion_matrix(yt, yp, classes)
        boot_seed = stream_seed(cfg.master_seed, task.value, wf.window_s, source.value,
                                model, "bootstrap")
        lo, hi = bootstrap_ci(yt == yp, cfg.n_boot, 0.05, boot_seed)
        mean = float(np.mean(seed_acc))
        results[(task, wf.window_s, source, model)] = CellResult(
            mean_accuracy=mean, ci_low=min(lo, mean), ci_high=max(hi, mean),
            confusion_matrix=cm.tolist(), chosen_hyperparams=d["params"],
            seed=cfg.master_seed, seed_count=cfg.n_seeds, per_seed_accuracy=seed_acc)
    return results


def report_metadata(cfg):
    return {
        "windows_s": list(cfg.windows),
        "tasks": [t.value for t in cfg.tasks],
        "models": list(cfg.models),
        "n_seeds": cfg.n_seeds,
        "master_seed": cfg.master_seed,
        "k_folds": cfg.k,
        "train_ratio": cfg.train_ratio,
        "n_boot": cfg.n_boot,
        "baseline_guard_s": cfg.baseline_guard_s,
        "notch_q": cfg.notch_q,
        "ppg_extra_hp": cfg.ppg_extra_hp,
        "shuffle_labels": cfg.shuffle_labels,
        "grids": {m: cfg.grid(m) for m in cfg.models},
        "conventions": {
            "mean_accuracy": "mean over split seeds of held-out accuracy",
            "ci": "95% percentile bootstrap over pooled per-sample correctness",
            "baseline_window": "ends baseline_guard_s before onset (assumed default)",
            "baseline_selection": "capped to event-class count by lowest participant id",
        },
    }


def run_experiment(recordings, cfg=None, features=None):
    """Run the full sweep. ``features`` may carry precomputed
    :func:`featurize_recordings` output to skip filtering."""
    cfg = cfg or ExperimentConfig()
    if features is None:
        features = featurize_recordings(recordings, cfg.windows, cfg.baseline_guard_s,
                                        cfg.notch_q, cfg.ppg_extra_hp)
    units = [(task, features[w], cfg) for task in cfg.tasks for w in cfg.windows]
    cells = {}
    if cfg.n_jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=cfg.n_jobs) as pool:
            for part in pool.map(_run_unit, units):
                cells.update(part)
    else:
        for unit in units:
            try:
                cells.update(_run_unit(unit))
            except PipelineError as err:
                raise err.with_context(f"task {unit[0].value}, window {unit[1].window_s} s")
    return ExperimentReport(cells, report_metadata(cfg))
