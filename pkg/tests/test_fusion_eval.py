import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import late_fuse_reference
from physfusion import evaluation as ev
from physfusion import models
from physfusion.core import FEATURE_NAMES, ChannelKind, ClassLabel, FeatureVector
from physfusion.errors import (ClassSmallerThanKError, ClassTooSmallError, EmptyEnsembleError,
                               EmptyGridError, EmptyVectorError, MissingModalityError,
                               PipelineError)
from physfusion.fusion import early_fuse, late_fuse, late_fuse_batch

S, U, B = ClassLabel.STARTLE, ClassLabel.SURPRISE, ClassLabel.BASELINE
LAYOUT = tuple((k, n) for k in ChannelKind for n in FEATURE_NAMES)


# fusion

def block(kind, values):
    return FeatureVector(np.asarray(values, dtype=float), [(kind, n) for n in FEATURE_NAMES])


def test_early_fuse_concatenates_in_channel_order():
    parts = [block(k, np.arange(5) + 10 * k) for k in reversed(ChannelKind)]
    fv = early_fuse(parts)
    assert fv.layout == LAYOUT
    for k in ChannelKind:
        assert np.array_equal(fv.select(k).values, np.arange(5) + 10 * k)
    with pytest.raises(MissingModalityError):
        early_fuse(parts[1:])
    with pytest.raises(PipelineError):
        early_fuse(parts + parts[:1])


def test_late_fuse_examples():
    two = [S, U]
    flat = [0.5, 0.5]
    assert late_fuse([(S, flat)] * 3 + [(U, flat)], two) == S
    votes = [(S, [0.9, 0.1]), (S, [0.9, 0.1]), (U, [0.4, 0.6]), (U, [0.4, 0.6])]
    assert late_fuse(votes, two) == S  # 1.8 + 0.8 vs 0.2 + 1.2 summed scores
    three = [S, U, B]
    assert late_fuse([(S, [1, 0, 0]), (U, [0, 1, 0]), (B, [0, 0, 1]), (B, [0, 0, 1])], three) == B
    with pytest.raises(EmptyEnsembleError):
        late_fuse([], two)


@pytest.mark.parametrize("n_classes", [2, 3])
def test_late_fuse_exhaustive(n_classes):
    classes = list(ClassLabel)[:n_classes]
    # Per-voter score vectors drawn from a small palette that includes exact ties.
    palette = [np.eye(n_classes)[i] for i in range(n_classes)] + [np.full(n_classes, 1.0 / n_classes)]
    palette += [np.linspace(1, 2, n_classes), np.linspace(2, 1, n_classes), np.zeros(n_classes)]
    checked = 0
    for votes in itertools.product(classes, repeat=4):
        for picks in itertools.product(range(len(palette)), repeat=4):
            if n_classes == 3 and sum(picks) % 3:
                continue  # keep the 3-class run fast; still covers every palette pattern
            preds = [(v, palette[p]) for v, p in zip(votes, picks)]
            assert late_fuse(preds, classes) == late_fuse_reference(preds, classes)
            checked += 1
    assert checked > 1000


@given(st.sampled_from(list(ClassLabel)), st.lists(st.floats(0, 1), min_size=3, max_size=3))
def test_single_voter_late_fuse(label, scores):
    assert late_fuse([(label, scores)], list(ClassLabel)) == label


def test_late_fuse_batch_rows():
    labels = [np.array([0, 1]), np.array([0, 1]), np.array([1, 1])]
    scores = [np.array([[0.6, 0.4], [0.5, 0.5]])] * 3
    assert late_fuse_batch(labels, scores, [0, 1]).tolist() == [0, 1]


# splits

def test_split_17_per_class():
    y = np.repeat([0, 1], 17)
    train, test = ev.split_train_test(y, 0.8, seed=3)
    assert [int(np.sum(y[test] == c)) for c in (0, 1)] == [3, 3]
    assert [int(np.sum(y[train] == c)) for c in (0, 1)] == [14, 14]
    y10 = np.repeat([0, 1], 10)
    _, test = ev.split_train_test(y10, 0.8, seed=0)
    assert test.size == 4
    with pytest.raises(ClassTooSmallError):
        ev.split_train_test(np.repeat([0, 1], [4, 10]))


@pytest.mark.parametrize("seed", range(100))
def test_split_and_kfold_partitions(seed):
    y = np.repeat([0, 1, 2], [17, 17, 17])
    train, test = ev.split_train_test(y, 0.8, seed)
    assert np.intersect1d(train, test).size == 0
    assert np.array_equal(np.union1d(train, test), np.arange(y.size))
    folds = ev.kfold(y[train], 5, seed)
    vals = np.concatenate([v for _, v in folds])
    assert np.array_equal(np.sort(vals), np.arange(train.size))
    for fit, val in folds:
        assert np.intersect1d(fit, val).size == 0 and fit.size + val.size == train.size


def test_kfold_sizes():
    sizes = sorted(len(v) for _, v in ev.kfold(np.repeat([0, 1], 7), 5, seed=0))
    assert sizes == [2, 3, 3, 3, 3]
    assert [len(v) for _, v in ev.kfold(np.repeat([0, 1], 5), 5, seed=1)] == [2] * 5
    with pytest.raises(ClassSmallerThanKError):
        ev.kfold(np.repeat([0, 1], [4, 9]), 5)


# search

def test_grid_search_rules(monkeypatch):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 2))
    y = np.repeat([0, 1], 10)
    assert ev.grid_search("svm", [{"C": 3.0}], X, y) == {"C": 3.0}
    with pytest.raises(EmptyGridError):
        ev.grid_search("svm", [], X, y)
    monkeypatch.setattr(ev, "cv_scores", lambda *a, **k: np.array([0.5, 0.7, 0.7]))
    grid = [{"C": 1.0}, {"C": 2.0}, {"C": 3.0}]
    assert ev.grid_search("svm", grid, X, y) == {"C": 2.0}


def test_grid_search_picks_cv_best_svm():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(-1, 1, (12, 2)), rng.normal(1, 1, (12, 2))])
    y = np.repeat([0, 1], 12)
    grid = models.DEFAULT_GRIDS["svm"]
    scores = [ev.cv_scores("svm", [g], X, y, 5, 9)[0] for g in grid]
    best = ev.grid_search("svm", grid, X, y, 5, 9)
    assert scores[grid.index(best)] == max(scores)
    assert grid.index(best) == int(np.argmax(scores))


def test_gbt_staged_scores_match_separate_fits():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((25, 3))
    y = (X[:, 0] + 0.3 * rng.standard_normal(25) > 0).astype(int)
    grid = [{"n_rounds": r, "learning_rate": 0.3, "max_depth": 2} for r in (5, 10, 20)]
    shared = ev.cv_scores("gbt", grid, X, y, 5, 1)
    separate = [ev.cv_scores("gbt", [g, g], X, y, 5, 1)[0] for g in grid]
    assert np.allclose(shared, separate)


# metrics

def test_bootstrap_examples():
    assert ev.bootstrap_ci(np.ones(7)) == (1.0, 1.0)
    lo, hi = ev.bootstrap_ci([1, 0], 10000, 0.05, seed=11)
    assert lo <= 0.5 <= hi and lo in (0.0, 0.5, 1.0) and hi in (0.0, 0.5, 1.0)
    assert ev.bootstrap_ci([1, 0, 1, 1], seed=5) == ev.bootstrap_ci([1, 0, 1, 1], seed=5)
    with pytest.raises(EmptyVectorError):
        ev.bootstrap_ci([])


@given(st.lists(st.sampled_from([0, 1, 2]), min_size=1, max_size=30), st.integers(0, 1000))
def test_accuracy_is_confusion_trace(y_true, seed):
    y_pred = np.random.default_rng(seed).integers(0, 3, len(y_true))
    cm = ev.confusion_matrix(y_true, y_pred, [0, 1, 2])
    assert cm.sum() == len(y_true)
    assert ev.accuracy_from_confusion(cm) == np.trace(cm) / cm.sum()
    assert ev.accuracy_from_confusion(cm) == pytest.approx(np.mean(np.array(y_true) == y_pred))


def test_task_and_source_enums():
    assert [t.chance_level for t in ev.ComparisonTask] == [0.5, 0.5, 0.5, 1 / 3]
    assert len(ev.SignalSource) == 6
    assert ev.ComparisonTask.THREE_CLASS.classes == (S, U, B)


# sweep

def toy_features(n_per_class=17, seed=0, windows=(3,)):
    """Separable 20-column rows laid out like featurize_recordings output."""
    rng = np.random.default_rng(seed)
    out = {}
    for w in windows:
        pids, labels, rows = [], [], []
        for i in range(2 * n_per_class):
            pid = f"p{i:03d}"
            event = S if i % 2 == 0 else U
            for lab in (event, B):
                pids.append(pid)
                labels.append(int(lab))
                rows.append(rng.standard_normal(20) + 1.5 * np.eye(3)[int(lab)].repeat(7)[:20])
        out[w] = ev.WindowFeatures(w, pids, np.array(labels), np.array(rows), LAYOUT)
    return out


FAST_GRIDS = {"svm": [{"C": 1.0, "kernel": "linear"}, {"C": 10.0, "kernel": "linear"}],
              "gbt": [{"n_rounds": 5, "max_depth": 2}, {"n_rounds": 10, "max_depth": 2}]}


def test_task_samples_caps_baseline():
    wf = toy_features()[3]
    X, y = ev.task_samples(wf, ev.ComparisonTask.THREE_CLASS)
    assert [int(np.sum(y == c)) for c in (0, 1, 2)] == [17, 17, 17]
    X, y = ev.task_samples(wf, ev.ComparisonTask.STARTLE_VS_BASELINE)
    assert sorted(set(y.tolist())) == [0, 2] and y.size == 34


def test_full_cardinality_and_determinism():
    feats = toy_features(windows=(3, 5, 7, 10))
    cfg = ev.ExperimentConfig(n_seeds=1, n_boot=200, grids=FAST_GRIDS)
    a = ev.run_experiment(None, cfg, features=feats)
    assert len(a.cells) == 288
    b = ev.run_experiment(None, cfg, features=feats)
    assert a.to_csv() == b.to_csv() and a.to_json() == b.to_json()
    lines = a.to_csv().decode().splitlines()
    assert lines[0] == "task,window_s,source,model,mean_acc,ci_low,ci_high,seed_count"
    assert len(lines) == 289
    back = ev.ExperimentReport.from_json(a.to_json())
    assert back.to_csv() == a.to_csv()


def test_parallel_matches_serial():
    feats = toy_features(windows=(3, 5))
    base = dict(n_seeds=2, n_boot=100, grids=FAST_GRIDS, windows=(3, 5), models=("gnb", "svm"))
    serial = ev.run_experiment(None, ev.ExperimentConfig(**base), features=feats)
    par = ev.run_experiment(None, ev.ExperimentConfig(**base, n_jobs=2), features=feats)
    assert serial.to_csv() == par.to_csv()


def test_cells_are_consistent():
    feats = toy_features()
    cfg = ev.ExperimentConfig(windows=(3,), n_seeds=3, n_boot=300, grids=FAST_GRIDS)
    rep = ev.run_experiment(None, cfg, features=feats)
    for key in rep.sorted_keys():
        c = rep.cells[key]
        assert c.seed_count == 3 and len(c.per_seed_accuracy) == 3
        assert c.mean_accuracy == pytest.approx(np.mean(c.per_seed_accuracy))
        assert c.ci_low <= c.mean_accuracy <= c.ci_high
        # every seed holds out the same count, so pooled accuracy equals the seed mean
        assert ev.accuracy_from_confusion(c.confusion_matrix) == pytest.approx(c.mean_accuracy)


def test_no_leakage(monkeypatch):
    """Every model fit and standardiser fit sees only rows of the current training split."""
    feats = toy_features()
    task = ev.ComparisonTask.THREE_CLASS
    X_all, y_all = ev.task_samples(feats[3], task)
    row_of = {v: i for i, row in enumerate(X_all) for v in row}
    assert len(row_of) == X_all.size  # every value identifies its row
    cfg = ev.ExperimentConfig(windows=(3,), tasks=(task,), n_seeds=3, n_boot=50, grids=FAST_GRIDS)
    state = {"train": None, "fits": 0, "stds": 0}
    real_split, real_fit, real_std = ev.split_train_test, ev.fit_model, models.fit_standardizer

    def rows(X):
        return {row_of[v] for v in np.asarray(X)[:, 0]}

    def spy_split(labels, ratio=0.8, seed=0):
        train, test = real_split(labels, ratio, seed)
        state["train"] = set(train.tolist())
        return train, test

    def spy_fit(kind, X, y, params=None, classes=None):
        assert rows(X) <= state["train"]
        state["fits"] += 1
        return real_fit(kind, X, y, params, classes)

    def spy_std(X):
        assert rows(X) <= state["train"]
        state["stds"] += 1
        return real_std(X)

    monkeypatch.setattr(ev, "split_train_test", spy_split)
    monkeypatch.setattr(ev, "fit_model", spy_fit)
    monkeypatch.setattr(models, "fit_standardizer", spy_std)
    ev.run_experiment(None, cfg, features=feats)
    assert state["fits"] >= 3 * 3 * 5 and state["stds"] > 0
