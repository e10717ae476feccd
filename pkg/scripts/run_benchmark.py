"""Synthesise the benchmark, run the full sweep and print the summary tables.

    python3 scripts/run_benchmark.py --out runs/bench --seeds 10
"""

import argparse
import os
import time
from dataclasses import dataclass
from pathlib import Path

from physfusion import evaluation as ev, synth
from physfusion.cli import panel_csv, render_tables
from physfusion.core import WINDOWS_S
from physfusion.models import MODEL_KINDS


@dataclass(frozen=True)
class BenchmarkConfig:
    n_per_class: int = 17
    data_seed: int = 0
    separability: float = 1.0
    seeds: int = 10
    master_seed: int = 0
    n_jobs: int = os.cpu_count() or 1
    out: str = "runs/bench"


def late_fusion_wins(report):
    """(wins, total) over (task, window, model) cells where late fusion
    matches or beats every single modality."""
    wins = total = 0
    for task in ev.ComparisonTask:
        for w in WINDOWS_S:
            for m in MODEL_KINDS:
                single = max(report.cell(task, w, s, m).mean_accuracy for s in ev.MODALITY_SOURCES)
                wins += report.cell(task, w, ev.SignalSource.LATE_FUSION, m).mean_accuracy >= single
                total += 1
    return wins, total


def run(cfg):
    t0 = time.perf_counter()
    params = synth.EffectParams().with_separability(cfg.separability)
    data = synth.synth_benchmark(cfg.n_per_class, cfg.data_seed, params)
    feats = ev.featurize_recordings(data)
    report = ev.run_experiment(None, ev.ExperimentConfig(n_seeds=cfg.seeds, master_seed=cfg.master_seed,
                                                         n_jobs=cfg.n_jobs), features=feats)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_bytes(report.to_csv())
    (out / "report.json").write_bytes(report.to_json())
    for task, table in render_tables(report).items():
        (out / f"table_{task.value}.txt").write_text(table)
        print(table)
        for w in WINDOWS_S:
            (out / f"panel_{task.value}_w{w}.csv").write_text(panel_csv(report, task, w))
    wins, total = late_fusion_wins(report)
    print(f"late fusion >= best single modality in {wins}/{total} cells")
    print(f"{len(report.cells)} cells in {time.perf_counter() - t0:.1f} s, written to {out}")
    return report


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    d = BenchmarkConfig()
    p.add_argument("--n", type=int, default=d.n_per_class, dest="n_per_class")
    p.add_argument("--data-seed", type=int, default=d.data_seed)
    p.add_argument("--separability", type=float, default=d.separability)
    p.add_argument("--seeds", type=int, default=d.seeds)
    p.add_argument("--master-seed", type=int, default=d.master_seed)
    p.add_argument("--n-jobs", type=int, default=d.n_jobs)
    p.add_argument("--out", default=d.out)
    run(BenchmarkConfig(**vars(p.parse_args())))


if __name__ == "__main__":
    main()
