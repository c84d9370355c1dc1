"""Seed sweeps over protocol variants.

Each (variant, seed) run writes its metrics timeline to
``<variant>_seed<seed>.csv``; ``summary.csv`` then holds the mean and sample
standard deviation of the steady-state normalized throughput per variant.
"""
from __future__ import annotations

import csv
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ExperimentSpec, ScenarioConfig
from .netsim import MetricsTimeline, init_scenario, run

SUMMARY_FILE = "summary.csv"
SUMMARY_COLUMNS = ("variant", "protocol", "runs", "mean_throughput", "std_throughput")


@dataclass
class ExperimentResult:
    output_dir: Path
    # (variant, seed) -> steady-state normalized throughput
    throughput: dict[tuple[str, int], float] = field(default_factory=dict)
    failures: dict[tuple[str, int], str] = field(default_factory=dict)
    files: list[Path] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def run_file_name(variant: str, seed: int) -> str:
    return f"{variant}_seed{seed}.csv"


def simulate(config: ScenarioConfig, seed: int) -> MetricsTimeline:
    return run(init_scenario(config, seed))


def _job(args):
    name, config, seed, path = args
    try:
        timeline = simulate(config, seed)
        Path(path).write_text(timeline.to_csv(), encoding="utf-8")
        return name, seed, timeline.steady_state_throughput(config.warmup_s), None
    except Exception:  # reported per run; the sweep carries on
        return name, seed, math.nan, traceback.format_exc()


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(v.name, v.apply(spec.base), s, out / run_file_name(v.name, s))
            for v in spec.variants for s in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            done = list(pool.map(_job, jobs))
    else:
        done = [_job(j) for j in jobs]

    result = ExperimentResult(out)
    for (name, _, seed, path), (_, _, value, err) in zip(jobs, done):
        if err is None:
            result.throughput[(name, seed)] = value
            result.files.append(path)
        else:
            result.failures[(name, seed)] = err

    summary = out / SUMMARY_FILE
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for v in spec.variants:
            values = [result.throughput[(v.name, s)] for s in spec.seeds
                      if (v.name, s) in result.throughput]
            mean, std = mean_std(values)
            w.writerow([v.name, v.protocol.value, len(values), repr(mean), repr(std)])
    result.files.append(summary)
    return result


def mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation (0 for a single value, NaN for none)."""
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((x - mean) ** 2 for x in values) / (n - 1))


def read_summary(path) -> dict[str, tuple[int, float, float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["variant"]: (int(row["runs"]), float(row["mean_throughput"]),
                                 float(row["std_throughput"]))
                for row in csv.DictReader(fh)}
