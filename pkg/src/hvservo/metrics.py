"""Quantitative evaluation of servo runs: persistent-SAD convergence,
smoothness (std and total path length of the actuation increments), run
summaries, and the run.csv / summary.csv formats."""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RUN_CSV_HEADER = ["iter", "mode", "q1_mm", "q2_mm", "dq1_mm", "dq2_mm", "sad", "features_visible", "wall_ms"]
SUMMARY_CSV_HEADER = [
    "controller",
    "task_completed",
    "mean_iteration_time_s",
    "convergence_iteration",
    "final_sad",
    "std_dq1_mm",
    "std_dq2_mm",
    "tpl_dq1_mm",
    "tpl_dq2_mm",
]


@dataclass
class RunRecord:
    iteration: int
    mode: str
    q1_mm: float
    q2_mm: float
    dq1_mm: float
    dq2_mm: float
    sad: float
    features_visible: bool
    wall_ms: float


@dataclass
class RunLog:
    records: list
    meta: dict = field(default_factory=dict)

    def series(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def sad_series(self):
        return self.series("sad")

    @property
    def modes(self):
        return [r.mode for r in self.records]


@dataclass
class RunSummary:
    controller: str
    task_completed: bool
    mean_iteration_time_s: float
    convergence_iteration: int | None
    final_sad: float
    std_mm: tuple
    tpl_mm: tuple


def convergence_iteration(sad_series, threshold=0.06):
    """Smallest 1-based t with sad_i <= threshold for all i >= t, else None."""
    arr = np.asarray(sad_series, dtype=float)
    if arr.size == 0:
        raise ValueError("SAD series is empty")
    above = np.nonzero(arr > threshold)[0]
    if above.size == 0:
        return 1
    t = int(above[-1]) + 2
    return t if t <= arr.size else None


def smoothness(dq_series):
    """(population std, total path length) of one tendon's increment series."""
    dq = np.asarray(dq_series, dtype=float)
    if dq.size < 2:
        raise ValueError("need at least two increments")
    return float(dq.std()), float(np.abs(np.diff(dq)).sum())


def summarize(log: RunLog) -> RunSummary:
    """Pure function of the log; re-summarizing a persisted log is exact."""
    if len(log.records) < 2:
        raise ValueError("log is incomplete")
    iters = log.series("iteration")
    if iters[0] != 1 or np.any(np.diff(iters) != 1):
        raise ValueError("iterations must be contiguous from 1")
    sad_series = log.sad_series
    conv = convergence_iteration(sad_series, log.meta.get("convergence_sad", 0.06))
    std1, tpl1 = smoothness(log.series("dq1_mm"))
    std2, tpl2 = smoothness(log.series("dq2_mm"))
    return RunSummary(
        controller=log.meta.get("controller", ""),
        task_completed=conv is not None,
        mean_iteration_time_s=float(log.series("wall_ms").mean() / 1000.0),
        convergence_iteration=conv,
        final_sad=float(sad_series[-1]),
        std_mm=(std1, std2),
        tpl_mm=(tpl1, tpl2),
    )


def _fmt(x):
    return repr(float(x))


def write_run_csv(log: RunLog, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RUN_CSV_HEADER)
        for r in log.records:
            writer.writerow(
                [
                    r.iteration,
                    r.mode,
                    _fmt(r.q1_mm),
                    _fmt(r.q2_mm),
                    _fmt(r.dq1_mm),
                    _fmt(r.dq2_mm),
                    _fmt(r.sad),
                    int(r.features_visible),
                    _fmt(r.wall_ms),
                ]
            )


def read_run_csv(path) -> RunLog:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RUN_CSV_HEADER:
            raise ValueError(f"unexpected run.csv header {header}")
        for row in reader:
            records.append(
                RunRecord(
                    iteration=int(row[0]),
                    mode=row[1],
                    q1_mm=float(row[2]),
                    q2_mm=float(row[3]),
                    dq1_mm=float(row[4]),
                    dq2_mm=float(row[5]),
                    sad=float(row[6]),
                    features_visible=row[7] == "1",
                    wall_ms=float(row[8]),
                )
            )
    return RunLog(records, {"source": str(Path(path))})


def write_summary_csv(summaries, path):
    """One row per RunSummary, mirroring the comparison-table columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_CSV_HEADER)
        for s in summaries:
            writer.writerow(
                [
                    s.controller,
                    "yes" if s.task_completed else "no",
                    _fmt(s.mean_iteration_time_s),
                    "" if s.convergence_iteration is None else s.convergence_iteration,
                    _fmt(s.final_sad),
                    _fmt(s.std_mm[0]),
                    _fmt(s.std_mm[1]),
                    _fmt(s.tpl_mm[0]),
                    _fmt(s.tpl_mm[1]),
                ]
            )
