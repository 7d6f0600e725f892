"""Write experiment reports: summary table, pooled errors, figures."""

from __future__ import annotations

import csv
from pathlib import Path

from .csvio import fmt_number
from .evaluation import ExperimentReport

# attendance-control requirement: horizontal accuracy and latency
ATTENDANCE_ACCURACY_M = 5.0
ATTENDANCE_LATENCY_S = 1.0

SUMMARY_COLUMNS = ("technology", "method", "mean_accuracy", "std_accuracy", "cdf80_m", "n_iterations")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt_number(v)
    return str(v)


def write_report(report: ExperimentReport, out_dir, figures: bool = True) -> list[Path]:
    """Write ``summary.csv``, ``errors_<tech>.csv`` and, optionally, PNG figures.

    Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    rows = report.summary_rows()
    path = out / "summary.csv"
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in SUMMARY_COLUMNS])
    written.append(path)

    for tech, errs in report.errors.items():
        path = out / f"errors_{tech.value}.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write("error_m\n")
            fh.writelines(fmt_number(e) + "\n" for e in errs)
        written.append(path)

    if report.predictions:
        path = out / "predictions.csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "technology", "sample_index", "zone", "classify_zone", "regress_zone", "x_hat", "y_hat"])
            for p in report.predictions:
                w.writerow([p.iteration, p.technology.value, p.sample_index, p.truth_label, p.classify_label,
                            p.regress_label, fmt_number(p.estimate[0]), fmt_number(p.estimate[1])])
        written.append(path)

    if figures:
        from . import plotting

        path = out / "accuracy.png"
        plotting.accuracy_bars(rows, path)
        written.append(path)
        path = out / "error_cdf.png"
        plotting.error_cdfs({t.value: e for t, e in report.errors.items()}, path, requirement_m=ATTENDANCE_ACCURACY_M)
        written.append(path)
    return written
