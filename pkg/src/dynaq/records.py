"""Run-record persistence.

Per-iteration rows stream into two CSVs (learning curve points and fraction
trajectories) as they are produced, so an interrupted run keeps everything
already completed.  Statistics tables are written once at the end.  All
floats are serialized with shortest round-trip repr, making files
byte-stable for identical inputs.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Optional

import numpy as np

from .engine import IterationReport
from .stats import LearningCurve

CURVE_HEADER = ("sim", "method", "t", "labeled", "f1")
FRACTION_HEADER = ("sim", "method", "t", "labeled",
                   "alpha_anomalous", "alpha_uncertain", "alpha_random",
                   "delta_anomalous", "delta_uncertain", "update_factor",
                   "n_anomalous", "n_uncertain", "n_dual", "n_random",
                   "batch_size")
AREA_HEADER = ("sim", "method", "t_ref", "labeled", "area")
WILCOXON_HEADER = ("t_ref", "labeled", "method_a", "method_b", "n",
                   "p_value", "significant")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class RunWriter:
    """Append-oriented writer for the two per-iteration record files."""

    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.curves_path = self.out_dir / "learning_curves.csv"
        self.fractions_path = self.out_dir / "fractions.csv"
        self._fh_curves = open(self.curves_path, "w", newline="", encoding="utf-8")
        self._fh_fracs = open(self.fractions_path, "w", newline="", encoding="utf-8")
        self._curves = csv.writer(self._fh_curves)
        self._fracs = csv.writer(self._fh_fracs)
        self._curves.writerow(CURVE_HEADER)
        self._fracs.writerow(FRACTION_HEADER)

    def write_report(self, sim: int, method: str, report: IterationReport) -> None:
        self._curves.writerow([
            sim, method, report.t, report.labeled_size, _cell(report.f1_eval)])
        self._fracs.writerow([
            sim, method, report.t, report.labeled_size,
            _cell(report.alpha_anomalous), _cell(report.alpha_uncertain),
            _cell(report.alpha_random), _cell(report.delta_a),
            _cell(report.delta_z), _cell(report.factor),
            _cell(report.n_anomalous), _cell(report.n_uncertain),
            _cell(report.n_dual), _cell(report.n_random),
            _cell(report.batch_size)])
        self._fh_curves.flush()
        self._fh_fracs.flush()

    def close(self) -> None:
        self._fh_curves.close()
        self._fh_fracs.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_areas(rows, path) -> None:
    """rows: iterable of (sim, method, t_ref, labeled, area)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(AREA_HEADER)
        for sim, method, t_ref, labeled, area in rows:
            w.writerow([sim, method, t_ref, labeled, _cell(float(area))])


def write_wilcoxon(rows, path) -> None:
    """rows: iterable of (t_ref, labeled, a, b, n, p or None, significant)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(WILCOXON_HEADER)
        for t_ref, labeled, a, b, n, p, sig in rows:
            w.writerow([t_ref, labeled, a, b, n, _cell(p), _cell(sig)])


def read_curves(path) -> dict:
    """Parse a learning-curve file back into {(sim, method): LearningCurve}."""
    groups: dict = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            key = (int(row["sim"]), row["method"])
            groups.setdefault(key, []).append(
                (int(row["t"]), int(row["labeled"]), float(row["f1"])))
    curves = {}
    for (sim, method), pts in groups.items():
        pts.sort()
        t, labeled, metric = zip(*pts)
        curves[(sim, method)] = LearningCurve(
            t=np.asarray(t), labeled=np.asarray(labeled),
            metric=np.asarray(metric), method=method, sim=sim)
    return curves
