"""CSV/JSON result tables and the statistical run comparison.

CSV layout: a `time` column, then for every observable its ensemble-mean
value and `_se` error bar; negativity additionally carries the
per-trajectory flavor (`_traj_mean`, `_traj_se`), which differs from the
value on the mean state because the measure is nonlinear.  Floats are
written with repr-exact precision so runs are byte-for-byte reproducible
and comparisons can be made on re-read files without loss.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def _fmt(x):
    return format(float(x), ".17g")


def result_columns(result, observables):
    """Flatten an EnsembleResult into ordered (name, array) columns."""
    cols = [("time", np.asarray(result.times, dtype=float))]
    for obs in observables:
        st = result.stats[obs.name]
        cols.append((obs.name, st["mean"]))
        cols.append((obs.name + "_se", st["se"]))
        if obs.kind == "negativity":
            cols.append((obs.name + "_traj_mean", st["traj_mean"]))
            cols.append((obs.name + "_traj_se", st["traj_se"]))
    return cols


def stats_from_densities(times, densities, observables):
    """Deterministic-solver stand-in for ensemble statistics (zero spread)."""
    T = len(times)
    stats = {}
    for obs in observables:
        vals = np.array([obs.evaluate(densities[t]) for t in range(T)])
        stats[obs.name] = {"mean": vals, "se": np.zeros(T),
                           "traj_mean": vals, "traj_se": np.zeros(T)}
    return stats


def write_csv(path, columns):
    names = [name for name, _ in columns]
    arrays = [np.asarray(arr, dtype=float) for _, arr in columns]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise ValueError("ragged columns")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for i in range(length):
            writer.writerow([_fmt(a[i]) for a in arrays])


def write_sidecar(path, metadata):
    with open(path, "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def read_csv(path):
    """Read a result table back: (times, {column name: array})."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows, dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"malformed table {path}")
    cols = {name: data[:, j] for j, name in enumerate(header)}
    if "time" not in cols:
        raise ValueError(f"{path} has no time column")
    times = cols.pop("time")
    return times, cols


@dataclass
class ObservableComparison:
    name: str
    max_z: float
    max_dev: float
    t_at_max: float
    divergent: bool


@dataclass
class ComparisonReport:
    verdict: str                    # 'compatible' | 'divergent'
    observables: list = field(default_factory=list)
    z_crit: float = 3.0

    @property
    def divergent(self):
        return self.verdict == "divergent"


def compare_columns(times_a, cols_a, times_b, cols_b, z_crit=3.0,
                    abs_tol=1e-9, names=None):
    """Per-time z-test of two result tables sharing an identical time grid.

    For each observable present in both tables (with its _se column) the
    deviation is scored as |a - b| / sqrt(se_a^2 + se_b^2); deviations at
    or below abs_tol never count as divergent (this is what makes
    zero-variance columns comparable), and where the combined error bar
    vanishes entirely abs_tol is the only criterion.  The verdict is
    'divergent' iff any observable exceeds z_crit anywhere on the grid.
    """
    times_a = np.asarray(times_a, dtype=float)
    times_b = np.asarray(times_b, dtype=float)
    if times_a.shape != times_b.shape or not np.array_equal(times_a, times_b):
        raise ValueError("time grids differ; runs must share a grid to be "
                         "compared")
    if names is None:
        names = [n for n in cols_a
                 if not n.endswith("_se") and not n.endswith("_traj_mean")
                 and not n.endswith("_traj_se")
                 and n in cols_b and n + "_se" in cols_a
                 and n + "_se" in cols_b]
    entries = []
    for name in names:
        a, b = cols_a[name], cols_b[name]
        se = np.sqrt(cols_a[name + "_se"] ** 2 + cols_b[name + "_se"] ** 2)
        dev = np.abs(a - b)
        z = np.zeros_like(dev)
        live = (se > 1e-300) & (dev > abs_tol)
        z[live] = dev[live] / se[live]
        z[(se <= 1e-300) & (dev > abs_tol)] = np.inf
        worst = int(np.argmax(z))
        entries.append(ObservableComparison(
            name=name, max_z=float(z[worst]), max_dev=float(dev[worst]),
            t_at_max=float(times_a[worst]),
            divergent=bool(z[worst] > z_crit)))
    verdict = "divergent" if any(e.divergent for e in entries) else "compatible"
    return ComparisonReport(verdict=verdict, observables=entries,
                            z_crit=z_crit)


def compare_results(result_a, result_b, observables, z_crit=3.0,
                    abs_tol=1e-9):
    """compare_columns on two in-memory EnsembleResult-like objects."""
    cols_a = dict(result_columns(result_a, observables)[1:])
    cols_b = dict(result_columns(result_b, observables)[1:])
    return compare_columns(result_a.times, cols_a, result_b.times, cols_b,
                           z_crit=z_crit, abs_tol=abs_tol)
