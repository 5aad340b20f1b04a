"""CSV exchange formats for samples and fitted estimates.

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import BadSampleSet
from .mean import SampleSet


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_samples(samples: SampleSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve_id", "t", "y"])
        for i, t, y in zip(samples.curve_index, samples.t, samples.y):
            w.writerow([int(i), fmt(t), fmt(y)])


def read_samples(path) -> SampleSet:
    """Read ``curve_id,t,y`` rows; rows of a curve need not be contiguous."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["curve_id", "t", "y"]:
            raise BadSampleSet(f"{path}: expected header curve_id,t,y")
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise BadSampleSet(f"{path}: no observations")
    try:
        ids = np.array([int(r[0]) for r in rows])
        t = np.array([float(r[1]) for r in rows])
        y = np.array([float(r[2]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise BadSampleSet(f"{path}: malformed row ({exc})") from exc
    order = np.argsort(ids, kind="stable")
    ids, t, y = ids[order], t[order], y[order]
    _, counts = np.unique(ids, return_counts=True)
    return SampleSet(t, y, counts)


def write_mean_estimate(est, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_anchor", "alpha"])
        for t, a in zip(est.anchors, est.alpha):
            w.writerow([fmt(t), fmt(a)])


def write_cov_estimate(est, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t1_anchor", "t2_anchor", "alpha"])
        for (t1, t2), a in zip(est.anchors, est.alpha):
            w.writerow([fmt(t1), fmt(t2), fmt(a)])


def write_surface(nodes, values, path) -> None:
    """Long format ``s,t,c_hat``."""
    nodes = np.asarray(nodes, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["s", "t", "c_hat"])
        for a, s in enumerate(nodes):
            for b, t in enumerate(nodes):
                w.writerow([fmt(s), fmt(t), fmt(values[a, b])])


def read_table(path) -> tuple[list[str], np.ndarray]:
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(c) for c in r] for r in reader if r], dtype=float)
    return header, data
