"""Deterministic report files for rate-lab runs.

Everything written here is a pure function of the config and seeds. Wall-clock
numbers go to ``runtime.json`` only, so the other files are byte-identical
across repeated runs.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..csvio import fmt


def _clean(obj):
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def write_cells_csv(path, cells) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "m", "nm", "median_err", "iqr"])
        for c in cells:
            w.writerow([c.n, fmt(float(c.m)), fmt(float(c.nm)), fmt(c.median), fmt(c.iqr)])


def write_plotdata_csv(path, cells, slope=None, against: str = "nm") -> None:
    """Log-log points plus the fitted line, one row per cell."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "log_x", "log_median_err", "log_fit"])
        for c in cells:
            if not c.errors:
                continue
            x = float(c.n if against == "n" else c.nm)
            lx = math.log(x)
            fit = "" if slope is None else fmt(slope.slope * lx + slope.intercept)
            w.writerow([fmt(x), fmt(lx), fmt(math.log(c.median)), fit])


def write_report(outdir, report) -> dict:
    """Write ``report.json``, ``cells.csv``, ``plotdata.csv`` and ``runtime.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    against = report.config.get("slope_against", "nm") if report.kind != "phase" else "n"
    paths = {
        "report": outdir / "report.json",
        "cells": outdir / "cells.csv",
        "plotdata": outdir / "plotdata.csv",
        "runtime": outdir / "runtime.json",
    }
    write_json(paths["report"], report.to_dict())
    write_cells_csv(paths["cells"], report.cells)
    write_plotdata_csv(paths["plotdata"], report.cells, report.slope, against)
    write_json(paths["runtime"], report.runtime)
    return paths
