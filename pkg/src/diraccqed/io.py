"""CSV and JSON writers.  Every CSV has a header row, '.' decimals and
``\\n`` line endings; floats are written with ``repr`` so files are exact
and reproducible."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

BAND_COLUMNS = ["arclength", "kx", "ky", "omega1", "omega2"]
ODE_COLUMNS = ["t", "re_c1", "im_c1", "re_c2", "im_c2", "field_pop", "entropy_bits"]
LAPLACE_COLUMNS = ["t", "re_c2", "im_c2", "abs_c2", "err_est"]
COMPARISON_COLUMNS = ["t", "re_c2_ode", "re_c2_laplace", "abs_deviation"]
KERNEL_COLUMNS = ["re_s", "im_s", "re_K", "im_K"]


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path, header, columns):
    """Write equal-length ``columns`` under ``header``."""
    columns = [np.asarray(c) for c in columns]
    if len(header) != len(columns):
        raise ValueError("header and column count differ")
    n = {len(c) for c in columns}
    if len(n) > 1:
        raise ValueError("columns have different lengths")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])
    return Path(path)


def write_rows(path, header, rows):
    """Write a list of dict rows (missing keys become empty cells)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row.get(k)) for k in header])
    return Path(path)


def read_csv(path):
    """Read a CSV written here back into a dict of float arrays."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader]
    out = {}
    for i, name in enumerate(header):
        try:
            out[name] = np.array([float(r[i]) if r[i] != "" else np.nan for r in rows])
        except ValueError:
            out[name] = [r[i] for r in rows]
    return out


def write_band_table(path, table):
    return write_csv(path, BAND_COLUMNS,
                     [table.arclength, table.kx, table.ky, table.omega1, table.omega2])


def write_ode_trajectory(path, traj):
    return write_csv(path, ODE_COLUMNS, [traj.t, traj.c1.real, traj.c1.imag, traj.c2.real,
                                         traj.c2.imag, traj.field_pop, traj.entropy])


def write_laplace_trajectory(path, result):
    v = result.values
    return write_csv(path, LAPLACE_COLUMNS, [result.t, v.real, v.imag, np.abs(v), result.err_est])


def write_comparison(path, t, re_ode, re_laplace):
    re_ode, re_laplace = np.asarray(re_ode), np.asarray(re_laplace)
    return write_csv(path, COMPARISON_COLUMNS, [t, re_ode, re_laplace, np.abs(re_ode - re_laplace)])


def write_kernel_probe(path, s, K):
    s, K = np.asarray(s), np.asarray(K)
    return write_csv(path, KERNEL_COLUMNS, [s.real, s.imag, K.real, K.imag])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return Path(path)
