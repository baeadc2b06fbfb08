"""CSV exports for histories, lines, classical paths and spectra."""
from __future__ import annotations

import csv

import numpy as np

from .errors import ValidationError
from .wavefunctional import BrokenLine


def write_history_csv(history, path):
    """Columns n, t, j, x, re_psi, im_psi."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "t", "j", "x", "re_psi", "im_psi"])
        x = history.space.x
        for n, t in enumerate(history.time.t):
            row = history.amps[n]
            for j in range(history.space.M):
                writer.writerow([n, repr(float(t)), j, repr(float(x[j])), repr(float(row[j].real)), repr(float(row[j].imag))])


def read_history_csv(path, space, time):
    from .schrodinger import WaveHistory

    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    amps = np.zeros((time.N + 1, space.M), dtype=complex)
    amps[data[:, 0].astype(int), data[:, 2].astype(int)] = data[:, 4] + 1j * data[:, 5]
    return WaveHistory(space, time, amps)


def write_broken_line_csv(line: BrokenLine, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "x"])
        for n, x in enumerate(line.vertices):
            writer.writerow([n, repr(float(x))])


def read_broken_line_csv(path) -> BrokenLine:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or {"n", "x"} - set(rows[0]):
        raise ValidationError(f"{path}: broken-line CSV needs columns n, x")
    rows.sort(key=lambda r: int(r["n"]))
    if [int(r["n"]) for r in rows] != list(range(len(rows))):
        raise ValidationError(f"{path}: vertex indices must run 0..N without gaps")
    return BrokenLine([float(r["x"]) for r in rows])


def write_path_csv(path_obj, path):
    """Columns n, t, x, p; p is blank on the last point (momenta live on intervals)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "t", "x", "p"])
        for n, t in enumerate(path_obj.time.t):
            p = repr(float(path_obj.p[n])) if n < path_obj.time.N else ""
            writer.writerow([n, repr(float(t)), repr(float(path_obj.x[n])), p])


def write_spectrum_csv(values, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re_lambda", "im_lambda"])
        for i, v in enumerate(values):
            writer.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def write_table_csv(rows, header, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
