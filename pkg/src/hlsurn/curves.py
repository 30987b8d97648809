"""Sampled curves: share trajectories and generic scalar curves, with CSV io."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError

CURVE_MEANINGS = (
    "entropy_phi_of_x",
    "mgf_zeta_of_beta",
    "transformed_Pi",
    "log_tau_of_psi",
    "urn_residual",
)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def write_csv(target, header, columns):
    """Write equal-length columns under ``header``; ``target`` is a path or text stream.

    Floats are written with ``repr`` so files round-trip exactly and are
    byte-identical across runs.
    """
    rows = zip(*columns)
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="") as fh:
            _write_rows(fh, header, rows)
    else:
        _write_rows(target, header, rows)


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_rows(fh, header, rows):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def read_csv(source, columns):
    """Read the named float columns from a CSV path or text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in columns if c not in (reader.fieldnames or [])]
    if missing:
        raise ValidationError(f"CSV is missing column(s) {missing}")
    data = {c: [] for c in columns}
    for row in reader:
        for c in columns:
            data[c].append(float(row[c]))
    return tuple(np.array(data[c]) for c in columns)


@dataclass(frozen=True)
class Trajectory:
    """Share curve ``psi(tau)`` with strictly increasing saturation ``tau`` in (0, 1]."""

    tau: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        tau, psi = _frozen(self.tau), _frozen(self.psi)
        if tau.shape != psi.shape or tau.ndim != 1 or tau.size == 0:
            raise ValidationError("tau and psi must be 1-d arrays of equal, nonzero length")
        if np.any(tau <= 0) or np.any(tau > 1):
            raise ValidationError("tau must lie in (0, 1]")
        if np.any(np.diff(tau) <= 0):
            raise ValidationError("tau must be strictly increasing")
        if np.any(psi < 0) or np.any(psi > 1):
            raise ValidationError("psi must lie in [0, 1]")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "psi", psi)

    @property
    def points(self):
        return list(zip(self.tau.tolist(), self.psi.tolist()))

    def __len__(self):
        return self.tau.size

    def to_csv(self, target):
        write_csv(target, ["tau", "psi"], [self.tau, self.psi])

    @classmethod
    def from_csv(cls, source):
        return cls(*read_csv(source, ["tau", "psi"]))


@dataclass(frozen=True)
class ScalarCurve:
    """A function sampled on a sorted grid.

    ``residual`` is filled by solvers that report how well the returned values
    satisfy their defining equation.
    """

    grid: np.ndarray
    values: np.ndarray
    meaning: str
    residual: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        grid, values = _frozen(self.grid), _frozen(self.values)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValidationError("grid and values must be 1-d arrays of equal length")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if self.meaning not in CURVE_MEANINGS:
            raise ValidationError(f"unknown curve meaning {self.meaning!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if self.residual is not None:
            object.__setattr__(self, "residual", _frozen(self.residual))

    def __len__(self):
        return self.grid.size

    def __call__(self, x):
        return np.interp(x, self.grid, self.values)

    def to_csv(self, target):
        write_csv(target, ["grid", "value"], [self.grid, self.values])

    @classmethod
    def from_csv(cls, source, meaning):
        return cls(*read_csv(source, ["grid", "value"]), meaning=meaning)
