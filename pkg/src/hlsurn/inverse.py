"""Recover the urn function from an observed share trajectory.

Along a zero-cost trajectory ``log tau(psi)`` equals the transformed urn
function up to a constant, so ``pi(psi) = psi + 1 / (d log tau / d psi)``.
The derivative is taken from a local linear fit of ``log tau`` against
``psi`` with an Epanechnikov kernel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curves import ScalarCurve, Trajectory, write_csv
from .errors import InvertibilityError, SparseDataWarning, ValidationError

MIN_WINDOW = 10


def _merge_ties(traj: Trajectory):
    """Unique shares in increasing order with the mean ``log tau`` of each."""
    psi, inv = np.unique(traj.psi, return_inverse=True)
    logtau = np.bincount(inv, weights=np.log(traj.tau)) / np.bincount(inv)
    return psi, logtau


def estimate_transformed(traj: Trajectory) -> ScalarCurve:
    """The curve ``(psi, log tau(psi))``, i.e. the transformed urn function up to a constant.

    Raises ``InvertibilityError`` unless the share is strictly monotone in
    saturation once repeated shares are merged.
    """
    psi, logtau = _merge_ties(traj)
    if psi.size < 3:
        raise InvertibilityError("trajectory visits fewer than 3 distinct shares; tau(psi) is not a function")
    d = np.diff(logtau)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise InvertibilityError("share is not monotone along the trajectory; "
                                 "use first_passage() for noisy trajectories")
    return ScalarCurve(psi, logtau, "log_tau_of_psi")


def first_passage(traj: Trajectory) -> Trajectory:
    """Keep the points where the share sets a new record in its overall direction.

    This turns a noisy, on-average monotone run into the first-passage curve
    ``tau(psi)``, which is strictly monotone.
    """
    psi = traj.psi
    up = psi[-1] >= psi[0]
    run = np.maximum.accumulate(psi) if up else np.minimum.accumulate(psi)
    prev = np.concatenate([[np.nan], run[:-1]])
    keep = np.concatenate([[True], (run[1:] > prev[1:]) if up else (run[1:] < prev[1:])])
    return Trajectory(traj.tau[keep], psi[keep])


@dataclass(frozen=True)
class InverseEstimate:
    psi_grid: np.ndarray
    pi_hat: np.ndarray
    tau_of_psi: np.ndarray
    bandwidth: float
    density: np.ndarray
    stderr: np.ndarray
    clamped: np.ndarray

    def to_csv(self, target):
        write_csv(target, ["psi", "pi_hat", "density"], [self.psi_grid, self.pi_hat, self.density])


def _local_linear(x, y, x0, h):
    lo, hi = np.searchsorted(x, [x0 - h, x0 + h])
    d = x[lo:hi] - x0
    yy = y[lo:hi]
    n = d.size
    if n < 3:
        return np.nan, np.nan, np.nan, n
    w = 1.0 - (d / h) ** 2
    sw = w.sum()
    dbar = (w * d).sum() / sw
    dc = d - dbar
    sxx = (w * dc * dc).sum()
    if sxx <= 0:
        return np.nan, np.nan, np.nan, n
    slope = (w * dc * yy).sum() / sxx
    intercept = (w * yy).sum() / sw - slope * dbar
    r = yy - intercept - slope * d
    dof = max(n - 2, 1)
    sigma2 = (w * r * r).sum() / sw * n / dof
    se = np.sqrt(sigma2 * (w * w * dc * dc).sum()) / sxx
    return intercept, slope, se, n


def estimate_urn_function(traj: Trajectory, bandwidth: float | None = None,
                          max_points: int = 1000) -> InverseEstimate:
    """Estimate ``pi`` on the visited share range.

    ``bandwidth`` is the kernel half-width in share units (default: 5% of the
    visited range). A full bandwidth is trimmed at each end of the range so
    every kernel window is symmetric.
    Estimates at points whose kernel window holds fewer than 10 samples are
    flagged with a ``SparseDataWarning``.
    """
    curve = estimate_transformed(traj)
    x, y = curve.grid, curve.values
    span = x[-1] - x[0]
    h = 0.05 * span if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValidationError("bandwidth must be positive")
    inner = x[(x >= x[0] + h) & (x <= x[-1] - h)]
    if inner.size == 0:
        raise ValidationError("bandwidth too wide for the visited share range")
    if inner.size > max_points:
        inner = inner[np.linspace(0, inner.size - 1, max_points).round().astype(int)]
    fits = np.array([_local_linear(x, y, x0, h) for x0 in inner])
    intercept, slope, se, density = fits.T
    raw = inner + 1.0 / slope
    pi_hat = np.clip(raw, 0.0, 1.0)
    clamped = (raw < 0) | (raw > 1)
    sparse = density < MIN_WINDOW
    if sparse.any():
        warnings.warn(f"{int(sparse.sum())} estimate(s) rest on fewer than {MIN_WINDOW} samples",
                      SparseDataWarning, stacklevel=2)
    return InverseEstimate(inner, pi_hat, np.exp(intercept), h, density.astype(int),
                           se / slope ** 2, clamped)
