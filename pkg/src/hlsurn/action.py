"""Lagrangians and path actions of the urn's sample-path large deviations.

For a path ``phi`` with slope ``a = phi'`` and share ``psi = phi / tau``:

* scaled action     ``Phi   = int L(a, pi(psi)) dtau``
* Mogulskii action  ``Phi0* = int L(a, a) dtau``

with ``L(a, b) = a log b + (1 - a) log(1 - b)``. Their difference is minus
the integrated binary relative entropy ``KL(a || pi(psi))``, hence never
positive. Integrals use the midpoint rule per grid cell.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .urn import LipschitzPath, UrnFunction

LOG2 = math.log(2.0)


def scale_invariant_L(alpha, beta):
    """``alpha log beta + (1 - alpha) log(1 - beta)`` with ``0 log 0 = 0``; may be ``-inf``."""
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(a > 0, a * np.log(b), 0.0)
        second = np.where(a < 1, (1 - a) * np.log1p(-b), 0.0)
    out = first + second
    return float(out) if out.ndim == 0 else out


def binary_kl(a, p):
    """Relative entropy of Bernoulli(a) to Bernoulli(p); nonnegative, ``inf`` when unreachable."""
    a = np.asarray(a, dtype=float)
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        first = np.where(a > 0, a * (np.log(a) - np.log(p)), 0.0)
        second = np.where(a < 1, (1 - a) * (np.log1p(-a) - np.log1p(-p)), 0.0)
    out = np.maximum(first + second, 0.0)
    return float(out) if out.ndim == 0 else out


def mogulskii_lagrangian(alpha):
    """Cramer rate of the fair-coin increment: ``log 2 + alpha log alpha + (1-alpha) log(1-alpha)``."""
    return LOG2 + scale_invariant_L(alpha, alpha)


def _start_cell(path: LipschitzPath, start: float) -> int:
    k0 = start * path.M
    k = int(round(k0))
    if abs(k - k0) > 1e-9 or not 0 <= k < path.M:
        raise ValidationError(f"start saturation {start} is not a grid point of an M={path.M} path")
    return k


def cell_shares(path: LipschitzPath) -> np.ndarray:
    """Share ``phi / tau`` at every cell midpoint."""
    M = path.M
    mid = 0.5 * (path.values[1:] + path.values[:-1])
    tau = (np.arange(M) + 0.5) / M
    return np.clip(mid / tau, 0.0, 1.0)


def _quadrature(cells: np.ndarray, M: int) -> float:
    if np.any(cells == -np.inf):
        return -math.inf
    return math.fsum(cells) / M


def scaled_action(path: LipschitzPath, spec: UrnFunction, start: float = 0.0) -> float:
    """``int_start^1 L(phi', pi(phi / tau)) dtau``."""
    k = _start_cell(path, start)
    cells = scale_invariant_L(path.slopes, spec(cell_shares(path)))[k:]
    return _quadrature(cells, path.M)


def mogulskii_action(path: LipschitzPath, start: float = 0.0) -> float:
    """``int_start^1 L(phi', phi') dtau``."""
    k = _start_cell(path, start)
    s = path.slopes
    return _quadrature(scale_invariant_L(s, s)[k:], path.M)


def path_entropy(path: LipschitzPath, spec: UrnFunction, start: float = 0.0) -> float:
    """``Phi - Phi0*`` summed cell by cell as ``-KL``, so it is never positive."""
    k = _start_cell(path, start)
    kl = binary_kl(path.slopes, spec(cell_shares(path)))[k:]
    if np.any(np.isinf(kl)):
        return -math.inf
    return -math.fsum(kl) / path.M


def varadhan_entropy(path: LipschitzPath, spec: UrnFunction, start: float = 0.0) -> float:
    """``log 2 + Phi - Phi0`` with the unshifted Mogulskii Lagrangian of the fair coin."""
    k = _start_cell(path, start)
    s = path.slopes
    phi0 = _quadrature(mogulskii_lagrangian(s)[k:], path.M)
    phi = scaled_action(path, spec, start)
    return LOG2 * (1.0 - start) + phi - phi0


@dataclass(frozen=True)
class ActionReport:
    scaled_action: float
    mogulskii_action: float
    entropy: float
    lagrangian: np.ndarray

    def to_json(self) -> str:
        def num(v):
            return v if math.isfinite(v) else str(v)
        return json.dumps({
            "scaled_action": num(self.scaled_action),
            "mogulskii_action": num(self.mogulskii_action),
            "entropy": num(self.entropy),
            "lagrangian": [num(float(v)) for v in self.lagrangian],
        })


def action_report(path: LipschitzPath, spec: UrnFunction, start: float = 0.0) -> ActionReport:
    k = _start_cell(path, start)
    lag = scale_invariant_L(path.slopes, spec(cell_shares(path)))[k:]
    return ActionReport(scaled_action(path, spec, start), mogulskii_action(path, start),
                        path_entropy(path, spec, start), np.asarray(lag))
