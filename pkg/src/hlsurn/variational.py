"""Event entropies by direct minimization of the path rate.

The entropy of an event is ``sup (Phi - Phi0*)`` over paths in the event,
i.e. minus the smallest integrated relative entropy ``int KL(phi' || pi(psi))``.
Paths are piecewise linear on ``M`` equal cells and the optimization runs
over the cell slopes with SLSQP from several warm starts.

A *free* start leaves the first slope unconstrained; the share on cell 0 is
that slope itself and the cell is counted in the cost. A *pinned* start at
``(tau0, psi0)`` lays out a straight prefix of slope ``psi0`` over the first
``tau0 * M`` cells, which is excluded from the cost.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize

from .action import path_entropy
from .curves import ScalarCurve
from .errors import InfeasibleEventError, ValidationError
from .urn import LipschitzPath, UrnFunction

EPS = 1e-10
_P_FLOOR = 1e-300


@dataclass(frozen=True)
class EventSpec:
    """Terminal-share event ``{psi(1) in [lo, hi]}``, optionally with a pinned start."""

    lo: float
    hi: float
    tau0: float | None = None
    psi0: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.hi <= 1.0 and -1.0 < self.lo <= self.hi and self.lo < 1.0):
            raise ValidationError("event needs lo <= hi with the interval meeting [0, 1]")
        if (self.tau0 is None) != (self.psi0 is None):
            raise ValidationError("a pinned start needs both tau0 and psi0")
        if self.tau0 is not None:
            if not 0.0 < self.tau0 < 1.0:
                raise ValidationError("pinned tau0 must lie in (0, 1)")
            if not 0.0 <= self.psi0 <= 1.0:
                raise ValidationError("pinned psi0 must lie in [0, 1]")

    @classmethod
    def endpoint_in(cls, x: float, y: float, tau0=None, psi0=None) -> "EventSpec":
        if not 0.0 <= x <= y <= 1.0:
            raise ValidationError("endpoint_in needs 0 <= x <= y <= 1")
        return cls(x, y, tau0, psi0)

    @classmethod
    def endpoint_eq(cls, x: float, halfwidth: float = 1e-7, tau0=None, psi0=None) -> "EventSpec":
        if not halfwidth > 0:
            raise ValidationError("halfwidth must be positive")
        if not 0.0 <= x <= 1.0:
            raise ValidationError("x must lie in [0, 1]")
        return cls(max(x - halfwidth, 0.0), min(x + halfwidth, 1.0), tau0, psi0)

    @property
    def pinned(self) -> bool:
        return self.tau0 is not None


class _Problem:
    """Discretized objective ``(1/M) sum_{j >= k0} KL(s_j || pi(psi_j))`` and its gradient."""

    def __init__(self, spec: UrnFunction, event: EventSpec, M: int):
        self.spec, self.event, self.M = spec, event, M
        if event.pinned:
            k0 = event.tau0 * M
            if abs(k0 - round(k0)) > 1e-9:
                raise ValidationError(f"tau0 * M must be an integer (got {k0})")
            self.k0 = int(round(k0))
            self.prefix = np.full(self.k0, float(event.psi0))
        else:
            self.k0 = 0
            self.prefix = np.empty(0)
        self.n = M - self.k0
        self.base = self.prefix.sum()
        self.denom = np.arange(M) + 0.5

    def full(self, s):
        return np.concatenate([self.prefix, s])

    def endpoint(self, s) -> float:
        return (self.base + np.sum(s)) / self.M

    def shares(self, full):
        csum = np.cumsum(full)
        return np.clip((csum - 0.5 * full) / self.denom, 0.0, 1.0)

    def cost_grad(self, s):
        full = self.full(s)
        psi = self.shares(full)[self.k0:]
        p = np.clip(self.spec(psi), _P_FLOOR, 1.0 - 1e-16)
        a = s
        with np.errstate(divide="ignore", invalid="ignore"):
            kl = (a * (np.log(a) - np.log(p)) + (1 - a) * (np.log1p(-a) - np.log1p(-p)))
            d_a = np.log(a) - np.log1p(-a) - np.log(p) + np.log1p(-p)
            d_p = (p - a) / (p * (1 - p))
        c = d_p * self.spec.derivative(psi) / self.denom[self.k0:]
        # d psi_j / d s_i = 1/(j+1/2) for i < j and (1/2)/(j+1/2) for i = j
        tail = np.concatenate([np.cumsum(c[::-1])[::-1][1:], [0.0]])
        grad = d_a + 0.5 * c + tail
        return kl.sum() / self.M, grad / self.M

    def path(self, s) -> LipschitzPath:
        return LipschitzPath.from_slopes(self.full(np.clip(s, 0.0, 1.0)))

    def reach(self):
        lo = self.endpoint(np.full(self.n, EPS))
        hi = self.endpoint(np.full(self.n, 1.0 - EPS))
        return lo, hi

    # --- warm starts -------------------------------------------------------

    def _zero_cost_from(self, head):
        """Extend ``head`` (free slopes already fixed) cell by cell with slope = pi(share)."""
        s = list(head)
        total = self.base + sum(s)
        for j in range(self.k0 + len(s), self.M):
            d = j + 0.5
            f = lambda v: v - self.spec(min(max((total + 0.5 * v) / d, 0.0), 1.0))
            f0, f1 = f(0.0), f(1.0)
            if f0 >= 0:
                v = 0.0
            elif f1 <= 0:
                v = 1.0
            else:
                v = brentq(f, 0.0, 1.0, xtol=1e-14)
            s.append(v)
            total += v
        return np.clip(np.array(s), EPS, 1.0 - EPS)

    def zero_cost_starts(self, target):
        if self.event.pinned:
            return [self._zero_cost_from([])]
        grid = np.linspace(EPS, 1.0 - EPS, 129)
        ends = np.array([self.endpoint(self._zero_cost_from([g])) for g in grid])
        starts = []
        d = ends - target
        for i in np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)[:4]:
            if d[i] == 0:
                s0 = grid[i]
            else:
                s0 = brentq(lambda g: self.endpoint(self._zero_cost_from([g])) - target,
                            grid[i], grid[i + 1], xtol=1e-13)
            starts.append(self._zero_cost_from([s0]))
        if not starts:
            starts.append(self._zero_cost_from([grid[np.argmin(np.abs(d))]]))
        return starts

    def straight_to(self, head, target):
        rest = self.n - len(head)
        if rest <= 0:
            return None
        c = (target * self.M - self.base - np.sum(head)) / rest
        if not EPS <= c <= 1.0 - EPS:
            return None
        return np.concatenate([head, np.full(rest, c)])

    def warm_starts(self, target):
        out = []
        st = self.straight_to(np.empty(0), target)
        if st is not None:
            out.append(st)
        for zc in self.zero_cost_starts(target):
            out.append(zc)
            for frac in (0.25, 0.5, 0.75, 0.9):
                blend = self.straight_to(zc[: int(frac * self.n)], target)
                if blend is not None:
                    out.append(blend)
        return out


def minimize_action(spec: UrnFunction, event: EventSpec, M: int = 64, maxiter: int = 500):
    """Best path in the event and its entropy ``Phi - Phi0* <= 0``.

    Returns ``(path, value)``. Raises ``InfeasibleEventError`` when no path
    with slopes in [0, 1] can end inside the event.
    """
    if int(M) != M or M < 8:
        raise ValidationError("M must be an integer >= 8")
    M = int(M)
    prob = _Problem(spec, event, M)
    reach_lo, reach_hi = prob.reach()
    lo, hi = max(event.lo, reach_lo), min(event.hi, reach_hi)
    if lo > hi:
        raise InfeasibleEventError(f"terminal share range [{event.lo}, {event.hi}] is out of reach "
                                   f"(reachable: [{reach_lo:.6g}, {reach_hi:.6g}])")
    target = 0.5 * (lo + hi)
    cons = [{"type": "ineq", "fun": lambda s: prob.endpoint(s) - lo, "jac": lambda s: np.full(s.size, 1.0 / M)},
            {"type": "ineq", "fun": lambda s: hi - prob.endpoint(s), "jac": lambda s: np.full(s.size, -1.0 / M)}]
    bounds = [(EPS, 1.0 - EPS)] * prob.n
    start_at = event.tau0 if event.pinned else 0.0
    candidates = []
    for x0 in prob.warm_starts(target):
        tries = [x0]
        with warnings.catch_warnings():
            # SLSQP clips its own trial points back into the bounds and says so
            warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
            res = minimize(prob.cost_grad, x0, jac=True, method="SLSQP", bounds=bounds, constraints=cons,
                           options={"maxiter": maxiter, "ftol": 1e-15})
        tries.append(np.clip(res.x, EPS, 1.0 - EPS))
        for s in tries:
            e = prob.endpoint(s)
            if lo - 1e-12 <= e <= hi + 1e-12:
                path = prob.path(s)
                candidates.append((path_entropy(path, spec, start_at), tuple(path.values), path))
    if not candidates:
        raise InfeasibleEventError("optimizer found no path satisfying the event constraint")
    value, _, path = max(candidates, key=lambda c: (c[0], c[1]))
    if value == -math.inf:
        raise InfeasibleEventError("every path in the event has a step of probability zero")
    return path, value


def entropy_curve(spec: UrnFunction, x_grid, M: int = 64, halfwidth: float = 1e-7,
                  tau0=None, psi0=None) -> ScalarCurve:
    """``phi(x)`` on ``x_grid`` from endpoint events of width ``2 * halfwidth``."""
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(np.diff(xs) <= 0):
        raise ValidationError("x_grid must be strictly increasing")
    vals = [minimize_action(spec, EventSpec.endpoint_eq(x, halfwidth, tau0, psi0), M)[1] for x in xs]
    return ScalarCurve(xs, np.array(vals), "entropy_phi_of_x")
