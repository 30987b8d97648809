"""Fixed points of the urn function and the deterministic (zero-cost) share dynamics.

In the large-capacity limit the share follows ``d psi / d tau = (pi(psi) - psi) / tau``.
With ``s = log tau`` this is the autonomous flow ``d psi / ds = g(psi)``,
``g(x) = pi(x) - x``, which is what the integrator solves. The transformed
urn function ``Pi = int dx / g(x)`` turns the flow into
``Pi(psi(tau)) - Pi(psi0) = log(tau / tau0)``, giving an independent route to
the same trajectory.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .curves import ScalarCurve, Trajectory
from .errors import (DegeneracyError, DegeneracyWarning, NumericalError, SingularityError,
                     StiffIntegrationWarning, ValidationError)
from .urn import UrnFunction

STABLE = "downcrossing_stable"
UNSTABLE = "upcrossing_unstable"
TANGENT = "tangent_degenerate"

_ZERO = 1e-14
_SIDE = 1e-7


def drift(spec: UrnFunction, x):
    return spec(x) - np.asarray(x, dtype=float) if np.ndim(x) else spec(x) - x


@dataclass(frozen=True)
class FixedPoint:
    x: float
    kind: str

    @property
    def stable(self) -> bool:
        return self.kind == STABLE


@dataclass(frozen=True)
class FixedPointSet:
    points: tuple

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def xs(self):
        return [p.x for p in self.points]

    @property
    def kinds(self):
        return [p.kind for p in self.points]

    def to_json(self) -> str:
        return json.dumps([{"x": p.x, "kind": p.kind} for p in self.points])


def _sign(v):
    return 0 if abs(v) <= 1e-15 else (1 if v > 0 else -1)


def classify(spec: UrnFunction, x: float) -> str:
    """Label a root of ``pi(x) - x`` by the sign of the drift on either side."""
    left = _sign(drift(spec, x - _SIDE)) if x - _SIDE >= 0 else None
    right = _sign(drift(spec, x + _SIDE)) if x + _SIDE <= 1 else None
    toward = [s for s, want in ((left, 1), (right, -1)) if s is not None and s == want]
    away = [s for s, want in ((left, -1), (right, 1)) if s is not None and s == want]
    sides = [s for s in (left, right) if s is not None]
    if len(toward) == len(sides):
        return STABLE
    if len(away) == len(sides):
        return UNSTABLE
    return TANGENT


def degenerate_interval(spec: UrnFunction, cells: int = 10_000):
    """First interval of grid cells on which ``pi(x) = x`` identically, or None."""
    x = np.linspace(0.0, 1.0, cells + 1)
    zero = np.abs(drift(spec, x)) <= _ZERO
    mids = np.abs(drift(spec, 0.5 * (x[1:] + x[:-1]))) <= _ZERO
    flat = zero[:-1] & zero[1:] & mids
    if not flat.any():
        return None
    i = int(np.argmax(flat))
    j = i
    while j < cells and flat[j]:
        j += 1
    return float(x[i]), float(x[j])


def fixed_points(spec: UrnFunction, tol: float = 1e-12, cells: int = 10_000) -> FixedPointSet:
    """Isolated solutions of ``pi(x) = x`` on [0, 1], located to ``tol``.

    Roots are bracketed by sign changes on a uniform grid and refined by
    Brent's method; touching roots without a sign change are found by
    minimizing ``|pi(x) - x|`` near grid-local minima.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    interval = degenerate_interval(spec, cells)
    if interval is not None:
        raise DegeneracyError(f"pi(x) = x on the whole interval [{interval[0]}, {interval[1]}]", interval)
    x = np.linspace(0.0, 1.0, cells + 1)
    g = drift(spec, x)
    f = lambda t: drift(spec, t)
    roots = [float(t) for t in x[np.abs(g) <= _ZERO]]
    for i in np.nonzero(g[:-1] * g[1:] < 0)[0]:
        roots.append(brentq(f, x[i], x[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps))
    a = np.abs(g)
    h = 1.0 / cells
    for i in range(1, cells):
        if (a[i] < a[i - 1] and a[i] <= a[i + 1] and g[i - 1] * g[i] > 0 and g[i] * g[i + 1] > 0
                and a[i] <= (spec.lipschitz + 1.0) * h):
            res = minimize_scalar(lambda t: abs(f(t)), bounds=(x[i - 1], x[i + 1]), method="bounded",
                                  options={"xatol": tol})
            if abs(f(res.x)) <= 1e-12:
                roots.append(float(res.x))
    roots.sort()
    merged = []
    for r in roots:
        if not merged or r - merged[-1] > 10 * tol:
            merged.append(r)
    return FixedPointSet(tuple(FixedPoint(r, classify(spec, r)) for r in merged))


def probe_stability(spec: UrnFunction, x: float, eps: float = 1e-3, tau0: float = 0.5) -> str:
    """Label a fixed point by running the flow from ``x +- eps`` until ``2 tau0``."""
    toward, away, sides = 0, 0, 0
    for d in (-eps, eps):
        start = x + d
        if not 0.0 <= start <= 1.0:
            continue
        sides += 1
        end = zero_cost_trajectory(spec, tau0, start, taus=[tau0, 2 * tau0], check=False).psi[-1]
        if abs(end - x) < abs(d) - 1e-12:
            toward += 1
        elif abs(end - x) > abs(d) + 1e-12:
            away += 1
    if toward == sides:
        return STABLE
    if away == sides:
        return UNSTABLE
    return TANGENT


def _check_no_root_inside(spec, lo, hi):
    x = np.linspace(lo, hi, 4001)[1:-1]
    g = drift(spec, x)
    bad = np.nonzero((np.abs(g) <= _ZERO) | np.concatenate([[False], g[:-1] * g[1:] < 0]))[0]
    if bad.size:
        raise SingularityError(f"interval ({lo}, {hi}) contains a fixed point near {x[bad[0]]:.6g}")


@dataclass(frozen=True)
class TransformedUrnFunction:
    """``Pi(a) = int_c^a dx / (pi(x) - x)`` on a fixed-point-free interval, ``c`` its midpoint."""

    spec: UrnFunction
    interval: tuple
    grid: np.ndarray
    values: np.ndarray

    @property
    def center(self) -> float:
        return 0.5 * (self.interval[0] + self.interval[1])

    def __call__(self, a: float) -> float:
        return _integral(self.spec, self.center, a)

    def derivative(self, a):
        return 1.0 / drift(self.spec, a)

    def inverse(self, value: float) -> float:
        lo, hi = self.grid[0], self.grid[-1]
        return brentq(lambda a: self(a) - value, lo, hi, xtol=1e-14)

    def as_curve(self) -> ScalarCurve:
        return ScalarCurve(self.grid, self.values, "transformed_Pi")


def _integral(spec, a, b):
    if a == b:
        return 0.0
    # steep but integrable growth next to a fixed point trips quad's roundoff heuristics
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda t: 1.0 / (spec(t) - t), a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def transformed_urn_function(spec: UrnFunction, interval, step: float = 1e-3) -> TransformedUrnFunction:
    """Tabulate the transformed urn function on ``interval`` with spacing ``step``.

    The grid runs through the interval midpoint, where the constant is fixed to
    zero. Endpoints that are fixed points are left out of the grid.
    """
    lo, hi = map(float, interval)
    if not 0.0 <= lo < hi <= 1.0:
        raise ValidationError("interval must satisfy 0 <= l < u <= 1")
    if step <= 0:
        raise ValidationError("step must be positive")
    _check_no_root_inside(spec, lo, hi)
    c = 0.5 * (lo + hi)
    n_lo = math.floor((c - lo) / step + 1e-9)
    n_hi = math.floor((hi - c) / step + 1e-9)
    grid = c + step * np.arange(-n_lo, n_hi + 1)
    grid = grid[(grid > lo) & (grid < hi)]
    ends = [e for e in (lo, hi) if abs(drift(spec, e)) > _ZERO]
    grid = np.unique(np.concatenate([grid, ends]))
    i0 = int(np.argmin(np.abs(grid - c)))
    values = np.zeros(grid.size)
    values[i0] = _integral(spec, c, grid[i0])
    for i in range(i0 + 1, grid.size):
        values[i] = values[i - 1] + _integral(spec, grid[i - 1], grid[i])
    for i in range(i0 - 1, -1, -1):
        values[i] = values[i + 1] - _integral(spec, grid[i], grid[i + 1])
    return TransformedUrnFunction(spec, (lo, hi), grid, values)


def _validate_start(tau0, psi0):
    if not (tau0 > 0):
        raise ValidationError("tau0 must be positive: a start at zero saturation is degenerate")
    if tau0 > 1:
        raise ValidationError("tau0 must not exceed 1")
    if not 0.0 <= psi0 <= 1.0:
        raise ValidationError("psi0 must lie in [0, 1]")


def _tau_grid(tau0, taus, num):
    if taus is None:
        return np.linspace(tau0, 1.0, num) if tau0 < 1 else np.array([1.0])
    taus = np.asarray(taus, dtype=float)
    if taus.ndim != 1 or taus.size == 0 or np.any(np.diff(taus) <= 0):
        raise ValidationError("taus must be a strictly increasing 1-d grid")
    if taus[0] < tau0 - 1e-15 or taus[-1] > 1.0:
        raise ValidationError("taus must lie in [tau0, 1]")
    return taus


def _target_root(spec, psi0):
    """Nearest fixed point in the direction of the flow from ``psi0``."""
    g0 = drift(spec, psi0)
    roots = fixed_points(spec).xs
    if g0 > 0:
        return min(r for r in roots if r > psi0)
    return max(r for r in roots if r < psi0)


def solve_by_inversion(spec: UrnFunction, tau0: float, psi0: float, taus) -> np.ndarray:
    """Trajectory from ``Pi(psi) - Pi(psi0) = log(tau / tau0)``, solved by root finding."""
    _validate_start(tau0, psi0)
    taus = _tau_grid(tau0, taus, 0)
    if abs(drift(spec, psi0)) <= _ZERO:
        return np.full(taus.size, psi0)
    target = _target_root(spec, psi0)
    direction = 1.0 if target > psi0 else -1.0
    out = np.empty(taus.size)
    for i, tau in enumerate(taus):
        L = math.log(tau / tau0)
        if L <= 0:
            out[i] = psi0
            continue
        F = lambda p: _integral(spec, psi0, p) - L
        eta = 1e-12
        edge = target - direction * eta
        if (edge - psi0) * direction <= 0 or F(edge) < 0:
            out[i] = target
        else:
            out[i] = brentq(F, psi0, edge, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return out


def zero_cost_trajectory(spec: UrnFunction, tau0: float, psi0: float, taus=None, num: int = 201,
                         rtol: float = 1e-11, atol: float = 1e-12, check: bool = True) -> Trajectory:
    """Integrate ``d psi / d tau = (pi(psi) - psi) / tau`` from ``(tau0, psi0)`` to ``tau = 1``.

    Output is sampled on ``taus`` (default ``num`` equispaced saturations).
    With ``check`` the end point is compared with the transformed-urn-function
    solution and a ``NumericalError`` is raised when they differ by more than 1e-6.
    """
    _validate_start(tau0, psi0)
    taus = _tau_grid(tau0, taus, num)
    if abs(drift(spec, psi0)) <= _ZERO:
        if degenerate_interval(spec) is not None:
            warnings.warn("urn function coincides with the diagonal on an interval; the flow is trivial",
                          DegeneracyWarning, stacklevel=2)
        return Trajectory(taus, np.full(taus.size, psi0))
    s_eval = np.maximum(np.log(taus), math.log(tau0))
    s0 = math.log(tau0)
    rhs = lambda s, y: [spec(min(max(y[0], 0.0), 1.0)) - y[0]]
    if s_eval[-1] <= s0:
        psi = np.full(taus.size, psi0)
    else:
        sol = solve_ivp(rhs, (s0, s_eval[-1]), [psi0], method="DOP853", t_eval=s_eval,
                        rtol=rtol, atol=atol)
        if sol.status < 0:
            warnings.warn(f"integration stopped early: {sol.message}", StiffIntegrationWarning, stacklevel=2)
            n = sol.t.size
            return Trajectory(taus[:n], np.clip(sol.y[0], 0.0, 1.0))
        psi = sol.y[0]
        psi = np.where(s_eval <= s0, psi0, psi)
    psi = np.clip(psi, 0.0, 1.0)
    if check and taus[-1] > tau0:
        ref = solve_by_inversion(spec, tau0, psi0, [taus[-1]])[0]
        if abs(ref - psi[-1]) > 1e-6:
            raise NumericalError(f"integrator and inversion routes disagree at tau={taus[-1]}: "
                                 f"{psi[-1]!r} vs {ref!r}")
    return Trajectory(taus, psi)


def terminal_point(spec: UrnFunction, tau0: float, psi0: float) -> float:
    """Share at saturation 1 along the zero-cost trajectory."""
    _validate_start(tau0, psi0)
    if tau0 == 1.0:
        return float(psi0)
    return float(zero_cost_trajectory(spec, tau0, psi0, taus=[tau0, 1.0]).psi[-1])
