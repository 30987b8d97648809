"""Scaled moment generating function, Legendre transforms and the entropy-density ODE check.

The scaled MGF ``zeta(beta) = lim (1/T) log E exp(beta * k_T)`` of a
nondecreasing urn function satisfies

    pi(zeta'(beta)) = (exp(zeta) - 1) / (exp(beta) - 1),    zeta(0) = 0.

Read as an ODE ``zeta' = pi^{-1}(rhs)`` the relation is unstable going up
in ``beta`` (every slope at a fixed point of ``pi`` starts a solution), but
contracting going down. So the solver starts far out at ``beta_max + 30``,
where ``zeta ~ log(1 + pi(1) (e^beta - 1))``, and integrates back towards 0.
Negative ``beta`` is handled by the black/white mirror
``zeta(beta) = beta + zeta~(-beta)``, with ``zeta~`` the MGF of
``x -> 1 - pi(1 - x)``.

Entropy densities use the sign convention ``phi(x) = -sup_beta {x beta - zeta(beta)}``
so that ``phi <= 0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from .curves import ScalarCurve
from .errors import NumericalError, ValidationError
from .urn import UrnFunction

TAIL = 30.0
CONVEXITY_TOL = 1e-9
_FINE_STEP = 1e-3


@dataclass(frozen=True)
class _Mirror(UrnFunction):
    base: UrnFunction

    def _eval(self, x):
        return 1.0 - self.base(1.0 - x)

    def derivative(self, x):
        return self.base.derivative(1.0 - np.asarray(x, dtype=float))

    @property
    def is_constant(self):
        return self.base.is_constant


def _check_nondecreasing(spec):
    x = np.linspace(0.0, 1.0, 10_001)
    d = np.diff(spec(x))
    if np.any(d < -1e-12):
        bad = x[np.argmax(d < -1e-12)]
        raise ValidationError(f"urn function decreases near x={bad:.4g}; the MGF equation needs a "
                              "nondecreasing urn function")


def _ratio(beta, zeta):
    """``expm1(zeta) / expm1(beta)`` without overflow for large arguments."""
    if zeta > 700.0:
        return math.inf
    if beta > 1.0:
        return math.exp(min(zeta - beta, 700.0)) * (-math.expm1(-zeta)) / (-math.expm1(-beta))
    return math.expm1(zeta) / math.expm1(beta)


def _inverse(spec, r, beta):
    lo, hi = spec(0.0), spec(1.0)
    if r <= lo:
        return 0.0
    if r >= hi:
        return 1.0
    try:
        return brentq(lambda s: spec(s) - r, 0.0, 1.0, xtol=1e-15, rtol=1e-15)
    except ValueError as exc:
        raise NumericalError(f"cannot invert the urn function at beta={beta:.6g} (target {r!r})") from exc


def _positive_branch(spec, betas):
    """``(zeta, zeta', zeta'(0+))`` at the positive ``betas`` (sorted increasing)."""
    top = betas[-1] + TAIL
    extra = np.arange(1, int(betas[-1] / _FINE_STEP) + 1) * _FINE_STEP
    near = np.abs(extra[:, None] - betas[None, :]).min(axis=1) < 0.25 * _FINE_STEP if extra.size else []
    fine = np.union1d(betas, extra[~np.asarray(near, dtype=bool)])
    p1 = spec(1.0)
    z_top = math.log1p(p1 * math.expm1(top)) if p1 > 0 else math.log1p(math.expm1(top) * 1e-300)
    rhs = lambda b, z: [_inverse(spec, _ratio(b, z[0]), b)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sol = solve_ivp(rhs, (top, fine[0]), [z_top], method="Radau", t_eval=fine[::-1],
                        rtol=1e-12, atol=1e-13)
    if sol.status != 0:
        raise NumericalError(f"MGF integration failed near beta={sol.t[-1]:.6g}: {sol.message}")
    z = np.concatenate([[0.0], sol.y[0][::-1]])
    grid = np.concatenate([[0.0], fine])
    dz = CubicSpline(grid, z).derivative()(grid)
    idx = np.searchsorted(grid, betas)
    return z[idx], dz[idx], dz[0]


def solve_mgf(spec: UrnFunction, beta_grid) -> ScalarCurve:
    """``zeta`` on ``beta_grid`` (may include negative values) with the functional-equation residual.

    The residual is ``pi(zeta') - (e^zeta - 1)/(e^beta - 1)`` with ``zeta'``
    from a spline through the solution; at ``beta = 0`` it is
    ``pi(zeta'(0)) - zeta'(0)``.
    """
    betas = np.asarray(beta_grid, dtype=float)
    if betas.ndim != 1 or betas.size == 0 or np.any(np.diff(betas) <= 0) or not np.all(np.isfinite(betas)):
        raise ValidationError("beta_grid must be finite and strictly increasing")
    _check_nondecreasing(spec)
    zeta = np.zeros(betas.size)
    slope = np.zeros(betas.size)
    if spec.is_constant:
        p = spec(0.5)
        zeta = np.log1p(p * np.expm1(betas))
        slope = p * np.exp(betas) / (1.0 + p * np.expm1(betas))
    else:
        pos, neg = betas > 0, betas < 0
        s0 = None
        if neg.any():
            zt, dzt, d0 = _positive_branch(_Mirror(spec), -betas[neg][::-1])
            zeta[neg] = betas[neg] + zt[::-1]
            slope[neg] = 1.0 - dzt[::-1]
            s0 = 1.0 - d0
        if pos.any() or s0 is None:
            z, dz, d0 = _positive_branch(spec, betas[pos] if pos.any() else np.array([_FINE_STEP]))
            if pos.any():
                zeta[pos], slope[pos] = z, dz
            s0 = d0
        # at beta = 0 the slope is one-sided (right-hand where available)
        slope[betas == 0] = s0
    residual = np.empty(betas.size)
    for i, (b, z, s) in enumerate(zip(betas, zeta, slope)):
        r = s if b == 0 else _ratio(b, z)
        residual[i] = spec(min(max(s, 0.0), 1.0)) - r
    return ScalarCurve(betas, zeta, "mgf_zeta_of_beta", residual)


def _check_convex(grid, values, what):
    slopes = np.diff(values) / np.diff(grid)
    drop = np.diff(slopes)
    scale = max(1.0, float(np.max(np.abs(slopes)))) if slopes.size else 1.0
    if np.any(drop < -CONVEXITY_TOL * scale):
        i = int(np.argmin(drop)) + 1
        raise ValidationError(f"{what} is not convex near grid point {grid[i]:.6g}")


def _conjugate(grid, f, ys):
    """``sup_g (y g - f(g))`` for each ``y``: grid vertex, then refined on the spline."""
    spline = CubicSpline(grid, f)
    out = np.empty(len(ys))
    for j, y in enumerate(ys):
        vals = y * grid - f
        i = int(np.argmax(vals))
        best = vals[i]
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
        if b > a:
            res = minimize_scalar(lambda t: -(y * t - spline(t)), bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-13})
            best = max(best, -float(res.fun))
        out[j] = best
    return out


def legendre(curve: ScalarCurve, out_grid) -> ScalarCurve:
    """Convex conjugate in the direction fixed by ``curve.meaning``.

    * MGF ``zeta(beta)``  ->  entropy ``phi(x) = -sup_beta {x beta - zeta(beta)}``
    * entropy ``phi(x)``  ->  MGF ``zeta(beta) = sup_x {beta x + phi(x)}``
    """
    ys = np.asarray(out_grid, dtype=float)
    if ys.ndim != 1 or ys.size == 0:
        raise ValidationError("out_grid must be a non-empty 1-d grid")
    g, v = curve.grid, curve.values
    if curve.meaning == "mgf_zeta_of_beta":
        _check_convex(g, v, "zeta")
        return ScalarCurve(ys, -_conjugate(g, v, ys), "entropy_phi_of_x")
    if curve.meaning == "entropy_phi_of_x":
        _check_convex(g, -v, "-phi")
        return ScalarCurve(ys, _conjugate(g, -v, ys), "mgf_zeta_of_beta")
    raise ValidationError(f"cannot Legendre-transform a {curve.meaning!r} curve")


def reconstruct_urn_function(phi: ScalarCurve):
    """``(x, pi_hat)`` on the interior of the grid from an entropy density.

    ``pi_hat = (exp(phi - x phi') - 1) / (exp(-phi') - 1)``; where ``phi'``
    vanishes the 0/0 is replaced by its limit ``x exp(phi - x phi' + phi')``.
    """
    if phi.meaning != "entropy_phi_of_x":
        raise ValidationError("expected an entropy curve")
    x, f = phi.grid, phi.values
    if x.size < 4:
        raise ValidationError("need at least 4 grid points to differentiate")
    d = CubicSpline(x, f).derivative()(x)
    x, f, d = x[1:-1], f[1:-1], d[1:-1]
    e = f - x * d
    small = np.abs(d) <= 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.expm1(e) / np.expm1(-d)
    return x, np.where(small, x * np.exp(e + d), ratio)


def entropy_ode_residual(spec: UrnFunction, phi: ScalarCurve) -> ScalarCurve:
    """Residual ``pi_hat(x) - pi(x)`` of the urn function reconstructed from ``phi``."""
    x, pi_hat = reconstruct_urn_function(phi)
    return ScalarCurve(x, pi_hat - spec(x), "urn_residual")
