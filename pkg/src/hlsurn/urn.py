"""Urn functions, exact simulation of the urn, its path embedding and the exact
finite-capacity law of the final black count.

A run starts from a seed of ``b0`` black and ``w0`` white balls, which count
toward the capacity ``T``. While the urn holds ``n < T`` balls, ``k`` of them
black, the next ball is black with probability ``pi(k / n)``.
"""

from __future__ import annotations

import bisect
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .curves import ScalarCurve, Trajectory, write_csv
from .errors import BudgetExceededError, NumericalError, ValidationError

DEFAULT_WORK_BUDGET = 5000 * 5000
BUDGET_ENV = "HLSURN_WORK_BUDGET"


def _check_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValidationError("urn function argument outside [0, 1]")


class UrnFunction:
    """Base class for urn functions ``pi: [0,1] -> [0,1]``.

    Subclasses implement ``_eval`` with plain arithmetic so that a Python float
    and a numpy array give bit-identical values; the scalar simulator and the
    vectorized batch simulator rely on this.
    """

    family: str = ""

    def __call__(self, x):
        if np.ndim(x) == 0:
            return float(self._eval(float(x)))
        return self._eval(np.asarray(x, dtype=float))

    def _eval(self, x):
        raise NotImplementedError

    def derivative(self, x):
        raise NotImplementedError

    @property
    def lipschitz(self) -> float:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def is_constant(self) -> bool:
        return False


@dataclass(frozen=True)
class Constant(UrnFunction):
    p: float
    family = "constant"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError("p outside [0,1]")

    def _eval(self, x):
        return x * 0.0 + self.p

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def lipschitz(self):
        return 0.0

    @property
    def is_constant(self):
        return True

    def to_dict(self):
        return {"family": "constant", "p": self.p}


@dataclass(frozen=True)
class Linear(UrnFunction):
    """``a + b x`` clamped into [0, 1]; ``Linear(0, 1)`` is the Polya urn."""

    a: float
    b: float
    family = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError("a and b must be finite")

    def _eval(self, x):
        y = self.a + self.b * x
        if isinstance(y, float):
            return min(max(y, 0.0), 1.0)
        return np.clip(y, 0.0, 1.0)

    def derivative(self, x):
        y = self.a + self.b * np.asarray(x, dtype=float)
        return np.where((y > 0) & (y < 1), self.b, 0.0)

    @property
    def lipschitz(self):
        return abs(self.b)

    @property
    def is_constant(self):
        lo, hi = self._eval(0.0), self._eval(1.0)
        return self.b == 0 or lo == hi

    def to_dict(self):
        return {"family": "linear", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Majority(UrnFunction):
    """Probability that the majority of ``m`` balls drawn with replacement is black."""

    m: int
    family = "majority"
    _coeffs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 3 or self.m % 2 == 0:
            raise ValidationError("m must be odd and >= 3")
        object.__setattr__(self, "_coeffs", tuple(math.comb(self.m, j) for j in range(self.m + 1)))

    def _eval(self, x):
        m = self.m
        y = 1.0 - x
        total = 0.0
        for j in range(m // 2 + 1, m + 1):
            term = float(self._coeffs[j])
            for _ in range(j):
                term = term * x
            for _ in range(m - j):
                term = term * y
            total = total + term
        return total

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        r = (self.m + 1) // 2
        return self.m * math.comb(self.m - 1, r - 1) * x ** (r - 1) * (1 - x) ** (self.m - r)

    @property
    def lipschitz(self):
        return float(self.derivative(0.5))

    def to_dict(self):
        return {"family": "majority", "m": self.m}


@dataclass(frozen=True)
class Table(UrnFunction):
    """Piecewise-linear interpolation of ``ys`` on the grid ``xs`` (0 = xs[0] < ... < xs[-1] = 1)."""

    xs: tuple
    ys: tuple
    family = "table"

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        ys = tuple(float(v) for v in self.ys)
        if len(xs) != len(ys) or len(xs) < 2:
            raise ValidationError("xs and ys must have equal length >= 2")
        if xs[0] != 0.0 or xs[-1] != 1.0:
            raise ValidationError("xs must start at 0 and end at 1")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("xs must be strictly increasing")
        if any(not 0.0 <= v <= 1.0 for v in ys):
            raise ValidationError("ys outside [0,1]")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def _eval(self, x):
        xs, ys = self.xs, self.ys
        if isinstance(x, float):
            i = min(max(bisect.bisect_right(xs, x) - 1, 0), len(xs) - 2)
            return ys[i] + (ys[i + 1] - ys[i]) * ((x - xs[i]) / (xs[i + 1] - xs[i]))
        ax, ay = np.asarray(xs), np.asarray(ys)
        i = np.clip(np.searchsorted(ax, x, side="right") - 1, 0, len(xs) - 2)
        return ay[i] + (ay[i + 1] - ay[i]) * ((x - ax[i]) / (ax[i + 1] - ax[i]))

    def _slopes(self):
        return np.diff(self.ys) / np.diff(self.xs)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(np.asarray(self.xs), x, side="right") - 1, 0, len(self.xs) - 2)
        return self._slopes()[i]

    @property
    def lipschitz(self):
        return float(np.max(np.abs(self._slopes())))

    @property
    def is_constant(self):
        return len(set(self.ys)) == 1

    def to_dict(self):
        return {"family": "table", "xs": list(self.xs), "ys": list(self.ys)}


_FAMILIES = {
    "constant": (Constant, ("p",)),
    "linear": (Linear, ("a", "b")),
    "majority": (Majority, ("m",)),
    "table": (Table, ("xs", "ys")),
}


def urn_function_from_dict(d: dict) -> UrnFunction:
    if not isinstance(d, dict) or "family" not in d:
        raise ValidationError("urn spec must be an object with a 'family' key")
    family = d["family"]
    if family not in _FAMILIES:
        raise ValidationError(f"unknown family {family!r}")
    cls, keys = _FAMILIES[family]
    allowed = set(keys) | {"family"}
    if family == "table":
        allowed.add("interp")
        if d.get("interp", "linear") != "linear":
            raise ValidationError("table interp must be 'linear'")
    extra = set(d) - allowed
    if extra:
        raise ValidationError(f"unknown key(s) {sorted(extra)} for family {family!r}")
    missing = [k for k in keys if k not in d]
    if missing:
        raise ValidationError(f"missing key(s) {missing} for family {family!r}")
    try:
        return cls(*(d[k] for k in keys))
    except TypeError as exc:
        raise ValidationError(str(exc)) from exc


def urn_function_from_json(text: str) -> UrnFunction:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed urn JSON: {exc}") from exc
    return urn_function_from_dict(d)


def eval_urn_function(spec: UrnFunction, x):
    """``pi(x)`` for ``x`` in [0, 1]; raises ``ValidationError`` outside the domain."""
    _check_unit(x)
    return spec(x)


@dataclass(frozen=True)
class SeedComposition:
    b0: int = 1
    w0: int = 1

    def __post_init__(self):
        if int(self.b0) != self.b0 or int(self.w0) != self.w0 or self.b0 < 0 or self.w0 < 0:
            raise ValidationError("seed counts must be nonnegative integers")
        if self.b0 + self.w0 < 1:
            raise ValidationError("seed must hold at least one ball")
        object.__setattr__(self, "b0", int(self.b0))
        object.__setattr__(self, "w0", int(self.w0))

    @property
    def n0(self) -> int:
        return self.b0 + self.w0

    @property
    def share(self) -> float:
        return self.b0 / self.n0

    @classmethod
    def at(cls, tau0: float, psi0: float, T: int) -> "SeedComposition":
        """Seed holding ``round(tau0 T)`` balls with black share closest to ``psi0``."""
        n0 = max(1, round(tau0 * T))
        b0 = round(psi0 * n0)
        return cls(b0, n0 - b0)


def _check_capacity(T, seed):
    if int(T) != T or T <= seed.n0:
        raise ValidationError(f"capacity T={T} must be an integer larger than the seed size {seed.n0}")


@dataclass(frozen=True)
class History:
    """One realized run: the colors ``sigma`` of the balls added after the seed."""

    spec: UrnFunction
    T: int
    seed: SeedComposition
    sigma: np.ndarray
    rng_seed: int
    run_index: int = 0

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=np.uint8)
        if sigma.shape != (self.T - self.seed.n0,):
            raise ValidationError("sigma must have length T - n0")
        if np.any(sigma > 1):
            raise ValidationError("sigma entries must be 0 or 1")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    @property
    def counts(self) -> np.ndarray:
        """Black counts after ``n = n0 .. T`` balls."""
        return self.seed.b0 + np.concatenate([[0], np.cumsum(self.sigma, dtype=np.int64)])

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(self.seed.n0, self.T + 1)

    @property
    def final_black(self) -> int:
        return int(self.counts[-1])

    @property
    def final_share(self) -> float:
        return self.final_black / self.T

    def to_csv(self, target):
        """Columns ``n,sigma,psi,phi``; the seed row ``n = n0`` has an empty sigma."""
        n, k = self.sizes, self.counts
        sig = [""] + [str(int(s)) for s in self.sigma]
        write_csv(target, ["n", "sigma", "psi", "phi"], [n, sig, k / n, k / self.T])


def simulate(spec: UrnFunction, T: int, seed: SeedComposition = SeedComposition(), rng_seed: int = 0,
             run_index: int = 0) -> History:
    """Run the urn to capacity ``T``.

    Step ``n`` (urn holding ``n`` balls) draws the uniform ``u`` from the
    ``run_index`` stream of ``rng_seed`` and adds a black ball iff
    ``u < pi(k / n)``. ``montecarlo.run_batch`` uses the same streams, so run
    ``r`` of a batch reproduces ``simulate(..., run_index=r)``.
    """
    _check_capacity(T, seed)
    steps = T - seed.n0
    u = rng.run_uniforms(rng_seed, run_index, steps).tolist()
    f = spec._eval
    k = seed.b0
    n = seed.n0
    sigma = bytearray(steps)
    for i in range(steps):
        if u[i] < f(k / n):
            sigma[i] = 1
            k += 1
        n += 1
    return History(spec, T, seed, np.frombuffer(bytes(sigma), dtype=np.uint8), rng_seed, run_index)


def share_sequence(h: History) -> Trajectory:
    """Points ``(n / T, psi_n)`` for ``n = n0 .. T``."""
    n = h.sizes
    return Trajectory(n / h.T, h.counts / n)


@dataclass(frozen=True)
class LipschitzPath:
    """Piecewise-linear ``phi`` on the grid ``k / M``, nondecreasing with slopes in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ValidationError("a path needs at least one cell")
        if v[0] < 0:
            raise ValidationError("path offset must be nonnegative")
        s = np.diff(v) * (v.size - 1)
        if np.any(s < -1e-9) or np.any(s > 1 + 1e-9):
            raise ValidationError("path slopes must lie in [0, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def M(self) -> int:
        return self.values.size - 1

    @property
    def offset(self) -> float:
        return float(self.values[0])

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M

    @property
    def slopes(self) -> np.ndarray:
        return np.clip(np.diff(self.values) * self.M, 0.0, 1.0)

    @classmethod
    def from_slopes(cls, slopes, offset: float = 0.0) -> "LipschitzPath":
        slopes = np.asarray(slopes, dtype=float)
        return cls(offset + np.concatenate([[0.0], np.cumsum(slopes)]) / slopes.size)

    @classmethod
    def straight(cls, slope: float, M: int) -> "LipschitzPath":
        return cls.from_slopes(np.full(M, float(slope)))

    def __call__(self, tau):
        return np.interp(tau, self.grid, self.values)

    def to_csv(self, target):
        write_csv(target, ["tau", "phi"], [self.grid, self.values])


def embed(h: History) -> LipschitzPath:
    """Interpolated path of ``phi_n = k_n / T`` on the grid ``n / T``.

    The seed is laid out as a straight prefix of slope ``b0 / n0`` over the
    first ``n0`` cells, so the share along the prefix equals the seed share;
    every later cell has slope ``sigma_n``.
    """
    slopes = np.concatenate([np.full(h.seed.n0, h.seed.share), h.sigma.astype(float)])
    values = np.concatenate([[0.0], np.cumsum(slopes)]) / h.T
    values[h.seed.n0:] = h.counts / h.T
    return LipschitzPath(values)


def work_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_WORK_BUDGET
    try:
        return int(raw)
    except ValueError as exc:
        raise ValidationError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from exc


@dataclass(frozen=True)
class FinalShareDistribution:
    """Exact law of the final black count ``k = b0 .. b0 + T - n0``."""

    T: int
    seed: SeedComposition
    log_probs: np.ndarray

    def __post_init__(self):
        lp = np.array(self.log_probs, dtype=float)
        lp.setflags(write=False)
        object.__setattr__(self, "log_probs", lp)

    @property
    def counts(self) -> np.ndarray:
        return self.seed.b0 + np.arange(self.log_probs.size)

    @property
    def shares(self) -> np.ndarray:
        return self.counts / self.T

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def total(self) -> float:
        return math.fsum(self.probs)

    def prob_of(self, kmin: int, kmax: int) -> float:
        """``P(kmin <= final count <= kmax)``."""
        k = self.counts
        return math.fsum(self.probs[(k >= kmin) & (k <= kmax)])

    def entropy(self) -> ScalarCurve:
        """``(1/T) log P(final share = k/T)`` on the reachable, nonzero-probability shares."""
        keep = np.isfinite(self.log_probs)
        return ScalarCurve(self.shares[keep], self.log_probs[keep] / self.T, "entropy_phi_of_x")

    def to_csv(self, target):
        write_csv(target, ["k", "prob"], [self.counts, self.probs])


def exact_distribution(spec: UrnFunction, T: int, seed: SeedComposition = SeedComposition(),
                       budget: int | None = None) -> FinalShareDistribution:
    """Forward recursion over (balls, black count) in log space.

    Cost is ``T (T - n0)`` elementary updates; larger problems than ``budget``
    (default from the environment, else 5000**2) are refused.
    """
    _check_capacity(T, seed)
    budget = work_budget() if budget is None else budget
    work = T * (T - seed.n0)
    if work > budget:
        raise BudgetExceededError(f"DP work T*(T-n0)={work} exceeds budget {budget}", budget=budget)
    lp = np.zeros(1)
    with np.errstate(divide="ignore"):
        for n in range(seed.n0, T):
            k = seed.b0 + np.arange(lp.size)
            p = spec(k / n)
            up = lp + np.log(p)
            stay = lp + np.log1p(-p)
            new = np.empty(lp.size + 1)
            new[:-1] = stay
            new[-1] = -np.inf
            new[1:] = np.logaddexp(new[1:], up)
            lp = new
    dist = FinalShareDistribution(T, seed, lp)
    total = dist.total()
    if abs(total - 1.0) > 1e-12:
        raise NumericalError(f"exact distribution sums to {total!r}")
    return dist
