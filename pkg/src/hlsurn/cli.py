"""Command-line front end: one subcommand per operation, CSV/JSON artifacts.

Exit codes: 0 success, 2 invalid input, 3 infeasible or degenerate problem,
4 work budget exceeded, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import action, dynamics, inverse, mgf, montecarlo, urn, variational
from .curves import ScalarCurve, Trajectory, read_csv, write_csv
from .errors import BudgetExceededError, UrnError, ValidationError

COMMANDS = ("simulate", "dp", "trajectory", "fixpoints", "invert", "action", "minimize",
            "entropy", "mgf", "legendre", "batch", "importance")


@dataclass
class RunConfig:
    command: str
    urn: urn.UrnFunction | None
    params: dict = field(default_factory=dict)
    out: str = "-"
    fmt: str = "csv"


def parse_grid(text: str) -> np.ndarray:
    """``a:b:step`` (inclusive of ``b`` when it lies on the grid) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if not step > 0 or b < a:
                raise ValidationError(f"grid {text!r} needs step > 0 and a <= b")
            n = int(math.floor((b - a) / step + 1e-9))
            return a + step * np.arange(n + 1)
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ValidationError(f"cannot parse grid {text!r}") from exc


def load_urn(text: str) -> urn.UrnFunction:
    """Urn function from inline JSON or from a JSON file path."""
    if not text.lstrip().startswith("{"):
        p = Path(text)
        if not p.is_file():
            raise ValidationError(f"--urn: {text!r} is neither inline JSON nor a file")
        text = p.read_text()
    return urn.urn_function_from_json(text)


# --- parser ------------------------------------------------------------------

def _add_urn(p):
    p.add_argument("--urn", default=None,
                   help='(required) urn function as inline JSON or a JSON file, e.g. \'{"family":"majority","m":3}\'')


def _add_seed(p):
    p.add_argument("--seed-black", type=int, default=1, help="black balls in the seed (balls)")
    p.add_argument("--seed-white", type=int, default=1, help="white balls in the seed (balls)")


def _add_T(p, default=1000):
    p.add_argument("--T", type=int, default=default, help="urn capacity, seed included (balls)")


def _add_start(p, required=False):
    p.add_argument("--tau0", type=float, default=None if not required else 0.5,
                   help="start saturation n/T (fraction of capacity)")
    p.add_argument("--psi0", type=float, default=None if not required else 0.5,
                   help="start share k/n (fraction black)")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="hlsurn", description="Generalized urn laboratory.", formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, helptext, default_format="csv"):
        p = sub.add_parser(name, help=helptext, description=helptext, formatter_class=fmt)
        p.add_argument("--config", default=None,
                       help="JSON file of option values (keys are option names with '-' as '_')")
        p.add_argument("--out", default="-", help="output file; '-' writes to stdout")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=default_format,
                       help="artifact format")
        return p

    p = cmd("simulate", "one urn run; CSV columns n,sigma,psi,phi")
    _add_urn(p), _add_T(p), _add_seed(p)
    p.add_argument("--rng", type=int, default=0, help="batch RNG seed (integer)")
    p.add_argument("--run-index", type=int, default=0, help="stream index within the RNG seed")

    p = cmd("dp", "exact law of the final black count; CSV columns k,prob")
    _add_urn(p), _add_T(p), _add_seed(p)
    p.add_argument("--budget", type=int, default=None,
                   help=f"work budget in elementary updates (default: ${urn.BUDGET_ENV} or {urn.DEFAULT_WORK_BUDGET})")

    p = cmd("trajectory", "zero-cost trajectory from (tau0, psi0); CSV columns tau,psi")
    _add_urn(p), _add_start(p, required=True)
    p.add_argument("--num", type=int, default=201, help="output samples on [tau0, 1] (points)")

    p = cmd("fixpoints", "fixed points of the urn function with their stability", "json")
    _add_urn(p)
    p.add_argument("--tol", type=float, default=1e-12, help="root tolerance (share units)")

    p = cmd("invert", "estimate the urn function from a trajectory CSV (tau,psi); CSV columns psi,pi_hat,density")
    p.add_argument("--input", default=None, help="(required) trajectory CSV with columns tau,psi")
    p.add_argument("--bandwidth", type=float, default=None,
                   help="kernel half-width in share units (default: 5%% of the visited range)")
    p.add_argument("--first-passage", action="store_true",
                   help="reduce a noisy run to its first-passage curve before inverting")

    p = cmd("action", "scaled and Mogulskii actions of a path CSV (tau,phi)", "json")
    _add_urn(p)
    p.add_argument("--path", default=None, help="(required) path CSV with columns tau,phi on an equispaced grid")
    p.add_argument("--start", type=float, default=0.0, help="saturation where the action integral starts")

    p = cmd("minimize", "best path for a terminal-share event; CSV columns tau,phi, JSON adds the value")
    _add_urn(p)
    p.add_argument("--lo", type=float, default=None, help="event lower end (final share)")
    p.add_argument("--hi", type=float, default=None, help="event upper end (final share)")
    p.add_argument("--x", type=float, default=None, help="event centre for endpoint_eq (final share)")
    p.add_argument("--halfwidth", type=float, default=1e-7, help="endpoint_eq half-width (share units)")
    _add_start(p)
    p.add_argument("--M", type=int, default=64, help="path cells")

    p = cmd("entropy", "entropy density phi(x) by path minimization; CSV columns grid,value")
    _add_urn(p)
    p.add_argument("--grid", default="0.05:0.95:0.05", help="terminal shares a:b:step or comma list")
    p.add_argument("--M", type=int, default=64, help="path cells")
    p.add_argument("--halfwidth", type=float, default=1e-7, help="endpoint event half-width (share units)")
    _add_start(p)

    p = cmd("mgf", "scaled MGF zeta(beta); CSV columns grid,value (JSON adds the residual)")
    _add_urn(p)
    p.add_argument("--grid", default="0:8:0.1", help="beta values a:b:step or comma list (dimensionless)")

    p = cmd("legendre", "Legendre transform of a grid,value CSV; CSV columns grid,value")
    p.add_argument("--input", default=None, help="(required) curve CSV with columns grid,value")
    p.add_argument("--meaning", choices=("mgf_zeta_of_beta", "entropy_phi_of_x"), default="mgf_zeta_of_beta",
                   help="what the input curve is")
    p.add_argument("--grid", default="0.01:0.99:0.01", help="output grid a:b:step or comma list")

    p = cmd("batch", "R independent runs; JSON histogram of final counts, CSV of final shares", "json")
    _add_urn(p), _add_T(p), _add_seed(p)
    p.add_argument("--R", type=int, default=1000, help="number of runs")
    p.add_argument("--rng", type=int, default=0, help="batch RNG seed (integer)")
    p.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")

    p = cmd("importance", "fair-coin importance-sampling estimate of P(kmin <= k_T <= kmax)", "json")
    _add_urn(p), _add_T(p, 20), _add_seed(p)
    p.add_argument("--kmin", type=int, default=0, help="smallest final black count in the event (balls)")
    p.add_argument("--kmax", type=int, default=None, help="largest final black count in the event (default: T)")
    p.add_argument("--R", type=int, default=10_000, help="number of sampled histories")
    p.add_argument("--rng", type=int, default=0, help="batch RNG seed (integer)")
    p.add_argument("--workers", type=int, default=1, help="worker threads (results do not depend on it)")
    return parser


def _subparsers(parser):
    for action_ in parser._actions:
        if isinstance(action_, argparse._SubParsersAction):
            return action_.choices
    raise RuntimeError("parser has no subcommands")


_POSITIVE_INT = ("T", "R", "M", "num", "workers")
_NONNEG_INT = ("seed_black", "seed_white", "run_index")
_UNIT = ("tau0", "psi0", "lo", "hi", "x", "start")


def _validate(params):
    for k in _POSITIVE_INT:
        if params.get(k) is not None and params[k] < 1:
            raise ValidationError(f"--{k.replace('_', '-')} must be >= 1")
    for k in _NONNEG_INT:
        if params.get(k) is not None and params[k] < 0:
            raise ValidationError(f"--{k.replace('_', '-')} must be >= 0")
    for k in _UNIT:
        v = params.get(k)
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValidationError(f"--{k} must lie in [0, 1]")
    if params.get("M") is not None and params["M"] < 8:
        raise ValidationError("--M must be >= 8")
    for k in ("bandwidth", "halfwidth"):
        if params.get(k) is not None and not params[k] > 0:
            raise ValidationError(f"--{k} must be positive")
    if "seed_black" in params and params["seed_black"] + params["seed_white"] < 1:
        raise ValidationError("the seed needs at least one ball")


def parse_config(argv) -> RunConfig:
    """Parse the command line (and an optional ``--config`` JSON file) into a ``RunConfig``.

    Command-line flags take precedence over config-file values; unknown
    config keys are rejected.
    """
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.config is not None:
        try:
            data = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"--config: cannot read {ns.config!r}: {exc}") from exc
        if not isinstance(data, dict):
            raise ValidationError("--config must hold a JSON object")
        if data.pop("command", ns.command) != ns.command:
            raise ValidationError("--config names a different command")
        sp = _subparsers(parser)[ns.command]
        dests = {a.dest for a in sp._actions} - {"help", "config"}
        unknown = sorted(set(data) - dests)
        if unknown:
            raise ValidationError(f"--config: unknown key(s) {unknown} for {ns.command}")
        if isinstance(data.get("urn"), dict):
            data["urn"] = json.dumps(data["urn"])
        sp.set_defaults(**data)
        ns = parser.parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "out", "fmt", "urn")}
    _validate(params)
    for name in ("input", "path"):
        if name in params and params[name] is None:
            raise ValidationError(f"{ns.command} requires --{name}")
    needs_urn = ns.command not in ("invert", "legendre")
    if needs_urn and ns.urn is None:
        raise ValidationError(f"{ns.command} requires --urn")
    spec = load_urn(ns.urn) if needs_urn else None
    return RunConfig(ns.command, spec, params, ns.out, ns.fmt)


# --- dispatch ----------------------------------------------------------------

@contextlib.contextmanager
def _sink(out):
    if out == "-":
        yield sys.stdout
    else:
        with open(out, "w", newline="") as fh:
            yield fh


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


def _floats(a):
    return [float(v) if math.isfinite(v) else str(float(v)) for v in np.asarray(a, dtype=float)]


def _seed(p):
    return urn.SeedComposition(p["seed_black"], p["seed_white"])


def _emit_curve(curve: ScalarCurve, fmt, fh):
    if fmt == "csv":
        curve.to_csv(fh)
    else:
        obj = {"meaning": curve.meaning, "grid": _floats(curve.grid), "value": _floats(curve.values)}
        if curve.residual is not None:
            obj["residual"] = _floats(curve.residual)
        fh.write(_dumps(obj) + "\n")


def _run(cfg: RunConfig, fh):
    p, spec, fmt = cfg.params, cfg.urn, cfg.fmt
    c = cfg.command
    if c == "simulate":
        h = urn.simulate(spec, p["T"], _seed(p), p["rng"], p["run_index"])
        if fmt == "csv":
            h.to_csv(fh)
        else:
            fh.write(_dumps({"final_black": h.final_black, "T": h.T,
                             "sigma": [int(s) for s in h.sigma]}) + "\n")
    elif c == "dp":
        d = urn.exact_distribution(spec, p["T"], _seed(p), p["budget"])
        if fmt == "csv":
            d.to_csv(fh)
        else:
            fh.write(_dumps({"k": [int(k) for k in d.counts], "prob": _floats(d.probs)}) + "\n")
    elif c == "trajectory":
        tr = dynamics.zero_cost_trajectory(spec, p["tau0"], p["psi0"], num=p["num"])
        if fmt == "csv":
            tr.to_csv(fh)
        else:
            fh.write(_dumps({"tau": _floats(tr.tau), "psi": _floats(tr.psi)}) + "\n")
    elif c == "fixpoints":
        fh.write(dynamics.fixed_points(spec, tol=p["tol"]).to_json() + "\n")
    elif c == "invert":
        tr = Trajectory.from_csv(p["input"])
        if p["first_passage"]:
            tr = inverse.first_passage(tr)
        est = inverse.estimate_urn_function(tr, p["bandwidth"])
        if fmt == "csv":
            est.to_csv(fh)
        else:
            fh.write(_dumps({"psi": _floats(est.psi_grid), "pi_hat": _floats(est.pi_hat),
                             "density": [int(v) for v in est.density], "bandwidth": est.bandwidth}) + "\n")
    elif c == "action":
        tau, phi = read_csv(p["path"], ["tau", "phi"])
        M = tau.size - 1
        if M < 1 or np.max(np.abs(tau - np.arange(M + 1) / M)) > 1e-9:
            raise ValidationError("path CSV must sample tau on the equispaced grid k/M, k=0..M")
        rep = action.action_report(urn.LipschitzPath(phi), spec, p["start"])
        fh.write(rep.to_json() + "\n")
    elif c == "minimize":
        if p["x"] is not None:
            ev = variational.EventSpec.endpoint_eq(p["x"], p["halfwidth"], p["tau0"], p["psi0"])
        elif p["lo"] is not None and p["hi"] is not None:
            ev = variational.EventSpec.endpoint_in(p["lo"], p["hi"], p["tau0"], p["psi0"])
        else:
            raise ValidationError("minimize needs --x or both --lo and --hi")
        path, value = variational.minimize_action(spec, ev, p["M"])
        if fmt == "csv":
            path.to_csv(fh)
        else:
            fh.write(_dumps({"value": value, "tau": _floats(path.grid), "phi": _floats(path.values)}) + "\n")
    elif c == "entropy":
        curve = variational.entropy_curve(spec, parse_grid(p["grid"]), p["M"], p["halfwidth"],
                                          p["tau0"], p["psi0"])
        _emit_curve(curve, fmt, fh)
    elif c == "mgf":
        _emit_curve(mgf.solve_mgf(spec, parse_grid(p["grid"])), fmt, fh)
    elif c == "legendre":
        curve = ScalarCurve.from_csv(p["input"], p["meaning"])
        _emit_curve(mgf.legendre(curve, parse_grid(p["grid"])), fmt, fh)
    elif c == "batch":
        b = montecarlo.run_batch(spec, p["T"], _seed(p), p["R"], p["rng"], p["workers"],
                                 keep_shares=fmt == "csv")
        if fmt == "csv":
            b.shares_to_csv(fh)
        else:
            fh.write(b.to_json() + "\n")
    elif c == "importance":
        est, se = montecarlo.importance_estimate(spec, p["T"], _seed(p), (p["kmin"], p["kmax"]),
                                                 p["R"], p["rng"], p["workers"])
        if fmt == "csv":
            write_csv(fh, ["estimate", "stderr"], [[est], [se]])
        else:
            fh.write(_dumps({"estimate": est, "stderr": se}) + "\n")
    else:  # pragma: no cover - argparse restricts the choices
        raise ValidationError(f"unknown command {c!r}")


def dispatch(cfg: RunConfig) -> int:
    """Run the configured operation and write its artifact; returns the exit status."""
    try:
        with _sink(cfg.out) as fh:
            _run(cfg, fh)
    except BudgetExceededError as exc:
        print(f"error: {exc} (budget: {exc.budget}; set ${urn.BUDGET_ENV} to raise it)", file=sys.stderr)
        return exc.exit_code
    except UrnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ValidationError.exit_code
    return 0


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UrnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return dispatch(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
