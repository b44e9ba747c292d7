"""Command-line front end: ``twophoton {coeffs,sweep,verify,pt}``.

Tables go out as CSV with a header row, verify reports as JSON. Every option
can also come from a JSON config file (``--config``); explicit flags win.
Exit codes: 0 success, 1 evaluation or verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import oracle
from .coeffs import continuum_bath_sums, mode_coeffs, symplectic_defect
from .errors import ConvergenceError, IllConditionedDerivative, LongTimeError, RegimeError
from .measurement import Homodyne, PhotonCounting
from .params import BathSpec, InputState, SystemParams, classify_regime
from .precision import default_formula, evolved_moments, delta_omega_asymptotic, delta_omega_full, pt_eigenvalues
from .verify import SUITES, run_suite

WORKERS_ENV = "TWOPHOTON_WORKERS"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- number formatting and grids ----------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    @property
    def gridded(self) -> bool:
        return len(self.values) > 1


def parse_axis(name: str, spec) -> Axis:
    """A single number or ``min:max:count[:lin|log]``."""
    if isinstance(spec, (int, float)):
        return Axis(name, (float(spec),))
    parts = str(spec).split(":")
    try:
        if len(parts) == 1:
            return Axis(name, (float(parts[0]),))
        if len(parts) not in (3, 4):
            raise ValueError
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        scale = parts[3] if len(parts) == 4 else "lin"
    except ValueError:
        raise UsageError(f"--{name}: expected a number or min:max:count[:lin|log], got {spec!r}") from None
    if count < 1:
        raise UsageError(f"--{name}: count must be >= 1")
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise UsageError(f"--{name}: log grids need positive bounds")
        vals = np.geomspace(lo, hi, count)
    elif scale == "lin":
        vals = np.linspace(lo, hi, count)
    else:
        raise UsageError(f"--{name}: grid scale must be lin or log, got {scale!r}")
    return Axis(name, tuple(float(v) for v in vals))


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{WORKERS_ENV} must be >= 1")
    return n


def _map_ordered(fn, items):
    """Map over items with a process pool; results come back in input order."""
    items = list(items)
    n = min(_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _write_table(header, rows, path):
    if path in (None, "-"):
        out = sys.stdout
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows([[fmt(v) for v in r] for r in rows])
        out.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows([[fmt(v) for v in r] for r in rows])


def _params(omega, lam, gamma) -> SystemParams:
    try:
        return SystemParams(omega, lam, gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _bath(p: SystemParams, nb, width):
    try:
        return BathSpec.around(p, mode_count=int(nb), width=width)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- coeffs ---------------------------------------------------------------------------

def _coeffs_row(args):
    p, t, with_oracle, nb, width = args
    mc = mode_coeffs(p, t)
    G, L = complex(mc.G), complex(mc.L)
    if t == 0:
        defect = 0.0
    else:
        sums = continuum_bath_sums(p, t)
        defect = abs(symplectic_defect(mc, sums=sums[:2]))
    row = [p.omega, p.lam, p.gamma, t, G.real, G.imag, L.real, L.imag, defect]
    if with_oracle:
        bmap = oracle.propagate(p, _bath(p, nb, width), t, full=False)
        om, _ = oracle.extract_reduced(bmap)
        Go, Lo = complex(om.G), complex(om.L)
        row += [Go.real, Go.imag, Lo.real, Lo.imag, abs(G - Go), abs(L - Lo)]
    return row


def cmd_coeffs(opts) -> int:
    p = _params(opts["omega"], opts["lambda"], opts["gamma"])
    t_axis = parse_axis("t", opts["t"])
    if any(t < 0 for t in t_axis.values):
        raise UsageError("--t must be >= 0")
    header = ["omega", "lambda", "gamma", "t", "re_G", "im_G", "re_L", "im_L", "symplectic_defect"]
    if opts["oracle"]:
        header += ["re_G_oracle", "im_G_oracle", "re_L_oracle", "im_L_oracle", "abs_dG", "abs_dL"]
    jobs = [(p, t, opts["oracle"], opts["nb"], opts["band_width"]) for t in t_axis.values]
    rows = _map_ordered(_coeffs_row, jobs)
    _write_table(header, rows, opts["output"])
    return EXIT_OK


# -- sweep ------------------------------------------------------------------------------

SWEEP_AXES = ("omega", "lambda", "gamma", "t", "theta", "photons")

SWEEP_HEADER = [
    "omega", "lambda", "gamma", "t", "theta", "photons", "detector", "pipeline", "coefficients", "nb",
    "band_width", "fd_step", "regime", "exceptional_point", "mean", "variance", "dmean_domega",
    "delta_omega_sq_full", "formula", "delta_omega_sq_asymptotic", "photon_number", "note",
]


class PointError(Exception):
    pass


def _sweep_point(job):
    point, settings = job
    om, lam, ga, t, theta, photons = (point[k] for k in SWEEP_AXES)
    det = PhotonCounting() if settings["detector"] == "photon" else Homodyne(theta)
    pipeline = settings["pipeline"]
    try:
        p = SystemParams(om, lam, ga)
        state = InputState.from_photon_number(photons)
    except ValueError as exc:
        raise PointError(f"{point}: {exc}") from None
    bath = None
    if settings["nb"] is not None:
        bath = BathSpec.around(p, mode_count=int(settings["nb"]), width=settings["band_width"])
    regime = classify_regime(p)
    row = dict(omega=om, lambda_=lam, gamma=ga, t=t, theta=theta if isinstance(det, Homodyne) else "",
               photons=photons, detector=str(det).split("(")[0], pipeline=pipeline,
               coefficients=settings["coefficients"], nb=settings["nb"], band_width=settings["band_width"],
               fd_step=settings["fd_step"], regime=regime.kind.value, exceptional_point=regime.exceptional_point,
               mean=None, variance=None, dmean_domega=None, full=None, formula=None, asym=None,
               photon_number=None, note="")
    notes = []
    if pipeline in ("full", "both"):
        try:
            res = delta_omega_full(p, state, det, t, bath=bath, coefficients=settings["coefficients"],
                                   fd_step=settings["fd_step"])
        except (IllConditionedDerivative, ConvergenceError, ValueError, ZeroDivisionError) as exc:
            raise PointError(f"{point}: {type(exc).__name__}: {exc}") from None
        row.update(mean=res.mean, variance=res.variance, dmean_domega=res.dmean_domega,
                   full=res.delta_omega_sq, photon_number=res.diagnostics["photon_number"])
        if res.diagnostics.get("no_information"):
            notes.append("no slope in omega")
    if row["photon_number"] is None:
        row["photon_number"] = evolved_moments(p, state, t, bath=bath,
                                               coefficients=settings["coefficients"]).photon_number
    if pipeline in ("asymptotic", "both"):
        formula = default_formula(p, det, regime)
        row["formula"] = formula or ""
        if formula is None:
            row["asym"] = math.nan
            notes.append("asymptotic: no formula for this regime and detector")
        else:
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    ares = delta_omega_asymptotic(p, state, det, t, formula=formula)
                row["asym"] = ares.delta_omega_sq
                notes.extend(f"asymptotic: {w.message}" for w in caught)
            except (RegimeError, LongTimeError, ValueError) as exc:
                row["asym"] = math.nan
                notes.append(f"asymptotic: {exc}")
    row["note"] = "; ".join(notes)
    return [row[k] for k in ("omega", "lambda_", "gamma", "t", "theta", "photons", "detector", "pipeline",
                             "coefficients", "nb", "band_width", "fd_step", "regime", "exceptional_point",
                             "mean", "variance", "dmean_domega", "full", "formula", "asym",
                             "photon_number", "note")]


def _safe_point(job):
    try:
        return True, _sweep_point(job)
    except PointError as exc:
        return False, str(exc)


def cmd_sweep(opts) -> int:
    axes = [parse_axis(k, opts[k]) for k in SWEEP_AXES]
    gridded = [a.name for a in axes if a.gridded]
    if len(gridded) > 2:
        raise UsageError(f"at most 2 gridded axes per sweep, got {gridded}")
    if opts["coefficients"] == "oracle" and opts["nb"] is None:
        raise UsageError("--coefficients oracle needs --nb")
    settings = {k: opts[k] for k in ("detector", "pipeline", "coefficients", "nb", "band_width", "fd_step")}
    points = [dict(zip(SWEEP_AXES, combo)) for combo in itertools.product(*(a.values for a in axes))]
    results = _map_ordered(_safe_point, [(pt, settings) for pt in points])
    failures = [msg for ok, msg in results if not ok]
    if failures:
        for msg in failures:
            print(f"error at grid point {msg}", file=sys.stderr)
        return EXIT_FAIL
    _write_table(SWEEP_HEADER, [row for _, row in results], opts["output"])
    return EXIT_OK


# -- verify -----------------------------------------------------------------------------

def cmd_verify(opts) -> int:
    report = run_suite(opts["suite"], opts["tol"])
    text = json.dumps(report, indent=2, default=_json_default)
    if opts["output"] in (None, "-"):
        print(text)
    else:
        with open(opts["output"], "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not serializable: {type(x)}")


# -- pt ---------------------------------------------------------------------------------

def cmd_pt(opts) -> int:
    om_axis, lam_axis = parse_axis("omega", opts["omega"]), parse_axis("lambda", opts["lambda"])
    rows = []
    for om, lam in itertools.product(om_axis.values, lam_axis.values):
        try:
            eh = pt_eigenvalues(SystemParams(om, lam, 1.0))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        e1, e2 = eh.eigenvalues
        rows.append([om, lam, complex(e1).real, complex(e1).imag, complex(e2).real, complex(e2).imag,
                     abs(e1 - e2), eh.exceptional_point])
    header = ["omega", "lambda", "re_eig_plus", "im_eig_plus", "re_eig_minus", "im_eig_minus",
              "splitting", "exceptional_point"]
    _write_table(header, rows, opts["output"])
    return EXIT_OK


# -- argument handling ------------------------------------------------------------------

DEFAULTS = {
    "coeffs": {"omega": None, "lambda": None, "gamma": None, "t": None, "oracle": False, "nb": 2000,
               "band_width": None, "output": None},
    "sweep": {"omega": None, "lambda": None, "gamma": None, "t": None, "theta": 0.0, "photons": 0.0,
              "detector": "photon", "pipeline": "full", "coefficients": "closed", "nb": None,
              "band_width": None, "fd_step": 1e-5, "seed": None, "output": None},
    "verify": {"suite": None, "tol": None, "output": None},
    "pt": {"omega": None, "lambda": None, "output": None},
}
REQUIRED = {"coeffs": ("omega", "lambda", "gamma", "t"), "sweep": ("omega", "lambda", "gamma", "t"),
            "verify": ("suite",), "pt": ("omega", "lambda")}
CHOICES = {"detector": ("photon", "homodyne"), "pipeline": ("full", "asymptotic", "both"),
           "coefficients": ("closed", "oracle"), "suite": tuple(SUITES)}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="twophoton", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values; flags override it")
        sp.add_argument("-o", "--output", default=None, help="output path (default stdout)")

    sp = sub.add_parser("coeffs", help="tabulate G(t), L(t) and the symplectic defect")
    common(sp)
    sp.add_argument("--omega", type=float)
    sp.add_argument("--lambda", dest="lambda", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--t", help="time or min:max:count[:lin|log]")
    sp.add_argument("--oracle", action="store_const", const=True, default=None,
                    help="add coefficients from the discretized-bath propagation")
    sp.add_argument("--nb", type=int, help="bath modes for --oracle (default 2000)")
    sp.add_argument("--band-width", dest="band_width", type=float, help="bath band width")

    sp = sub.add_parser("sweep", help="frequency uncertainty over a parameter grid")
    common(sp)
    for name, hlp in (("omega", "mode frequency"), ("lambda", "drive strength"), ("gamma", "decay rate"),
                      ("t", "evolution time"), ("theta", "homodyne angle"), ("photons", "input photon number")):
        sp.add_argument(f"--{name}", dest=name, help=f"{hlp}: value or min:max:count[:lin|log]")
    sp.add_argument("--detector", choices=CHOICES["detector"])
    sp.add_argument("--pipeline", choices=CHOICES["pipeline"])
    sp.add_argument("--coefficients", choices=CHOICES["coefficients"])
    sp.add_argument("--nb", type=int, help="discretize the bath with this many modes")
    sp.add_argument("--band-width", dest="band_width", type=float)
    sp.add_argument("--fd-step", dest="fd_step", type=float, help="relative finite-difference step")
    sp.add_argument("--seed", type=int, help="reserved; all paths are deterministic")

    sp = sub.add_parser("verify", help="run a verification suite and emit a JSON report")
    common(sp)
    sp.add_argument("suite", nargs="?", choices=CHOICES["suite"])
    sp.add_argument("--tol", type=float, help="override the suite tolerance")

    sp = sub.add_parser("pt", help="eigenvalues of the effective non-Hermitian Hamiltonian")
    common(sp)
    sp.add_argument("--omega", help="value or min:max:count[:lin|log]")
    sp.add_argument("--lambda", dest="lambda", help="value or min:max:count[:lin|log]")
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    cmd = args.command
    opts = dict(DEFAULTS[cmd])
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = set(cfg) - set(opts)
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        opts.update(cfg)
    for key in opts:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    missing = [k for k in REQUIRED[cmd] if opts[k] is None]
    if missing:
        raise UsageError(f"{cmd}: missing required options {missing}")
    for key, allowed in CHOICES.items():
        if key in opts and opts[key] is not None and opts[key] not in allowed:
            raise UsageError(f"{key} must be one of {allowed}, got {opts[key]!r}")
    return opts


COMMANDS = {"coeffs": cmd_coeffs, "sweep": cmd_sweep, "verify": cmd_verify, "pt": cmd_pt}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = resolve_options(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ArithmeticError, ConvergenceError, RegimeError, LongTimeError) as exc:
        print(f"evaluation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
