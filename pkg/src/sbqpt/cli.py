"""Command-line front end.

Every command resolves its configuration (defaults < config file < flags),
runs, and writes tables as CSV or JSON with a provenance header holding the
resolved configuration and the tool version.  The header carries no
timestamps or paths, so identical configurations give byte-identical files.

Exit codes: 0 success, 1 usage error, 2 non-convergence (or a failed verify
check), 3 precondition violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List

import numpy as np

from . import __version__
from . import output
from .dynamics import C_FLOOR, simulate
from .errors import ConvergenceError, DomainError, NumericalError, SBQPTError
from .phasemap import sweep
from .spectral import ModelParams, QUAD_EPSABS, QUAD_EPSREL
from .spectrum import bound_state, critical_alpha, ground_energy, ground_energy_derivative
from .variational import ETA_FLOOR, solve_eta

log = logging.getLogger("sbqpt")

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_PRECONDITION = 0, 1, 2, 3

COMMANDS = ("eta", "bound-state", "critical-alpha", "ground-energy", "derivative",
            "dynamics", "phase-diagram", "verify")

BASE_DEFAULTS = {
    "delta": [0.1],
    "alpha": [0.55],
    "omega_c": 1.0,
    "s": 1.0,
    "epsilon": 0.0,
    "tmax": 500.0,
    "dt": 0.02,
    "tol": 1e-12,
    "root_tol": 1e-12,
    "max_iter": 10_000,
    "dalpha": 1e-4,
    "c_floor": C_FLOOR,
    "boundary_iters": 12,
    "grid_alpha": None,
    "grid_delta": None,
    "format": "csv",
}

COMMAND_DEFAULTS = {
    "eta": {"alpha": [0.0]},
    "dynamics": {"alpha": [0.05, 0.25, 0.55]},
    "ground-energy": {"grid_alpha": "0.2:0.8:61"},
    "derivative": {"grid_alpha": "0.2:0.8:61"},
    "phase-diagram": {"grid_delta": "0.001:0.3:24", "grid_alpha": "0:1.3:53"},
    "verify": {"tmax": 100.0},
}

# keys that shape how a run executes but not what it computes
_EXECUTION_KEYS = ("jobs", "out", "emit_plot", "config")
_LIST_KEYS = ("delta", "alpha")
_INT_KEYS = ("max_iter", "boundary_iters")
_FLOAT_KEYS = ("omega_c", "s", "epsilon", "tmax", "dt", "tol", "root_tol", "dalpha", "c_floor")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- configuration -------------------------------------------------------------

def parse_grid(spec: str) -> List[float]:
    """'a:b:n' -> n evenly spaced values from a to b inclusive."""
    try:
        lo, hi, n = spec.split(":")
        n = int(n)
        lo, hi = float(lo), float(hi)
    except ValueError:
        raise UsageError(f"grid must look like a:b:n, got {spec!r}") from None
    if n < 1:
        raise UsageError(f"grid resolution must be >= 1, got {n}")
    if n == 1:
        return [lo]
    return [float(v) for v in np.linspace(lo, hi, n)]


def _coerce(key: str, value):
    if key in _LIST_KEYS:
        if isinstance(value, str):
            value = value.replace(",", " ").split()
        if not isinstance(value, (list, tuple)):
            value = [value]
        return [float(v) for v in value]
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in ("grid_alpha", "grid_delta"):
        return None if value in (None, "", "none") else str(value)
    return value


def load_config_file(path) -> Dict:
    """Read a key = value file, or a JSON document (including a previous JSON output)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if "provenance" in doc:
            doc = dict(doc["provenance"]["config"], command=doc["provenance"]["command"])
        return {k.replace("-", "_"): v for k, v in doc.items()}
    cfg = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


def resolve(command: str, flags: Dict, file_cfg: Dict) -> Dict:
    """Merge defaults, config file and flags; grids are expanded into explicit lists."""
    file_cfg = dict(file_cfg)
    file_command = file_cfg.pop("command", None)
    if file_command is not None and file_command != command:
        raise UsageError(f"config file is for command {file_command!r}, not {command!r}")
    cfg = dict(BASE_DEFAULTS)
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    for source in (file_cfg, flags):
        for key, value in source.items():
            if value is None or key in _EXECUTION_KEYS:
                continue
            if key not in BASE_DEFAULTS:
                raise UsageError(f"unknown configuration key {key!r}")
            if key in _LIST_KEYS:
                # an explicit list beats a grid coming from an earlier layer
                cfg["grid_" + key] = None
            cfg[key] = _coerce(key, value)
    for key in _LIST_KEYS:
        grid = cfg.pop("grid_" + key)
        if grid is not None:
            cfg[key] = parse_grid(grid)
        cfg[key] = _coerce(key, cfg[key])
    if cfg["format"] not in ("csv", "json"):
        raise UsageError(f"--format must be csv or json, got {cfg['format']!r}")
    return cfg


def provenance(command: str, cfg: Dict) -> Dict:
    return {
        "tool": "sbqpt",
        "version": __version__,
        "command": command,
        "config": cfg,
        "solver": {"quad_epsabs": QUAD_EPSABS, "quad_epsrel": QUAD_EPSREL, "eta_floor": ETA_FLOOR},
    }


def _params(cfg: Dict, delta: float, alpha: float) -> ModelParams:
    return ModelParams(delta, alpha, cfg["omega_c"], cfg["s"], cfg["epsilon"])


def _check_model(cfg: Dict):
    # fail fast on unsupported model parameters before any work is done
    for d in cfg["delta"]:
        for a in cfg["alpha"]:
            _params(cfg, d, a)


def _map(func, items, jobs):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(func, items))
    return [func(x) for x in items]


# --- commands ------------------------------------------------------------------

def _cmd_eta(cfg, jobs):
    rows, failed = [], 0
    for d in cfg["delta"]:
        for a in cfg["alpha"]:
            sol = solve_eta(_params(cfg, d, a), tol=cfg["tol"], max_iter=cfg["max_iter"])
            failed += not sol.converged
            rows.append([d, a, sol.eta, sol.converged, sol.iterations, sol.residual, sol.phase])
    cols = ["delta", "alpha", "eta", "converged", "iterations", "residual", "phase"]
    status = EXIT_OK
    if failed:
        log.error("eta iteration did not converge at %d point(s)", failed)
        status = EXIT_CONVERGENCE
    return {"eta": (cols, rows)}, status


def _eta_for(cfg, p):
    sol = solve_eta(p, tol=cfg["tol"], max_iter=cfg["max_iter"])
    if not sol.converged:
        raise ConvergenceError(f"eta iteration did not converge at delta={p.delta}, alpha={p.alpha}",
                               achieved=sol.residual)
    return sol


def _cmd_bound_state(cfg, jobs):
    rows = []
    for d in cfg["delta"]:
        for a in cfg["alpha"]:
            p = _params(cfg, d, a)
            sol = _eta_for(cfg, p)
            if not sol.delocalized:
                raise DomainError(f"bound-state requires the delocalized phase; "
                                  f"delta={d}, alpha={a} is localized")
            bs = bound_state(p, sol.eta, root_tol=cfg["root_tol"])
            rows.append([d, a, bs.eta, bs.exists, bs.energy, bs.residue, bs.detuning])
    cols = ["delta", "alpha", "eta", "exists", "energy", "residue", "detuning"]
    return {"bound_state": (cols, rows)}, EXIT_OK


def _cmd_critical_alpha(cfg, jobs):
    rows = []
    for d in cfg["delta"]:
        ac = critical_alpha(d, cfg["omega_c"], tol=cfg["root_tol"])
        eta_c = solve_eta(_params(cfg, d, ac), tol=cfg["tol"]).eta
        rows.append([d, ac, eta_c])
    return {"critical_alpha": (["delta", "alpha_c", "eta_c"], rows)}, EXIT_OK


def _energy_rows(cfg, with_energy):
    rows = []
    for d in cfg["delta"]:
        ac = critical_alpha(d, cfg["omega_c"], tol=cfg["root_tol"])
        alphas = cfg["alpha"]
        # the kink is marked on the first grid point at or beyond alpha_c,
        # provided the sweep also has a point below it
        kink_at = next((i for i, a in enumerate(alphas) if a >= ac), None)
        if kink_at == 0:
            kink_at = None
        for i, a in enumerate(alphas):
            p = _params(cfg, d, a)
            gs = ground_energy(p)
            der = ground_energy_derivative(p, dalpha=cfg["dalpha"])
            row = [d, a]
            if with_energy:
                row += [gs.eta, gs.C, gs.energy, gs.branch]
            row += [der.value, der.cross_branch, ac, i == kink_at]
            rows.append(row)
    return rows


def _cmd_ground_energy(cfg, jobs):
    cols = ["delta", "alpha", "eta", "C", "energy", "branch", "dEg_dalpha", "cross_branch",
            "alpha_c", "kink"]
    return {"ground_energy": (cols, _energy_rows(cfg, True))}, EXIT_OK


def _cmd_derivative(cfg, jobs):
    cols = ["delta", "alpha", "dEg_dalpha", "cross_branch", "alpha_c", "kink"]
    return {"derivative": (cols, _energy_rows(cfg, False))}, EXIT_OK


def _dynamics_task(args):
    cfg, d, a = args
    return simulate(_params(cfg, d, a), t_max=cfg["tmax"], dt=cfg["dt"], c_floor=cfg["c_floor"])


def _cmd_dynamics(cfg, jobs):
    pairs = [(d, a) for d in cfg["delta"] for a in cfg["alpha"]]
    traces = _map(_dynamics_task, [(cfg, d, a) for d, a in pairs], jobs)
    rows, summary = [], []
    for (d, a), tr in zip(pairs, traces):
        for k in range(len(tr.times)):
            c = tr.c[k]
            rows.append([d, a, tr.times[k], c.real, c.imag, abs(c), tr.omega_shift[k], tr.gamma[k],
                         tr.pz[k], bool(tr.rate_valid[k])])
        summary.append([d, a, tr.eta, tr.refine_advised, tr.trace_defect, tr.min_eigenvalue,
                        float(np.max(np.abs(tr.pz - tr.pz_closed)[tr.rate_valid], initial=0.0))])
    cols = ["delta", "alpha", "t", "re_c", "im_c", "abs_c", "omega", "gamma", "pz", "rate_valid"]
    scols = ["delta", "alpha", "eta", "refine_advised", "trace_defect", "min_eigenvalue",
             "max_route_discrepancy"]
    return {"dynamics": (cols, rows), "summary": (scols, summary)}, EXIT_OK


def _cmd_phase_diagram(cfg, jobs):
    if cfg["omega_c"] <= 0 or cfg["s"] != 1 or cfg["epsilon"] != 0:
        _params(cfg, 1.0, 0.0)
    pd = sweep(cfg["delta"], cfg["alpha"], cfg["omega_c"], jobs=jobs,
               boundary_iters=cfg["boundary_iters"], boundary_tol=cfg["root_tol"])
    grid = [[c.delta, c.alpha, c.label, c.eta, c.converged] for row in pd.cells for c in row]
    bnd = [[d, bs, dl] for d, bs, dl in zip(pd.delta_grid, pd.boundary_bs, pd.boundary_dl)]
    return {"grid": (["delta", "alpha", "label", "eta", "converged"], grid),
            "boundaries": (["delta", "boundary_bs", "boundary_dl"], bnd)}, EXIT_OK


def _cmd_verify(cfg, jobs):
    from .verify import run_checks

    d, a = cfg["delta"][0], cfg["alpha"][0]
    checks = run_checks(_params(cfg, d, a), t_max=cfg["tmax"], dt=cfg["dt"])
    rows = [[c.name, c.value, c.threshold, c.passed] for c in checks]
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.value:.3e}  (limit {c.threshold:.1e})",
              file=sys.stderr)
    status = EXIT_OK if all(c.passed for c in checks) else EXIT_CONVERGENCE
    return {"verify": (["check", "value", "threshold", "passed"], rows)}, status


HANDLERS = {
    "eta": _cmd_eta,
    "bound-state": _cmd_bound_state,
    "critical-alpha": _cmd_critical_alpha,
    "ground-energy": _cmd_ground_energy,
    "derivative": _cmd_derivative,
    "dynamics": _cmd_dynamics,
    "phase-diagram": _cmd_phase_diagram,
    "verify": _cmd_verify,
}

_PLOTS = {
    "dynamics": ("dynamics", "t", "pz", "alpha"),
    "ground-energy": ("ground_energy", "alpha", "dEg_dalpha", "delta"),
    "derivative": ("derivative", "alpha", "dEg_dalpha", "delta"),
    "phase-diagram": ("boundaries", "delta", "boundary_bs", None),
    "eta": ("eta", "alpha", "eta", "delta"),
    "bound-state": ("bound_state", "alpha", "energy", "delta"),
    "critical-alpha": ("critical_alpha", "delta", "alpha_c", None),
}


def plot_script(command: str, data_files: Dict[str, Path], fmt: str) -> str:
    """A standalone matplotlib script that plots the main table of a run."""
    table, x, y, group = _PLOTS[command]
    path = data_files.get(table, next(iter(data_files.values())))
    return f'''"""Plot {table} from {path.name}."""
import csv
import json
from collections import defaultdict

import matplotlib.pyplot as plt

PATH = {str(path.name)!r}
FORMAT = {fmt!r}


def load():
    if FORMAT == "json":
        with open(PATH) as fh:
            tab = json.load(fh)["tables"][{table!r}]
        return [dict(zip(tab["columns"], r)) for r in tab["rows"]]
    with open(PATH) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


curves = defaultdict(lambda: ([], []))
for row in load():
    key = {f"row[{group!r}]" if group else '""'}
    xs, ys = curves[key]
    xs.append(float(row[{x!r}]))
    ys.append(float(row[{y!r}]) if row[{y!r}] not in (None, "nan") else float("nan"))
for key, (xs, ys) in curves.items():
    plt.plot(xs, ys, label=f"{group} = {{key}}" if key != "" else None)
plt.xlabel({x!r})
plt.ylabel({y!r})
if len(curves) > 1:
    plt.legend()
plt.savefig(PATH.rsplit(".", 1)[0] + ".png", dpi=150)
'''


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("model")
    g.add_argument("--delta", type=float, nargs="+", help="tunneling Delta (list allowed)")
    g.add_argument("--alpha", type=float, nargs="+", help="coupling alpha (list allowed)")
    g.add_argument("--omega-c", dest="omega_c", type=float, help="cutoff frequency")
    g.add_argument("--s", type=float, help="bath exponent (only 1 is supported)")
    g.add_argument("--epsilon", type=float, help="bias (only 0 is supported)")
    g = common.add_argument_group("numerics")
    g.add_argument("--tmax", type=float, help="final time of dynamics runs")
    g.add_argument("--dt", type=float, help="time step, at most 0.1/omega_c")
    g.add_argument("--tol", type=float, help="eta fixed-point tolerance")
    g.add_argument("--root-tol", dest="root_tol", type=float, help="root tolerance for E_1 and alpha_c")
    g.add_argument("--max-iter", dest="max_iter", type=int, help="eta iteration cap")
    g.add_argument("--dalpha", type=float, help="finite-difference step in alpha")
    g.add_argument("--c-floor", dest="c_floor", type=float, help="|c| below which rates are invalid")
    g.add_argument("--boundary-iters", dest="boundary_iters", type=int,
                   help="bisection steps for the localization boundary")
    g.add_argument("--grid-alpha", dest="grid_alpha", metavar="A:B:N", help="alpha sweep, overrides --alpha")
    g.add_argument("--grid-delta", dest="grid_delta", metavar="A:B:N", help="Delta sweep, overrides --delta")
    g = common.add_argument_group("output")
    g.add_argument("--out", help="output path (stdout when omitted)")
    g.add_argument("--format", choices=("csv", "json"))
    g.add_argument("--emit-plot", dest="emit_plot", action="store_true", help="also write a plot script")
    g.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    g.add_argument("--config", help="key = value file or JSON output of a previous run")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="sbqpt", description="Bound-state transition in the ohmic spin-boson model.")
    parser.add_argument("--version", action="version", version=f"sbqpt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__name__[5:].replace("_", " "))
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    command = args.command
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if args.emit_plot and args.out is None:
            raise UsageError("--emit-plot needs --out")
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = resolve(command, flags, file_cfg)
    except (UsageError, OSError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"sbqpt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        if command != "phase-diagram":
            _check_model(cfg)
        tables, status = HANDLERS[command](cfg, args.jobs)
    except ConvergenceError as exc:
        print(f"sbqpt: non-convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"sbqpt: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericalError, SBQPTError) as exc:
        print(f"sbqpt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE

    written = output.write(args.out, cfg["format"], provenance(command, cfg), tables)
    if args.emit_plot:
        files = output.table_paths(Path(args.out), list(tables)) if cfg["format"] == "csv" \
            else {name: Path(args.out) for name in tables}
        script = Path(args.out).with_suffix(".plot.py")
        script.write_text(plot_script(command, files, cfg["format"]))
        written.append(script)
    for path in written:
        log.info("wrote %s", path)
    return status


if __name__ == "__main__":
    sys.exit(main())
