"""Parameter sweeps over (Delta, alpha): cell labels and the two phase boundaries."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import SBQPTError
from .spectral import ModelParams
from .spectrum import bound_state, critical_alpha
from .variational import solve_eta

log = logging.getLogger(__name__)

NO_BOUND_STATE = "delocalized/no-bound-state"
BOUND_STATE = "delocalized/bound-state"
LOCALIZED = "localized"
FAILED = "failed"


@dataclass(frozen=True)
class Cell:
    delta: float
    alpha: float
    label: str
    eta: float
    converged: bool
    error: Optional[str] = None


@dataclass(frozen=True)
class PhaseDiagram:
    delta_grid: np.ndarray
    alpha_grid: np.ndarray
    cells: List[List[Cell]]
    boundary_bs: np.ndarray
    boundary_dl: np.ndarray

    @property
    def classification(self) -> List[List[str]]:
        return [[c.label for c in row] for row in self.cells]


def classify(delta: float, alpha: float, omega_c: float = 1.0) -> Cell:
    """Label one (Delta, alpha) point."""
    try:
        p = ModelParams(delta, alpha, omega_c)
        sol = solve_eta(p)
        if not sol.delocalized:
            return Cell(delta, alpha, LOCALIZED, sol.eta, sol.converged)
        bs = bound_state(p, sol.eta)
        return Cell(delta, alpha, BOUND_STATE if bs.exists else NO_BOUND_STATE, sol.eta, sol.converged)
    except SBQPTError as exc:
        return Cell(delta, alpha, FAILED, float("nan"), False, str(exc))


def _is_localized(delta, alpha, omega_c):
    # slow convergence just below alpha = 1 is expected here; it counts as delocalized
    return not solve_eta(ModelParams(delta, alpha, omega_c), quiet=True).delocalized


def localization_boundary(delta: float, omega_c: float = 1.0, alpha_lo: float = 0.5,
                          alpha_hi: float = 1.3, iters: int = 12) -> float:
    """Smallest alpha at which the eta iteration collapses, by bisection.

    NaN when the upper end of the bracket is still delocalized.
    """
    if not _is_localized(delta, alpha_hi, omega_c):
        return float("nan")
    if _is_localized(delta, alpha_lo, omega_c):
        return alpha_lo
    lo, hi = alpha_lo, alpha_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _is_localized(delta, mid, omega_c):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _cell_task(args):
    return classify(*args)


def _boundary_task(args):
    delta, omega_c, alpha_hi, iters, tol = args
    try:
        bs = critical_alpha(delta, omega_c, tol=tol)
    except SBQPTError as exc:
        log.warning("critical_alpha failed at delta=%g: %s", delta, exc)
        bs = float("nan")
    return bs, localization_boundary(delta, omega_c, 0.5, alpha_hi, iters)


def sweep(delta_values: Sequence[float], alpha_values: Sequence[float], omega_c: float = 1.0,
          jobs: int = 1, boundary_iters: int = 12, boundary_tol: float = 1e-12) -> PhaseDiagram:
    """Classify every grid cell and extract both boundaries per Delta.

    Cells and boundaries are independent, so they are mapped over a process
    pool when ``jobs > 1``; results are gathered by index and do not depend on
    the degree of parallelism.
    """
    deltas = np.asarray(delta_values, dtype=float)
    alphas = np.asarray(alpha_values, dtype=float)
    if deltas.size < 1 or alphas.size < 1:
        raise ValueError("empty grid")
    if np.any(deltas <= 0) or np.any(alphas < 0):
        raise ValueError("delta values must be > 0 and alpha values >= 0")
    alpha_hi = max(1.3, float(alphas.max()))
    cell_args = [(d, a, omega_c) for d in deltas for a in alphas]
    bnd_args = [(d, omega_c, alpha_hi, boundary_iters, boundary_tol) for d in deltas]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(_cell_task, cell_args, chunksize=max(1, len(cell_args) // (4 * jobs))))
            bnds = list(pool.map(_boundary_task, bnd_args))
    else:
        flat = [_cell_task(a) for a in cell_args]
        bnds = [_boundary_task(a) for a in bnd_args]
    na = alphas.size
    cells = [flat[i * na:(i + 1) * na] for i in range(deltas.size)]
    for cell in flat:
        if cell.label == FAILED:
            log.warning("cell (delta=%g, alpha=%g) failed: %s", cell.delta, cell.alpha, cell.error)
    bs = np.array([b[0] for b in bnds])
    dl = np.array([b[1] for b in bnds])
    return PhaseDiagram(deltas, alphas, cells, bs, dl)
