"""Zero-temperature spin dynamics from the multimode coherent initial state.

In the transformed frame the reservoir starts in its vacuum and the spin in
|+_x>, so only the N = 0 and N = 1 sectors take part.  Everything follows from
the amplitude c(t) of |+,{0}>:

* c(t) obeys a Volterra integro-differential equation with the memory kernel
  f(x) = int J'(w) exp(-i w x) dw.
* The time-local rates Omega(t) = -2 Im(c'/c) + Delta eta and
  gamma(t) = -2 Re(c'/c) drive an exact master equation for the reduced state.
* P_z(t) = Tr[rho' sigma_x] = Re[c(t) exp(-i Delta eta t / 2)].

Phase convention: c(t) is the amplitude in the frame of H_eff itself (no
rotating frame), so the uncoupled case gives c(t) = exp(-i Delta t / 2) and
P_z(t) = cos(Delta t).  The Volterra equation is integrated for
c~(t) = c(t) exp(-i Delta eta t / 2), whose memory term carries the bare kernel f:

    c~' = -i Delta eta c~ - int_0^t f(t - s) c~(s) ds,   c~(0) = 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import DomainError, NumericalError
from .spectral import ModelParams, kernel_grid
from .variational import solve_eta

log = logging.getLogger(__name__)

C_FLOOR = 1e-3
NORM_SLACK = 1e-3
PLUS_X = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)


@dataclass(frozen=True)
class AmplitudeSeries:
    times: np.ndarray
    c: np.ndarray
    eta: float
    delta_eta: float
    refine_advised: bool

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class Rates:
    omega_shift: np.ndarray
    gamma: np.ndarray
    valid: np.ndarray


@dataclass(frozen=True)
class MasterSolution:
    rho: np.ndarray
    pz: np.ndarray
    closed_form_used: np.ndarray
    trace_defect: float
    min_eigenvalue: float


@dataclass(frozen=True)
class DynamicsTrace:
    times: np.ndarray
    c: np.ndarray
    omega_shift: np.ndarray
    gamma: np.ndarray
    pz: np.ndarray
    rate_valid: np.ndarray
    pz_closed: np.ndarray
    eta: float
    delta_eta: float
    refine_advised: bool
    trace_defect: float
    min_eigenvalue: float


def solve_amplitude(p: ModelParams, eta: float, t_max: float, dt: float) -> AmplitudeSeries:
    """Integrate the amplitude equation on a uniform grid.

    Trapezoidal rule for both the derivative and the memory integral.  The
    implicit update is linear in the new value, so it is solved exactly
    instead of by predictor-corrector sweeps.
    """
    if dt <= 0 or dt > 0.1 / p.omega_c * (1 + 1e-12):
        raise DomainError(f"dt must lie in (0, 0.1/omega_c], got {dt}")
    if t_max < dt:
        raise DomainError("t_max must be at least one step")
    n = int(round(t_max / dt)) + 1
    times = np.arange(n) * dt
    a = eta * p.delta
    f = kernel_grid(p, eta, dt, n)
    frev = np.ascontiguousarray(f[::-1])

    c = np.zeros(n, dtype=complex)
    c[0] = 1.0
    deriv = -1j * a * c[0]
    denom = 1.0 + 0.5 * dt * (1j * a + 0.5 * dt * f[0])
    for m in range(1, n):
        # memory sum without the unknown endpoint term
        mem = 0.5 * f[m] * c[0]
        if m > 1:
            mem += np.dot(frev[n - m:n - 1], c[1:m])
        c[m] = (c[m - 1] + 0.5 * dt * (deriv - dt * mem)) / denom
        deriv = -1j * a * c[m] - dt * (mem + 0.5 * f[0] * c[m])

    peak = float(np.max(np.abs(c)))
    refine = peak > 1 + NORM_SLACK
    if refine:
        log.warning("|c| reached %.6f > 1; refine the time step (dt=%g)", peak, dt)
    return AmplitudeSeries(times, c * np.exp(0.5j * a * times), eta, a, refine)


def rates(series: AmplitudeSeries, c_floor: float = C_FLOOR) -> Rates:
    """Omega(t) and gamma(t) from centred differences of c; NaN where |c| < c_floor."""
    c = series.c
    cdot = np.gradient(c, series.dt, edge_order=2)
    valid = np.abs(c) >= c_floor
    q = np.full(c.shape, complex(np.nan, np.nan))
    q[valid] = cdot[valid] / c[valid]
    return Rates(-2 * q.imag + series.delta_eta, -2 * q.real, valid)


def _closed_rho(series: AmplitudeSeries, rho0: np.ndarray) -> np.ndarray:
    c = series.c
    pp = rho0[0, 0].real * np.abs(c) ** 2
    pm = rho0[0, 1] * c * np.exp(-0.5j * series.delta_eta * series.times)
    rho = np.empty((len(c), 2, 2), dtype=complex)
    rho[:, 0, 0] = pp
    rho[:, 1, 1] = 1.0 - pp
    rho[:, 0, 1] = pm
    rho[:, 1, 0] = np.conj(pm)
    return rho


def pz_closed_form(series: AmplitudeSeries, rho0: np.ndarray = PLUS_X) -> np.ndarray:
    """P_z = 2 Re[rho'_{+-}(t)] = 2 Re[rho0_{+-} c(t) exp(-i Delta eta t/2)]."""
    return 2 * np.real(rho0[0, 1] * series.c * np.exp(-0.5j * series.delta_eta * series.times))


def _segments(mask):
    """(start, stop) index pairs of the runs of True in ``mask``."""
    padded = np.concatenate(([False], mask, [False])).astype(int)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def evolve_master(series: AmplitudeSeries, rts: Rates, rho0: np.ndarray = PLUS_X,
                  rtol: float = 1e-11, atol: float = 1e-13) -> MasterSolution:
    """Integrate the time-local master equation with an adaptive explicit stepper.

    Rates are interpolated by cubic splines inside each run of valid points.
    Where |c| is too small for c'/c to be trusted the state is taken from the
    closed form, and the next run restarts from it.
    """
    times = series.times
    n = len(times)
    closed = _closed_rho(series, rho0)
    rho = closed.copy()
    used_closed = np.ones(n, dtype=bool)

    segments = _segments(rts.valid)
    gaps = n - int(rts.valid.sum())
    if gaps:
        longest = max((b - a for a, b in _segments(~rts.valid)), default=0)
        if longest > 1:
            log.info("rates invalid on %d points (longest gap %d); using closed-form propagation there",
                     gaps, longest)

    for start, stop in segments:
        if stop - start < 2:
            continue
        t_seg = times[start:stop]
        spline = CubicSpline(t_seg, np.column_stack((rts.omega_shift[start:stop], rts.gamma[start:stop])))

        def rhs(t, y, spline=spline):
            om, ga = spline(t)
            pm = complex(y[2], y[3]) * (-0.5j * om - 0.5 * ga)
            return [-ga * y[0], ga * y[0], pm.real, pm.imag]

        r0 = rho0 if start == 0 else closed[start]
        y0 = [r0[0, 0].real, r0[1, 1].real, r0[0, 1].real, r0[0, 1].imag]
        sol = solve_ivp(rhs, (t_seg[0], t_seg[-1]), y0, method="DOP853", t_eval=t_seg, rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericalError(f"master-equation integration failed: {sol.message}")
        y = sol.y
        rho[start:stop, 0, 0] = y[0]
        rho[start:stop, 1, 1] = y[1]
        rho[start:stop, 0, 1] = y[2] + 1j * y[3]
        rho[start:stop, 1, 0] = y[2] - 1j * y[3]
        used_closed[start:stop] = False

    tr = rho[:, 0, 0].real + rho[:, 1, 1].real
    half_tr = 0.5 * tr
    split = np.sqrt((0.5 * (rho[:, 0, 0].real - rho[:, 1, 1].real)) ** 2 + np.abs(rho[:, 0, 1]) ** 2)
    min_eig = float(np.min(half_tr - split))
    if min_eig < -1e-8:
        log.warning("reduced state lost positivity (min eigenvalue %.3e)", min_eig)
    return MasterSolution(rho, 2 * rho[:, 0, 1].real, used_closed,
                          float(np.max(np.abs(tr - 1))), min_eig)


def simulate(p: ModelParams, t_max: float = 500.0, dt: float = 0.02, c_floor: float = C_FLOOR,
             eta: Optional[float] = None) -> DynamicsTrace:
    """Full pipeline: eta, amplitude, rates, master equation and the closed-form check."""
    if eta is None:
        sol = solve_eta(p)
        if not (sol.converged and sol.delocalized):
            raise DomainError(f"dynamics needs a converged delocalized solution (alpha={p.alpha})")
        eta = sol.eta
    series = solve_amplitude(p, eta, t_max, dt)
    rts = rates(series, c_floor)
    master = evolve_master(series, rts)
    return DynamicsTrace(series.times, series.c, rts.omega_shift, rts.gamma, master.pz, rts.valid,
                         pz_closed_form(series), eta, series.delta_eta, series.refine_advised,
                         master.trace_defect, master.min_eigenvalue)


def window(trace: DynamicsTrace, t_from: float, t_to: Optional[float] = None) -> np.ndarray:
    """Boolean mask of grid points with t_from <= t <= t_to."""
    t_to = trace.times[-1] if t_to is None else t_to
    return (trace.times >= t_from - 1e-9) & (trace.times <= t_to + 1e-9)


def oscillation_amplitude(trace: DynamicsTrace, t_from: float, t_to: Optional[float] = None) -> float:
    """Mean instantaneous amplitude of P_z over a window.

    P_z = |c| cos(phase), so the amplitude of the oscillation is |c(t)|.
    """
    return float(np.mean(np.abs(trace.c[window(trace, t_from, t_to)])))
