"""Single-excitation bound state, critical coupling and the two-branch ground-state energy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import ConvergenceError, DomainError, NumericalError, PhaseError
from .spectral import ModelParams, resolvent_integral, residue_integral
from .variational import VariationalSolution, displacement_constant_C, solve_eta

ZERO_EXCITATION = "zero-excitation"
ONE_EXCITATION = "one-excitation"


@dataclass(frozen=True)
class BoundStateResult:
    exists: bool
    eta: float
    energy: Optional[float] = None
    residue: Optional[float] = None
    detuning: Optional[float] = None


@dataclass(frozen=True)
class GroundState:
    energy: float
    branch: str
    eta: float
    C: float
    bound: BoundStateResult


@dataclass(frozen=True)
class EnergyDerivative:
    alpha: float
    value: float
    cross_branch: bool
    step: float


def _delocalized_eta(p: ModelParams, eta: Optional[float]) -> float:
    """Resolve ``eta``, solving the variational problem when it is not supplied."""
    if eta is not None:
        return eta
    sol = solve_eta(p)
    return _require_delocalized(sol, p)


def _require_delocalized(sol: VariationalSolution, p: ModelParams) -> float:
    if not sol.converged:
        raise ConvergenceError(
            f"variational solution did not converge (alpha={p.alpha}, delta={p.delta})",
            achieved=sol.residual)
    if not sol.delocalized:
        raise PhaseError(f"alpha={p.alpha}, delta={p.delta} is in the localized phase")
    return sol.eta


def y_function(energy: float, p: ModelParams, eta: float, method: str = "closed") -> float:
    """y(E) = Delta eta/2 - int J'(w) / (w - (E + Delta eta/2)) dw for E <= -Delta eta/2."""
    half = 0.5 * eta * p.delta
    binding = -(energy + half)
    if binding < 0:
        raise DomainError(f"E = {energy} lies above the continuum edge {-half}")
    return half - resolvent_integral(binding, p, eta, method=method)


def _bisect(func, lo, hi, xtol, rtol=1e-13, max_iter=4000):
    """Bisection for an increasing function with func(lo) < 0 <= func(hi)."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or (hi - lo <= xtol and hi - lo <= rtol * hi):
            return mid
        if func(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def bound_state(p: ModelParams, eta: Optional[float] = None, root_tol: float = 1e-12) -> BoundStateResult:
    """Bound state of the one-excitation sector below the continuum edge -Delta eta/2.

    Existence is decided by the strict test y(-Delta eta/2) < -Delta eta/2,
    i.e. alpha > 1/2 + eta Delta/(2 omega_c).  The root of y(E) = E is found by
    bisection in the binding energy b = -(E + Delta eta/2) >= 0, where
    g(b) = Delta eta + b - int J'/(w + b) is strictly increasing.
    """
    eta = _delocalized_eta(p, eta)
    a = eta * p.delta

    def g(b):
        return a + b - resolvent_integral(b, p, eta)

    if not g(0.0) < 0:
        return BoundStateResult(False, eta)
    hi = p.omega_c
    for _ in range(64):
        if g(hi) >= 0:
            break
        hi *= 2
    else:
        raise NumericalError("bound-state bracket expansion failed")
    b = _bisect(g, 0.0, hi, xtol=root_tol * p.omega_c)
    z = 1.0 / (1.0 + residue_integral(b, p, eta))
    return BoundStateResult(True, eta, energy=-0.5 * a - b, residue=z, detuning=-b)


def critical_alpha(delta: float, omega_c: float = 1.0, tol: float = 1e-12) -> float:
    """Self-consistent alpha_c = 1/2 + eta(alpha_c) Delta / (2 omega_c).

    alpha - 1/2 - eta(alpha) Delta/(2 omega_c) increases with alpha and changes
    sign on [1/2, 1/2 + Delta/(2 omega_c)], so plain bisection applies.
    """
    base = ModelParams(delta, 0.5, omega_c)

    def h(alpha):
        p = base.with_alpha(alpha)
        return alpha - 0.5 - _require_delocalized(solve_eta(p), p) * delta / (2 * omega_c)

    lo, hi = 0.5, 0.5 + delta / (2 * omega_c)
    return _bisect(h, lo, hi, xtol=tol, rtol=tol)


def ground_energy(p: ModelParams) -> GroundState:
    """E_g = -Delta eta/2 - C without a bound state and E_1 - C with one."""
    sol = solve_eta(p)
    eta = _require_delocalized(sol, p)
    c = displacement_constant_C(p, eta)
    bs = bound_state(p, eta)
    if bs.exists:
        return GroundState(bs.energy - c, ONE_EXCITATION, eta, c, bs)
    return GroundState(-0.5 * eta * p.delta - c, ZERO_EXCITATION, eta, c, bs)


def _fd(p: ModelParams, h: float):
    alpha = p.alpha
    if alpha - h < 0:
        # second-order forward difference at the alpha = 0 edge
        gs = [ground_energy(p.with_alpha(alpha + k * h)) for k in range(3)]
        val = (-3 * gs[0].energy + 4 * gs[1].energy - gs[2].energy) / (2 * h)
    else:
        gs = [ground_energy(p.with_alpha(alpha + k * h)) for k in (-1, 1)]
        val = (gs[1].energy - gs[0].energy) / (2 * h)
    return val, len({g.branch for g in gs}) > 1


def ground_energy_derivative(p: ModelParams, dalpha: float = 1e-4, richardson: bool = False) -> EnergyDerivative:
    """dE_g/dalpha by central differences, flagging stencils that straddle alpha_c."""
    if dalpha <= 0:
        raise DomainError("dalpha must be > 0")
    val, cross = _fd(p, dalpha)
    if richardson:
        half, cross_half = _fd(p, dalpha / 2)
        val = (4 * half - val) / 3
        cross = cross or cross_half
    return EnergyDerivative(p.alpha, val, cross, dalpha)


def level_gap(p: ModelParams) -> float:
    """E_0 - E_1 >= 0; zero when no bound state exists."""
    bs = bound_state(p)
    if not bs.exists:
        return 0.0
    return -0.5 * bs.eta * p.delta - bs.energy

