"""Self-consistent renormalized tunneling and the delocalized/localized classifier."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import DomainError
from .spectral import QUAD_EPSABS, QUAD_EPSREL, ModelParams, _breakpoints, _quad, eta_exponent, spectral_density

log = logging.getLogger(__name__)

DELOCALIZED = "delocalized"
LOCALIZED = "localized"

# Below this the iteration has collapsed onto the trivial fixed point.  The
# delocalized fixed point behaves like (e Delta)^(alpha/(1-alpha)), so any
# larger floor would shift the small-Delta localization boundary away from 1.
ETA_FLOOR = 1e-300


@dataclass(frozen=True)
class VariationalSolution:
    eta: float
    converged: bool
    iterations: int
    residual: float
    phase: str
    damping: float = 0.5

    @property
    def delocalized(self) -> bool:
        return self.phase == DELOCALIZED


def solve_eta(p: ModelParams, tol: float = 1e-12, max_iter: int = 10_000,
              damping: float = 0.5, eta_floor: float = ETA_FLOOR, quiet: bool = False) -> VariationalSolution:
    """Largest fixed point of eta = exp(-I(eta)) by damped iteration from eta = 1.

    The map is increasing in eta, so the iterates decrease monotonically onto
    the largest fixed point or collapse towards zero (localized phase).
    Convergence is declared when successive iterates differ by at most
    ``tol * eta``; ``residual`` holds the last absolute difference.  For a
    collapsed iteration ``residual`` is the distance to the trivial fixed point.
    """
    if tol <= 0:
        raise DomainError("tol must be > 0")
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    eta = 1.0
    if p.alpha == 0:
        return VariationalSolution(1.0, True, 0, 0.0, DELOCALIZED, damping)

    lam = damping
    prev_step = 0.0
    step = 0.0
    for it in range(1, max_iter + 1):
        target = math.exp(-eta_exponent(p, eta))
        new = (1 - lam) * eta + lam * target
        step = new - eta
        if prev_step * step < 0:
            # sign flip means overshoot; halve the damping and retry from eta
            lam *= 0.5
            log.debug("solve_eta: oscillation at iteration %d, damping -> %g", it, lam)
            prev_step = 0.0
            continue
        prev_step = step
        if new < eta_floor:
            return VariationalSolution(new, True, it, new, LOCALIZED, lam)
        eta = new
        if abs(step) <= tol * eta:
            return VariationalSolution(eta, True, it, abs(step), DELOCALIZED, lam)
    (log.debug if quiet else log.warning)("solve_eta: no convergence after %d iterations (alpha=%g, delta=%g)",
                max_iter, p.alpha, p.delta)
    return VariationalSolution(eta, False, max_iter, abs(step), DELOCALIZED, lam)


def displacement_constant_C(p: ModelParams, eta: float, method: str = "closed",
                            epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """C = int_0^wc J(w) xi(w) (2 - xi(w)) / (4 w) dw with xi(w) = w / (w + eta Delta).

    The integrand simplifies to (alpha/2) (1 - a^2/(w+a)^2), giving
    C = alpha w_c / (2 (1 + eta Delta / w_c)).
    """
    if not 0 < eta <= 1:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    a = eta * p.delta
    if method == "closed":
        return p.alpha * p.omega_c / (2 * (1 + a / p.omega_c))
    if method == "quad":
        def integrand(w):
            if w == 0:
                return 0.0
            xi = w / (w + a)
            return spectral_density(w, p) * xi * (2 - xi) / (4 * w)
        return _quad(integrand, 0.0, p.omega_c, epsabs, epsrel, points=_breakpoints(p.omega_c, a))
    raise ValueError(f"unknown method {method!r}")


def fixed_point_defect(p: ModelParams, eta: float) -> float:
    """|eta - exp(-I(eta))|, independent of how eta was obtained."""
    return abs(eta - math.exp(-eta_exponent(p, eta)))
