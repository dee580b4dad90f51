"""Ohmic spectral density, its polaron-renormalized counterpart and reservoir integrals.

Energies and times carry the same units as ``ModelParams.delta``; with the
default ``omega_c = 1`` everything is measured in units of the cutoff.

The ohmic integrals that enter the variational and bound-state problems all
reduce to rational integrands on ``[0, omega_c]`` and are evaluated in closed
form.  Every closed form has a ``method="quad"`` twin based on adaptive
quadrature so the two routes can be checked against each other.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, special

from .errors import DomainError, NumericalError

QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 500


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs of the unbiased spin-boson model.

    Only the ohmic case ``s = 1`` and the unbiased case ``epsilon = 0`` are
    supported; anything else is rejected at construction.
    """

    delta: float
    alpha: float = 0.0
    omega_c: float = 1.0
    s: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("delta", "alpha", "omega_c", "s", "epsilon"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.delta <= 0:
            raise DomainError(f"delta must be > 0, got {self.delta}")
        if self.omega_c <= 0:
            raise DomainError(f"omega_c must be > 0, got {self.omega_c}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.epsilon != 0:
            raise DomainError(f"only the unbiased model is supported (epsilon = 0), got {self.epsilon}")
        if self.s != 1:
            raise DomainError(f"only the ohmic spectrum s = 1 is supported, got s = {self.s}")

    def with_alpha(self, alpha: float) -> "ModelParams":
        return replace(self, alpha=alpha)

    @property
    def delta_reduced(self) -> float:
        return self.delta / self.omega_c


def _breakpoints(omega_c, *scales):
    """Geometric breakpoints from the smallest scale up to the cutoff."""
    lo = min(x for x in scales if x > 0)
    if lo >= 0.5 * omega_c:
        return None
    n = int(np.ceil(np.log10(0.5 * omega_c / lo))) + 1
    return list(np.geomspace(lo, 0.5 * omega_c, n + 1))


def _check_eta(eta):
    if not (0 < eta <= 1):
        raise DomainError(f"eta must lie in (0, 1], got {eta}")


def _quad(func, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, **kw):
    """``scipy.integrate.quad`` that raises instead of warning on failure."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(func, lo, hi, epsabs=epsabs, epsrel=epsrel,
                                      limit=QUAD_LIMIT, **kw)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"quadrature did not converge: {exc}") from exc
    # QUADPACK error estimates are conservative; allow a modest margin
    if err > 10 * max(epsabs, epsrel * abs(val)):
        raise NumericalError(f"quadrature error estimate {err:.3g} exceeds tolerance", achieved=err)
    return val


# --- pointwise densities -----------------------------------------------------

def spectral_density(omega, p: ModelParams):
    """J(w) = 2 alpha w_c^(1-s) w^s for 0 <= w < w_c, zero above the cutoff."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError("spectral density is defined for omega >= 0 only")
    out = np.where(w < p.omega_c, 2.0 * p.alpha * p.omega_c ** (1 - p.s) * w ** p.s, 0.0)
    return out if out.ndim else float(out)


def renormalized_spectral_density(omega, p: ModelParams, eta: float):
    """J'(w) = (eta Delta)^2 J(w) / (w + eta Delta)^2."""
    _check_eta(eta)
    w = np.asarray(omega, dtype=float)
    a = eta * p.delta
    out = a * a * np.asarray(spectral_density(w, p)) / (w + a) ** 2
    return out if out.ndim else float(out)


# --- closed forms (reduced units, omega_c = 1) --------------------------------

def _log_ratio(a):
    # ln((1 + a) / a) without overflow for tiny a
    return math.log1p(a) - math.log(a)


_PHI_TERMS = 64
# phi(u) = sum_n (-1)^(n+1) u^n / (n+2) and its term-wise derivative, |u| < 1/2
_PHI_COEF = [(-1.0) ** (n + 1) / (n + 2) for n in range(_PHI_TERMS)]
_DPHI_COEF = [(-1.0) ** (n + 1) * n / (n + 2) for n in range(1, _PHI_TERMS)]


def _horner(coef, u):
    acc = 0.0
    for c in reversed(coef):
        acc = acc * u + c
    return acc


def _phi(u, lg, onepu):
    """(log1p(u) - u) / u**2 and its derivative.

    ``lg`` and ``onepu`` are log1p(u) and 1 + u, supplied by the caller in a
    form free of cancellation near u = -1.
    """
    if abs(u) < 0.5:
        return _horner(_PHI_COEF, u), _horner(_DPHI_COEF, u)
    phi = (lg - u) / (u * u)
    return phi, -1.0 / (u * onepu) - 2.0 * phi / u


def _resolvent_parts(a, b, alpha):
    """Reduced-unit S(b) = int_0^1 J'/(w+b) dw and R(b) = int_0^1 J'/(w+b)^2 dw.

    Partial fractions of w / ((w+a)^2 (w+b)) rearranged so the removable
    singularity at b = a costs no precision.
    """
    if b == 0:
        return 2 * alpha * a / (1 + a), math.inf
    u = (b - a) / (a * (1 + b))
    onepu = b * (1 + a) / (a * (1 + b))
    lg = math.log(onepu) if u < -0.5 else math.log1p(u)
    phi, dphi = _phi(u, lg, onepu)
    s_val = 2 * alpha * a / ((1 + a) * (1 + b)) + 2 * alpha * b * phi / (1 + b) ** 2
    r_val = (2 * alpha * a / ((1 + a) * (1 + b) ** 2)
             - 2 * alpha * (1 - b) * phi / (1 + b) ** 3
             - 2 * alpha * b * dphi * (1 + a) / (a * (1 + b) ** 4))
    return s_val, r_val


# --- reservoir integrals ------------------------------------------------------

def eta_exponent(p: ModelParams, eta: float, method: str = "closed",
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """I(eta) = int_0^wc J(w) / (2 (w + eta Delta)^2) dw, so that eta = exp(-I(eta))."""
    _check_eta(eta)
    if method == "closed":
        a = eta * p.delta_reduced
        return p.alpha * (_log_ratio(a) - 1.0 / (1.0 + a))
    if method == "quad":
        a = eta * p.delta
        return _quad(lambda w: spectral_density(w, p) / (2 * (w + a) ** 2), 0.0, p.omega_c,
                     epsabs, epsrel, points=_breakpoints(p.omega_c, a))
    raise ValueError(f"unknown method {method!r}")


def displaced_boson_number(p: ModelParams, eta: float, method: str = "closed",
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """Mean boson number sum_k |lambda_k|^2 = int J(w) / (4 (w + Delta eta)^2) dw."""
    if method == "closed":
        return 0.5 * eta_exponent(p, eta)
    if method == "quad":
        _check_eta(eta)
        a = eta * p.delta
        return _quad(lambda w: spectral_density(w, p) / (4 * (w + a) ** 2), 0.0, p.omega_c,
                     epsabs, epsrel, points=_breakpoints(p.omega_c, a))
    raise ValueError(f"unknown method {method!r}")


def resolvent_integral(binding: float, p: ModelParams, eta: float, method: str = "closed",
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """int_0^wc J'(w) / (w + b) dw for a binding energy b >= 0 below the continuum edge."""
    _check_eta(eta)
    if binding < 0:
        raise DomainError("binding energy must be >= 0 (pole inside the continuum)")
    if method == "closed":
        s_val, _ = _resolvent_parts(eta * p.delta_reduced, binding / p.omega_c, p.alpha)
        return p.omega_c * s_val
    if method == "quad":
        return _quad(lambda w: renormalized_spectral_density(w, p, eta) / (w + binding),
                     0.0, p.omega_c, epsabs, epsrel,
                     points=_breakpoints(p.omega_c, eta * p.delta, binding))
    raise ValueError(f"unknown method {method!r}")


def residue_integral(binding: float, p: ModelParams, eta: float, method: str = "closed",
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> float:
    """int_0^wc J'(w) / (w + b)^2 dw; diverges logarithmically as b -> 0."""
    _check_eta(eta)
    if binding < 0:
        raise DomainError("binding energy must be >= 0 (pole inside the continuum)")
    if method == "closed":
        _, r_val = _resolvent_parts(eta * p.delta_reduced, binding / p.omega_c, p.alpha)
        return r_val
    if method == "quad":
        if binding == 0 and p.alpha > 0:
            return math.inf
        return _quad(lambda w: renormalized_spectral_density(w, p, eta) / (w + binding) ** 2,
                     0.0, p.omega_c, epsabs, epsrel,
                     points=_breakpoints(p.omega_c, eta * p.delta, binding))
    raise ValueError(f"unknown method {method!r}")


# --- memory kernel ------------------------------------------------------------

def kernel(x: float, p: ModelParams, eta: float, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL) -> complex:
    """f(x) = int_0^wc J'(w) exp(-i w x) dw by adaptive (QAWO) quadrature."""
    _check_eta(eta)
    if x < 0:
        raise DomainError("kernel is implemented for x >= 0 only; use f(-x) = conj(f(x))")

    def jp(w):
        return renormalized_spectral_density(w, p, eta)

    pts = _breakpoints(p.omega_c, eta * p.delta) or []
    if x == 0:
        return complex(_quad(jp, 0.0, p.omega_c, epsabs, epsrel, points=pts or None), 0.0)
    # QAWO takes no breakpoints, so integrate piecewise over the geometric grid
    edges = [0.0, *pts, p.omega_c]
    re = im = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        re += _quad(jp, lo, hi, epsabs, epsrel, weight="cos", wvar=x)
        im -= _quad(jp, lo, hi, epsabs, epsrel, weight="sin", wvar=x)
    return complex(re, im)


def kernel_closed(x, p: ModelParams, eta: float) -> np.ndarray:
    """Vectorized f(x) through complex exponential integrals.

    With a = eta Delta / w_c and B = 1 + a (reduced units),
    f = 2 alpha a^2 [(1 + i a x) e^{iax} (E1(iax) - E1(iBx)) - 1 + (a/B) e^{-ix}].
    """
    _check_eta(eta)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("kernel is implemented for x >= 0 only")
    a = eta * p.delta_reduced
    big = 1.0 + a
    xr = x * p.omega_c
    out = np.empty(xr.shape, dtype=complex)
    zero = xr == 0
    out[zero] = _log_ratio(a) - 1.0 / big
    xs = xr[~zero]
    e1 = special.exp1(1j * a * xs) - special.exp1(1j * big * xs)
    out[~zero] = (1 + 1j * a * xs) * np.exp(1j * a * xs) * e1 - 1 + (a / big) * np.exp(-1j * xs)
    return 2 * p.alpha * a * a * p.omega_c ** 2 * out


@functools.lru_cache(maxsize=16)
def kernel_grid(p: ModelParams, eta: float, dt: float, n: int) -> np.ndarray:
    """f(j dt) for j = 0..n-1, computed once and shared read-only."""
    f = kernel_closed(np.arange(n) * dt, p, eta)
    f.setflags(write=False)
    return f
