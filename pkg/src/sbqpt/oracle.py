"""Brute-force cross-checks that share nothing with the closed forms.

A finite bath of M modes represents the renormalized spectral density J'.
The effective Hamiltonian then becomes an explicit matrix in the one- and
two-excitation sectors, which we diagonalize and propagate directly.
Reservoir integrals are re-done as plain uniform Riemann sums.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import DomainError, NumericalError
from .spectral import ModelParams, renormalized_spectral_density, spectral_density

LINEAR = "linear"
LOGARITHMIC = "logarithmic"
LOG_OMEGA_MIN = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class DiscretizedBath:
    frequencies: np.ndarray
    couplings_sq: np.ndarray
    scheme: str
    eta: float

    @property
    def M(self) -> int:
        return len(self.frequencies)

    def recurrence_time(self) -> float:
        """2 pi over the smallest level spacing; comparisons must stay below it."""
        return 2 * np.pi / np.min(np.diff(self.frequencies))


@dataclass(frozen=True)
class SingleExcitation:
    energy: float
    weight: float


def discretize(p: ModelParams, eta: float, M: int, scheme: str = LOGARITHMIC) -> DiscretizedBath:
    """Bin [0, w_c] into M modes with nu_k^2 = int_bin J' and w_k the J'-weighted centroid."""
    if M < 2:
        raise DomainError("need at least two modes")
    if scheme == LINEAR:
        edges = np.linspace(0.0, p.omega_c, M + 1)
    elif scheme == LOGARITHMIC:
        edges = np.geomspace(LOG_OMEGA_MIN * p.omega_c, p.omega_c, M + 1)
    else:
        raise DomainError(f"unknown discretization scheme {scheme!r}")
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    w = lo + half * (_GL_NODES + 1.0)
    jp = renormalized_spectral_density(w, p, eta) * half * _GL_WEIGHTS
    weights = jp.sum(axis=1)
    moments = (jp * w).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        centroid = np.where(weights > 0, moments / weights, 0.5 * (edges[:-1] + edges[1:]))
    return DiscretizedBath(centroid, weights, scheme, eta)


def single_excitation_matrix(bath: DiscretizedBath, p: ModelParams) -> np.ndarray:
    """H_eff on {|+,0>, |-,1_k>}: diagonal (Delta eta/2, -Delta eta/2 + w_k), first row nu_k."""
    half = 0.5 * bath.eta * p.delta
    h = np.diag(np.concatenate(([half], bath.frequencies - half)))
    nu = np.sqrt(bath.couplings_sq)
    h[0, 1:] = nu
    h[1:, 0] = nu
    return h


def diag_single_excitation(bath: DiscretizedBath, p: ModelParams) -> SingleExcitation:
    """Lowest one-excitation eigenvalue and its weight |c_0|^2 on |+,{0}>."""
    h = single_excitation_matrix(bath, p)
    try:
        vals, vecs = linalg.eigh(h, subset_by_index=[0, 0])
    except linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    return SingleExcitation(float(vals[0]), float(vecs[0, 0] ** 2))


def two_excitation_matrix(bath: DiscretizedBath, p: ModelParams) -> np.ndarray:
    """H_eff on {|+,1_k>} followed by {|-,1_k 1_l>, k <= l}."""
    m = bath.M
    half = 0.5 * bath.eta * p.delta
    w = bath.frequencies
    nu = np.sqrt(bath.couplings_sq)
    kk, ll = np.triu_indices(m)
    dim = m + len(kk)
    h = np.zeros((dim, dim))
    h[np.arange(m), np.arange(m)] = half + w
    pair = m + np.arange(len(kk))
    h[pair, pair] = -half + w[kk] + w[ll]
    diag = kk == ll
    # b_m^dag on |1_m> gives sqrt(2) |2_m>; otherwise |1_j 1_m> with unit amplitude
    h[pair[diag], kk[diag]] = np.sqrt(2.0) * nu[kk[diag]]
    off = ~diag
    h[pair[off], kk[off]] = nu[ll[off]]
    h[pair[off], ll[off]] = nu[kk[off]]
    # couplings were written below the diagonal only
    return h + np.tril(h, -1).T


def diag_two_excitation(bath: DiscretizedBath, p: ModelParams, max_modes: int = 60) -> float:
    """Lowest eigenvalue of the N = 2 sector of H_eff."""
    if bath.M > max_modes:
        raise DomainError(f"two-excitation sector capped at {max_modes} modes, got {bath.M}")
    vals = linalg.eigh(two_excitation_matrix(bath, p), eigvals_only=True, subset_by_index=[0, 0])
    return float(vals[0])


def unitary_dynamics(bath: DiscretizedBath, p: ModelParams, t_max: float, dt: float):
    """Exact propagation of |+,{0}> in the one-excitation sector.

    Returns the time grid and the amplitude c(t) = <+,0| exp(-i H t) |+,0>.
    Propagation goes through the eigenbasis, so the full state keeps unit norm.
    """
    vals, vecs = linalg.eigh(single_excitation_matrix(bath, p))
    weight = vecs[0] ** 2
    drift = abs(weight.sum() - 1.0)
    if drift > 1e-8:
        raise NumericalError(f"norm drift {drift:.2e} in exact propagation", achieved=drift)
    times = np.arange(int(round(t_max / dt)) + 1) * dt
    c = np.exp(-1j * np.outer(times, vals)) @ weight
    return times, c


# --- Riemann-sum oracle -------------------------------------------------------

def riemann_integral(func, lo: float, hi: float, n: int = 10**6, richardson: bool = True):
    """Uniform midpoint sum of ``func`` on [lo, hi].

    With ``richardson`` the n- and 2n-point sums are combined to cancel the
    h^2 error term; both are still plain uniform sums.
    """
    def midpoint(k):
        h = (hi - lo) / k
        x = lo + h * (np.arange(k) + 0.5)
        return h * np.sum(func(x))

    s1 = midpoint(n)
    if not richardson:
        return s1
    return (4 * midpoint(2 * n) - s1) / 3


def riemann_reservoir_integrals(p: ModelParams, eta: float, binding: float, n: int = 10**6) -> dict:
    """Every reservoir integral with a closed form, by uniform Riemann sums."""
    a = eta * p.delta
    wc = p.omega_c

    def jp(w):
        return renormalized_spectral_density(w, p, eta)

    def c_integrand(w):
        xi = w / (w + a)
        return spectral_density(w, p) * xi * (2 - xi) / (4 * w)

    return {
        "eta_exponent": riemann_integral(lambda w: spectral_density(w, p) / (2 * (w + a) ** 2), 0, wc, n),
        "C": riemann_integral(c_integrand, 0, wc, n),
        "resolvent": riemann_integral(lambda w: jp(w) / (w + binding), 0, wc, n),
        "residue": riemann_integral(lambda w: jp(w) / (w + binding) ** 2, 0, wc, n),
        "boson_number": riemann_integral(lambda w: spectral_density(w, p) / (4 * (w + a) ** 2), 0, wc, n),
    }
