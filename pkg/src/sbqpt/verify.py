"""Oracle suite behind ``sbqpt verify``: closed forms against brute force at one parameter point."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .dynamics import simulate, solve_amplitude
from .oracle import (LINEAR, LOGARITHMIC, diag_single_excitation, diag_two_excitation, discretize,
                     riemann_integral, riemann_reservoir_integrals, unitary_dynamics)
from .spectral import (ModelParams, displaced_boson_number, eta_exponent, renormalized_spectral_density,
                       residue_integral, resolvent_integral)
from .spectrum import bound_state
from .variational import displacement_constant_C, solve_eta
from .errors import PhaseError


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.threshold)


def _rel(x, y):
    return abs(x - y) / abs(y)


def run_checks(p: ModelParams, t_max: float = 100.0, dt: float = 0.02, M_ed: int = 2000,
               M_two: int = 40) -> List[Check]:
    """Each check reports an error measure and the largest value it may take."""
    sol = solve_eta(p)
    if not sol.delocalized:
        raise PhaseError(f"verify needs the delocalized phase; alpha={p.alpha} is localized")
    eta = sol.eta
    a = eta * p.delta
    bs = bound_state(p, eta)
    checks = [Check("eta fixed point", abs(np.exp(-eta_exponent(p, eta)) - eta) / eta, 1e-10)]

    binding = -bs.detuning if bs.exists else 0.1 * p.omega_c
    ref = riemann_reservoir_integrals(p, eta, binding)
    closed = {
        "eta_exponent": eta_exponent(p, eta),
        "C": displacement_constant_C(p, eta),
        "resolvent": resolvent_integral(binding, p, eta),
        "residue": residue_integral(binding, p, eta),
        "boson_number": displaced_boson_number(p, eta),
    }
    checks.append(Check("closed forms vs Riemann sums", max(_rel(closed[k], ref[k]) for k in ref), 1e-8))

    bath = discretize(p, eta, M_ed, LOGARITHMIC)
    total = riemann_integral(lambda w: renormalized_spectral_density(w, p, eta), 0.0, p.omega_c)
    checks.append(Check("bath sum rule", _rel(bath.couplings_sq.sum(), total), 1e-6))

    ed = diag_single_excitation(bath, p)
    if bs.exists:
        checks.append(Check("E_1 vs exact diagonalization", _rel(bs.energy, ed.energy), 1e-3))
        checks.append(Check("residue vs ground-state weight", _rel(ed.weight, bs.residue), 0.05))
        two = diag_two_excitation(discretize(p, eta, M_two, LINEAR), p, max_modes=M_two)
        checks.append(Check("N=2 sector above E_1", bs.energy - two, 0.0))
    else:
        edge = -0.5 * a
        checks.append(Check("no state below the continuum edge", max(0.0, edge - ed.energy) / a, 1e-3))

    horizon = min(t_max, 100.0)
    lin = discretize(p, eta, M_ed, LINEAR)
    _, c_exact = unitary_dynamics(lin, p, horizon, dt)
    series = solve_amplitude(p, eta, horizon, dt)
    checks.append(Check("Volterra vs unitary propagation", float(np.max(np.abs(series.c - c_exact))), 1e-3))

    tr = simulate(p, t_max=t_max, dt=dt, eta=eta)
    gap = float(np.max(np.abs(tr.pz - tr.pz_closed)[tr.rate_valid], initial=0.0))
    checks.append(Check("master equation vs closed form", gap, 1e-4))
    checks.append(Check("trace preservation", tr.trace_defect, 1e-10))
    return checks
