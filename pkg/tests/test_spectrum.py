import math
import time

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

import golden
from sbqpt.errors import ConvergenceError, DomainError, PhaseError
from sbqpt.spectral import ModelParams, resolvent_integral
from sbqpt.spectrum import (ONE_EXCITATION, ZERO_EXCITATION, bound_state, critical_alpha, ground_energy,
                            ground_energy_derivative, level_gap, y_function)
from sbqpt.variational import solve_eta


def test_bound_state_golden():
    bs = bound_state(ModelParams(golden.DELTA, 0.55))
    assert bs.exists
    assert bs.energy == pytest.approx(golden.E1, rel=1e-9)
    assert bs.residue == pytest.approx(golden.RESIDUE_Z, rel=1e-9)
    assert -bs.detuning == pytest.approx(golden.BINDING, rel=1e-8)


def test_bound_state_solves_y_equation():
    p = ModelParams(0.2, 0.8)
    bs = bound_state(p)
    assert y_function(bs.energy, p, bs.eta) == pytest.approx(bs.energy, abs=1e-12)
    assert bs.energy < -0.5 * bs.eta * p.delta
    assert 0 < bs.residue < 1


def test_y_function_domain():
    p = ModelParams(0.1, 0.3)
    with pytest.raises(DomainError):
        y_function(0.0, p, 0.6)


@pytest.mark.parametrize("alpha,exists", [(0.05, False), (0.25, False), (0.5, False), (0.55, True), (0.9, True)])
def test_existence(alpha, exists):
    bs = bound_state(ModelParams(0.1, alpha))
    assert bs.exists is exists
    if not exists:
        assert bs.energy is None and bs.residue is None


def test_existence_criterion_is_strict():
    # exactly at the threshold 1/2 + eta Delta/2 the root sits on the edge: no bound state
    p = ModelParams(0.1, 0.6)
    eta = solve_eta(p).eta
    a = eta * p.delta
    at_threshold = ModelParams(0.1, (1 + a) / 2)
    # g(0) = a - S(0) with S(0) = 2 alpha a/(1 + a) vanishes there
    assert a - resolvent_integral(0.0, at_threshold, eta) == pytest.approx(0.0, abs=1e-16)
    assert not bound_state(at_threshold, eta).exists


@pytest.mark.parametrize("delta", sorted(golden.ALPHA_C))
def test_critical_alpha_golden(delta):
    assert critical_alpha(delta) == pytest.approx(golden.ALPHA_C[delta], rel=1e-11)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 0.5))
def test_critical_alpha_self_consistent(delta):
    ac = critical_alpha(delta)
    eta = solve_eta(ModelParams(delta, ac)).eta
    assert 0.5 <= ac <= 0.5 + delta / 2
    assert ac == pytest.approx(0.5 + eta * delta / 2, abs=1e-11)
    assert not bound_state(ModelParams(delta, ac - 1e-6)).exists
    assert bound_state(ModelParams(delta, ac + 1e-6)).exists


def test_residue_vanishes_at_threshold():
    ac = critical_alpha(0.1)
    zs = [bound_state(ModelParams(0.1, ac + d)).residue for d in (1e-2, 1e-4, 1e-6)]
    assert zs[0] > zs[1] > zs[2] > 0
    assert zs[2] < 0.1


def test_ground_energy_branches():
    lo = ground_energy(ModelParams(0.1, 0.3))
    assert lo.branch == ZERO_EXCITATION
    assert lo.energy == pytest.approx(-0.5 * lo.eta * 0.1 - lo.C, rel=1e-15)
    hi = ground_energy(ModelParams(0.1, 0.55))
    assert hi.branch == ONE_EXCITATION
    assert hi.energy == pytest.approx(golden.E1 - 0.55 / (2 * (1 + golden.ETA[0.55] * 0.1)), rel=1e-9)


def test_ground_energy_rejects_localized():
    with pytest.raises(PhaseError, match="localized"):
        ground_energy(ModelParams(0.1, 1.2))


def test_nonconvergence_raises(monkeypatch):
    import sbqpt.spectrum as spectrum
    monkeypatch.setattr(spectrum, "solve_eta", lambda p: solve_eta(p, max_iter=2))
    with pytest.raises(ConvergenceError):
        ground_energy(ModelParams(0.1, 0.8))


def test_ground_energy_continuous_at_threshold():
    ac = critical_alpha(0.1)
    e = [ground_energy(ModelParams(0.1, ac + s)).energy for s in (-1e-9, 1e-9)]
    assert abs(e[1] - e[0]) < 1e-8


def test_level_gap():
    assert level_gap(ModelParams(0.1, 0.3)) == 0.0
    assert level_gap(ModelParams(0.1, 0.55)) == pytest.approx(golden.BINDING, rel=1e-8)


def test_derivative_at_zero_coupling_symbolic():
    # E_g = -Delta eta/2 - C with eta = 1 - alpha I1 + O(alpha^2) and C = alpha/(2(1+Delta)) + O(alpha^2)
    al, d, w = sp.symbols("alpha Delta omega", positive=True)
    i1 = sp.integrate(w / (w + d) ** 2, (w, 0, 1))
    eta1 = 1 - al * i1
    c1 = sp.integrate(al / 2 * (1 - d ** 2 / (w + d) ** 2), (w, 0, 1))
    slope = sp.diff(-d * eta1 / 2 - c1, al).subs(d, sp.Rational(1, 10))
    ref = float(sp.N(slope, 20))
    got = ground_energy_derivative(ModelParams(0.1, 0.0), dalpha=1e-5)
    assert not got.cross_branch
    assert got.value == pytest.approx(ref, rel=1e-6)


def test_derivative_against_analytic_slope():
    # on the lower branch dE_g/dalpha = -(Delta/2) d eta/d alpha - dC/d alpha, via implicit differentiation
    delta, alpha = 0.1, 0.3
    p = ModelParams(delta, alpha)
    eta = solve_eta(p).eta
    a = eta * delta
    i_over_alpha = math.log((1 + a) / a) - 1 / (1 + a)
    di_da = -alpha * delta / (a * (1 + a) ** 2)  # dI/d eta
    deta = -eta * i_over_alpha / (1 + eta * di_da)
    dc = 1 / (2 * (1 + a)) - alpha * delta * deta / (2 * (1 + a) ** 2)
    ref = -delta * deta / 2 - dc
    got = ground_energy_derivative(p, richardson=True)
    assert got.value == pytest.approx(ref, rel=1e-8)


def test_derivative_flags_straddling_stencil():
    ac = critical_alpha(0.1)
    assert ground_energy_derivative(ModelParams(0.1, ac), dalpha=1e-4).cross_branch
    assert not ground_energy_derivative(ModelParams(0.1, ac + 0.01), dalpha=1e-4).cross_branch
    with pytest.raises(DomainError):
        ground_energy_derivative(ModelParams(0.1, 0.3), dalpha=0)


def test_small_delta_runtime():
    t0 = time.perf_counter()
    ac = critical_alpha(1e-3)
    assert time.perf_counter() - t0 < 1.0
    assert 0.5 <= ac <= 0.5 + 6e-4
