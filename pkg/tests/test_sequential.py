import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from attrition import GameParams, Priors, ag_atom, seq_threshold, solve_sequential
from attrition.sequential import seq_posterior_paths, seq_stage1_value_a


def stage1_endpoint(za0, zb, zc0, params):
    """Integrate the stage-1 reputations until C's reaches one; return z_A there."""
    lam = params.lam_ag
    rho = params.pi_ac / params.pi_bc

    def f(t, y):
        za, zc = y
        return [za * lam * (rho + 1) / (rho + ag_atom(zc, zb)), zc * lam]

    T = -math.log(zc0) / lam
    sol = solve_ivp(f, (0.0, T), [za0, zc0], rtol=1e-11, atol=1e-13)
    return sol.y[0, -1]


def test_threshold_examples(base):
    z_bar, z_tilde = seq_threshold(Priors(0.4, 0.4, 0.4), base)
    assert z_bar == pytest.approx(0.25)
    assert z_tilde == pytest.approx(0.25)
    z_bar, _ = seq_threshold(Priors(0.5, 0.3, 0.2), base)
    assert z_bar == pytest.approx(0.3 / 1.7 * (2 / 3) ** 2, rel=1e-12)
    assert z_bar == pytest.approx(0.07843, abs=1e-5)


def test_threshold_is_ode_boundary(base):
    for z in [(0.5, 0.3, 0.2), (0.4, 0.4, 0.4), (0.2, 0.1, 0.3), (0.3, 0.5, 0.05)]:
        z_bar, _ = seq_threshold(Priors(*z), base)
        assert stage1_endpoint(z_bar, z[1], z[2], base) == pytest.approx(1.0, abs=1e-8)


def test_threshold_continuous_at_branch_point(base):
    below, _ = seq_threshold(Priors(0.5, 0.3, 0.3 - 1e-12), base)
    above, _ = seq_threshold(Priors(0.5, 0.3, 0.3), base)
    assert below == pytest.approx(above, abs=1e-9)


def test_symmetric_center_atom(base):
    eq = solve_sequential(Priors(0.4, 0.4, 0.4), base)
    assert eq.atom_holder == "C"
    assert eq.atom_size == pytest.approx(1 - 0.4 / 0.52, abs=1e-9)
    assert eq.z_c_plus == pytest.approx(0.52, abs=1e-12)
    assert eq.terminal == pytest.approx(-math.log(0.52) / 0.75)
    pa, pc = seq_posterior_paths(eq)
    assert pa.at(eq.terminal) == pytest.approx(1.0, abs=1e-9)
    assert pc.at(eq.terminal) == pytest.approx(1.0, abs=1e-9)


def test_a_atom_branch(base):
    eq = solve_sequential(Priors(0.2, 0.1, 0.3), base)
    assert eq.z_bar_a == pytest.approx(0.5 / 1.9)
    assert eq.atom_holder == "A"
    assert eq.atom_size == pytest.approx(1 - 0.2 / (0.5 / 1.9), abs=1e-12)
    assert seq_posterior_paths(eq)[0].at(eq.terminal) == pytest.approx(1.0, abs=1e-9)


def test_no_atom_at_threshold(base):
    z_bar, _ = seq_threshold(Priors(0.5, 0.3, 0.2), base)
    eq = solve_sequential(Priors(z_bar, 0.3, 0.2), base)
    assert eq.atom_holder is None
    assert eq.profile_a.atom0 == pytest.approx(0.0, abs=1e-12)
    assert eq.profile_c.atom0 == pytest.approx(0.0, abs=1e-12)


def test_path_continuous_at_crossing(base):
    eq = solve_sequential(Priors(0.1, 0.3, 0.2), base)
    assert eq.crossing is not None
    pa = eq.profile_a
    t = eq.crossing
    assert pa.posterior(t - 1e-10) == pytest.approx(pa.posterior(t + 1e-10), abs=1e-8)
    # below the crossing A concedes at lam (pi+1)/pi
    assert eq.hazard_a(t / 2) == pytest.approx(0.75 * 2 / 1, rel=1e-12)


def test_closed_form_path_matches_ode(base):
    eq = solve_sequential(Priors(0.1, 0.3, 0.2), base)
    lam, zb = 0.75, 0.3

    def f(t, y):
        za, zc = y
        return [za * lam * 2 / (1 + ag_atom(zc, zb)), zc * lam]

    ts = np.linspace(0, eq.terminal, 9)
    sol = solve_ivp(f, (0, eq.terminal), [eq.z_a_plus, eq.z_c_plus], t_eval=ts, rtol=1e-11, atol=1e-13)
    assert np.allclose(sol.y[0], [eq.profile_a.posterior(t) for t in ts], atol=1e-8)


def test_a_indifferent_over_stage1(base):
    eq = solve_sequential(Priors(0.4, 0.4, 0.4), base)
    vals = [seq_stage1_value_a(eq, t) for t in np.linspace(0.05, eq.terminal * 0.95, 8)]
    assert np.ptp(vals) < 1e-8
    assert eq.payoffs["A"] == pytest.approx(vals[0], abs=1e-8)


def test_center_payoff_when_holding_atom(base):
    eq = solve_sequential(Priors(0.4, 0.4, 0.4), base)
    assert eq.payoffs["C"] == pytest.approx(0.6, abs=1e-12)


prob = st.floats(0.03, 0.97)


@settings(max_examples=60, deadline=None)
@given(za=prob, zb=prob, zc=prob, pi=st.floats(0.3, 3.0))
def test_terminal_condition(za, zb, zc, pi):
    params = GameParams(1.0, 0.7, pi, 1.0)
    eq = solve_sequential(Priors(za, zb, zc), params)
    pa, pc = seq_posterior_paths(eq)
    assert pa.at(eq.terminal) == pytest.approx(1.0, abs=1e-9)
    assert pc.at(eq.terminal) == pytest.approx(1.0, abs=1e-9)
    assert (eq.profile_a.atom0 == 0.0) or (eq.profile_c.atom0 == pytest.approx(0.0, abs=1e-12))
