import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attrition import CaseTag, GameParams, Priors, compare_to_benchmark, solve_trilateral, vanishing_limit
from attrition.trilateral import (
    NotDominantPeripheral,
    benchmark_payoffs,
    catch_up_times,
    classify_case,
    payoffs_analytic,
    vanishing_priors,
)

REFERENCE = {
    # priors: (player with the jump, jump level, t_star, T)
    (0.5, 0.2, 0.1): ("C", 0.3684, 0.4072, 1.3314),
    (0.5, 0.1, 0.2): ("C", 0.2925, 0.7153, 1.6395),
    (0.5, 0.1, 0.4): ("B", 0.256, 0.2975, 1.2217),
    (0.6, 0.1, 0.2): ("C", 0.330, 0.796, 1.477),
}


def test_catch_up_times(uneven):
    t_b, t_c = catch_up_times(Priors(0.6, 0.1, 0.2), uneven)
    assert t_c == pytest.approx(math.log(3) / 0.75)
    assert t_b == pytest.approx(math.log(6) / 2.25)
    t_b, t_c = catch_up_times(Priors(0.5, 0.1, 0.4), uneven)
    assert t_c == pytest.approx(math.log(1.25) / 0.75)
    assert t_b == pytest.approx(math.log(5) / 2.25)


def test_catch_up_coincide_without_ac_weight(base):
    t_b, t_c = catch_up_times(Priors(0.5, 0.2, 0.2), base.with_pies(1e-9, 1.0))
    assert t_b == pytest.approx(t_c, rel=1e-6)


def test_catch_up_requires_dominant(base):
    with pytest.raises(NotDominantPeripheral):
        catch_up_times(Priors(0.3, 0.3, 0.5), base)


@pytest.mark.parametrize("z,case", [
    ((0.3, 0.3, 0.5), CaseTag.CenterStrongest),
    ((0.5, 0.2, 0.1), CaseTag.DominantA_CatomBranch),
    ((0.5, 0.1, 0.4), CaseTag.DominantA_BatomBranch),
    ((0.5, 0.2, 0.2), CaseTag.DominantA_BweakestOrTie),
    ((0.4, 0.4, 0.2), CaseTag.PeripheralsTieAboveCenter),
    ((0.4, 0.4, 0.4), CaseTag.AllEqual),
])
def test_classify(z, case, uneven):
    assert classify_case(Priors(*z), uneven) is case


@pytest.mark.parametrize("z", list(REFERENCE))
def test_reference_panels(z, uneven):
    who, jump, t_star, T = REFERENCE[z]
    eq = solve_trilateral(Priors(*z), uneven)
    assert eq.paths[who].post_atom == pytest.approx(jump, abs=5e-4)
    assert eq.t_star == pytest.approx(t_star, abs=5e-4)
    assert eq.terminal == pytest.approx(T, abs=5e-4)
    # alignment at t_star and all posteriors at one at T
    zs = [eq.posterior(k, eq.t_star) for k in "ABC"]
    assert np.allclose(zs, zs[0], atol=1e-12)
    assert all(eq.posterior(k, eq.terminal) == pytest.approx(1.0, abs=1e-12) for k in "ABC")


def test_center_strongest_panel(uneven):
    eq = solve_trilateral(Priors(0.3, 0.1, 0.5), uneven)
    assert eq.terminal == pytest.approx(0.9242, abs=5e-4)
    assert eq.atoms["A"] > 0 and eq.atoms["B"] > 0 and eq.atoms["C"] == 0


def test_symmetric(base):
    eq = solve_trilateral(Priors(0.5, 0.5, 0.5), base)
    assert all(v == 0 for v in eq.atoms.values())
    assert eq.terminal == pytest.approx(-math.log(0.5) / 0.75)
    assert eq.payoffs == pytest.approx({"A": 0.3, "B": 0.3, "C": 0.6})


def test_aligned_payoffs(uneven):
    eq = solve_trilateral(Priors(0.6, 0.1, 0.2), uneven)
    assert eq.atoms["C"] == pytest.approx(0.3943, abs=1e-3)
    assert eq.payoffs["C"] == pytest.approx(0.9, abs=1e-12)
    assert eq.payoffs["B"] == pytest.approx(0.3 + 0.4 * eq.atoms["C"], abs=1e-12)
    assert eq.payoffs["B"] == pytest.approx(0.4577, abs=1e-4)
    assert eq.payoffs["A"] < 2 * (0.3 + 0.4 * 2 / 3)


def test_quadrature_agrees_with_closed_form(uneven):
    for z in REFERENCE:
        eq = solve_trilateral(Priors(*z), uneven)
        quad = payoffs_analytic(eq, method="quad")
        closed = payoffs_analytic(eq, method="closed")
        assert quad == pytest.approx(closed, abs=1e-9)


def test_compare_examples(uneven):
    c = compare_to_benchmark(Priors(0.3, 0.3, 0.5), uneven)
    assert all(abs(d) <= 1e-9 for d in c.deltas.values())
    c = compare_to_benchmark(Priors(0.6, 0.1, 0.2), uneven)
    assert c.deltas["C"] == pytest.approx(-0.2, abs=1e-9)
    assert c.holds()
    c = compare_to_benchmark(Priors(0.5, 0.2, 0.1), uneven)
    assert c.deltas["C"] == pytest.approx(0.0, abs=1e-9)
    assert c.holds()


prob = st.floats(0.02, 0.98)


@settings(max_examples=150, deadline=None)
@given(za=prob, zb=prob, zc=prob, pi=st.floats(0.25, 4.0))
def test_equilibrium_structure(za, zb, zc, pi):
    params = GameParams(1.0, 0.7, pi, 1.0)
    eq = solve_trilateral(Priors(za, zb, zc), params, payoff_method="closed")
    # a strictly most reputable player never concedes at time 0
    top = max(za, zb, zc)
    for k, z in zip("ABC", (za, zb, zc)):
        if z == top and sorted((za, zb, zc))[1] < top - 1e-9:
            assert eq.atoms[k] == 0.0
    assert all(eq.posterior(k, eq.terminal) == pytest.approx(1.0, abs=1e-9) for k in "ABC")
    # rational types earn at least their weak-type share
    assert eq.payoffs["A"] >= (1 - 0.7) * pi - 1e-9
    assert eq.payoffs["B"] >= (1 - 0.7) - 1e-9
    assert eq.payoffs["C"] >= (1 - 0.7) * (pi + 1) - 1e-9


@settings(max_examples=150, deadline=None)
@given(za=prob, zb=prob, zc=prob, pi=st.floats(0.25, 4.0))
def test_comparison_signs(za, zb, zc, pi):
    params = GameParams(1.0, 0.7, pi, 1.0)
    assert compare_to_benchmark(Priors(za, zb, zc), params, payoff_method="closed").holds()


def test_benchmark_symmetric(base):
    assert benchmark_payoffs(Priors(0.4, 0.4, 0.4), base) == pytest.approx({"A": 0.3, "B": 0.3, "C": 0.6})


def test_vanishing_limit_formula(base):
    lim = vanishing_limit(2.0, 1.5, base)
    assert lim.center_gap == pytest.approx(0.4 * 0.5 / 1.5)
    assert lim.v_b == pytest.approx(0.7 - 0.4 * math.sqrt(0.75))
    assert lim.b_strictly_better
    eq = vanishing_limit(1.5, 1.5, base)
    assert eq.center_gap == pytest.approx(0.4 * 0.5 / 1.5)
    assert eq.v_b == pytest.approx(0.3) and not eq.b_strictly_better


def test_vanishing_limit_converges(base):
    lim = vanishing_limit(2.0, 1.5, base)
    gaps, vbs = [], []
    for eps in (1e-2, 1e-3, 1e-4):
        pri = vanishing_priors(2.0, 1.5, eps)
        c = compare_to_benchmark(pri, base)
        gaps.append(-c.deltas["C"])
        vbs.append(c.payoffs["B"])
    assert abs(gaps[-1] - lim.center_gap) < 1e-3
    assert abs(vbs[-1] - lim.v_b) < 1e-2
    assert abs(gaps[-1] - lim.center_gap) <= abs(gaps[0] - lim.center_gap)
