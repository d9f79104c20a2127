"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are also collected and repeated in the terminal summary.
"""

import time

import numpy as np

from attrition import (
    GameParams,
    Priors,
    best_response_check,
    compare_to_benchmark,
    perturb_hazard,
    simulate,
    solve_bilateral,
    solve_partial_obs,
    solve_sequential,
    solve_star4,
    solve_trilateral,
    star4_benchmark,
    vanishing_limit,
)
from attrition.sequential import seq_posterior_paths
from attrition.trilateral import vanishing_priors

from .conftest import ACCEPTANCE

BASE = GameParams(1.0, 0.7)
UNEVEN = GameParams(1.0, 0.7, 2.0, 1.0)
REFERENCE = {
    (0.5, 0.2, 0.1): ("C", 0.3684, 0.4072, 1.3314),
    (0.5, 0.1, 0.2): ("C", 0.2925, 0.7153, 1.6395),
    (0.5, 0.1, 0.4): ("B", 0.256, 0.2975, 1.2217),
    (0.6, 0.1, 0.2): ("C", 0.330, 0.796, 1.477),
}


def record(k: int, checks: list[tuple[str, bool, str]], started: float) -> None:
    bad = [f"{name}: {detail}" for name, ok, detail in checks if not ok]
    ok = not bad
    detail = f"({time.perf_counter() - started:.1f}s) " + ("; ".join(bad) if bad else f"{len(checks)} checks")
    ACCEPTANCE[k] = (ok, detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def near(name, got, want, tol):
    return name, abs(got - want) <= tol, f"got {got:.6g}, want {want:.6g} +- {tol:g}"


def test_criterion_1_bilateral_benchmark():
    t0 = time.perf_counter()
    eq = solve_bilateral(2.0, 0.6, 0.2, BASE)
    record(1, [
        ("lam_ag", BASE.lam_ag == 0.75, f"got {BASE.lam_ag!r}"),
        near("atom", eq.atom_weak, 2 / 3, 1e-12),
        near("T", eq.terminal, 0.681, 1e-3),
    ], t0)


def test_criterion_2_trilateral_reference_panels():
    t0 = time.perf_counter()
    checks = []
    for z, (who, jump, t_star, T) in REFERENCE.items():
        eq = solve_trilateral(Priors(*z), UNEVEN)
        checks += [near(f"{z} jump", eq.paths[who].post_atom, jump, 5e-4),
                   near(f"{z} t*", eq.t_star, t_star, 5e-4),
                   near(f"{z} T", eq.terminal, T, 5e-4)]
    eq = solve_trilateral(Priors(0.3, 0.1, 0.5), UNEVEN)
    checks.append(near("(0.3, 0.1, 0.5) T", eq.terminal, 0.9242, 5e-4))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime", elapsed < 1.0, f"{elapsed:.2f}s"))
    record(2, checks, t0)


def sample_region_priors(rng, per_region=1000):
    got = {1: [], 2: [], 3: []}
    while min(len(v) for v in got.values()) < per_region:
        z = Priors(*rng.uniform(0.02, 0.98, 3))
        c = compare_to_benchmark(z, UNEVEN)
        if len(got[c.region]) < per_region:
            got[c.region].append(c)
    return got


def test_criterion_3_payoff_comparison():
    t0 = time.perf_counter()
    checks = []
    regions = sample_region_priors(np.random.default_rng(2024))
    for region, comps in regions.items():
        failures = [c for c in comps if not c.holds()]
        checks.append((f"region {region} signs", not failures, f"{len(failures)} of {len(comps)} violate"))
    worst = max(abs(d) for c in regions[1] for d in c.deltas.values())
    checks.append(("region 1 deltas", worst <= 1e-9, f"max |delta| {worst:.2g}"))
    eq = solve_trilateral(Priors(0.6, 0.1, 0.2), UNEVEN)
    out = simulate(eq, 1_000_000, seed=42)
    zA = (out.est_payoffs["A"] - eq.payoffs["A"]) / out.std_err["A"]
    checks.append(("quadrature v_A vs Monte Carlo", abs(zA) <= 3, f"z-score {zA:.2f}"))
    record(3, checks, t0)


def test_criterion_4_vanishing_limit():
    t0 = time.perf_counter()
    lim = vanishing_limit(2.0, 1.5, BASE)
    gaps, v_b = {}, {}
    for eps in (1e-2, 1e-3, 1e-4):
        c = compare_to_benchmark(vanishing_priors(2.0, 1.5, eps), BASE)
        gaps[eps] = -c.deltas["C"]
        v_b[eps] = c.payoffs["B"]
    checks = [near("formula", lim.center_gap, 0.4 * 0.5 / 1.5, 1e-12)]
    checks += [near(f"gap at {eps:g}", gaps[eps], 0.13333, 1e-3) for eps in gaps]
    checks.append(near("v_B at 1e-4", v_b[1e-4], lim.v_b, 1e-3))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime", elapsed < 1.0, f"{elapsed:.2f}s"))
    record(4, checks, t0)


def test_criterion_5_sequential():
    t0 = time.perf_counter()
    eq = solve_sequential(Priors(0.4, 0.4, 0.4), BASE)
    pa, _ = seq_posterior_paths(eq)
    record(5, [
        ("holder", eq.atom_holder == "C", str(eq.atom_holder)),
        near("F_C(0)", eq.profile_c.atom0, 0.230769, 1e-6),
        near("F_C(0) exact", eq.profile_c.atom0, 3 / 13, 1e-9),
        near("z_C(0+)", eq.z_c_plus, 0.52, 1e-12),
        near("z_A(T)", pa.at(eq.terminal), 1.0, 1e-9),
    ], t0)


def test_criterion_6_partial_observability():
    t0 = time.perf_counter()
    eq = solve_partial_obs(0.3, BASE)
    ts = np.linspace(0.0, eq.terminal, 1000, endpoint=False)
    res = max(abs(eq.indifference_residual(float(t))) for t in ts)
    elapsed = time.perf_counter() - t0
    record(6, [
        ("h(0) in (1,2)", 1 < eq.h0 < 2, f"{eq.h0:.9g}"),
        ("F_C(0) in (0,1)", 0 < eq.atom_c < 1, f"{eq.atom_c:.9g}"),
        ("residual", res <= 1e-6, f"{res:.2g}"),
        ("v_C", eq.payoffs["C"] == 2 * (1 - 0.7), f"{eq.payoffs['C']!r}"),
        ("step sizes", eq.step_agreement <= 1e-8, f"{eq.step_agreement:.2g}"),
        ("runtime", elapsed < 1.0, f"{elapsed:.2f}s"),
    ], t0)


def test_criterion_7_four_player_star():
    t0 = time.perf_counter()
    z = (0.5, 0.4, 0.2, 0.23)
    eq = solve_star4(z, BASE)
    bench = star4_benchmark(z, BASE)
    t2, t1, T = eq.phase_times
    checks = []
    for name, want in zip(("1", "2", "3", "C"), (0.397, 0.449, 0.432, 0.900)):
        checks.append(near(f"v_{name}", eq.payoffs[name], want, 0.02))
    for name, want in zip(("1", "2", "3", "C"), (0.516, 0.470, 0.300, 0.952)):
        checks.append(near(f"benchmark {name}", bench[name], want, 1e-3))
    checks += [near("F_C(0)", eq.atoms["C"], 0.33, 0.01), near("t_2", t2, 0.308, 0.01),
               near("t_1", t1, 0.506, 0.01), near("T", T, 1.431, 0.01)]
    record(7, checks, t0)


def closed_form_equilibria():
    eqs = {"bilateral": solve_bilateral(2.0, 0.6, 0.2, BASE)}
    for z in list(REFERENCE) + [(0.3, 0.1, 0.5)]:
        eqs[f"trilateral {z}"] = solve_trilateral(Priors(*z), UNEVEN)
    for eps in (1e-2, 1e-3, 1e-4):
        eqs[f"vanishing {eps}"] = solve_trilateral(vanishing_priors(2.0, 1.5, eps), BASE)
    eqs["sequential"] = solve_sequential(Priors(0.4, 0.4, 0.4), BASE)
    return eqs


def test_criterion_8_best_response():
    t0 = time.perf_counter()
    checks = []
    for name, eq in closed_form_equilibria().items():
        rep = best_response_check(eq, grid_n=2000, tol=1e-4)
        worst = max(rep.support_residual.values())
        checks.append((name, rep.passed, f"support residual {worst:.2g}"))
    bad = perturb_hazard(solve_trilateral(Priors(0.6, 0.1, 0.2), UNEVEN), "B", 1.05)
    rep = best_response_check(bad, grid_n=2000, tol=1e-4)
    checks.append(("perturbed fails", not rep.passed and rep.max_gain > 0, f"gain {rep.max_gain:.3g}"))
    record(8, checks, t0)


def test_criterion_9_simulator():
    t0 = time.perf_counter()
    eq = solve_trilateral(Priors(0.6, 0.1, 0.2), UNEVEN)
    out = simulate(eq, 1_000_000, seed=42)
    checks = []
    for k in "ABC":
        zs = (out.est_payoffs[k] - eq.payoffs[k]) / out.std_err[k]
        checks.append((f"v_{k}", abs(zs) <= 3, f"z-score {zs:.2f}"))
    checks.append(("joint-closure trace", out.joint_close_rate == 1.0, f"rate {out.joint_close_rate}"))
    elapsed = time.perf_counter() - t0
    checks.append(("runtime", elapsed <= 60, f"{elapsed:.1f}s"))
    record(9, checks, t0)
