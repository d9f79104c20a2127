"""Unique equilibrium of the three-player star (center C, peripherals A and B).

The solver accepts priors in any order.  Internally the more reputable
peripheral is called the *dominant* one (``D``) and the other ``O``; outputs
are reported under the caller's labels.

When ``D`` is strictly the most reputable player it stays out while ``O`` and
``C`` concede at ``k*lam`` and ``lam`` respectively, where
``k = (pi_D + pi_O) / pi_O``.  A single time-0 atom by ``O`` or ``C`` makes
both posteriors reach ``z_D(0)`` together at the activation time; after that
all three concede at ``lam`` until the common terminal time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from scipy import integrate

from .bilateral import ag_atom, ag_payoff
from .core import (
    TIE_TOL,
    ConcessionProfile,
    GameParams,
    OutOfRange,
    PosteriorPath,
    Priors,
    validate,
)


class NotDominantPeripheral(ValueError):
    pass


class QuadratureFailure(RuntimeError):
    pass


class CaseTag(str, enum.Enum):
    CenterStrongest = "CenterStrongest"
    PeripheralsTieAboveCenter = "PeripheralsTieAboveCenter"
    AllEqual = "AllEqual"
    DominantA_BweakestOrTie = "DominantA_BweakestOrTie"
    DominantA_CatomBranch = "DominantA_CatomBranch"
    DominantA_BatomBranch = "DominantA_BatomBranch"
    DominantA_NoAtom = "DominantA_NoAtom"

    @property
    def dominant(self) -> bool:
        return self.name.startswith("Dominant")


@dataclass(frozen=True)
class _Relabel:
    """Priors and pies with the stronger peripheral first."""

    d: str  # caller label of the dominant-or-equal peripheral
    o: str
    z_d: float
    z_o: float
    z_c: float
    pi_d: float
    pi_o: float

    @property
    def k(self) -> float:
        return (self.pi_d + self.pi_o) / self.pi_o


def _relabel(priors: Priors, params: GameParams) -> _Relabel:
    if priors.z_b > priors.z_a + TIE_TOL:
        return _Relabel("B", "A", priors.z_b, priors.z_a, priors.z_c, params.pi_bc, params.pi_ac)
    return _Relabel("A", "B", priors.z_a, priors.z_b, priors.z_c, params.pi_ac, params.pi_bc)


def _tie(x: float, y: float) -> bool:
    return abs(x - y) <= TIE_TOL


def _catch_up(rl: _Relabel, lam: float) -> tuple[float, float]:
    t_o = math.log(rl.z_d / rl.z_o) / (rl.k * lam)
    t_c = math.log(rl.z_d / rl.z_c) / lam
    return t_o, t_c


def catch_up_times(priors: Priors, params: GameParams) -> tuple[float, float]:
    """``(t_tilde_B, t_tilde_C)``: when the non-dominant peripheral and the
    center would reach the dominant prior under initial-phase hazards, absent atoms.

    "B" here is whichever peripheral is not dominant.
    """
    validate(params, priors)
    rl = _relabel(priors, params)
    if not (rl.z_d > rl.z_o + TIE_TOL and rl.z_d > rl.z_c + TIE_TOL):
        raise NotDominantPeripheral(f"no strictly dominant peripheral in {priors}")
    return _catch_up(rl, params.lam_ag)


def _classify(rl: _Relabel, lam: float) -> CaseTag:
    if _tie(rl.z_d, rl.z_o) and _tie(rl.z_o, rl.z_c):
        return CaseTag.AllEqual
    if rl.z_c >= rl.z_d or _tie(rl.z_c, rl.z_d):
        return CaseTag.CenterStrongest
    if _tie(rl.z_d, rl.z_o):
        return CaseTag.PeripheralsTieAboveCenter
    if _tie(rl.z_o, rl.z_c):
        return CaseTag.DominantA_BweakestOrTie
    if rl.z_o > rl.z_c:
        return CaseTag.DominantA_CatomBranch
    t_o, t_c = _catch_up(rl, lam)
    if _tie(t_o, t_c):
        return CaseTag.DominantA_NoAtom
    return CaseTag.DominantA_CatomBranch if t_c > t_o else CaseTag.DominantA_BatomBranch


def classify_case(priors: Priors, params: GameParams) -> CaseTag:
    validate(params, priors)
    return _classify(_relabel(priors, params), params.lam_ag)


@dataclass(frozen=True)
class TriEquilibrium:
    case: CaseTag
    priors: Priors
    params: GameParams
    profiles: dict[str, ConcessionProfile]
    t_star: float
    terminal: float
    dominant: str | None
    t_tilde: tuple[float, float] | None
    payoffs: dict[str, float] = field(default_factory=dict)

    @property
    def paths(self) -> dict[str, PosteriorPath]:
        pri = {"A": self.priors.z_a, "B": self.priors.z_b, "C": self.priors.z_c}
        return {k: PosteriorPath(pri[k], self.profiles[k]) for k in "ABC"}

    def posterior(self, player: str, t: float) -> float:
        return self.paths[player].at(t)

    @property
    def atoms(self) -> dict[str, float]:
        return {k: p.atom0 for k, p in self.profiles.items()}

    @property
    def other(self) -> str | None:
        if self.dominant is None:
            return None
        return "B" if self.dominant == "A" else "A"

    def pie(self, player: str) -> float:
        return self.params.pi_ac if player == "A" else self.params.pi_bc

    def replace(self, **kw) -> "TriEquilibrium":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return TriEquilibrium(**d)


def solve_trilateral(priors: Priors, params: GameParams, payoff_method: str = "quad") -> TriEquilibrium:
    validate(params, priors)
    lam = params.lam_ag
    rl = _relabel(priors, params)
    case = _classify(rl, lam)
    atoms = {rl.d: 0.0, rl.o: 0.0, "C": 0.0}
    t_tilde = None
    dominant = None

    if case is CaseTag.CenterStrongest:
        atoms[rl.d] = ag_atom(rl.z_c, rl.z_d)
        atoms[rl.o] = ag_atom(rl.z_c, rl.z_o)
        t_star, z_top = 0.0, rl.z_c
    elif case is CaseTag.PeripheralsTieAboveCenter:
        atoms["C"] = ag_atom(rl.z_d, rl.z_c)
        t_star, z_top = 0.0, rl.z_d
    elif case is CaseTag.AllEqual:
        t_star, z_top = 0.0, max(rl.z_d, rl.z_o, rl.z_c)
    else:
        dominant = rl.d
        t_o, t_c = _catch_up(rl, lam)
        t_tilde = (t_o, t_c)
        z_top = rl.z_d
        if case in (CaseTag.DominantA_BweakestOrTie, CaseTag.DominantA_CatomBranch):
            zc_plus = rl.z_d ** ((rl.k - 1.0) / rl.k) * rl.z_o ** (1.0 / rl.k)
            atoms["C"] = max(1.0 - rl.z_c / zc_plus, 0.0)
            t_star = t_o
        elif case is CaseTag.DominantA_BatomBranch:
            atoms[rl.o] = max(1.0 - rl.z_o * rl.z_d ** (rl.k - 1.0) / rl.z_c ** rl.k, 0.0)
            t_star = t_c
        else:
            t_star = min(t_o, t_c)

    T = t_star + math.log(1.0 / z_top) / lam
    if dominant is None:
        profiles = {p: ConcessionProfile.from_rates(atoms[p], [0.0, T], [lam]) for p in "ABC"}
    else:
        brk = [0.0, t_star, T]
        rates = {rl.d: [0.0, lam], rl.o: [rl.k * lam, lam], "C": [lam, lam]}
        profiles = {p: ConcessionProfile.from_rates(atoms[p], brk, rates[p]) for p in "ABC"}
    eq = TriEquilibrium(case, priors, params, profiles, t_star, T, dominant, t_tilde)
    return eq.replace(payoffs=payoffs_analytic(eq, method=payoff_method))


def _dominant_payoff_closed(eq: TriEquilibrium) -> float:
    """Dominant peripheral's value of conceding at activation, integrated by hand."""
    p = eq.params
    a, r, lam = p.alpha, p.r, p.lam_ag
    d, o = eq.dominant, eq.other
    pi_d = eq.pie(d)
    z_d = eq.paths[d].prior
    a_c, a_o = eq.profiles["C"].atom0, eq.profiles[o].atom0
    k_lam = eq.profiles[o].segments[0].rate if eq.t_star > 0 else lam
    zc_plus = eq.paths["C"].post_atom
    tau = eq.t_star
    K = r + lam + k_lam
    at_zero = a * pi_d * a_c + (1 - a_c) * a_o * ag_payoff(pi_d, z_d, zc_plus, p)
    # continuation after O concedes at y: pi_d * (a - (2a-1) z_C(y)/z_d)
    flow = pi_d * (
        (a * lam + k_lam * a) * (-math.expm1(-K * tau)) / K
        - k_lam * (2 * a - 1) * (zc_plus / z_d) * (-math.expm1(-(K - lam) * tau)) / (K - lam)
    )
    end = (1 - a) * pi_d * math.exp(-K * tau)
    return at_zero + (1 - a_c) * (1 - a_o) * (flow + end)


def _dominant_payoff_quad(eq: TriEquilibrium, tol: float = 1e-9) -> float:
    """Same quantity by adaptive quadrature over the initial phase."""
    p = eq.params
    a, r = p.alpha, p.r
    d, o = eq.dominant, eq.other
    pi_d = eq.pie(d)
    prof_c, prof_o = eq.profiles["C"], eq.profiles[o]
    path_d, path_c = eq.paths[d], eq.paths["C"]
    tau = eq.t_star

    def integrand(y):
        sc, so = prof_c.survival(y), prof_o.survival(y)
        v = ag_payoff(pi_d, path_d.at(y), path_c.at(y), p)
        return math.exp(-r * y) * (a * pi_d * so * sc * prof_c.hazard(y) + sc * v * so * prof_o.hazard(y))

    total = a * pi_d * prof_c.atom0 + prof_c.survival(0.0) * ag_payoff(pi_d, path_d.at(0.0), path_c.at(0.0), p) * prof_o.atom0
    if tau > 0:
        val, err = integrate.quad(integrand, 0.0, tau, epsabs=tol / 10, epsrel=1e-13, limit=200)
        if not err <= tol:
            raise QuadratureFailure(f"abs error {err:.3g} exceeds {tol:g}")
        total += val
    total += (1 - a) * pi_d * math.exp(-r * tau) * prof_c.survival(tau) * prof_o.survival(tau)
    return total


def payoffs_analytic(eq: TriEquilibrium, priors: Priors | None = None, params: GameParams | None = None,
                     method: str = "quad") -> dict[str, float]:
    """Time-0 payoffs of the rational types.

    ``method`` selects how the dominant peripheral's payoff is evaluated:
    ``"quad"`` (adaptive quadrature) or ``"closed"`` (hand-integrated exponentials).
    """
    priors = priors or eq.priors
    params = params or eq.params
    a = params.alpha
    pies = {"A": params.pi_ac, "B": params.pi_bc}
    z = {"A": priors.z_a, "B": priors.z_b, "C": priors.z_c}
    if eq.dominant is None:
        out = {i: ag_payoff(pies[i], z[i], z["C"], params) for i in "AB"}
        out["C"] = ag_payoff(pies["A"], z["C"], z["A"], params) + ag_payoff(pies["B"], z["C"], z["B"], params)
        return out
    d, o = eq.dominant, eq.other
    a_c, a_o = eq.profiles["C"].atom0, eq.profiles[o].atom0
    out = {
        o: pies[o] * ((1 - a) + (2 * a - 1) * a_c),
        "C": (1 - a) * (pies["A"] + pies["B"]) + (2 * a - 1) * pies[o] * a_o,
    }
    if method == "quad":
        out[d] = _dominant_payoff_quad(eq)
    elif method == "closed":
        out[d] = _dominant_payoff_closed(eq)
    else:
        raise ValueError(f"unknown payoff method {method!r}")
    return {k: out[k] for k in "ABC"}


def benchmark_payoffs(priors: Priors, params: GameParams) -> dict[str, float]:
    """Payoffs from two independent bilateral negotiations."""
    z = priors
    return {
        "A": ag_payoff(params.pi_ac, z.z_a, z.z_c, params),
        "B": ag_payoff(params.pi_bc, z.z_b, z.z_c, params),
        "C": ag_payoff(params.pi_ac, z.z_c, z.z_a, params) + ag_payoff(params.pi_bc, z.z_c, z.z_b, params),
    }


@dataclass(frozen=True)
class Comparison:
    region: int
    payoffs: dict[str, float]
    benchmark: dict[str, float]
    deltas: dict[str, float]
    predicted: dict[str, str]

    def holds(self, zero_tol: float = 1e-9) -> bool:
        for k, sign in self.predicted.items():
            d = self.deltas[k]
            ok = {
                "0": abs(d) <= zero_tol,
                "-": d < -zero_tol,
                "+": d > zero_tol,
                ">=0": d >= -zero_tol,
            }[sign]
            if not ok:
                return False
        return True


def compare_to_benchmark(priors: Priors, params: GameParams, payoff_method: str = "quad") -> Comparison:
    eq = solve_trilateral(priors, params, payoff_method=payoff_method)
    bench = benchmark_payoffs(priors, params)
    deltas = {k: eq.payoffs[k] - bench[k] for k in "ABC"}
    rl = _relabel(priors, params)
    if not (rl.z_d > max(rl.z_o, rl.z_c) + TIE_TOL):
        region, signs = 1, {rl.d: "0", rl.o: "0", "C": "0"}
    elif rl.z_o >= rl.z_c or _tie(rl.z_o, rl.z_c):
        region, signs = 2, {rl.d: "-", rl.o: "+", "C": "0"}
    else:
        region, signs = 3, {rl.d: "-", rl.o: ">=0", "C": "-"}
    return Comparison(region, eq.payoffs, bench, deltas, {k: signs[k] for k in "ABC"})


@dataclass(frozen=True)
class VanishingLimit:
    kappa_a: float
    kappa_b: float
    center_gap: float
    v_b: float
    v_b_benchmark: float
    b_strictly_better: bool


def vanishing_limit(kappa_a: float, kappa_b: float, params: GameParams) -> VanishingLimit:
    """Limits along priors ``(kappa_a*kappa_b*eps, eps, kappa_b*eps)`` with unit pies."""
    if not kappa_a > 1:
        raise OutOfRange("kappa_a", kappa_a, "kappa > 1")
    if not kappa_b > 1:
        raise OutOfRange("kappa_b", kappa_b, "kappa > 1")
    if params.pi_ac != 1.0 or params.pi_bc != 1.0:
        raise OutOfRange("pi_ac", params.pi_ac, "pi_ac = pi_bc = 1")
    a = params.alpha
    gap = (2 * a - 1) * (min(kappa_a, kappa_b) - 1) / kappa_b
    if kappa_a > kappa_b:
        v_b = a - (2 * a - 1) * math.sqrt(kappa_b / kappa_a)
    else:
        v_b = 1 - a
    return VanishingLimit(kappa_a, kappa_b, gap, v_b, 1 - a, kappa_a > kappa_b)


def vanishing_priors(kappa_a: float, kappa_b: float, eps: float) -> Priors:
    return Priors(kappa_a * kappa_b * eps, eps, kappa_b * eps)
