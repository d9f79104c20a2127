"""Sequential negotiations: A and C bargain first, then B and C.

C concedes at the benchmark hazard throughout stage 1 while A concedes faster,
because a stage-1 concession by A hands C a stage-2 game with her reputation
intact.  Stage-2 pie ``pi_bc`` enters only through ``rho = pi_ac / pi_bc``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import integrate

from .bilateral import ag_atom, ag_payoff, solve_bilateral
from .core import TIE_TOL, ConcessionProfile, GameParams, PosteriorPath, Priors, validate
from .trilateral import QuadratureFailure


def seq_threshold(priors: Priors, params: GameParams) -> tuple[float, float]:
    """``(z_bar_A, z_tilde_A)``: the prior of A at which no time-0 atom is needed,
    and the prior of A above which C's post-atom reputation stays above ``z_B(0)``."""
    validate(params, priors)
    rho = params.pi_ac / params.pi_bc
    zb, zc = priors.z_b, priors.z_c
    if zc >= zb:
        z_bar = ((rho + 1) * zc - zb) / (rho + 1 - zb)
    else:
        z_bar = rho * zb / (rho + 1 - zb) * (zc / zb) ** ((rho + 1) / rho)
    z_tilde = rho * zb / (rho + 1 - zb)
    return z_bar, z_tilde


@dataclass(frozen=True)
class SeqAProfile:
    """A's stage-1 concession cdf, driven by the closed-form reputation path."""

    atom0: float
    z_a0: float
    z_a_plus: float
    z_c_plus: float
    z_b0: float
    rho: float
    lam: float
    terminal: float
    crossing: float | None

    def posterior(self, t: float) -> float:
        t = min(max(t, 0.0), self.terminal)
        zc = self.z_c_plus * math.exp(self.lam * t)
        r1, zb = self.rho + 1, self.z_b0
        if self.crossing is None:
            return self.z_a_plus * (r1 * zc - zb) / (r1 * self.z_c_plus - zb)
        if t <= self.crossing:
            return self.z_a_plus * math.exp(self.lam * r1 / self.rho * t)
        z_cross = self.z_a_plus * (zb / self.z_c_plus) ** (r1 / self.rho)
        return z_cross * (r1 * zc - zb) / (self.rho * zb)

    def hazard(self, t: float) -> float:
        if t < 0 or t >= self.terminal:
            return 0.0
        zc = self.z_c_plus * math.exp(self.lam * t)
        return self.lam * (self.rho + 1) / (self.rho + ag_atom(zc, self.z_b0))

    def survival(self, t: float) -> float:
        if t < 0:
            return 1.0
        return self.z_a0 / self.posterior(t)

    def cdf(self, t: float) -> float:
        return 1.0 - self.survival(t)

    def density(self, t: float) -> float:
        return self.hazard(t) * self.survival(t)

    @property
    def breakpoints(self) -> list[float]:
        pts = [0.0, self.terminal]
        if self.crossing is not None:
            pts.insert(1, self.crossing)
        return pts

    def at(self, t: float) -> float:
        return self.posterior(t)

    @property
    def prior(self) -> float:
        return self.z_a0


@dataclass(frozen=True)
class SeqEquilibrium:
    priors: Priors
    params: GameParams
    atom_holder: str | None
    atom_size: float
    z_a_plus: float
    z_c_plus: float
    z_bar_a: float
    z_tilde_a: float
    terminal: float
    crossing: float | None
    profile_a: SeqAProfile
    profile_c: ConcessionProfile
    payoffs: dict[str, float] = field(default_factory=dict)

    @property
    def hazard_c(self) -> float:
        return self.params.lam_ag

    def hazard_a(self, t: float) -> float:
        return self.profile_a.hazard(t)

    @property
    def profiles(self) -> dict:
        return {"A": self.profile_a, "C": self.profile_c}

    def stage2(self, tau: float, conceder: str):
        """Bilateral B-C game that starts when stage 1 ends at ``tau``."""
        zc = 0.0 if conceder == "C" else seq_posterior_paths(self)[1].at(tau)
        if zc == 0.0:
            return None  # revealed-rational C concedes at once
        p2 = self.params.with_pies(self.params.pi_bc, self.params.pi_bc)
        return solve_bilateral(self.params.pi_bc, self.priors.z_b, zc, p2)


def solve_sequential(priors: Priors, params: GameParams) -> SeqEquilibrium:
    validate(params, priors)
    lam = params.lam_ag
    rho = params.pi_ac / params.pi_bc
    za, zb, zc = priors.as_tuple()
    z_bar, z_tilde = seq_threshold(priors, params)

    if abs(za - z_bar) <= TIE_TOL:
        holder, za_plus, zc_plus = None, za, zc
    elif za < z_bar:
        holder, za_plus, zc_plus = "A", z_bar, zc
    else:
        holder, za_plus = "C", za
        if za >= z_tilde:
            zc_plus = (zb + za * (rho + 1 - zb)) / (rho + 1)
        else:
            zc_plus = zb * (za * (rho + 1 - zb) / (rho * zb)) ** (rho / (rho + 1))
    a_a = 1 - za / za_plus
    a_c = 1 - zc / zc_plus
    T = -math.log(zc_plus) / lam
    crossing = math.log(zb / zc_plus) / lam if zc_plus < zb else None

    prof_a = SeqAProfile(a_a, za, za_plus, zc_plus, zb, rho, lam, T, crossing)
    prof_c = ConcessionProfile.from_rates(a_c, [0.0, T], [lam])
    eq = SeqEquilibrium(priors, params, holder, max(a_a, a_c), za_plus, zc_plus, z_bar, z_tilde,
                        T, crossing, prof_a, prof_c)
    return SeqEquilibrium(**{**eq.__dict__, "payoffs": seq_payoffs(eq)})


def seq_posterior_paths(eq: SeqEquilibrium) -> tuple[SeqAProfile, PosteriorPath]:
    """(A's path, C's path); A's path object evaluates ``z_A(t)`` via ``.at``."""
    return eq.profile_a, PosteriorPath(eq.priors.z_c, eq.profile_c)


def _quad(f, a, b, points, tol=1e-9):
    pts = [p for p in points if a < p < b]
    edges = [a] + sorted(pts) + [b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, lo, hi, epsabs=tol / 10, epsrel=1e-12, limit=200)
        if not err <= tol:
            raise QuadratureFailure(f"abs error {err:.3g} exceeds {tol:g}")
        total += val
    return total


def seq_stage1_value_a(eq: SeqEquilibrium, t: float) -> float:
    """A's time-0 value from conceding at ``t`` unless C concedes first."""
    p = eq.params
    a, r = p.alpha, p.r
    pc, pa = eq.profile_c, eq.profile_a
    atom_term = a * p.pi_ac * pc.atom0 if t > 0 else 0.0
    flow = _quad(lambda y: math.exp(-r * y) * a * p.pi_ac * pc.density(y), 0.0, t, pa.breakpoints) if t > 0 else 0.0
    return atom_term + flow + (1 - a) * p.pi_ac * math.exp(-r * t) * pc.survival(t)


def seq_payoffs(eq: SeqEquilibrium) -> dict[str, float]:
    """Time-0 payoffs of the rational types, stage 2 included.

    A's payoff is U_A at an interior support point, by quadrature.  C's payoff
    follows from her indifference at 0+ (or at 0 when she holds the atom).
    """
    p = eq.params
    a, r, pi1, pi2 = p.alpha, p.r, p.pi_ac, p.pi_bc
    zb, zc = eq.priors.z_b, eq.priors.z_c
    pa, pc = eq.profile_a, eq.profile_c
    v_a = seq_stage1_value_a(eq, 0.5 * eq.terminal)
    if eq.atom_holder == "C":
        v_c = (1 - a) * (pi1 + pi2)
    else:
        v_c = pa.atom0 * (a * pi1 + ag_payoff(pi2, zc, zb, p)) + (1 - pa.atom0) * (1 - a) * (pi1 + pi2)

    # B: stage-2 value after C concedes (alpha*pi2 at once) or after A concedes
    def flow(y):
        zc_y = zc / pc.survival(y)
        return math.exp(-r * y) * (
            pa.survival(y) * a * pi2 * pc.density(y) + pc.survival(y) * ag_payoff(pi2, zb, zc_y, p) * pa.density(y)
        )

    v_b = pc.atom0 * a * pi2 + pa.atom0 * pc.survival(0.0) * ag_payoff(pi2, zb, zc / pc.survival(0.0), p)
    v_b += _quad(flow, 0.0, eq.terminal, pa.breakpoints)
    return {"A": v_a, "B": v_b, "C": v_c}


def seq_benchmark(priors: Priors, params: GameParams) -> dict[str, float]:
    z = priors
    return {
        "A": ag_payoff(params.pi_ac, z.z_a, z.z_c, params),
        "B": ag_payoff(params.pi_bc, z.z_b, z.z_c, params),
        "C": ag_payoff(params.pi_ac, z.z_c, z.z_a, params) + ag_payoff(params.pi_bc, z.z_c, z.z_b, params),
    }
