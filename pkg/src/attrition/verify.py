"""Deviation payoffs and best-response checks for computed equilibria.

``U_i(t)`` is the time-0 value to a rational player of the plan "concede at
``t`` unless someone concedes first", split by which event happens first.
Atoms at zero enter as point masses.  Conceding at exactly ``t = 0`` meets the
opponents' time-0 atoms head on; a simultaneous concession inside one
negotiation splits that pie in half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import integrate

from .bilateral import BilateralEq, ag_payoff
from .core import ConcessionProfile, GameParams, Priors
from .sequential import SeqEquilibrium, seq_stage1_value_a
from .trilateral import QuadratureFailure, TriEquilibrium

QUAD_TOL = 1e-10


def _z(prior: float, prof, y: float) -> float:
    return prior / prof.survival(y)


def _quad(f, lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    val, err = integrate.quad(f, lo, hi, epsabs=QUAD_TOL, epsrel=1e-12, limit=200)
    if not err <= 1e-9:
        raise QuadratureFailure(f"abs error {err:.3g} on [{lo}, {hi}]")
    return val


def _cumulative(f, grid: np.ndarray) -> np.ndarray:
    """``int_0^{grid[k]} f`` for every grid point (grid sorted, starting at 0)."""
    out = np.zeros(len(grid))
    for k in range(1, len(grid)):
        out[k] = out[k - 1] + _quad(f, grid[k - 1], grid[k])
    return out


# --- peripheral and center decompositions for the three-player star ---------


def _peripheral_parts(i: str, profiles, priors: Priors, params: GameParams):
    k = "B" if i == "A" else "A"
    a, r = params.alpha, params.r
    pi = params.pi_ac if i == "A" else params.pi_bc
    zp = {"A": priors.z_a, "B": priors.z_b, "C": priors.z_c}
    pc, pk, pii = profiles["C"], profiles[k], profiles[i]

    def v(y):
        return ag_payoff(pi, _z(zp[i], pii, y), _z(zp["C"], pc, y), params)

    at0 = a * pi * pc.atom0 + (1 - pc.atom0) * v(0.0) * pk.atom0

    def flow(y):
        return math.exp(-r * y) * (a * pi * pk.survival(y) * pc.density(y) + pc.survival(y) * v(y) * pk.density(y))

    def end(t):
        return (1 - a) * pi * math.exp(-r * t) * pc.survival(t) * pk.survival(t)

    def at_zero():
        # C's atom meets i's concession (split); k's atom is in another negotiation
        return pc.atom0 * pi / 2 + (1 - pc.atom0) * (1 - a) * pi

    return at0, flow, end, at_zero


def _center_parts(profiles, priors: Priors, params: GameParams):
    a, r = params.alpha, params.r
    pa_, pb_ = params.pi_ac, params.pi_bc
    zp = {"A": priors.z_a, "B": priors.z_b, "C": priors.z_c}
    fa, fb, fc = profiles["A"], profiles["B"], profiles["C"]

    def zc(y):
        return _z(zp["C"], fc, y)

    def v_cb(y):
        return ag_payoff(pb_, zc(y), _z(zp["B"], fb, y), params)

    def v_ca(y):
        return ag_payoff(pa_, zc(y), _z(zp["A"], fa, y), params)

    at0 = (
        a * (pa_ + pb_) * fa.atom0 * fb.atom0
        + fb.survival(0.0) * (a * pa_ + v_cb(0.0)) * fa.atom0
        + fa.survival(0.0) * (a * pb_ + v_ca(0.0)) * fb.atom0
    )

    def flow(y):
        return math.exp(-r * y) * (
            fb.survival(y) * (a * pa_ + v_cb(y)) * fa.density(y) + fa.survival(y) * (a * pb_ + v_ca(y)) * fb.density(y)
        )

    def end(t):
        return (1 - a) * (pa_ + pb_) * math.exp(-r * t) * fa.survival(t) * fb.survival(t)

    def at_zero():
        return sum(pi * (f.atom0 / 2 + (1 - f.atom0) * (1 - a)) for pi, f in ((pa_, fa), (pb_, fb)))

    return at0, flow, end, at_zero


def _evaluate(parts, t: float, breakpoints) -> float:
    at0, flow, end, at_zero = parts
    if t <= 0:
        return at_zero()
    edges = [0.0] + sorted(b for b in breakpoints if 0.0 < b < t) + [t]
    return at0 + sum(_quad(flow, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])) + end(t)


def _breaks(profiles) -> list[float]:
    return sorted({b for p in profiles.values() for b in p.breakpoints})


def deviation_payoff_peripheral(i: str, t: float, profiles, priors: Priors, params: GameParams) -> float:
    """U_i(t) for peripheral ``i`` in ``{"A", "B"}`` of the three-player star."""
    return _evaluate(_peripheral_parts(i, profiles, priors, params), t, _breaks(profiles))


def deviation_payoff_center(t: float, profiles, priors: Priors, params: GameParams) -> float:
    """U_C(t): hold out until ``t``, then concede to both peripherals at once."""
    return _evaluate(_center_parts(profiles, priors, params), t, _breaks(profiles))


def deviation_payoff_bilateral(who: str, t: float, eq: BilateralEq) -> float:
    """U for player ``"i"`` or ``"j"`` of a two-player game."""
    a, r, pi = eq.params.alpha, eq.params.r, eq.pi
    opp = eq.profile_j if who == "i" else eq.profile_i
    if t <= 0:
        return opp.atom0 * pi / 2 + (1 - opp.atom0) * (1 - a) * pi
    flow = _quad(lambda y: math.exp(-r * y) * a * pi * opp.density(y), 0.0, t)
    return a * pi * opp.atom0 + flow + (1 - a) * pi * math.exp(-r * t) * opp.survival(t)


def deviation_payoff_seq_center(t: float, eq: SeqEquilibrium) -> float:
    """C's stage-1 value of conceding at ``t``; conceding also gives up stage 2 at once."""
    p = eq.params
    a, r, pi1, pi2 = p.alpha, p.r, p.pi_ac, p.pi_bc
    pa, pc = eq.profile_a, eq.profile_c
    zb, zc0 = eq.priors.z_b, eq.priors.z_c
    if t <= 0:
        return pa.atom0 * (pi1 / 2 + (1 - a) * pi2) + (1 - pa.atom0) * (1 - a) * (pi1 + pi2)

    def w(y):
        return a * pi1 + ag_payoff(pi2, _z(zc0, pc, y), zb, p)

    flow = 0.0
    edges = [0.0] + [b for b in pa.breakpoints if 0.0 < b < t] + [t]
    for lo, hi in zip(edges[:-1], edges[1:]):
        flow += _quad(lambda y: math.exp(-r * y) * w(y) * pa.density(y), lo, hi)
    return pa.atom0 * w(0.0) + flow + (1 - a) * (pi1 + pi2) * math.exp(-r * t) * pa.survival(t)


# --- best-response check ------------------------------------------------------


@dataclass
class _Player:
    name: str
    prior: float
    profile: object  # anything with atom0, hazard, cdf, breakpoints
    value: Callable[[float], float]
    reported: float | None


@dataclass
class DeviationReport:
    grid: np.ndarray
    u_values: dict[str, np.ndarray]
    reference: dict[str, float]
    support_residual: dict[str, float]
    off_support_slack: dict[str, float]
    gain: dict[str, float]
    tol: float
    verdict: str = field(init=False)

    def __post_init__(self):
        ok = all(self.support_residual[k] <= self.tol and self.off_support_slack[k] >= -self.tol for k in self.u_values)
        self.verdict = "pass" if ok else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    @property
    def max_gain(self) -> float:
        return max(self.gain.values())


def _players(eq) -> tuple[list[_Player], float]:
    if isinstance(eq, TriEquilibrium):
        pr, pm, prof = eq.priors, eq.params, eq.profiles
        z = {"A": pr.z_a, "B": pr.z_b, "C": pr.z_c}
        brk = _breaks(prof)
        out = []
        for i in "AB":
            parts = _peripheral_parts(i, prof, pr, pm)
            out.append(_Player(i, z[i], prof[i], _fast(parts, brk), eq.payoffs.get(i)))
        out.append(_Player("C", z["C"], prof["C"], _fast(_center_parts(prof, pr, pm), brk), eq.payoffs.get("C")))
        return out, eq.terminal
    if isinstance(eq, BilateralEq):
        return [
            _Player("i", eq.z_i, eq.profile_i, lambda t: deviation_payoff_bilateral("i", t, eq), eq.payoff_i),
            _Player("j", eq.z_j, eq.profile_j, lambda t: deviation_payoff_bilateral("j", t, eq), eq.payoff_j),
        ], eq.terminal
    if isinstance(eq, SeqEquilibrium):
        return [
            _Player("A", eq.priors.z_a, eq.profile_a, lambda t: seq_stage1_value_a(eq, t) if t > 0 else
                    (eq.profile_c.atom0 * eq.params.pi_ac / 2 + (1 - eq.profile_c.atom0) * (1 - eq.params.alpha) * eq.params.pi_ac),
                    eq.payoffs.get("A")),
            _Player("C", eq.priors.z_c, eq.profile_c, lambda t: deviation_payoff_seq_center(t, eq), eq.payoffs.get("C")),
        ], eq.terminal
    raise TypeError(f"no deviation model for {type(eq).__name__}")


class _fast:
    """Memoizes the running integral so a sorted grid costs one pass."""

    def __init__(self, parts, breaks):
        self.parts, self.breaks = parts, breaks
        self._t, self._acc = 0.0, 0.0

    def __call__(self, t: float) -> float:
        at0, flow, end, at_zero = self.parts
        if t <= 0:
            return at_zero()
        if t < self._t:
            self._t, self._acc = 0.0, 0.0
        edges = [self._t] + sorted(b for b in self.breaks if self._t < b < t) + [t]
        self._acc += sum(_quad(flow, lo, hi) for lo, hi in zip(edges[:-1], edges[1:]))
        self._t = t
        return at0 + self._acc + end(t)


def check_grid(breakpoints, terminal: float, grid_n: int) -> np.ndarray:
    """Uniform grid on [0, T] plus points hugging every phase boundary."""
    pts = set(np.linspace(0.0, terminal, grid_n).tolist())
    for b in breakpoints:
        for d in (-1e-7, 1e-7):
            if 0.0 < b + d < terminal:
                pts.add(b + d)
    pts.add(1e-12)
    return np.array(sorted(pts))


def _on_support(pl: _Player, t: float, terminal: float) -> bool:
    if t <= 0:
        return pl.profile.atom0 > 0
    return t < terminal and pl.profile.hazard(t) > 0


def _own_expectation(pl: _Player, grid: np.ndarray, u: np.ndarray) -> float:
    """E[U(tau)] under the rational type's own concession distribution."""
    scale = 1.0 - pl.prior
    G = np.array([pl.profile.cdf(t) for t in grid]) / scale
    G[0] = pl.profile.atom0 / scale
    interior = np.sum(0.5 * (u[1:] + u[:-1]) * np.diff(G))
    return G[0] * u[0] + interior


def best_response_check(eq, priors=None, params=None, grid_n: int = 2000, tol: float = 1e-4) -> DeviationReport:
    """Indifference on the support and no profitable deviation off it, per player.

    The reference value is the reported equilibrium payoff when the object
    carries one, otherwise the player's expected deviation value under its own
    strategy (as for a perturbed profile).
    """
    if grid_n < 100:
        raise ValueError("grid_n must be at least 100")
    if priors is not None or params is not None:
        eq = replace(eq, **({"priors": priors} if priors is not None else {}),
                     **({"params": params} if params is not None else {}))
    players, T = _players(eq)
    brk = sorted({b for pl in players for b in pl.profile.breakpoints})
    grid = check_grid(brk, T, grid_n)
    u_vals, ref, sup_res, slack, gain = {}, {}, {}, {}, {}
    for pl in players:
        u = np.array([pl.value(float(t)) for t in grid])
        v = pl.reported if pl.reported is not None else _own_expectation(pl, grid, u)
        on = np.array([_on_support(pl, float(t), T) for t in grid])
        u_vals[pl.name] = u
        ref[pl.name] = v
        sup_res[pl.name] = float(np.max(np.abs(u[on] - v))) if on.any() else 0.0
        slack[pl.name] = float(np.min(v - u[~on])) if (~on).any() else 0.0
        gain[pl.name] = float(np.max(u) - v)
    return DeviationReport(grid, u_vals, ref, sup_res, slack, gain, tol)


def perturb_hazard(eq: TriEquilibrium, player: str, factor: float, segment: int = 0) -> TriEquilibrium:
    """Scale one hazard segment of ``player``; reported payoffs are dropped."""
    prof = eq.profiles[player]
    segs = list(prof.segments)
    s = segs[segment]
    segs[segment] = replace(s, rate=s.rate * factor)
    new = dict(eq.profiles)
    new[player] = ConcessionProfile(prof.atom0, tuple(segs), prof.terminal)
    return eq.replace(profiles=new, payoffs={})
