"""Four-player star: center C against peripherals 1, 2, 3 over unit pies.

When peripheral j concedes, the rest of the game is the three-player star
among the other two and C, so continuation values come from the trilateral
solver.  Hazards then solve a linear indifference system at every instant:

    peripheral i active:  lam_C + sum_{j != i} lam_j g_hat_i^(j) = lam
    center:               sum_j lam_j Gamma_j = 3 lam

The system is integrated backward in time-to-go ``s = T - t`` from the
terminal state where every posterior equals one.  A peripheral drops out
(going backward) when its posterior reaches its prior.  Time zero is the
point where no peripheral is left active, or where the center's posterior
reaches its prior; whoever is still above their prior then holds a time-0
atom.  Active peripherals with equal posteriors are treated as one group with
a common hazard, which is what keeps the system nonsingular when the
reputational bonuses vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bilateral import ag_payoff
from .core import GameParams, OutOfRange, Priors, validate
from .trilateral import solve_trilateral

PERIPHERALS = ("1", "2", "3")
PLAYERS = PERIPHERALS + ("C",)
SLACK_BAND = 1e-8
GROUP_TOL = 1e-9
Z_CAP = 1.0 - 1e-13  # trilateral solver needs priors strictly below one


class ShootingDivergence(RuntimeError):
    """The backward construction could not be matched to the priors."""


@dataclass(frozen=True)
class Star4State:
    t: float
    z: np.ndarray  # (z_1, z_2, z_3, z_C)
    active: tuple[bool, bool, bool, bool]


@dataclass(frozen=True)
class Continuation:
    conceder: int
    values: dict[int, float]
    w_c: float
    g_hat: dict[int, float]
    gamma: float


def continuation_values(z, conceder: int, params: GameParams) -> Continuation:
    """Three-player continuation after peripheral ``conceder`` (0, 1 or 2) gives in."""
    a = params.alpha
    i, k = [p for p in range(3) if p != conceder]
    zi, zk, zc = (min(float(z[p]), Z_CAP) for p in (i, k, 3))
    if zi == zk == zc:
        vi = vk = 1 - a
        wc = 2 * (1 - a)
    else:
        pay = solve_trilateral(Priors(zi, zk, zc), params.with_pies(1.0, 1.0), payoff_method="closed").payoffs
        vi, vk, wc = pay["A"], pay["B"], pay["C"]
    d = 2 * a - 1
    return Continuation(
        conceder,
        {i: vi, k: vk},
        wc,
        {i: (vi - (1 - a)) / d, k: (vk - (1 - a)) / d},
        (a + wc - 3 * (1 - a)) / d,
    )


def _groups(z, active) -> list[list[int]]:
    out: list[list[int]] = []
    for p in (q for q in range(3) if active[q]):
        for g in out:
            if abs(z[g[0]] - z[p]) <= GROUP_TOL:
                g.append(p)
                break
        else:
            out.append([p])
    return out


def solve_hazards(z, active, params: GameParams) -> tuple[np.ndarray, dict[int, Continuation]]:
    """Hazards ``(lam_1, lam_2, lam_3, lam_C)`` at posterior vector ``z``."""
    lam = params.lam_ag
    groups = _groups(z, active)
    conts = {j: continuation_values(z, j, params) for g in groups for j in g}
    m = len(groups)
    A = np.zeros((m + 1, m + 1))
    b = np.full(m + 1, lam)
    for row, g in enumerate(groups):
        i = g[0]
        A[row, 0] = 1.0
        for col, h in enumerate(groups, start=1):
            A[row, col] = sum(conts[j].g_hat[i] for j in h if j != i)
    A[m, 1:] = [sum(conts[j].gamma for j in h) for h in groups]
    b[m] = 3 * lam
    if m == 0:
        raise ShootingDivergence("center cannot be active alone")
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise ShootingDivergence(f"singular indifference system at z={z}") from exc
    rates = np.zeros(4)
    rates[3] = x[0]
    for col, g in enumerate(groups, start=1):
        rates[g] = x[col]
    return rates, conts


def peripheral_slack(i: int, rates, conts, params: GameParams) -> float:
    """Left side minus right side of i's indifference; >= 0 means waiting is weakly optimal."""
    return rates[3] + sum(rates[j] * c.g_hat[i] for j, c in conts.items() if j != i) - params.lam_ag


def ic_residuals(z, active, params: GameParams) -> np.ndarray:
    """Residuals of the four indifference conditions (inactive players report 0)."""
    rates, conts = solve_hazards(z, active, params)
    out = np.zeros(4)
    for i in range(3):
        if active[i]:
            out[i] = peripheral_slack(i, rates, conts, params)
    out[3] = sum(rates[j] * c.gamma for j, c in conts.items()) - 3 * params.lam_ag
    return out


@dataclass
class _Segment:
    s0: float
    s1: float
    active: tuple[bool, bool, bool, bool]
    sol: object  # OdeSolution in s


@dataclass(frozen=True)
class Star4Equilibrium:
    priors: tuple[float, float, float, float]
    params: GameParams
    terminal: float
    atoms: dict[str, float]
    activation: dict[str, float]
    segments: tuple
    boundary_residual: float
    payoffs: dict[str, float] = field(default_factory=dict)

    @property
    def phase_times(self) -> tuple[float, ...]:
        """Interior activation times in increasing order, then T."""
        inner = sorted({t for t in self.activation.values() if 1e-12 < t < self.terminal})
        return tuple(inner) + (self.terminal,)

    def _segment(self, t: float) -> _Segment:
        s = min(max(self.terminal - t, 0.0), self.terminal)
        for seg in self.segments:
            if seg.s0 <= s <= seg.s1:
                return seg
        return self.segments[-1]

    def posteriors(self, t: float) -> np.ndarray:
        """``(z_1, z_2, z_3, z_C)`` just after any time-0 atom, capped at one past T."""
        if t >= self.terminal:
            return np.ones(4)
        seg = self._segment(t)
        return np.asarray(seg.sol(self.terminal - max(t, 0.0)), dtype=float)

    def state(self, t: float) -> Star4State:
        seg = self._segment(t)
        return Star4State(t, self.posteriors(t), seg.active)

    def hazards(self, t: float) -> np.ndarray:
        if t < 0 or t >= self.terminal:
            return np.zeros(4)
        seg = self._segment(t)
        return solve_hazards(self.posteriors(t), seg.active, self.params)[0]

    def hazard_path(self, player: str):
        k = PLAYERS.index(player)
        return lambda t: float(self.hazards(t)[k])

    def survival(self, t: float) -> np.ndarray:
        """Unconditional probability each player has not conceded by ``t``."""
        if t < 0:
            return np.ones(4)
        return np.asarray(self.priors) / self.posteriors(t)

    def residuals(self, t: float) -> np.ndarray:
        seg = self._segment(t)
        return ic_residuals(self.posteriors(t), seg.active, self.params)

    def breakpoints(self) -> list[float]:
        return sorted({self.terminal - seg.s1 for seg in self.segments} | {self.terminal - seg.s0 for seg in self.segments})


def _integrate_backward(z0: np.ndarray, params: GameParams, rtol: float, atol: float, max_phases: int = 16):
    prior = np.asarray(z0, dtype=float)
    z = np.ones(4)
    active = [True, True, True, True]
    s = 0.0
    segments: list[_Segment] = []

    for _ in range(max_phases):
        act = tuple(active)

        def rhs(_s, y, act=act):
            rates, _ = solve_hazards(y, act, params)
            return -rates * y

        events = []
        for p in range(4):
            if act[p]:
                ev = (lambda _s, y, p=p: y[p] - prior[p])
                ev.terminal, ev.direction = True, -1
                events.append(ev)
        for p in range(3):
            if not act[p] and z[p] > prior[p] * (1 + 1e-12):
                def slack(_s, y, p=p, act=act):
                    rates, conts = solve_hazards(y, act, params)
                    return peripheral_slack(p, rates, conts, params) + SLACK_BAND
                slack.terminal, slack.direction = True, -1
                events.append(slack)
        # horizon long enough for any remaining active posterior to reach its prior
        horizon = s + 4.0 * max(1.0, -math.log(prior.min())) / params.lam_ag + 1.0
        sol = integrate.solve_ivp(rhs, (s, horizon), z, method="RK45", rtol=rtol, atol=atol,
                                  events=events, dense_output=True)
        if sol.status != 1:
            raise ShootingDivergence(f"backward integration did not reach a phase boundary: {sol.message}")
        s_new = float(sol.t[-1])
        z = sol.y[:, -1].copy()
        segments.append(_Segment(s, s_new, act, sol.sol))
        s = s_new

        # freeze every player sitting on its prior (simultaneous hits included)
        hit = [p for p in range(4) if active[p] and z[p] <= prior[p] * (1 + 1e-9)]
        for p in hit:
            z[p] = prior[p]
            active[p] = False
        if not hit:
            # a slack event: that peripheral must start conceding
            rates, conts = solve_hazards(z, tuple(active), params)
            for p in range(3):
                if not active[p] and z[p] > prior[p]:
                    if peripheral_slack(p, rates, conts, params) < 0:
                        active[p] = True
        if not active[3] or not any(active[:3]):
            return s, z, segments
    raise ShootingDivergence(f"no time-0 boundary after {max_phases} phases")


def solve_star4(priors4, params: GameParams, rtol: float = 1e-10, atol: float = 1e-12) -> Star4Equilibrium:
    """Solve the four-player star; ``priors4`` is ``(z_1, z_2, z_3, z_C)``."""
    validate(params, list(priors4))
    if params.pi_ac != 1.0 or params.pi_bc != 1.0:
        raise OutOfRange("pi", (params.pi_ac, params.pi_bc), "all pies equal to 1")
    prior = np.asarray(priors4, dtype=float)
    T, z_plus, segments = _integrate_backward(prior, params, rtol, atol)

    atoms = {}
    for p, name in enumerate(PLAYERS):
        a = 1.0 - prior[p] / z_plus[p]
        atoms[name] = a if a > 1e-10 else 0.0
    if atoms["C"] > 0 and any(atoms[q] > 0 for q in PERIPHERALS):
        raise ShootingDivergence("time-0 atoms on both sides of the star")
    residual = float(np.max(np.abs(z_plus * (1 - np.array([atoms[n] for n in PLAYERS])) - prior)))
    if residual > 1e-6:
        raise ShootingDivergence(f"time-0 posteriors miss the priors by {residual:.3g}")

    # forward activation time of each peripheral: start of its earliest active segment
    activation = {}
    for p, name in enumerate(PERIPHERALS):
        spans = [T - seg.s1 for seg in segments if seg.active[p]]
        activation[name] = max(min(spans), 0.0) if spans else T
    activation["C"] = 0.0
    eq = Star4Equilibrium(tuple(prior), params, T, atoms, activation, tuple(reversed(segments)), residual)
    return Star4Equilibrium(**{**eq.__dict__, "payoffs": star4_payoffs(eq)})


def deviation_value(eq: Star4Equilibrium, i: int, t: float, tol: float = 1e-9) -> float:
    """Peripheral ``i``'s time-0 value of conceding at ``t`` unless someone concedes first."""
    p = eq.params
    a, r = p.alpha, p.r
    others = [q for q in range(3) if q != i]
    atom = [eq.atoms[n] for n in PLAYERS]
    z0 = eq.posteriors(0.0)

    # time-0 atoms by the others
    total = atom[3] * a
    j, k = others
    for cj in (0, 1):
        for ck in (0, 1):
            w = (atom[j] if cj else 1 - atom[j]) * (atom[k] if ck else 1 - atom[k]) * (1 - atom[3])
            if w == 0.0 or not (cj or ck):
                continue
            if cj and ck:
                total += w * ag_payoff(1.0, z0[i], z0[3], p)
            else:
                total += w * continuation_values(z0, j if cj else k, p).values[i]

    if t <= 0:
        return total + (1 - atom[3]) * (1 - atom[j]) * (1 - atom[k]) * (1 - a)

    def integrand(y):
        z = eq.posteriors(y)
        S = np.asarray(eq.priors) / z
        rates, conts = solve_hazards(z, eq._segment(y).active, p)
        flow = rates[3] * a + sum(rates[q] * conts[q].values[i] for q in others if q in conts)
        return math.exp(-r * y) * S[j] * S[k] * S[3] * flow

    edges = [0.0] + [b for b in eq.breakpoints() if 0.0 < b < t] + [t]
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(integrand, lo, hi, epsabs=tol, epsrel=1e-10, limit=200)
        total += val
    S = eq.survival(t)
    return total + math.exp(-r * t) * S[j] * S[k] * S[3] * (1 - a)


def star4_payoffs(eq: Star4Equilibrium) -> dict[str, float]:
    a = eq.params.alpha
    out = {}
    for i, name in enumerate(PERIPHERALS):
        out[name] = deviation_value(eq, i, eq.activation[name])
    # the center is active from 0+, so she is paid her value of conceding right after the atoms
    out["C"] = sum(eq.atoms[q] * a + (1 - eq.atoms[q]) * (1 - a) for q in PERIPHERALS)
    return out


def star4_benchmark(priors4, params: GameParams) -> dict[str, float]:
    """Three independent bilateral negotiations with the center."""
    validate(params, list(priors4))
    *zp, zc = priors4
    out = {n: ag_payoff(1.0, z, zc, params) for n, z in zip(PERIPHERALS, zp)}
    out["C"] = sum(ag_payoff(1.0, zc, z, params) for z in zp)
    return out
