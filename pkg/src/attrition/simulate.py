"""Monte Carlo play of the two- and three-player games.

Types are drawn from the priors; a rational player's concession time is drawn
exactly by inverting its cumulative hazard (no time grid).  When a peripheral
gives in first, the surviving negotiation restarts as a fresh bilateral game
at the posteriors of that moment and is sampled the same way.

Replications are split into fixed-size chunks, chunk ``k`` drawing from the
``k``-th child of ``SeedSequence(seed)``, so results do not depend on how
chunks are spread over workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bilateral import BilateralEq
from .core import ConcessionProfile
from .trilateral import TriEquilibrium

CHUNK = 1 << 16


@dataclass
class SimOutcome:
    n: int
    seed: int
    est_payoffs: dict[str, float]
    std_err: dict[str, float]
    n_rational: dict[str, int]
    joint_close_rate: float
    censored_rate: float
    raw_means: dict[str, float] = field(default_factory=dict)  # over all plays, any type
    n_events: int = 0  # plays in which someone conceded
    event_log_sample: list[dict] = field(default_factory=list)


def sample_concession(profile: ConcessionProfile, prior: float, u: np.ndarray) -> np.ndarray:
    """Concession times of the rational type given uniforms ``u``.

    The rational type's cdf is ``F(t) / (1 - prior)``; mass left at the
    terminal time (none in an exact equilibrium) maps to ``inf``.
    """
    target = u * (1.0 - prior)
    with np.errstate(divide="ignore"):
        x = -np.log1p(-target) + np.log1p(-profile.atom0)
    t = profile.inverse_cum_hazard(np.maximum(x, 0.0))
    t[target <= profile.atom0] = 0.0
    return t


def _bilateral_times(z_i, z_j, lam, rational_i, rational_j, u_i, u_j):
    """Vectorized concession times in fresh bilateral games at posteriors (z_i, z_j)."""
    atom_i = np.where(z_j > 0, np.maximum(1.0 - z_i / np.where(z_j > 0, z_j, 1.0), 0.0), 0.0)
    atom_j = np.where(z_i > 0, np.maximum(1.0 - z_j / np.where(z_i > 0, z_i, 1.0), 0.0), 0.0)

    def draw(z, atom, u):
        target = u * (1.0 - z)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (np.log1p(-atom) - np.log1p(-target)) / lam
        return np.where(target <= atom, 0.0, np.maximum(t, 0.0))

    t_i = np.where(rational_i, draw(z_i, atom_i, u_i), np.inf)
    t_j = np.where(rational_j, draw(z_j, atom_j, u_j), np.inf)
    return t_i, t_j


def _settle(t_i, t_j, pi, alpha):
    """Shares of a single negotiation: earlier conceder gets 1 - alpha, ties at 0 split."""
    tie = (t_i == t_j) & np.isfinite(t_i)
    first_i = (t_i < t_j) | tie
    t_end = np.minimum(t_i, t_j)
    share_i = np.where(tie, 0.5, np.where(first_i, 1 - alpha, alpha))
    return t_end, share_i * pi, (1 - share_i) * pi


def _chunk_tri(eq: TriEquilibrium, n: int, rng: np.random.Generator, log_k: int):
    p = eq.params
    a, r, lam = p.alpha, p.r, p.lam_ag
    z = {"A": eq.priors.z_a, "B": eq.priors.z_b, "C": eq.priors.z_c}
    pie = {"A": p.pi_ac, "B": p.pi_bc}
    rational = {k: rng.random(n) >= z[k] for k in "ABC"}
    tau = {}
    censored = 0
    for k in "ABC":
        t = sample_concession(eq.profiles[k], z[k], rng.random(n))
        censored += int(np.sum(rational[k] & ~np.isfinite(t)))
        tau[k] = np.where(rational[k], t, np.inf)
    u_cont = rng.random((2, n))

    pay = {k: np.zeros(n) for k in "ABC"}
    close = {k: np.full(n, np.inf) for k in "AB"}
    tc = tau["C"]
    first_periph = np.minimum(tau["A"], tau["B"])
    c_first = tc <= first_periph  # ties only occur at 0
    c_first &= np.isfinite(tc)

    # center moves first (possibly together with peripheral atoms at 0): all disputes close
    for k in "AB":
        t_end, s_k, s_c = _settle(tau[k], tc, pie[k], a)
        disc = np.exp(-r * tc)
        pay[k] += np.where(c_first, s_k * disc, 0.0)
        pay["C"] += np.where(c_first, s_c * disc, 0.0)
        close[k] = np.where(c_first, t_end, close[k])

    both0 = ~c_first & (tau["A"] == 0.0) & (tau["B"] == 0.0)
    for k in "AB":
        # both peripherals gave in at 0: both disputes close, C collects twice
        pay[k] += np.where(both0, (1 - a) * pie[k], 0.0)
        pay["C"] += np.where(both0, a * pie[k], 0.0)
        close[k] = np.where(both0, 0.0, close[k])

    # one peripheral moves first; the other negotiation restarts at current posteriors
    for k, other in (("A", "B"), ("B", "A")):
        ahead = tau[k] <= tau[other] if k == "A" else tau[k] < tau[other]
        k_first = ~c_first & ~both0 & np.isfinite(tau[k]) & ahead
        y = np.where(k_first, tau[k], 0.0)
        disc = np.exp(-r * y)
        pay[k] += np.where(k_first, (1 - a) * pie[k] * disc, 0.0)
        pay["C"] += np.where(k_first, a * pie[k] * disc, 0.0)
        close[k] = np.where(k_first, y, close[k])
        sel = np.flatnonzero(k_first)
        if sel.size == 0:
            continue
        ys = y[sel]
        z_o = z[other] / eq.profiles[other].survival_array(ys)
        z_c = z["C"] / eq.profiles["C"].survival_array(ys)
        t_o, t_c = _bilateral_times(z_o, z_c, lam, rational[other][sel], rational["C"][sel],
                                    u_cont[0, sel], u_cont[1, sel])
        t_end, s_o, s_c = _settle(t_o, t_c, pie[other], a)
        fin = np.isfinite(t_end)
        d2 = np.where(fin, np.exp(-r * (ys + np.where(fin, t_end, 0.0))), 0.0)
        pay[other][sel] += s_o * d2
        pay["C"][sel] += s_c * d2
        close[other][sel] = np.where(fin, ys + np.where(fin, t_end, 0.0), np.inf)

    joint_ok = int(np.sum(close["A"][c_first] == close["B"][c_first]))
    logs = []
    for m in range(min(log_k, n)):
        logs.append({
            "types": {k: "rational" if rational[k][m] else "committed" for k in "ABC"},
            "tau": {k: float(tau[k][m]) for k in "ABC"},
            "close": {k: float(close[k][m]) for k in "AB"},
            "payoffs": {k: float(pay[k][m]) for k in "ABC"},
        })
    return pay, rational, int(np.sum(c_first)), joint_ok, censored, logs


def _chunk_bil(eq: BilateralEq, n: int, rng: np.random.Generator, log_k: int):
    a, r = eq.params.alpha, eq.params.r
    rational = {"i": rng.random(n) >= eq.z_i, "j": rng.random(n) >= eq.z_j}
    ti = np.where(rational["i"], sample_concession(eq.profile_i, eq.z_i, rng.random(n)), np.inf)
    tj = np.where(rational["j"], sample_concession(eq.profile_j, eq.z_j, rng.random(n)), np.inf)
    censored = int(np.sum(rational["i"] & ~np.isfinite(ti)) + np.sum(rational["j"] & ~np.isfinite(tj)))
    t_end, s_i, s_j = _settle(ti, tj, eq.pi, a)
    fin = np.isfinite(t_end)
    disc = np.where(fin, np.exp(-r * np.where(fin, t_end, 0.0)), 0.0)
    pay = {"i": s_i * disc, "j": s_j * disc}
    logs = [{"tau": {"i": float(ti[m]), "j": float(tj[m])}, "payoffs": {k: float(pay[k][m]) for k in pay}}
            for m in range(min(log_k, n))]
    return pay, rational, 0, 0, censored, logs


def _workers(requested: int | None) -> int:
    if requested is None:
        requested = int(os.environ.get("ATTRITION_THREADS", "0") or 0)
    return requested if requested > 0 else (os.cpu_count() or 1)


def simulate(eq, n: int, seed: int = 0, log_k: int = 0, workers: int | None = None,
             forced_types: dict[str, str] | None = None) -> SimOutcome:
    """Estimate each rational type's discounted payoff from ``n`` plays.

    ``forced_types`` maps a player to ``"rational"`` or ``"committed"`` and
    overrides the prior draw (used to test degenerate cases).
    """
    if n < 1:
        raise ValueError("n must be positive")
    if isinstance(eq, TriEquilibrium):
        chunk_fn, names = _chunk_tri, "ABC"
    elif isinstance(eq, BilateralEq):
        chunk_fn, names = _chunk_bil, "ij"
    else:
        raise TypeError(f"cannot simulate {type(eq).__name__}")

    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(k):
        rng = np.random.default_rng(streams[k])
        if forced_types:
            rng = _ForcedRng(rng, [forced_types.get(p) for p in names])
        pay, rational, n_c, n_ok, cens, logs = chunk_fn(eq, sizes[k], rng, log_k if k == 0 else 0)
        stats = {}
        for p in names:
            x = pay[p][rational[p]]
            stats[p] = (x.size, float(x.sum()), float(np.sum(x * x)), float(pay[p].sum()))
        events = int(np.sum(sum(pay[p] for p in names) > 0))
        return stats, n_c, n_ok, cens, logs, events

    with ThreadPoolExecutor(max_workers=min(_workers(workers), len(sizes))) as pool:
        results = list(pool.map(run, range(len(sizes))))

    est, se, cnt = {}, {}, {}
    for p in names:
        m = sum(res[0][p][0] for res in results)
        s1 = sum(res[0][p][1] for res in results)
        s2 = sum(res[0][p][2] for res in results)
        cnt[p] = m
        if m == 0:
            est[p], se[p] = float("nan"), float("nan")
            continue
        mean = s1 / m
        var = max(s2 / m - mean * mean, 0.0) * m / max(m - 1, 1)
        est[p], se[p] = mean, float(np.sqrt(var / m))
    n_c = sum(res[1] for res in results)
    n_ok = sum(res[2] for res in results)
    cens = sum(res[3] for res in results)
    raw = {p: sum(res[0][p][3] for res in results) / n for p in names}
    events = sum(res[5] for res in results)
    return SimOutcome(n, seed, est, se, cnt, joint_close_rate=(n_ok / n_c) if n_c else 1.0, censored_rate=cens / n,
                      raw_means=raw, n_events=events, event_log_sample=results[0][4])


class _ForcedRng:
    """Generator wrapper whose first draws (one per player, the type draws) are forced.

    A forced uniform of 1 makes the player rational, 0 makes it committed.
    """

    def __init__(self, rng: np.random.Generator, forced: list[str | None]):
        self._rng, self._forced = rng, list(forced)

    def random(self, size=None):
        x = self._rng.random(size)
        if self._forced:
            f = self._forced.pop(0)
            if f == "rational":
                x = np.ones_like(x)
            elif f == "committed":
                x = np.zeros_like(x)
        return x

