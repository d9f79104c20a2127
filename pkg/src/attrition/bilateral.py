"""Two-player reputational war of attrition (the stand-alone benchmark)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import ConcessionProfile, GameParams, PosteriorPath


def ag_hazard(params: GameParams) -> float:
    """Constant post-zero hazard that keeps the opponent indifferent."""
    return params.lam_ag


def ag_atom(z_strong: float, z_weak: float) -> float:
    """Probability the ``z_weak`` player concedes at once to the ``z_strong`` one.

    Zero posteriors are allowed: ``ag_atom(z, 0) == 1`` for ``z > 0`` and
    ``ag_atom(0, z) == 0``.
    """
    if z_strong <= 0.0:
        return 0.0
    return max(1.0 - z_weak / z_strong, 0.0)


def ag_payoff(pi: float, z_self: float, z_opp: float, params: GameParams) -> float:
    """Rational player's value of a fresh bilateral game over ``pi``."""
    a = params.alpha
    return pi * ((1.0 - a) + (2.0 * a - 1.0) * ag_atom(z_self, z_opp))


# continuation value of the induced bilateral game, used by the multi-player solvers
continuation_value = ag_payoff


@dataclass(frozen=True)
class BilateralEq:
    pi: float
    z_i: float
    z_j: float
    atom_weak: float
    hazard: float
    terminal: float
    payoff_i: float
    payoff_j: float
    weak_id: str | None
    profile_i: ConcessionProfile
    profile_j: ConcessionProfile
    params: GameParams

    @property
    def paths(self) -> dict[str, PosteriorPath]:
        return {"i": PosteriorPath(self.z_i, self.profile_i), "j": PosteriorPath(self.z_j, self.profile_j)}


def solve_bilateral(pi: float, z_i: float, z_j: float, params: GameParams) -> BilateralEq:
    lam = ag_hazard(params)
    a_i = ag_atom(z_j, z_i)
    a_j = ag_atom(z_i, z_j)
    assert a_i * a_j == 0.0, "two-sided atom in the bilateral benchmark"
    zi_plus = z_i / (1.0 - a_i)
    zj_plus = z_j / (1.0 - a_j)
    T = min(-math.log(zi_plus), -math.log(zj_plus)) / lam
    weak = "i" if a_i > 0 else ("j" if a_j > 0 else None)
    return BilateralEq(
        pi=pi,
        z_i=z_i,
        z_j=z_j,
        atom_weak=max(a_i, a_j),
        hazard=lam,
        terminal=T,
        payoff_i=ag_payoff(pi, z_i, z_j, params),
        payoff_j=ag_payoff(pi, z_j, z_i, params),
        weak_id=weak,
        profile_i=ConcessionProfile.from_rates(a_i, [0.0, T], [lam]),
        profile_j=ConcessionProfile.from_rates(a_j, [0.0, T], [lam]),
        params=params,
    )
