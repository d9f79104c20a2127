"""Shared game types and the survival/posterior calculus.

Concession behaviour in the no-concession subgame is represented by a
:class:`ConcessionProfile`: a probability atom at ``t=0`` followed by a
piecewise-constant hazard schedule.  With ``Lambda(t)`` the integrated hazard,

    F(t) = 1 - (1 - atom0) * exp(-Lambda(min(t, T)))

is the (type-unconditional) probability that the player has conceded by ``t``,
and the reputation is ``z(t) = prior / (1 - F(t))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

TIE_TOL = 1e-12


class OutOfRange(ValueError):
    """A parameter or prior lies outside its admissible range."""

    def __init__(self, field_name: str, value, bound: str):
        self.field = field_name
        self.value = value
        self.bound = bound
        super().__init__(f"{field_name}={value!r} violates {bound}")


class DegenerateBelief(ArithmeticError):
    """Posterior requested where the cdf has reached one."""


@dataclass(frozen=True)
class GameParams:
    r: float
    alpha: float
    pi_ac: float = 1.0
    pi_bc: float = 1.0

    @cached_property
    def lam_ag(self) -> float:
        # exact rational arithmetic on the decimal inputs, so alpha=0.7 gives 0.75 and not 0.7500000000000003
        r, a = Fraction(repr(float(self.r))), Fraction(repr(float(self.alpha)))
        return float(r * (1 - a) / (2 * a - 1))

    def with_pies(self, pi_ac: float, pi_bc: float) -> "GameParams":
        return GameParams(self.r, self.alpha, pi_ac, pi_bc)


@dataclass(frozen=True)
class Priors:
    z_a: float
    z_b: float
    z_c: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.z_a, self.z_b, self.z_c)

    def scaled(self, c: float) -> "Priors":
        return Priors(self.z_a * c, self.z_b * c, self.z_c * c)


def validate(params: GameParams, priors: Priors | Sequence[float] | None = None) -> None:
    """Raise :class:`OutOfRange` naming the first violated bound."""
    if not (params.r > 0 and math.isfinite(params.r)):
        raise OutOfRange("r", params.r, "0 < r < inf")
    if not 0.5 < params.alpha < 1.0:
        raise OutOfRange("alpha", params.alpha, "1/2 < alpha < 1")
    if not (params.pi_ac > 0 and math.isfinite(params.pi_ac)):
        raise OutOfRange("pi_ac", params.pi_ac, "0 < pi_ac < inf")
    if not (params.pi_bc > 0 and math.isfinite(params.pi_bc)):
        raise OutOfRange("pi_bc", params.pi_bc, "0 < pi_bc < inf")
    if priors is None:
        return
    if isinstance(priors, Priors):
        named = zip(("z_a", "z_b", "z_c"), priors.as_tuple())
    else:
        names = ["z_a", "z_b", "z_c"] if len(priors) == 3 else [f"z_{k}" for k in range(len(priors))]
        named = zip(names, priors)
    for name, z in named:
        if not 0.0 < z < 1.0:
            raise OutOfRange(name, z, "0 < z < 1")


@dataclass(frozen=True)
class HazardSegment:
    t_start: float
    t_end: float
    rate: float

    def __post_init__(self):
        if self.t_start < 0 or not self.t_end > self.t_start:
            raise ValueError(f"bad segment bounds [{self.t_start}, {self.t_end}]")
        if self.rate < 0:
            raise ValueError(f"negative hazard {self.rate}")


@dataclass(frozen=True)
class ConcessionProfile:
    """Atom at zero plus contiguous constant-hazard segments ending at ``terminal``."""

    atom0: float
    segments: tuple[HazardSegment, ...] = ()
    terminal: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not 0.0 <= self.atom0 < 1.0:
            raise ValueError(f"atom0={self.atom0} outside [0,1)")
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        t = 0.0
        for s in segs:
            if abs(s.t_start - t) > 1e-12:
                raise ValueError("hazard segments must be contiguous from t=0")
            t = s.t_end
        if self.terminal is None:
            object.__setattr__(self, "terminal", t)
        # cumulative hazard at each breakpoint, for closed-form evaluation
        cum = [0.0]
        for s in segs:
            cum.append(cum[-1] + s.rate * (s.t_end - s.t_start))
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def from_rates(cls, atom0: float, breaks: Sequence[float], rates: Sequence[float]) -> "ConcessionProfile":
        """``breaks`` are ``[0, t1, ..., T]``; zero-length pieces are dropped."""
        segs = [
            HazardSegment(a, b, rate)
            for a, b, rate in zip(breaks[:-1], breaks[1:], rates)
            if b > a
        ]
        return cls(atom0, tuple(segs), breaks[-1])

    @property
    def breakpoints(self) -> list[float]:
        if not self.segments:
            return [0.0]
        return [self.segments[0].t_start] + [s.t_end for s in self.segments]

    def cum_hazard(self, t: float) -> float:
        t = min(t, self.terminal)
        if t <= 0 or not self.segments:
            return 0.0
        for k, s in enumerate(self.segments):
            if t <= s.t_end:
                return self._cum[k] + s.rate * (t - s.t_start)
        return self._cum[-1]

    def hazard(self, t: float) -> float:
        """Right-continuous hazard; zero outside ``(0, terminal)``."""
        if t < 0 or t >= self.terminal:
            return 0.0
        for s in self.segments:
            if s.t_start <= t < s.t_end:
                return s.rate
        return 0.0

    def survival(self, t: float) -> float:
        if t < 0:
            return 1.0
        return (1.0 - self.atom0) * math.exp(-self.cum_hazard(t))

    def survival_array(self, t: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`survival` for ``t >= 0`` (the integrated hazard is piecewise linear)."""
        t = np.asarray(t, dtype=float)
        if not self.segments:
            return np.full(t.shape, 1.0 - self.atom0)
        cum = np.interp(np.clip(t, 0.0, self.terminal), self.breakpoints, self._cum)
        return (1.0 - self.atom0) * np.exp(-cum)

    def cdf(self, t: float) -> float:
        if t < 0:
            return 0.0
        return 1.0 - self.survival(t)

    def density(self, t: float) -> float:
        return self.hazard(t) * self.survival(t)

    def inverse_cum_hazard(self, x: np.ndarray) -> np.ndarray:
        """Times at which the integrated hazard equals ``x`` (``inf`` past terminal)."""
        x = np.asarray(x, dtype=float)
        cum = np.asarray(self._cum)
        out = np.full(x.shape, np.inf)
        if not self.segments:
            out[x <= 0] = 0.0
            return out
        k = np.searchsorted(cum, x, side="left") - 1
        k = np.clip(k, 0, len(self.segments) - 1)
        starts = np.array([s.t_start for s in self.segments])
        rates = np.array([s.rate for s in self.segments])
        with np.errstate(divide="ignore", invalid="ignore"):
            t = starts[k] + (x - cum[k]) / rates[k]
        inside = x <= cum[-1] * (1 + 1e-15)
        out[inside] = np.minimum(t[inside], self.terminal)
        out[x <= 0] = 0.0
        return out


def cdf_at(profile: ConcessionProfile, t: float) -> float:
    return profile.cdf(t)


@dataclass(frozen=True)
class PosteriorPath:
    prior: float
    profile: ConcessionProfile

    def at(self, t: float) -> float:
        return posterior_at(self, t)

    @property
    def post_atom(self) -> float:
        return self.prior / (1.0 - self.profile.atom0)


def posterior_at(path: PosteriorPath, t: float) -> float:
    F = path.profile.cdf(t)
    if F >= 1.0:
        raise DegenerateBelief(f"cdf reached one at t={t}")
    return path.prior / (1.0 - F)


def path_from_profile(prior: float, profile: ConcessionProfile) -> PosteriorPath:
    return PosteriorPath(prior, profile)
