"""Partial observability: the bystander sees that a deal was struck, not who conceded.

Only the symmetric game (equal priors, unit pies) is solved.  The peripherals
concede at ``lam_ag``; the center holds a time-0 atom and then concedes at
``lambda_c_of_h(h(t))`` where ``h = z_C / z_A`` solves

    h'(t) = h (lambda_C(h) - lam_ag),    h(T) = 1.

This is an existence result only, so the solution is reported as a candidate
equilibrium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .core import ConcessionProfile, GameParams, OutOfRange, validate

N_STEPS = 100_000


class StepFailure(ArithmeticError):
    """Two step sizes gave h(0) values that disagree beyond tolerance."""


def lambda_c_of_h(h: float, params: GameParams) -> float:
    """Positive root of ``x (lam + x) = lam^2 h``."""
    if h < 0:
        raise OutOfRange("h", h, "h >= 0")
    lam = params.lam_ag
    # rationalized form of lam/2 (sqrt(1+4h) - 1), accurate for small h
    return 2.0 * lam * h / (1.0 + math.sqrt(1.0 + 4.0 * h))


def _rk4_backward(T: float, lam: float, n: int) -> np.ndarray:
    """h on the grid s_k = k T/n, where s = T - t, from h(s=0) = 1."""
    ds = T / n
    out = np.empty(n + 1)
    h = 1.0
    out[0] = h

    def f(x):
        return x * (lam - 2.0 * lam * x / (1.0 + math.sqrt(1.0 + 4.0 * x)))

    for k in range(n):
        k1 = f(h)
        k2 = f(h + 0.5 * ds * k1)
        k3 = f(h + 0.5 * ds * k2)
        k4 = f(h + ds * k3)
        h += ds * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        out[k + 1] = h
    return out


def _G(u: float) -> float:
    return -math.log(u - 1.0) - 0.5 * math.log(u + 1.0) + 1.5 * math.log(3.0 - u)


def h0_closed_form(z0: float, params: GameParams) -> float:
    """h(0) from the separable solution of the h-equation.

    With ``u = sqrt(1 + 4h)`` the equation integrates to
    ``lam (t - T) = G(u(t)) - G(sqrt 5)``, and ``lam T = -ln z0``.
    """
    target = _G(math.sqrt(5.0)) + math.log(z0)
    u = brentq(lambda x: _G(x) - target, math.sqrt(5.0), 3.0 - 1e-15, xtol=1e-15, rtol=1e-15)
    return (u * u - 1.0) / 4.0


@dataclass(frozen=True)
class PartialObsEq:
    z0: float
    params: GameParams
    terminal: float
    t_grid: np.ndarray
    h_grid: np.ndarray
    step_agreement: float
    z_c0: float | None = None
    label: str = "candidate equilibrium"

    def __post_init__(self):
        object.__setattr__(self, "_interp", PchipInterpolator(self.t_grid, self.h_grid))

    def h(self, t: float) -> float:
        t = min(max(t, 0.0), self.terminal)
        return float(self._interp(t))

    @property
    def h0(self) -> float:
        return float(self.h_grid[0])

    @property
    def prior_c(self) -> float:
        return self.z0 if self.z_c0 is None else self.z_c0

    @property
    def atom_c(self) -> float:
        return 1.0 - self.prior_c / (self.h0 * self.z0)

    def lambda_c(self, t: float) -> float:
        if t >= self.terminal:
            return 0.0
        return lambda_c_of_h(self.h(t), self.params)

    def z_a(self, t: float) -> float:
        return min(self.z0 * math.exp(self.params.lam_ag * t), 1.0)

    def z_c(self, t: float) -> float:
        return self.h(t) * self.z_a(t)

    def z_hat_c(self, t: float) -> float:
        """Bystander's belief about C right after the other negotiation settles at ``t``."""
        lam = self.params.lam_ag
        return self.z_c(t) * lam / (lam + self.lambda_c(t))

    def g_c(self, t: float) -> float:
        """C's immediate concession to the bystander in the continuation."""
        return max(1.0 - self.z_hat_c(t) / self.z_a(t), 0.0)

    def indifference_residual(self, t: float) -> float:
        lam = self.params.lam_ag
        return self.lambda_c(t) + lam * self.g_c(t) - lam

    @property
    def payoffs(self) -> dict[str, float]:
        a = self.params.alpha
        v = (1 - a) + (2 * a - 1) * self.atom_c
        return {"A": v, "B": v, "C": 2 * (1 - a)}

    def profile_peripheral(self) -> ConcessionProfile:
        return ConcessionProfile.from_rates(0.0, [0.0, self.terminal], [self.params.lam_ag])

    def survival_c(self, t: float) -> float:
        """Unconditional probability C has not conceded by ``t``."""
        if t < 0:
            return 1.0
        return self.prior_c / self.z_c(t)


def solve_partial_obs(z0: float, params: GameParams, z_c0: float | None = None, n: int = N_STEPS,
                      tol: float = 1e-6) -> PartialObsEq:
    """Candidate equilibrium at common prior ``z0``.

    ``z_c0`` (slightly above ``z0``) re-solves with a stronger center; the
    h-path is unchanged and only C's atom moves.
    """
    validate(params, [z0])
    if params.pi_ac != 1.0 or params.pi_bc != 1.0:
        raise OutOfRange("pi", (params.pi_ac, params.pi_bc), "pi_ac = pi_bc = 1")
    lam = params.lam_ag
    T = -math.log(z0) / lam
    fine = _rk4_backward(T, lam, n)
    finer = _rk4_backward(T, lam, 2 * n)
    gap = abs(fine[-1] - finer[-1])
    if gap > tol:
        raise StepFailure(f"h(0) differs by {gap:.3g} between {n} and {2 * n} steps")
    # reverse to increasing t; t_k = T - s_k
    t_grid = T - np.linspace(0.0, T, 2 * n + 1)[::-1]
    t_grid[0] = 0.0
    eq = PartialObsEq(z0, params, T, t_grid, finer[::-1].copy(), gap, z_c0)
    if z_c0 is not None:
        validate(params, [z_c0])
        if not 0.0 < eq.atom_c < 1.0:
            raise OutOfRange("z_c0", z_c0, f"z0 <= z_c0 < h(0) z0 = {eq.h0 * z0:.6g}")
    return eq
