"""Single-molecule photophysics in closed form.

Units throughout: pulse energies in pJ, times in s, rates in 1/s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError


@dataclass(frozen=True)
class EmitterParams:
    """Level rates of a three-level emitter (ground, singlet, triplet).

    ``tau_r`` defaults to ``1/k21`` when not given.
    """

    k21: float = 1e8
    k23: float = 1e4
    k31: float = 6e3
    tau_r: float | None = None
    qe: float = 1.0

    def __post_init__(self):
        if not self.k21 > 0 or not self.k31 > 0:
            raise DomainError("k21 and k31 must be positive")
        if not self.k23 >= 0:
            raise DomainError("k23 must be nonnegative")
        if self.tau_r is None:
            object.__setattr__(self, "tau_r", 1.0 / self.k21)
        elif not self.tau_r > 0:
            raise DomainError("tau_r must be positive")
        if not 0 < self.qe <= 1:
            raise DomainError("qe must lie in (0, 1]")

    @property
    def dark_period(self) -> float:
        return dark_period(self.k31)


@dataclass(frozen=True)
class ExcitationConfig:
    E_p: float
    E_s: float
    tau_p: float = 13e-12
    f_rep: float = 15e3
    duration: float = 10.0

    def __post_init__(self):
        if not self.E_p >= 0:
            raise DomainError("E_p must be nonnegative")
        for name in ("E_s", "tau_p", "f_rep", "duration"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.n_pulses < 1:
            raise DomainError("f_rep * duration must allow at least one pulse")

    @property
    def n_pulses(self) -> int:
        # tolerate float noise in products like 15e3 * 10
        return int(math.floor(self.f_rep * self.duration * (1 + 1e-12)))


@dataclass(frozen=True)
class SaturationParams:
    """Parameters of the saturation curve ``R0*rho(E_p) + alpha*E_p``."""

    R_0: float
    E_s: float
    alpha: float = 0.0
    tau_p: float = 13e-12
    tau_r: float = 1e-8

    def __post_init__(self):
        if not self.R_0 > 0 or not self.E_s > 0:
            raise DomainError("R_0 and E_s must be positive")
        if not self.alpha >= 0:
            raise DomainError("alpha must be nonnegative")
        if not self.tau_p > 0 or not self.tau_r > 0:
            raise DomainError("tau_p and tau_r must be positive")


def dark_period(k31: float) -> float:
    """Mean triplet dwell time, 1/k31."""
    if not k31 > 0:
        raise DomainError("k31 must be positive")
    return 1.0 / k31


def excited_population(E_p, E_s: float, tau_p: float, tau_r: float):
    """Excited-state population left behind by one rectangular pulse.

    Exact solution of the two-level rate equation
    ``drho/dt = W (1 - rho) - rho / tau_r`` with pump rate
    ``W = (E_p / E_s) / tau_r`` held for ``tau_p``:

        rho = x / (1 + x) * (1 - exp(-(tau_p / tau_r) * (1 + x))),  x = E_p / E_s

    Accepts scalars or arrays for ``E_p``.
    """
    if not E_s > 0 or not tau_p > 0 or not tau_r > 0:
        raise DomainError("E_s, tau_p and tau_r must be positive")
    E = np.asarray(E_p, dtype=float)
    if np.any(E < 0) or np.any(~np.isfinite(E)):
        raise DomainError("E_p must be finite and nonnegative")
    x = E / E_s
    rho = x / (1.0 + x) * -np.expm1(-(tau_p / tau_r) * (1.0 + x))
    return float(rho) if rho.ndim == 0 else rho


def detected_rate(E_p, params: SaturationParams):
    """Detected count rate R0*rho(E_p) + alpha*E_p in counts/s."""
    rho = excited_population(E_p, params.E_s, params.tau_p, params.tau_r)
    rate = params.R_0 * np.asarray(rho) + params.alpha * np.asarray(E_p, dtype=float)
    return float(rate) if rate.ndim == 0 else rate


def triplet_branching(params: EmitterParams) -> float:
    """Probability that one excitation ends in the triplet, k23/(k21+k23)."""
    return params.k23 / (params.k21 + params.k23)


def shelving_occupancy(params: EmitterParams, f_rep: float, rho: float) -> float:
    """Steady-state fraction of pulses that find the molecule in the triplet.

    Two-state chain observed at pulse arrival times. A pulse that finds the
    molecule in the ground state sends it to the triplet with probability
    ``rho * k23/(k21+k23)``; the triplet survives one pulse interval with
    probability ``q = exp(-k31/f_rep)``. Pulses arriving while dark are
    lost and do not re-excite.
    """
    if not f_rep > 0:
        raise DomainError("f_rep must be positive")
    if not 0 <= rho <= 1:
        raise DomainError("rho must lie in [0, 1]")
    enter = rho * triplet_branching(params)
    q = math.exp(-params.k31 / f_rep)
    to_dark = enter * q
    denom = to_dark + (1.0 - q)
    return 0.0 if to_dark == 0 else to_dark / denom


def solve_saturation_energy(E_p: float, rho_target: float, tau_p: float, tau_r: float) -> float:
    """E_s at which a pulse of energy ``E_p`` gives population ``rho_target``.

    Returns nan when ``rho_target`` is out of reach for this pulse/lifetime pair.
    """
    if not 0 < rho_target < 1 or not E_p > 0:
        return math.nan

    def f(log_es):
        return excited_population(E_p, math.exp(log_es), tau_p, tau_r) - rho_target

    lo, hi = math.log(E_p) - 60, math.log(E_p) + 60
    if f(lo) * f(hi) > 0:
        return math.nan
    return math.exp(brentq(f, lo, hi, xtol=1e-14))
