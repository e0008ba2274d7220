"""Exact evolution for potentials of degree at most two.

For V = V0 + V1 q + V2 q^2 / 2 the flow is linear,
q(t) = f0 + q f1 + p f2 and p(t) = g0 + q g1 + p g2, so means and spreads of
an ME packet follow in closed form. Quantum and classical packets evolve
identically here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import PacketParams
from ..errors import ValidationError
from .potential import PolynomialPotential
from .records import TrajectoryRecord


@dataclass(frozen=True)
class QuadraticSolution:
    regime: str
    mu: float
    V1: float
    V2: float
    xi: float | None = None
    omega: float | None = None

    def functions(self, t):
        """(f0, f1, f2, g0, g1, g2) evaluated at ``t``."""
        t = np.asarray(t, dtype=float)
        mu, V1, V2 = self.mu, self.V1, self.V2
        if self.regime in ("free", "uniform-force"):
            one, zero = np.ones_like(t), np.zeros_like(t)
            return (-V1 / (2 * mu) * t**2, one, t / mu, -V1 * t, zero, one)
        xi, w = self.xi, self.omega
        shift = -V1 / V2
        if self.regime == "harmonic":
            c, s = np.cos(w * t), np.sin(w * t)
            return (shift * (1 - c), c, s / xi, xi * shift * s, -xi * s, c)
        # anti-harmonic: hyperbolic continuation, variances grow exponentially
        c, s = np.cosh(w * t), np.sinh(w * t)
        return (shift * (1 - c), c, s / xi, -xi * shift * s, xi * s, c)

    @property
    def characteristic_time(self) -> float:
        """One period (harmonic), the e-folding time (anti-harmonic) or 1 (free)."""
        if self.regime == "harmonic":
            return 2 * math.pi / self.omega
        if self.regime == "anti-harmonic":
            return 1.0 / self.omega
        return 1.0


def quadratic_solution(potential: PolynomialPotential) -> QuadraticSolution:
    if potential.degree > 2:
        raise ValidationError(f"closed form needs degree <= 2, got {potential.degree}")
    mu = float(potential.mu)
    V1, V2 = float(potential.V(1)), float(potential.V(2))
    if V2 == 0:
        return QuadraticSolution("free" if V1 == 0 else "uniform-force", mu, V1, V2)
    xi = math.sqrt(mu * abs(V2))
    omega = math.sqrt(abs(V2) / mu)
    return QuadraticSolution("harmonic" if V2 > 0 else "anti-harmonic", mu, V1, V2, xi, omega)


def quadratic_evolve(params: PacketParams, potential: PolynomialPotential, t, dof: int = 0):
    """(Qbar, Pbar, dQbar, dPbar) at time(s) ``t``."""
    sol = quadratic_solution(potential)
    d = params.dofs[dof]
    f0, f1, f2, g0, g1, g2 = sol.functions(t)
    Qbar = f0 + d.Q * f1 + d.P * f2
    Pbar = g0 + d.Q * g1 + d.P * g2
    dQbar = np.sqrt(f1**2 * d.dQ**2 + f2**2 * d.dP**2)
    dPbar = np.sqrt(g1**2 * d.dQ**2 + g2**2 * d.dP**2)
    return Qbar, Pbar, dQbar, dPbar


def closed_form_record(params: PacketParams, potential: PolynomialPotential, times) -> TrajectoryRecord:
    times = np.asarray(times, dtype=float)
    Q, P, dQ, dP = quadratic_evolve(params, potential, times)
    sol = quadratic_solution(potential)
    return TrajectoryRecord(times, Q, P, dQ, dP, "closed-form", diagnostics={"regime": sol.regime})
