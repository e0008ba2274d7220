from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import ValidationError
from ..weyl import WeylPolynomial

MAX_DEGREE = 12


@dataclass(frozen=True)
class PolynomialPotential:
    """V(q) = sum_k V_k q^k / k! for a particle of mass ``mu``.

    Coefficients may be floats, Fractions or sympy symbols; the symbolic
    engines keep whatever type they are given.
    """

    mu: object
    coeffs: tuple

    def __post_init__(self):
        coeffs = list(self.coeffs)
        while len(coeffs) > 1 and _is_zero(coeffs[-1]):
            coeffs.pop()
        object.__setattr__(self, "coeffs", tuple(coeffs) if coeffs else (0,))
        if _numeric(self.mu) and not float(self.mu) > 0:
            raise ValidationError(f"mass mu must be > 0, got {self.mu}")
        if self.degree > MAX_DEGREE:
            raise ValidationError(f"potential degree {self.degree} exceeds the cap {MAX_DEGREE}")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def V(self, k: int):
        return self.coeffs[k] if k < len(self.coeffs) else 0

    def power_coeffs(self) -> list:
        """Coefficients c_k of V = sum c_k q^k."""
        return [_div_factorial(v, k) for k, v in enumerate(self.coeffs)]

    def force_power_coeffs(self) -> list:
        """Coefficients of V'(q) = sum_k V_{k+1} q^k / k!."""
        return [_div_factorial(v, k) for k, v in enumerate(self.coeffs[1:])] or [0]

    def value(self, q):
        return np.polynomial.polynomial.polyval(q, [float(c) for c in self.power_coeffs()])

    def dV(self, q):
        coeffs = [float(c) for c in self.force_power_coeffs()]
        out = np.full_like(np.asarray(q, dtype=float), coeffs[-1])
        for c in reversed(coeffs[:-1]):
            out = out * q + c
        return out

    def hamiltonian(self) -> WeylPolynomial:
        """p^2 / (2 mu) + V(q) as a Weyl polynomial."""
        terms = {(0, 2, 0): _half_inverse(self.mu)}
        for k, c in enumerate(self.power_coeffs()):
            if not _is_zero(c):
                terms[k, 0, 0] = terms.get((k, 0, 0), 0) + c
        return WeylPolynomial(terms)

    def energy(self, q, p):
        return p**2 / (2 * float(self.mu)) + self.value(q)


def _numeric(x) -> bool:
    return isinstance(x, (int, float, Fraction)) or isinstance(x, np.floating)


def _is_zero(x) -> bool:
    try:
        return x == 0
    except TypeError:
        return False


def _div_factorial(v, k: int):
    f = math.factorial(k)
    if isinstance(v, (int, Fraction)):
        return Fraction(v, f) if isinstance(v, int) else v / f
    return v / f


def _half_inverse(mu):
    if isinstance(mu, (int, Fraction)):
        return Fraction(1) / (2 * Fraction(mu))
    return 1 / (2 * mu)
