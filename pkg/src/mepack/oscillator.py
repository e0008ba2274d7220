"""Truncated harmonic-oscillator matrices.

Products of truncated matrices are wrong near the cutoff, so polynomial
operators are built in a padded space and cropped afterwards.
"""

import numpy as np


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def ladder_pair(dim: int):
    """Return (A + A^dagger, A - A^dagger) at the given size."""
    a = annihilation(dim)
    return a + a.T, a - a.T


def position_momentum(dim: int, Q=0.0, P=0.0, alpha=1.0, beta=1.0):
    """q = Q + alpha (A + A^+), p = P - i beta (A - A^+) as dense matrices."""
    x, y = ladder_pair(dim)
    eye = np.eye(dim)
    return Q * eye + alpha * x, P * eye - 1j * beta * y


def polynomial_matrix(coeffs, dim: int, Q=0.0, alpha=1.0):
    """sum_k coeffs[k] q^k cropped to ``dim`` with q = Q + alpha (A + A^+)."""
    deg = max(len(coeffs) - 1, 0)
    big = dim + deg + 1
    x, _ = ladder_pair(big)
    q = Q * np.eye(big) + alpha * x
    out = np.zeros((big, big))
    power = np.eye(big)
    for c in coeffs:
        if c:
            out = out + c * power
        power = power @ q
    return out[:dim, :dim]


def monomial_matrix(a: int, b: int, dim: int, Q=0.0, P=0.0, alpha=1.0, beta=1.0):
    """q^a p^b cropped to ``dim``."""
    big = dim + a + b + 1
    q, p = position_momentum(big, Q, P, alpha, beta)
    out = np.linalg.matrix_power(q, a) @ np.linalg.matrix_power(p, b)
    return out[:dim, :dim]
