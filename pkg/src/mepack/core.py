"""Packet parameters and the classical maximum-entropy packet.

A classical ME packet is the phase-space distribution of largest entropy
with prescribed means and variances of every coordinate and momentum. It is
a product of Gaussians; the functions here give its Lagrange multipliers,
density, entropy and monomial moments, plus the integer coefficient tables
that control the leading spread dependence of those moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, InvalidVarianceError, ValidationError


@dataclass(frozen=True)
class Constants:
    """Action unit ``hbar`` and the phase-space cell volume ``v`` (default 2*pi*hbar)."""

    hbar: float = 1.0
    v: float | None = None

    def __post_init__(self):
        if not (self.hbar > 0 and math.isfinite(self.hbar)):
            raise ValidationError(f"hbar must be positive and finite, got {self.hbar}")
        if self.v is None:
            object.__setattr__(self, "v", 2.0 * math.pi * self.hbar)
        if not (self.v > 0 and math.isfinite(self.v)):
            raise ValidationError(f"v must be positive and finite, got {self.v}")


@dataclass(frozen=True)
class Dof:
    Q: float
    P: float
    dQ: float
    dP: float

    def __post_init__(self):
        for name in ("Q", "P", "dQ", "dP"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if not self.dQ > 0:
            raise InvalidVarianceError(f"dQ must be > 0, got {self.dQ}")
        if not self.dP > 0:
            raise InvalidVarianceError(f"dP must be > 0, got {self.dP}")


@dataclass(frozen=True)
class PacketParams:
    dofs: tuple[Dof, ...]
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        dofs = tuple(d if isinstance(d, Dof) else Dof(*d) for d in self.dofs)
        if not dofs:
            raise ValidationError("at least one degree of freedom is required")
        object.__setattr__(self, "dofs", dofs)
        for nu in self.nu:
            if not (math.isfinite(nu) and nu > 0):
                raise ValidationError(f"derived nu must be finite and positive, got {nu}")

    @classmethod
    def single(cls, Q=0.0, P=0.0, dQ=1.0, dP=1.0, hbar=1.0, v=None) -> "PacketParams":
        return cls((Dof(Q, P, dQ, dP),), Constants(hbar, v))

    @property
    def n(self) -> int:
        return len(self.dofs)

    @property
    def hbar(self) -> float:
        return self.constants.hbar

    @property
    def nu(self) -> list[float]:
        """Dimensionless uncertainty 2*dQ*dP/hbar per degree of freedom."""
        return [2.0 * d.dQ * d.dP / self.constants.hbar for d in self.dofs]

    def dof(self, k: int = 0) -> Dof:
        return self.dofs[k]

    def scaled(self, s: float) -> "PacketParams":
        """Same means, both spreads multiplied by ``s`` (so nu scales as s**2)."""
        return PacketParams(
            tuple(Dof(d.Q, d.P, s * d.dQ, s * d.dP) for d in self.dofs), self.constants
        )


@dataclass(frozen=True)
class ClassicalMultipliers:
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    l4: np.ndarray


@dataclass(frozen=True)
class ClassicalMEPacket:
    params: PacketParams
    multipliers: ClassicalMultipliers

    @classmethod
    def from_params(cls, params: PacketParams) -> "ClassicalMEPacket":
        return cls(params, classical_multipliers(params))


def classical_multipliers(params: PacketParams) -> ClassicalMultipliers:
    Q = np.array([d.Q for d in params.dofs])
    P = np.array([d.P for d in params.dofs])
    dQ2 = np.array([d.dQ for d in params.dofs]) ** 2
    dP2 = np.array([d.dP for d in params.dofs]) ** 2
    return ClassicalMultipliers(-Q / dQ2, -P / dP2, 1.0 / (2.0 * dQ2), 1.0 / (2.0 * dP2))


def classical_partition(multipliers: ClassicalMultipliers, v: float) -> float:
    """Product over dofs of (pi/v) exp(l1^2/4l3 + l2^2/4l4) / sqrt(l3 l4)."""
    m = multipliers
    z = (np.pi / v) / np.sqrt(m.l3 * m.l4) * np.exp(m.l1**2 / (4 * m.l3) + m.l2**2 / (4 * m.l4))
    return float(np.prod(z))


def classical_density(packet: ClassicalMEPacket, q, p):
    """Dimensionless density, normalized against the measure dq dp / v.

    ``q`` and ``p`` have trailing dimension equal to the number of dofs; for a
    single dof scalars and plain arrays are accepted.
    """
    params = packet.params
    n = params.n
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if n == 1 and (q.ndim == 0 or q.shape[-1] != 1):
        q = q[..., None]
        p = p[..., None]
    if q.shape[-1] != n or p.shape[-1] != n:
        raise DimensionMismatchError(f"expected {n} coordinates and momenta per point")
    Q = np.array([d.Q for d in params.dofs])
    P = np.array([d.P for d in params.dofs])
    dQ = np.array([d.dQ for d in params.dofs])
    dP = np.array([d.dP for d in params.dofs])
    expo = -((q - Q) ** 2) / (2 * dQ**2) - (p - P) ** 2 / (2 * dP**2)
    pref = (params.constants.v / (2 * np.pi)) ** n / np.prod(dQ * dP)
    return pref * np.exp(expo.sum(axis=-1))


def classical_entropy(params: PacketParams) -> float:
    v = params.constants.v
    return float(sum(1.0 + math.log(2 * math.pi * d.dQ * d.dP / v) for d in params.dofs))


def gaussian_moment(k: int, mean, var):
    """Raw moment E[x**k] of a normal law, exact for rational or symbolic inputs.

    Uses m_k = mean*m_{k-1} + (k-1)*var*m_{k-2}.
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    prev, cur = 0, 1
    for j in range(1, k + 1):
        prev, cur = cur, mean * cur + (j - 1) * var * prev
    return cur


def classical_moment(params: PacketParams, k: int, l: int, dof: int = 0):
    """<q^k p^l> for one dof; factorizes into the two marginal moments."""
    d = params.dofs[dof]
    return gaussian_moment(k, d.Q, d.dQ**2) * gaussian_moment(l, d.P, d.dP**2)


def partition_moment(params: PacketParams, k: int, l: int, dof: int = 0) -> float:
    """Same moment via (-1)^(k+l) Z^-1 d^(k+l) Z / dl1^k dl2^l (cross-check path)."""
    import sympy as sp

    l1, l2, l3, l4 = sp.symbols("l1 l2 l3 l4")
    Z = sp.pi / sp.sqrt(l3 * l4) * sp.exp(l1**2 / (4 * l3) + l2**2 / (4 * l4))
    expr = sp.diff(Z, l1, k, l2, l) * (-1) ** (k + l) / Z
    m = classical_multipliers(PacketParams((params.dofs[dof],), params.constants))
    vals = {l1: float(m.l1[0]), l2: float(m.l2[0]), l3: float(m.l3[0]), l4: float(m.l4[0])}
    return float(sp.simplify(expr).subs(vals))


@dataclass(frozen=True)
class CoefficientTables:
    A: int
    B: int
    a: dict
    b: dict


def highest_order_coefficients(m: int) -> CoefficientTables:
    """Integer tables a[m,k], b[m,k] from the derivative recursion of exp(l1^2/4l3).

    b[1,1] = 1, then for each level
        a[m,1] = b[m,1], a[m,k] = b[m,k-1] + (2k-1) b[m,k], a[m,m+1] = b[m,m]
        b[m+1,k] = a[m,k] + 2k a[m,k+1],  b[m+1,m+1] = a[m,m+1]
    Returns A_m = a[m,1] and B_m = b[m,1] with the full tables up to level m.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    a: dict[tuple[int, int], int] = {}
    b: dict[tuple[int, int], int] = {(1, 1): 1}
    for level in range(1, m + 1):
        a[level, 1] = b[level, 1]
        for k in range(2, level + 1):
            a[level, k] = b[level, k - 1] + (2 * k - 1) * b[level, k]
        a[level, level + 1] = b[level, level]
        if level < m:
            for k in range(1, level + 1):
                b[level + 1, k] = a[level, k] + 2 * k * a[level, k + 1]
            b[level + 1, level + 1] = a[level, level + 1]
    return CoefficientTables(a[m, 1], b[m, 1], a, b)


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def as_params(params_or_dof: PacketParams | Sequence[float]) -> PacketParams:
    if isinstance(params_or_dof, PacketParams):
        return params_or_dof
    return PacketParams.single(*params_or_dof)
