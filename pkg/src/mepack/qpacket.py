"""Quantum maximum-entropy packets.

The density operator of largest von Neumann entropy with fixed <q>, <p>,
<q^2>, <p^2> is diagonal in the eigenbasis of the reference oscillator

    K' = (q - Q)^2 / (2 dQ^2) + (p - P)^2 / (2 dP^2),

with geometric weights R_m = 2 (nu-1)^m / (nu+1)^(m+1) where
nu = 2 dQ dP / hbar. Everything here is per degree of freedom; several dofs
combine as a tensor product with no correlations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PacketParams
from .errors import TruncationError, UncertaintyViolationError, ValidationError
from .oscillator import ladder_pair

TAIL_TOL = 1e-10


def _log_ratio(nu: float) -> float:
    """ln((nu+1)/(nu-1)), computed stably for large nu."""
    return math.log1p(2.0 / (nu - 1.0))


def _require_mixed(nu: float):
    if nu < 1.0:
        raise UncertaintyViolationError(
            f"nu = {nu:.6g} < 1: dQ*dP below hbar/2 violates the uncertainty relation", nu=nu
        )
    if nu == 1.0:
        raise UncertaintyViolationError(
            "nu = 1 is the pure-state boundary; multipliers diverge", nu=nu, pure_boundary=True
        )


@dataclass(frozen=True)
class QuantumMultipliers:
    l1: np.ndarray
    l2: np.ndarray
    l3: np.ndarray
    l4: np.ndarray
    hbar: float = 1.0


def quantum_multipliers(params: PacketParams) -> QuantumMultipliers:
    l1, l2, l3, l4 = [], [], [], []
    for d, nu in zip(params.dofs, params.nu):
        _require_mixed(nu)
        g = 0.5 * nu * _log_ratio(nu)
        l1.append(-d.Q / d.dQ**2 * g)
        l2.append(-d.P / d.dP**2 * g)
        l3.append(g / (2 * d.dQ**2))
        l4.append(g / (2 * d.dP**2))
    return QuantumMultipliers(*(np.array(x) for x in (l1, l2, l3, l4)), hbar=params.hbar)


def quantum_partition(m: QuantumMultipliers) -> float:
    """Z = exp(l1^2/4l3 + l2^2/4l4) / (2 sinh(hbar sqrt(l3 l4))), multiplied over dofs."""
    expo = m.l1**2 / (4 * m.l3) + m.l2**2 / (4 * m.l4)
    return float(np.prod(np.exp(expo) / (2 * np.sinh(m.hbar * np.sqrt(m.l3 * m.l4)))))


def quantum_log_partition(m: QuantumMultipliers) -> float:
    expo = m.l1**2 / (4 * m.l3) + m.l2**2 / (4 * m.l4)
    return float(np.sum(expo - np.log(2 * np.sinh(m.hbar * np.sqrt(m.l3 * m.l4)))))


def quantum_entropy(nu: float) -> float:
    """-ln 2 + (nu+1)/2 ln(nu+1) - (nu-1)/2 ln(nu-1); zero at nu = 1."""
    if nu < 1.0:
        raise UncertaintyViolationError(f"nu = {nu} < 1", nu=nu)
    tail = 0.0 if nu == 1.0 else 0.5 * (nu - 1) * math.log(nu - 1)
    return -math.log(2) + 0.5 * (nu + 1) * math.log(nu + 1) - tail


def packet_entropy(params: PacketParams) -> float:
    return sum(quantum_entropy(nu) for nu in params.nu)


def diagonal_weights(nu: float, m_max: int) -> np.ndarray:
    """R_0 .. R_{m_max}."""
    if nu < 1.0:
        raise UncertaintyViolationError(f"nu = {nu} < 1", nu=nu)
    m = np.arange(m_max + 1)
    if nu == 1.0:
        return (m == 0).astype(float)
    ratio = (nu - 1) / (nu + 1)
    return 2.0 / (nu + 1) * ratio**m


def weight_tail(nu: float, M: int) -> float:
    """1 - sum_{m <= M} R_m."""
    if nu == 1.0:
        return 0.0
    return ((nu - 1) / (nu + 1)) ** (M + 1)


def minimal_cutoff(nu: float, tol: float = TAIL_TOL, safety: float = 1.0) -> int:
    """Smallest basis size M with ((nu-1)/(nu+1))^M < tol, times ``safety``."""
    if nu == 1.0:
        return max(1, int(math.ceil(safety)))
    M = int(math.ceil(math.log(tol) / -_log_ratio(nu)))
    while weight_tail(nu, M - 1) >= tol:
        M += 1
    return int(math.ceil(M * safety))


@dataclass(frozen=True)
class QuantumMEPacket:
    params: PacketParams
    nu: tuple
    multipliers: QuantumMultipliers | None

    @classmethod
    def from_params(cls, params: PacketParams) -> "QuantumMEPacket":
        nus = tuple(params.nu)
        for nu in nus:
            if nu < 1.0:
                raise UncertaintyViolationError(
                    f"nu = {nu:.6g} < 1: dQ*dP below hbar/2 violates the uncertainty relation",
                    nu=nu,
                )
        mult = None if any(nu == 1.0 for nu in nus) else quantum_multipliers(params)
        return cls(params, nus, mult)

    @property
    def is_pure(self) -> bool:
        return all(nu == 1.0 for nu in self.nu)

    def entropy(self) -> float:
        return sum(quantum_entropy(nu) for nu in self.nu)


@dataclass(frozen=True)
class TruncatedState:
    """Density matrix in the reference number basis centred at (Q, P).

    In that basis q = Q + alpha (A + A^+) and p = P - i beta (A - A^+) with
    alpha = dQ/sqrt(nu), beta = dP/sqrt(nu) (oscillator mass dP/dQ, frequency 1).
    """

    dim: int
    matrix: np.ndarray
    Q: float
    P: float
    alpha: float
    beta: float
    hbar: float
    truncation_defect: float
    tail_bound: float
    diagnostics: dict = field(default_factory=dict)

    def operators(self, pad: int = 0):
        """q, p at size dim + pad (pad > 0 lets callers form exact products and crop)."""
        x, y = ladder_pair(self.dim + pad)
        eye = np.eye(self.dim + pad)
        return self.Q * eye + self.alpha * x, self.P * eye - 1j * self.beta * y

    def expect(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ op))

    def moments(self) -> dict:
        q, p = self.operators(pad=2)
        n = self.dim
        q2 = (q @ q)[:n, :n]
        p2 = (p @ p)[:n, :n]
        q, p = q[:n, :n], p[:n, :n]
        return {
            "q": self.expect(q).real,
            "p": self.expect(p).real,
            "q2": self.expect(q2).real,
            "p2": self.expect(p2).real,
        }

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)[::-1]

    def entropy(self) -> float:
        return von_neumann_entropy(self.matrix)

    def report(self) -> str:
        mom = self.moments()
        lines = [
            f"dim = {self.dim}",
            f"truncation defect = {self.truncation_defect:.3e}",
            f"tail bound = {self.tail_bound:.3e}",
        ]
        for key, target in self.diagnostics.get("targets", {}).items():
            lines.append(f"residual {key} = {mom[key] - target:.3e}")
        return "\n".join(lines)


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log(w)))


def build_truncated_state(packet: QuantumMEPacket, dim: int | None = None, dof: int = 0,
                          tol: float = TAIL_TOL) -> TruncatedState:
    """Realize the packet as a dim x dim matrix via functional calculus on K'."""
    params = packet.params
    d = params.dofs[dof]
    nu = packet.nu[dof]
    need = minimal_cutoff(nu, tol)
    if dim is None:
        dim = need
    if dim < need:
        raise TruncationError(
            f"dim = {dim} leaves weight tail {weight_tail(nu, dim - 1):.2e} > {tol:.0e}; use dim >= {need}",
            suggested_dim=need,
        )
    alpha = d.dQ / math.sqrt(nu)
    beta = d.dP / math.sqrt(nu)
    x, y = ladder_pair(dim + 2)
    u = alpha * x
    w = -1j * beta * y
    kprime = ((u @ u) / (2 * d.dQ**2) + (w @ w) / (2 * d.dP**2))[:dim, :dim]
    kprime = 0.5 * (kprime + kprime.conj().T)
    evals, evecs = np.linalg.eigh(kprime)
    if nu == 1.0:
        f = (evals == evals.min()).astype(float)
    else:
        beta_eff = 0.5 * nu * _log_ratio(nu)
        f = 2.0 / math.sqrt(nu**2 - 1) * np.exp(-beta_eff * evals)
    rho = (evecs * f) @ evecs.conj().T
    trace = float(np.trace(rho).real)
    rho = rho / trace
    return TruncatedState(
        dim=dim,
        matrix=0.5 * (rho + rho.conj().T),
        Q=d.Q,
        P=d.P,
        alpha=alpha,
        beta=beta,
        hbar=params.hbar,
        truncation_defect=1.0 - trace,
        tail_bound=weight_tail(nu, dim - 1),
        diagnostics={"targets": {"q": d.Q, "p": d.P, "q2": d.Q**2 + d.dQ**2, "p2": d.P**2 + d.dP**2}},
    )


def pure_limit_wavefunction(packet: QuantumMEPacket, q, dof: int = 0) -> np.ndarray:
    """Position amplitudes of the nu = 1 packet (a minimum-uncertainty Gaussian)."""
    nu = packet.nu[dof]
    if not math.isclose(nu, 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValidationError(f"pure-state wavefunction needs nu = 1, got {nu}")
    d = packet.params.dofs[dof]
    hbar = packet.params.hbar
    q = np.asarray(q, dtype=float)
    norm = (1.0 / (2 * np.pi * d.dQ**2)) ** 0.25
    return norm * np.exp(-((q - d.Q) ** 2) / (4 * d.dQ**2) + 1j * d.P * q / hbar)
