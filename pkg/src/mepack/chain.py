"""Harmonic chain of N+1 particles: normal modes, phonon Gibbs state, length.

H = sum_n p_n^2 / 2mu + (kappa^2 / 2) sum_n (x_{n+1} - x_n - xi)^2, so the
coupling matrix is kappa^2 times the path-graph Laplacian. Its eigenvalues give
mu omega_m^2 = 4 kappa^2 sin^2(m pi / (2 (N+1))) and its eigenvectors are the
cosine (DCT-II) modes.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.special import logsumexp

from .core import PacketParams
from .dynamics import PolynomialPotential, TrajectoryRecord, closed_form_record
from .errors import InfeasibleEnergyError, ValidationError
from .dynamics.records import fmt

DENSE_LIMIT = 2048


@dataclass(frozen=True)
class ChainModel:
    N: int
    mu: float
    kappa: float
    xi: float
    hbar: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError(f"N must be an integer >= 2, got {self.N}")
        for name in ("mu", "kappa", "xi", "hbar"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def n_particles(self) -> int:
        return self.N + 1

    @property
    def total_mass(self) -> float:
        return self.n_particles * self.mu

    def coupling_matrix(self) -> np.ndarray:
        """kappa^2 times the path-graph Laplacian on N+1 sites."""
        n = self.n_particles
        diag = np.full(n, 2.0)
        diag[0] = diag[-1] = 1.0
        K = np.diag(diag) - np.eye(n, k=1) - np.eye(n, k=-1)
        return self.kappa**2 * K


def exact_frequencies(model: ChainModel) -> np.ndarray:
    m = np.arange(model.n_particles)
    return 2 * model.kappa / math.sqrt(model.mu) * np.sin(m * math.pi / (2 * model.n_particles))


def printed_frequencies(model: ChainModel) -> np.ndarray:
    """The sin(m pi / 2N) variant; it reaches 2 kappa / sqrt(mu) at m = N."""
    m = np.arange(model.n_particles)
    return 2 * model.kappa / math.sqrt(model.mu) * np.sin(m * math.pi / (2 * model.N))


def printed_basis(model: ChainModel) -> np.ndarray:
    """Y[n-1, m] from the cos/sin formulas with argument pi m / N (n = 1..N+1)."""
    N = model.N
    n = np.arange(1, N + 2)[:, None]
    m = np.arange(N + 1)[None, :]
    arg = math.pi * m / N * (n - (N + 2) / 2)
    amp = np.where(m == 0, 1 / math.sqrt(N + 1), math.sqrt(2 / (N + 1)))
    return amp * np.where(m % 2 == 0, np.cos(arg), np.sin(arg))


def cosine_basis(model: ChainModel) -> np.ndarray:
    """Exact orthonormal eigenvectors Y[n-1, m] = A(m) cos(m pi (2n - 1) / (2 (N+1)))."""
    n1 = model.n_particles
    n = np.arange(1, n1 + 1)[:, None]
    m = np.arange(n1)[None, :]
    amp = np.where(m == 0, 1 / math.sqrt(n1), math.sqrt(2 / n1))
    return amp * np.cos(m * math.pi * (2 * n - 1) / (2 * n1))


@dataclass
class ModeBasis:
    omega: np.ndarray
    Y: np.ndarray | None
    source: str
    omega_printed: np.ndarray
    residuals: dict = field(default_factory=dict)

    def end_coefficients(self, model: ChainModel) -> tuple[np.ndarray, np.ndarray]:
        """(Y[first], Y[last]) rows, from Y when held, else from the cosine form."""
        if self.Y is not None:
            return self.Y[0], self.Y[-1]
        n1 = model.n_particles
        m = np.arange(n1)
        amp = np.where(m == 0, 1 / math.sqrt(n1), math.sqrt(2 / n1))
        first = amp * np.cos(m * math.pi / (2 * n1))
        last = amp * np.cos(m * math.pi * (2 * n1 - 1) / (2 * n1))
        return first, last

    def row(self, model: ChainModel, n: int) -> np.ndarray:
        """Y^m_n for all m (n is 1-based)."""
        if self.Y is not None:
            return self.Y[n - 1]
        n1 = model.n_particles
        m = np.arange(n1)
        amp = np.where(m == 0, 1 / math.sqrt(n1), math.sqrt(2 / n1))
        return amp * np.cos(m * math.pi * (2 * n - 1) / (2 * n1))


def _fix_signs(Y: np.ndarray) -> np.ndarray:
    # orient each mode so its first component is positive, as the cosine form has
    s = np.sign(Y[0])
    s[s == 0] = 1
    return Y * s


def mode_basis(model: ChainModel, dense: bool | None = None) -> ModeBasis:
    """Diagonalize the coupling matrix.

    Frequencies always come from a tridiagonal eigensolver. Eigenvectors come
    from a dense solve up to ``DENSE_LIMIT`` sites; beyond that the exact
    cosine form is used without materializing Y.
    """
    n1 = model.n_particles
    dense = n1 <= DENSE_LIMIT if dense is None else dense
    d = np.full(n1, 2.0)
    d[0] = d[-1] = 1.0
    e = -np.ones(n1 - 1)
    kap2 = model.kappa**2
    omega_exact = exact_frequencies(model)
    printed = printed_frequencies(model)
    residuals = {}
    if dense:
        lam, Y = eigh_tridiagonal(kap2 * d, kap2 * e)
        lam = np.clip(lam, 0.0, None)
        Y = _fix_signs(Y)
        omega = np.sqrt(lam / model.mu)
        K = model.coupling_matrix()
        D = Y.T @ K @ Y
        scale = float(np.max(np.abs(np.diag(D))))
        off = D - np.diag(np.diag(D))
        residuals["orthogonality"] = float(np.max(np.abs(Y.T @ Y - np.eye(n1))))
        residuals["offdiagonal_rel"] = float(np.max(np.abs(off)) / scale)
        residuals["vs_cosine_basis"] = float(np.max(np.abs(Y - cosine_basis(model))))
        Yp = printed_basis(model)
        residuals["printed_orthogonality"] = float(np.max(np.abs(Yp.T @ Yp - np.eye(n1))))
        source = "dense"
    else:
        lam = eigh_tridiagonal(kap2 * d, kap2 * e, eigvals_only=True)
        omega = np.sqrt(np.clip(lam, 0.0, None) / model.mu)
        Y = None
        source = "cosine"
    residuals["vs_exact_frequencies"] = float(np.max(np.abs(omega - omega_exact)))
    residuals["vs_printed_frequencies"] = float(np.max(np.abs(omega - printed)))
    return ModeBasis(omega, Y, source, printed, residuals)


@dataclass(frozen=True)
class PhononGibbs:
    lam: float
    omega: np.ndarray
    nbar: np.ndarray
    E: float
    hbar: float

    @property
    def zero_point(self) -> float:
        return float(0.5 * self.hbar * np.sum(self.omega))


def _internal(omega: np.ndarray) -> np.ndarray:
    return omega[1:]


def occupations(omega: np.ndarray, lam: float, hbar: float) -> np.ndarray:
    x = lam * hbar * omega
    # exp(-x) / (1 - exp(-x)) stays finite where 1 / expm1(x) overflows
    return np.exp(-x) / -np.expm1(-x)


def _log_thermal_energy(omega: np.ndarray, lam: float, hbar: float) -> float:
    """ln sum hbar omega nbar, accurate deep in the ground-state regime."""
    x = lam * hbar * omega
    return float(logsumexp(np.log(hbar * omega) - x - np.log(-np.expm1(-x))))


def energy_of_lambda(omega: np.ndarray, lam: float, hbar: float) -> float:
    """E = -d ln Z / d lambda = sum hbar omega (nbar + 1/2) over internal modes."""
    return float(np.sum(hbar * omega * (occupations(omega, lam, hbar) + 0.5)))


def zero_point_energy(model: ChainModel, basis: ModeBasis | None = None) -> float:
    basis = basis or mode_basis(model)
    return float(0.5 * model.hbar * np.sum(_internal(basis.omega)))


def gibbs_from_lambda(model: ChainModel, lam: float, basis: ModeBasis | None = None) -> PhononGibbs:
    if not lam > 0:
        raise ValidationError(f"lambda must be > 0, got {lam}")
    basis = basis or mode_basis(model)
    omega = _internal(basis.omega)
    nbar = occupations(omega, lam, model.hbar)
    return PhononGibbs(lam, omega, nbar, energy_of_lambda(omega, lam, model.hbar), model.hbar)


def gibbs_from_energy(model: ChainModel, E: float, basis: ModeBasis | None = None,
                      rtol: float = 1e-10) -> PhononGibbs:
    """Invert E(lambda) by bracketed root finding in log lambda."""
    basis = basis or mode_basis(model)
    omega = _internal(basis.omega)
    hbar = model.hbar
    E0 = 0.5 * hbar * float(np.sum(omega))
    if not E > E0:
        raise InfeasibleEnergyError(
            f"E = {E:.6g} is not above the zero-point energy {E0:.6g}; no Gibbs state exists"
        )
    excess = E - E0

    def g(log_lam):
        return _log_thermal_energy(omega, math.exp(log_lam), hbar) - math.log(excess)

    # thermal part is ~ (N / lambda) at high T and ~ exp(-lambda hbar omega_1) at low T
    lo = math.log(len(omega) / excess) - 5.0
    hi = lo + 10.0
    while g(lo) < 0:
        lo -= 10.0
    while g(hi) > 0:
        hi += 10.0
    log_lam = brentq(g, lo, hi, xtol=1e-15, rtol=min(rtol, 1e-12) / 10, maxiter=500)
    lam = math.exp(log_lam)
    nbar = occupations(omega, lam, hbar)
    return PhononGibbs(lam, omega, nbar, energy_of_lambda(omega, lam, hbar), hbar)


def energy_fluctuation(gibbs: PhononGibbs) -> float:
    """Delta E / E in the Gibbs state; Delta E^2 = sum (hbar omega)^2 nbar (nbar + 1)."""
    var = float(np.sum((gibbs.hbar * gibbs.omega) ** 2 * gibbs.nbar * (gibbs.nbar + 1)))
    return math.sqrt(var) / gibbs.E


def log_partition(omega: np.ndarray, lam: float, hbar: float) -> float:
    x = lam * hbar * omega
    return float(np.sum(-0.5 * x - np.log(-np.expm1(-x))))


@dataclass(frozen=True)
class LengthStatistics:
    mean: float
    variance: float
    coefficients: np.ndarray
    convention: str

    @property
    def relative_spread(self) -> float:
        return math.sqrt(self.variance) / self.mean


def length_statistics(model: ChainModel, gibbs: PhononGibbs, basis: ModeBasis | None = None,
                      convention: str = "ends") -> LengthStatistics:
    """Mean and variance of the chain length in the Gibbs state.

    ``convention="ends"`` measures x_{N+1} - x_1 (mean N xi, odd modes only);
    ``"printed"`` measures x_N - x_1 (mean (N-1) xi, both parities).
    """
    basis = basis or mode_basis(model)
    if convention == "ends":
        last, steps = basis.row(model, model.n_particles), model.N
    elif convention == "printed":
        last, steps = basis.row(model, model.N), model.N - 1
    else:
        raise ValidationError(f"unknown length convention {convention!r}")
    c = last - basis.row(model, 1)
    c_int = c[1:]
    w = gibbs.omega
    variance = float(np.sum(c_int**2 * model.hbar / (2 * model.mu * w) * (2 * gibbs.nbar + 1)))
    # zero-mode coefficient is a difference of equal entries, zero up to rounding
    return LengthStatistics(steps * model.xi, variance, c, convention)


def asymptotic_relative_spread(model: ChainModel, lam: float) -> float:
    """(2 sqrt 3 / pi) / (kappa xi sqrt(lambda) sqrt(N+1))."""
    return 2 * math.sqrt(3) / math.pi / (model.kappa * model.xi * math.sqrt(lam) * math.sqrt(model.N + 1))


def equipartition_relative_spread(model: ChainModel, lam: float) -> float:
    """Classical high-temperature value 1 / (kappa xi sqrt(lambda N))."""
    return 1.0 / (model.kappa * model.xi * math.sqrt(lam * model.N))


def cm_packet(model: ChainModel, params: PacketParams, times) -> TrajectoryRecord:
    """Centre-of-mass ME packet: a free particle of mass (N+1) mu."""
    free = PolynomialPotential(model.total_mass, (0.0,))
    return closed_form_record(params, free, times)


def zero_mode_residuals(model: ChainModel) -> dict:
    """[X, H_int] and [P_total, H_int] reduce to K @ 1 and the internal projector on 1."""
    n1 = model.n_particles
    ones = np.ones(n1)
    K = model.coupling_matrix()
    proj = np.eye(n1) - np.outer(ones, ones) / n1
    return {"force_on_cm": float(np.max(np.abs(K @ ones))), "internal_kinetic": float(np.max(np.abs(proj @ ones)))}


def chain_report_csv(basis: ModeBasis, gibbs: PhononGibbs, length: LengthStatistics) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "omega_m", "nbar_m"])
    w.writerow([0, fmt(basis.omega[0]), fmt(0.0)])
    for m, (om, nb) in enumerate(zip(gibbs.omega, gibbs.nbar), start=1):
        w.writerow([m, fmt(om), fmt(nb)])
    w.writerow([])
    w.writerow(["lambda", "E", "L_mean", "dL_rel"])
    w.writerow([fmt(gibbs.lam), fmt(gibbs.E), fmt(length.mean), fmt(length.relative_spread)])
    return buf.getvalue()
