"""Independent reference evolutions: classical ensemble and truncated quantum."""

from __future__ import annotations

import math

import numpy as np

from ..core import PacketParams
from ..errors import MCInstabilityError, TruncationLeakError, ValidationError
from ..oscillator import ladder_pair
from ..qpacket import QuantumMEPacket, build_truncated_state, minimal_cutoff
from .potential import PolynomialPotential
from .records import TrajectoryRecord

CHUNK = 8192
DRIFT_TOL = 1e-6
MAX_REJECT_FRACTION = 1e-3
LEAK_TOL = 1e-6


def _rk4(q, p, h, steps, mu, dV):
    for _ in range(steps):
        k1q, k1p = p / mu, -dV(q)
        k2q, k2p = (p + 0.5 * h * k1p) / mu, -dV(q + 0.5 * h * k1q)
        k3q, k3p = (p + 0.5 * h * k2p) / mu, -dV(q + 0.5 * h * k2q)
        k4q, k4p = (p + h * k3p) / mu, -dV(q + h * k3q)
        q = q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q)
        p = p + h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return q, p


def _chunk_sizes(samples: int) -> list[int]:
    full, rest = divmod(samples, CHUNK)
    return [CHUNK] * full + ([rest] if rest else [])


def mc_oracle(params: PacketParams, potential: PolynomialPotential, t_grid, samples: int = 100_000,
              seed: int = 0, steps_per_unit: int | None = None, n_steps: int = 4096,
              drift_tol: float = DRIFT_TOL) -> TrajectoryRecord:
    """Sample the classical ME Gaussian and integrate Hamilton's equations.

    Each chunk of samples draws from its own child of ``SeedSequence(seed)``,
    so results do not depend on how chunks are scheduled. The fixed step is
    T / ``n_steps`` with T the last grid time.
    """
    if samples < 1000:
        raise ValidationError(f"samples must be >= 1000, got {samples}")
    if params.n != 1:
        raise ValidationError("the MC oracle is single-dof")
    times = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise ValidationError("time grid must be non-negative and non-decreasing")
    d = params.dofs[0]
    mu = float(potential.mu)
    T = float(times[-1])
    h_max = T / n_steps if T > 0 else 1.0

    sizes = _chunk_sizes(samples)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    q = np.empty(samples)
    p = np.empty(samples)
    start = 0
    for size, child in zip(sizes, children):
        rng = np.random.default_rng(child)
        q[start:start + size] = d.Q + d.dQ * rng.standard_normal(size)
        p[start:start + size] = d.P + d.dP * rng.standard_normal(size)
        start += size

    E0 = potential.energy(q, p)
    e_scale = np.abs(E0) + float(np.mean(np.abs(E0))) + 1e-300
    snapshots = []
    t_now = 0.0
    for t in times:
        gap = t - t_now
        if gap > 0:
            steps = max(1, int(math.ceil(gap / h_max - 1e-9)))
            with np.errstate(over="ignore", invalid="ignore"):
                q, p = _rk4(q, p, gap / steps, steps, mu, potential.dV)
            t_now = t
        snapshots.append((q.copy(), p.copy()))

    with np.errstate(over="ignore", invalid="ignore"):
        drift = np.abs(potential.energy(q, p) - E0) / e_scale
    good = np.isfinite(drift) & (drift <= drift_tol)
    rejected = int(samples - good.sum())
    if rejected > MAX_REJECT_FRACTION * samples:
        raise MCInstabilityError(
            f"{rejected} of {samples} samples drift in energy by more than {drift_tol:g}; "
            f"max drift {np.nanmax(drift):.2e}. Increase n_steps or shorten the run."
        )

    n = int(good.sum())
    cols = {k: [] for k in ("Q", "P", "dQ", "dP")}
    errs = {k: [] for k in ("Q", "P", "dQ", "dP")}
    for qs, ps in snapshots:
        for key_m, key_s, x in (("Q", "dQ", qs[good]), ("P", "dP", ps[good])):
            mean = float(np.mean(x))
            c = x - mean
            var = float(np.mean(c**2)) * n / (n - 1)
            m4 = float(np.mean(c**4))
            sd = math.sqrt(var)
            cols[key_m].append(mean)
            cols[key_s].append(sd)
            errs[key_m].append(sd / math.sqrt(n))
            # delta method: se(s) = sqrt((m4 - s^4) / n) / (2 s)
            errs[key_s].append(math.sqrt(max(m4 - var**2, 0.0) / n) / (2 * sd) if sd > 0 else 0.0)
    E_end = potential.energy(q[good], p[good])
    mean_drift = abs(float(np.mean(E_end) - np.mean(E0[good]))) / (abs(float(np.mean(E0[good]))) + float(np.std(E0[good])))
    return TrajectoryRecord(
        times, cols["Q"], cols["P"], cols["dQ"], cols["dP"], "mc", err=errs,
        diagnostics={"samples": n, "rejected": rejected, "seed": seed, "max_step": h_max,
                     "mean_energy_drift": mean_drift, "max_sample_drift": float(np.max(drift[good]))},
    )


def hamiltonian_matrix(potential: PolynomialPotential, dim: int, Q: float, P: float,
                       alpha: float, beta: float) -> np.ndarray:
    """p^2/2mu + V(q) in the reference number basis, built padded and cropped."""
    pad = potential.degree + 2
    n = dim + pad
    x, y = ladder_pair(n)
    eye = np.eye(n)
    q = Q * eye + alpha * x
    p = P * eye - 1j * beta * y
    H = (p @ p) / (2 * float(potential.mu))
    qk = eye.astype(complex)
    for c in potential.power_coeffs():
        H = H + float(c) * qk
        qk = qk @ q
    H = H[:dim, :dim]
    return 0.5 * (H + H.conj().T)


def matrix_oracle(packet: QuantumMEPacket, potential: PolynomialPotential, t_grid,
                  dim: int | None = None, leak_tol: float = LEAK_TOL) -> TrajectoryRecord:
    """Evolve the truncated density matrix by T(t) = U T U^+ with U from eigh(H)."""
    params = packet.params
    if params.n != 1:
        raise ValidationError("the matrix oracle is single-dof")
    nu = packet.nu[0]
    if dim is None:
        dim = max(64, 2 * minimal_cutoff(nu))
    state = build_truncated_state(packet, dim)
    hbar = params.hbar
    H = hamiltonian_matrix(potential, dim, state.Q, state.P, state.alpha, state.beta)
    E, Vec = np.linalg.eigh(H)
    rho0 = Vec.conj().T @ state.matrix @ Vec

    q, p = state.operators(pad=2)
    q2 = (q @ q)[:dim, :dim]
    p2 = (p @ p)[:dim, :dim]
    q, p = q[:dim, :dim], p[:dim, :dim]
    # observables in the energy basis
    ops = [Vec.conj().T @ o @ Vec for o in (q, p, q2, p2)]
    edge = max(4, dim // 10)
    edge_proj = Vec[dim - edge:, :]

    times = np.asarray(t_grid, dtype=float)
    cols = {k: [] for k in ("Q", "P", "dQ", "dP")}
    leaks = []
    for t in times:
        phase = np.exp(-1j * E * t / hbar)
        rho = phase[:, None] * rho0 * phase.conj()[None, :]
        m = [float(np.real(np.sum(rho * o.T))) for o in ops]
        # occupation of the top levels of the reference basis
        top = edge_proj @ rho @ edge_proj.conj().T
        leak = float(np.real(np.trace(top)))
        leaks.append(leak)
        if leak > leak_tol:
            raise TruncationLeakError(
                f"occupation {leak:.2e} of the top {edge} levels exceeds {leak_tol:g} at t = {t:.6g}; "
                f"increase dim beyond {dim}"
            )
        cols["Q"].append(m[0])
        cols["P"].append(m[1])
        cols["dQ"].append(math.sqrt(max(m[2] - m[0] ** 2, 0.0)))
        cols["dP"].append(math.sqrt(max(m[3] - m[1] ** 2, 0.0)))
    leaks = np.array(leaks)
    err = {k: np.full(len(times), 0.0) + leaks for k in cols}
    return TrajectoryRecord(
        times, cols["Q"], cols["P"], cols["dQ"], cols["dP"], "matrix", err=err,
        diagnostics={"dim": dim, "max_leak": float(leaks.max(initial=0.0)),
                     "truncation_defect": state.truncation_defect},
    )
