"""Quantum-classical deviation as the packet widens at fixed hbar."""

from __future__ import annotations

import numpy as np

from ..core import PacketParams
from ..errors import NumericalError, ValidationError
from ..weyl import WeylPolynomial, classical_expectation, quantum_expectation
from .potential import PolynomialPotential
from .records import ScanResult
from .taylor import (OBSERVABLES, _floors, _sum_series, taylor_derivatives_classical,
                     taylor_derivatives_quantum)

ZERO_FLOOR = 1e-9
KEYS = ("Q", "P", "dQ", "dP", "varQ", "varP")


def deviation(x_quantum: float, x_classical: float) -> float:
    """Relative when the classical value is clear of zero, absolute otherwise."""
    diff = x_quantum - x_classical
    if abs(x_classical) > ZERO_FLOOR:
        return diff / abs(x_classical)
    return diff


def _summed(derivs, t: float, floors: dict, tol: float) -> dict:
    m = {}
    for name in OBSERVABLES:
        m[name], tail = _sum_series(derivs.coefficients(name), t)
        if tail > tol * (abs(m[name]) + floors[name]):
            raise NumericalError(f"<{name}> series not converged at t = {t:g} (last terms {tail:.2e})")
    var_q = m["q2"] - m["q"] ** 2
    var_p = m["p2"] - m["p"] ** 2
    if var_q <= 0 or var_p <= 0:
        raise NumericalError("summed variance is not positive")
    return {"Q": m["q"], "P": m["p"], "dQ": var_q**0.5, "dP": var_p**0.5, "varQ": var_q, "varP": var_p}


def classical_limit_scan(base: PacketParams, potential: PolynomialPotential, t_probe: float, s_grid,
                         K: int = 10, tol: float = 1e-8) -> ScanResult:
    """Scale dQ, dP by each s (so nu grows as s^2) and compare the engines at ``t_probe``.

    A scan point whose series fails the remainder test, or whose packet is
    invalid, keeps NaN deviations and a note naming the failure.
    """
    if base.n != 1:
        raise ValidationError("the scan is single-dof")
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(s_grid <= 0):
        raise ValidationError("scale factors must be positive")
    dev = {k: [] for k in KEYS}
    quantum = {k: [] for k in KEYS}
    classical = {k: [] for k in KEYS}
    nus, notes = [], []
    for s in s_grid:
        params = base.scaled(float(s))
        nus.append(params.nu[0])
        try:
            floors = _floors(params.dofs[0])
            qv = _summed(taylor_derivatives_quantum(params, potential, K), t_probe, floors, tol)
            cv = _summed(taylor_derivatives_classical(params, potential, K), t_probe, floors, tol)
        except (NumericalError, ValidationError) as exc:
            notes.append(f"s = {s:g}: {type(exc).__name__}: {exc}")
            for k in KEYS:
                dev[k].append(np.nan)
                quantum[k].append(np.nan)
                classical[k].append(np.nan)
            continue
        for k in KEYS:
            dev[k].append(deviation(qv[k], cv[k]))
            quantum[k].append(qv[k])
            classical[k].append(cv[k])
    as_arrays = lambda d: {k: np.array(v) for k, v in d.items()}  # noqa: E731
    return ScanResult(s_grid, np.array(nus), as_arrays(dev), as_arrays(quantum), as_arrays(classical),
                      float(t_probe), "taylor", notes)


def moment_scan(base: PacketParams, word: WeylPolynomial, s_grid) -> ScanResult:
    """Deviation of a single moment <word> (symmetrized) between the packets."""
    s_grid = np.asarray(s_grid, dtype=float)
    sym = word.symmetrized()
    qv, cv, nus = [], [], []
    for s in s_grid:
        params = base.scaled(float(s))
        nus.append(params.nu[0])
        qv.append(quantum_expectation(sym, params, check=False))
        cv.append(classical_expectation(sym, params))
    dev = np.array([deviation(a, b) for a, b in zip(qv, cv)])
    return ScanResult(s_grid, np.array(nus), {"moment": dev}, {"moment": np.array(qv)},
                      {"moment": np.array(cv)}, 0.0, "moment")
