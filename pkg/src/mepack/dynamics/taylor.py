"""Time derivatives of the packet moments at t = 0 and their series summation.

Both engines produce D_k[O] = <L^k O> for O in (q, p, q^2, p^2), where L is
the Liouvillian (classical) or [., H] / (i hbar) (quantum). The derivatives
of the means and spreads then follow from power-series arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import sympy as sp

from ..core import PacketParams
from ..errors import DegreeCapError, SeriesDivergenceError, ValidationError
from ..weyl import SymbolicPacket, WeylPolynomial, classical_expectation, quantum_expectation
from .potential import PolynomialPotential
from .records import TrajectoryRecord

ORDER_CAP = 10
TERM_CAP = 20000
OBSERVABLES = ("q", "p", "q2", "p2")


def _inverse(mu):
    if isinstance(mu, (int, Fraction)):
        return Fraction(1) / Fraction(mu)
    return 1 / mu


def _add(out: dict, key, value):
    out[key] = out.get(key, 0) + value


def liouville(poly: dict, potential: PolynomialPotential) -> dict:
    """{f, H} for commutative f = sum c q^a p^b, i.e. (p/mu) df/dq - V'(q) df/dp."""
    inv_mu = _inverse(potential.mu)
    force = potential.force_power_coeffs()
    out: dict = {}
    for (a, b), c in poly.items():
        if a:
            _add(out, (a - 1, b + 1), c * a * inv_mu)
        if b:
            for j, f in enumerate(force):
                if f != 0:
                    _add(out, (a + j, b - 1), -c * b * f)
    cleaned = {}
    for key, c in out.items():
        if isinstance(c, sp.Basic):
            c = sp.expand(c)
        if c != 0:
            cleaned[key] = c
    return cleaned


def _commutative(name: str) -> dict:
    return {"q": {(1, 0): 1}, "p": {(0, 1): 1}, "q2": {(2, 0): 1}, "p2": {(0, 2): 1}}[name]


def _weyl(name: str) -> WeylPolynomial:
    q, p = WeylPolynomial.q(), WeylPolynomial.p()
    return {"q": q, "p": p, "q2": q * q, "p2": p * p}[name]


def _check_order(K: int, cap: int):
    if K < 0:
        raise ValidationError(f"order must be >= 0, got {K}")
    if K > cap:
        raise DegreeCapError(f"order {K} exceeds the configured cap {cap}")


def classical_operator_tower(potential: PolynomialPotential, K: int, cap: int = ORDER_CAP) -> dict:
    """{name: [L^0 O, ..., L^K O]} as commutative polynomials."""
    _check_order(K, cap)
    tower = {}
    for name in OBSERVABLES:
        seq = [_commutative(name)]
        for _ in range(K):
            nxt = liouville(seq[-1], potential)
            if len(nxt) > TERM_CAP:
                raise DegreeCapError(f"{len(nxt)} terms at order {len(seq)} exceed the term cap")
            seq.append(nxt)
        tower[name] = seq
    return tower


def quantum_operator_tower(potential: PolynomialPotential, K: int, cap: int = ORDER_CAP) -> dict:
    """{name: [O, dO/dt, ...]} as Weyl polynomials (Heisenberg picture at t = 0)."""
    _check_order(K, cap)
    H = potential.hamiltonian()
    tower = {}
    for name in OBSERVABLES:
        seq = [_weyl(name)]
        for _ in range(K):
            nxt = seq[-1].heisenberg(H)
            if len(nxt.terms) > TERM_CAP:
                raise DegreeCapError(f"{len(nxt.terms)} terms at order {len(seq)} exceed the term cap")
            seq.append(nxt)
        tower[name] = seq
    return tower


@dataclass
class TaylorDerivatives:
    """Derivatives at t = 0, index k holding d^k/dt^k."""

    moments: dict
    Q: list
    P: list
    dQ: list
    dP: list
    engine: str
    towers: dict = field(default_factory=dict, repr=False)

    def coefficients(self, key: str) -> list:
        seq = getattr(self, key) if key in ("Q", "P", "dQ", "dP") else self.moments[key]
        return [_scale_factorial(d, k) for k, d in enumerate(seq)]


def _scale_factorial(d, k: int):
    f = math.factorial(k)
    if isinstance(d, (int, Fraction)):
        return Fraction(d) / f
    if isinstance(d, sp.Basic):
        return d / f
    return d / f


def _times_factorial(a, k: int):
    return a * math.factorial(k)


def _cauchy(a: list, b: list) -> list:
    n = len(a)
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)]


def series_sqrt(v: list, symbolic: bool = False) -> list:
    """Power-series square root, s0 = sqrt(v0)."""
    s0 = sp.sqrt(v[0]) if symbolic else math.sqrt(v[0])
    s = [s0]
    for k in range(1, len(v)):
        acc = v[k] - sum(s[i] * s[k - i] for i in range(1, k))
        s.append(acc / (2 * s0))
    if symbolic:
        s = [sp.simplify(x) for x in s]
    return s


def _to_trajectory(moments: dict, symbolic: bool) -> tuple:
    coeff = {k: [_scale_factorial(d, i) for i, d in enumerate(v)] for k, v in moments.items()}
    var_q = [a - b for a, b in zip(coeff["q2"], _cauchy(coeff["q"], coeff["q"]))]
    var_p = [a - b for a, b in zip(coeff["p2"], _cauchy(coeff["p"], coeff["p"]))]
    if symbolic:
        var_q = [sp.expand(x) for x in var_q]
        var_p = [sp.expand(x) for x in var_p]
    sq = series_sqrt(var_q, symbolic)
    sp_ = series_sqrt(var_p, symbolic)
    derivs = lambda c: [_times_factorial(x, k) for k, x in enumerate(c)]  # noqa: E731
    return list(moments["q"]), list(moments["p"]), derivs(sq), derivs(sp_)


def taylor_derivatives_classical(params, potential: PolynomialPotential, K: int,
                                 cap: int = ORDER_CAP, dof: int = 0) -> TaylorDerivatives:
    tower = classical_operator_tower(potential, K, cap)
    moments = {name: [classical_expectation(x, params, dof) for x in seq] for name, seq in tower.items()}
    symbolic = isinstance(params, SymbolicPacket)
    Q, P, dQ, dP = _to_trajectory(moments, symbolic)
    return TaylorDerivatives(moments, Q, P, dQ, dP, "classical", tower)


def taylor_derivatives_quantum(params, potential: PolynomialPotential, K: int,
                               cap: int = ORDER_CAP, dof: int = 0) -> TaylorDerivatives:
    tower = quantum_operator_tower(potential, K, cap)
    moments = {name: [quantum_expectation(x, params, check=False, dof=dof) for x in seq]
               for name, seq in tower.items()}
    symbolic = isinstance(params, SymbolicPacket)
    Q, P, dQ, dP = _to_trajectory(moments, symbolic)
    return TaylorDerivatives(moments, Q, P, dQ, dP, "quantum", tower)


# series summation


def _floors(d) -> dict:
    return {"q": d.dQ, "p": d.dP, "q2": d.dQ**2, "p2": d.dP**2, "qp": d.dQ * d.dP}


def _sum_series(coeffs: list, t: float) -> tuple[float, float]:
    """Partial sum and the larger of the last two kept terms."""
    terms = [float(c) * t**k for k, c in enumerate(coeffs)]
    tail = max(abs(x) for x in terms[-2:]) if len(terms) > 1 else 0.0
    return float(sum(terms)), tail


def _moments_to_state(m: dict, err: dict) -> tuple:
    varq = m["q2"] - m["q"] ** 2
    varp = m["p2"] - m["p"] ** 2
    if varq <= 0 or varp <= 0:
        raise SeriesDivergenceError("summed variance is not positive; series left its convergence region")
    dQ, dP = math.sqrt(varq), math.sqrt(varp)
    e_dQ = (err["q2"] + 2 * abs(m["q"]) * err["q"]) / (2 * dQ)
    e_dP = (err["p2"] + 2 * abs(m["p"]) * err["p"]) / (2 * dP)
    return (m["q"], m["p"], dQ, dP), (err["q"], err["p"], e_dQ, e_dP)


def _quadratic_generator(potential: PolynomialPotential) -> np.ndarray:
    """Liouvillian on the moment vector (1, q, p, q^2, qp, p^2) for degree <= 2.

    Symmetrized quantum moments obey the same linear system, so this closes
    exactly for both engines.
    """
    mu = float(potential.mu)
    V1, V2 = float(potential.V(1)), float(potential.V(2))
    G = np.zeros((6, 6))
    G[1, 2] = 1 / mu                                   # q' = p/mu
    G[2, 0], G[2, 1] = -V1, -V2                        # p' = -V1 - V2 q
    G[3, 4] = 2 / mu                                   # (q^2)' = 2 qp/mu
    G[4, 5], G[4, 1], G[4, 3] = 1 / mu, -V1, -V2       # (qp)' = p^2/mu - V1 q - V2 q^2
    G[5, 2], G[5, 4] = -2 * V1, -2 * V2                # (p^2)' = -2 V1 p - 2 V2 qp
    return G


def _reexpanded_record(params: PacketParams, potential, times, K, tol, engine) -> TrajectoryRecord:
    d = params.dofs[0]
    G = _quadratic_generator(potential)
    x = np.array([1.0, d.Q, d.P, d.Q**2 + d.dQ**2, d.Q * d.P, d.P**2 + d.dP**2])
    fl = _floors(d)
    floor = np.array([1.0, fl["q"], fl["p"], fl["q2"], fl["qp"], fl["p2"]])
    t_now = 0.0
    acc_err = np.zeros(6)
    rows, errs, steps = [], [], 0
    for t_target in times:
        if t_target < t_now - 1e-15:
            raise ValidationError("time grid must be non-decreasing")
        while t_target - t_now > 0:
            h = t_target - t_now
            for _ in range(60):
                terms = [x]
                for k in range(1, K + 1):
                    terms.append(h / k * (G @ terms[-1]))
                tail = np.maximum(np.abs(terms[-1]), np.abs(terms[-2]))
                if np.all(tail <= tol * (np.abs(sum(terms)) + floor)):
                    break
                h /= 2
            else:
                raise SeriesDivergenceError(f"remainder criterion unmet at t = {t_now:.6g}")
            x = sum(terms)
            acc_err += tail
            t_now += h
            steps += 1
        m = {"q": x[1], "p": x[2], "q2": x[3], "p2": x[5]}
        e = {"q": acc_err[1], "p": acc_err[2], "q2": acc_err[3], "p2": acc_err[5]}
        state, err = _moments_to_state(m, e)
        rows.append(state)
        errs.append(err)
    return _record(times, rows, errs, {"engine": engine, "steps": steps, "order": K, "reexpanded": True})


def _record(times, rows, errs, diagnostics) -> TrajectoryRecord:
    rows = np.array(rows, dtype=float).reshape(-1, 4)
    errs = np.array(errs, dtype=float).reshape(-1, 4)
    return TrajectoryRecord(
        times, rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3], "taylor",
        err={k: errs[:, i] for i, k in enumerate(("Q", "P", "dQ", "dP"))},
        diagnostics=diagnostics,
    )


def evolve_taylor(params: PacketParams, potential: PolynomialPotential, t_grid, K: int = 8,
                  tol: float = 1e-8, engine: str = "quantum", cap: int = ORDER_CAP) -> TrajectoryRecord:
    """Sum the moment series on ``t_grid``.

    Degree <= 2 potentials re-expand piecewise on the closed quadratic moment
    system. Higher degrees have no finite closure (the evolved state leaves the
    ME family), so each output time is summed from the t = 0 series and an
    unmet remainder test raises ``SeriesDivergenceError``.
    """
    if engine not in ("quantum", "classical"):
        raise ValidationError(f"unknown engine {engine!r}")
    if params.n != 1:
        raise ValidationError("Taylor evolution is single-dof")
    times = np.asarray(t_grid, dtype=float)
    if potential.degree <= 2:
        return _reexpanded_record(params, potential, times, K, tol, engine)
    make = taylor_derivatives_quantum if engine == "quantum" else taylor_derivatives_classical
    derivs = make(params, potential, K, cap)
    coeffs = {name: derivs.coefficients(name) for name in OBSERVABLES}
    floors = _floors(params.dofs[0])
    rows, errs = [], []
    for t in times:
        m, e = {}, {}
        for name in OBSERVABLES:
            m[name], e[name] = _sum_series(coeffs[name], t)
            if e[name] > tol * (abs(m[name]) + floors[name]):
                raise SeriesDivergenceError(
                    f"series for <{name}> fails the remainder test at t = {t:.6g} "
                    f"(last terms {e[name]:.2e}); shorten the time grid or raise the order"
                )
        state, err = _moments_to_state(m, e)
        rows.append(state)
        errs.append(err)
    return _record(times, rows, errs, {"engine": engine, "order": K, "reexpanded": False})
