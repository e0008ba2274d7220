import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from mepack.core import PacketParams
from mepack.errors import TruncationError, UncertaintyViolationError, ValidationError
from mepack.qpacket import (QuantumMEPacket, QuantumMultipliers, build_truncated_state, diagonal_weights,
                            minimal_cutoff, packet_entropy, pure_limit_wavefunction, quantum_entropy, quantum_log_partition,
                            quantum_multipliers, quantum_partition, weight_tail)
from mepack.weyl import WeylPolynomial, quantum_expectation


def with_nu(nu, Q=0.0, P=0.0, dQ=1.0, hbar=1.0):
    """Packet with the requested nu = 2 dQ dP / hbar."""
    return PacketParams.single(Q, P, dQ, nu * hbar / (2 * dQ), hbar=hbar)


# multipliers and partition function


def test_centered_multipliers_vanish():
    m = quantum_multipliers(with_nu(3.0))
    assert m.l1[0] == 0 and m.l2[0] == 0


def test_multiplier_example():
    # dQ = dP = 1 with hbar = 1/2 gives nu = 4
    m = quantum_multipliers(PacketParams.single(0, 0, 1, 1, hbar=0.5))
    assert m.l3[0] == pytest.approx(math.log(5 / 3))
    assert m.l3[0] == m.l4[0]


def test_multipliers_solve_the_constraints():
    # with l4 tied to l3 by symmetry, -d lnZ / d l3 = <q^2> fixes l3 on its own
    params = PacketParams.single(0, 0, 1, 1, hbar=0.5)
    h = 1e-6

    def second_moment(l3):
        def lnZ(x):
            return quantum_log_partition(QuantumMultipliers(*(np.array([v]) for v in (0.0, 0.0, x, l3)), 0.5))
        return -(lnZ(l3 + h) - lnZ(l3 - h)) / (2 * h)

    l3 = optimize.brentq(lambda x: second_moment(x) - 1.0, 0.05, 5.0, xtol=1e-13)
    assert quantum_multipliers(params).l3[0] == pytest.approx(l3, rel=1e-6)


def test_multiplier_ratio():
    m = quantum_multipliers(PacketParams.single(0.2, 0.1, 0.5, 1.5, hbar=0.3))
    assert m.l3[0] / m.l4[0] == pytest.approx(1.5**2 / 0.5**2)


@pytest.mark.parametrize("nu", [1.2, 3.0, 40.0])
def test_multiplier_invariant(nu):
    params = with_nu(nu, Q=0.4, P=-1.0, dQ=0.7, hbar=0.6)
    m = quantum_multipliers(params)
    assert params.hbar * math.sqrt(m.l3[0] * m.l4[0]) == pytest.approx(0.5 * math.log((nu + 1) / (nu - 1)))


@pytest.mark.parametrize("dQ, dP", [(0.1, 0.1), (0.5, 1.0)])
def test_multipliers_reject_nu_at_or_below_one(dQ, dP):
    with pytest.raises(UncertaintyViolationError) as info:
        quantum_multipliers(PacketParams.single(0, 0, dQ, dP, hbar=1.0))
    assert info.value.pure_boundary == (dQ * dP == 0.5)


@pytest.mark.parametrize("nu", [1.5, 3.0, 10.0])
def test_partition_example(nu):
    assert quantum_partition(quantum_multipliers(with_nu(nu))) == pytest.approx(math.sqrt(nu**2 - 1) / 2)


def test_partition_vanishes_toward_pure_state():
    zs = [quantum_partition(quantum_multipliers(with_nu(1 + eps))) for eps in (1e-2, 1e-4, 1e-6)]
    assert zs[0] > zs[1] > zs[2] > 0
    assert zs[2] < 1e-2


def test_partition_log_derivative_is_minus_mean():
    params = PacketParams.single(0.8, -0.3, 0.6, 1.1, hbar=0.4)
    m = quantum_multipliers(params)
    h = 1e-6

    def lnZ(shift):
        return quantum_log_partition(type(m)(m.l1 + shift, m.l2, m.l3, m.l4, m.hbar))

    deriv = (lnZ(h) - lnZ(-h)) / (2 * h)
    assert deriv == pytest.approx(-0.8, abs=1e-8)


def test_partition_log_consistent():
    m = quantum_multipliers(PacketParams.single(0.8, -0.3, 0.6, 1.1, hbar=0.4))
    assert math.log(quantum_partition(m)) == pytest.approx(quantum_log_partition(m))


# entropy


def test_entropy_examples():
    assert quantum_entropy(1.0) == 0.0
    assert quantum_entropy(3.0) == pytest.approx(2 * math.log(2))
    assert quantum_entropy(1e4) == pytest.approx(math.log(1e4) + 1 - math.log(2), abs=1e-3)


def test_entropy_rejects_nu_below_one():
    with pytest.raises(UncertaintyViolationError):
        quantum_entropy(0.9)


@pytest.mark.parametrize("nu", [1.5, 3.0, 10.0])
def test_entropy_matches_weights(nu):
    R = diagonal_weights(nu, minimal_cutoff(nu, 1e-16) + 50)
    R = R[R > 0]
    assert quantum_entropy(nu) == pytest.approx(float(-np.sum(R * np.log(R))), rel=1e-10)


def test_entropy_increases_with_nu():
    nus = np.geomspace(1 + 1e-6, 1e4, 400)
    s = np.array([quantum_entropy(float(n)) for n in nus])
    assert np.all(np.diff(s) > 0)
    nu, h = 5.0, 1e-5
    fd = (quantum_entropy(nu + h) - quantum_entropy(nu - h)) / (2 * h)
    assert fd == pytest.approx(0.5 * math.log((nu + 1) / (nu - 1)), rel=1e-7)


@settings(max_examples=30)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_entropy_independent_of_center(Q, P):
    a = PacketParams.single(0, 0, 0.7, 1.3, hbar=0.5)
    b = PacketParams.single(Q, P, 0.7, 1.3, hbar=0.5)
    assert packet_entropy(a) == packet_entropy(b)


@settings(max_examples=20)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.2, 3), st.floats(0.2, 3), st.floats(0.01, 0.9))
def test_legendre_relation(Q, P, dQ, dP, frac):
    # hbar below 2 dQ dP keeps nu > 1
    params = PacketParams.single(Q, P, dQ, dP, hbar=2 * dQ * dP * frac)
    m = quantum_multipliers(params)
    rhs = (quantum_log_partition(m) + m.l1[0] * Q + m.l2[0] * P
           + m.l3[0] * (Q**2 + dQ**2) + m.l4[0] * (P**2 + dP**2))
    assert packet_entropy(params) == pytest.approx(rhs, rel=1e-10, abs=1e-10)


# weights


def test_weights_examples():
    assert list(diagonal_weights(1.0, 3)) == [1.0, 0.0, 0.0, 0.0]
    assert diagonal_weights(3.0, 2) == pytest.approx([0.5, 0.25, 0.125])


@pytest.mark.parametrize("nu", [1.01, 2.0, 50.0])
def test_weights_tail_and_monotone(nu):
    R = diagonal_weights(nu, 30)
    assert np.all(np.diff(R) <= 0)
    for M in (0, 5, 30):
        assert 1 - R[: M + 1].sum() == pytest.approx(weight_tail(nu, M), abs=1e-14)


def test_minimal_cutoff():
    nu = 4.0
    M = minimal_cutoff(nu)
    assert weight_tail(nu, M - 1) < 1e-10 <= weight_tail(nu, M - 2)
    assert minimal_cutoff(nu, safety=2.0) == 2 * M


# truncated state


@pytest.mark.parametrize("nu", [1.5, 3.0, 10.0])
def test_truncated_state_invariants(nu):
    params = with_nu(nu, Q=0.0, P=0.0, dQ=0.8, hbar=0.5)
    state = build_truncated_state(QuantumMEPacket.from_params(params))
    rho = state.matrix
    assert np.abs(rho - rho.conj().T).max() < 1e-12
    assert abs(np.trace(rho) - 1) < 1e-10
    ev = state.eigenvalues()
    assert ev.min() > -1e-12
    half = state.dim // 2
    assert ev[:half] == pytest.approx(diagonal_weights(nu, half - 1), abs=1e-8)
    assert state.entropy() == pytest.approx(quantum_entropy(nu), abs=1e-6)
    assert 0 <= state.truncation_defect < 1e-9


@pytest.mark.parametrize("nu", [1.5, 3.0, 10.0])
def test_truncated_state_moments(nu):
    params = with_nu(nu, Q=0.6, P=-0.4, dQ=0.8, hbar=0.5)
    state = build_truncated_state(QuantumMEPacket.from_params(params))
    mom = state.moments()
    q, p = WeylPolynomial.q(), WeylPolynomial.p()
    assert mom["q"] == pytest.approx(0.6, abs=1e-8)
    for key, op in (("q", q), ("p", p), ("q2", q * q), ("p2", p * p)):
        assert mom[key] == pytest.approx(quantum_expectation(op, params), rel=1e-6)
    qm, _ = state.operators(pad=6)
    q6 = np.linalg.matrix_power(qm, 6)[: state.dim, : state.dim]
    assert state.expect(q6).real == pytest.approx(quantum_expectation(q**6, params), rel=1e-6)


def test_truncated_state_report():
    state = build_truncated_state(QuantumMEPacket.from_params(with_nu(2.0)))
    text = state.report()
    assert "truncation defect" in text and "residual q2" in text


def test_truncation_error_suggests_dim():
    packet = QuantumMEPacket.from_params(with_nu(10.0))
    with pytest.raises(TruncationError) as info:
        build_truncated_state(packet, dim=20)
    assert info.value.suggested_dim == minimal_cutoff(10.0)


def test_packet_rejects_nu_below_one():
    with pytest.raises(UncertaintyViolationError):
        QuantumMEPacket.from_params(PacketParams.single(0, 0, 0.1, 0.1))


# pure limit


def _pure():
    return QuantumMEPacket.from_params(PacketParams.single(0.3, 1.7, 0.5, 0.4, hbar=0.4))


def test_pure_wavefunction():
    pk = _pure()
    assert pk.is_pure and pk.entropy() == 0
    q = np.linspace(0.3 - 6, 0.3 + 6, 20001)
    dq = q[1] - q[0]
    psi = pure_limit_wavefunction(pk, q)
    rho = np.abs(psi) ** 2
    assert rho.sum() * dq == pytest.approx(1.0, abs=1e-8)
    assert abs(pure_limit_wavefunction(pk, 0.3)) ** 2 == pytest.approx(1 / math.sqrt(2 * math.pi * 0.25))
    mean = (q * rho).sum() * dq
    assert mean == pytest.approx(0.3, abs=1e-6)
    assert ((q - mean) ** 2 * rho).sum() * dq == pytest.approx(0.25, abs=1e-6)


def test_pure_wavefunction_displaced_overlap():
    pk = _pure()
    q = np.linspace(-8, 10, 40001)
    shifted = QuantumMEPacket.from_params(PacketParams.single(0.3 + 4 * 0.5, 1.7, 0.5, 0.4, hbar=0.4))
    overlap = abs(np.sum(np.conj(pure_limit_wavefunction(pk, q)) * pure_limit_wavefunction(shifted, q))
                  * (q[1] - q[0]))
    assert overlap < math.exp(-2)
    assert overlap == pytest.approx(math.exp(-2), rel=1e-6)


def test_pure_wavefunction_requires_nu_one():
    with pytest.raises(ValidationError):
        pure_limit_wavefunction(QuantumMEPacket.from_params(with_nu(2.0)), 0.0)
