import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mepack.chain import (ChainModel, asymptotic_relative_spread, chain_report_csv, cm_packet, cosine_basis,
                          energy_fluctuation, energy_of_lambda, equipartition_relative_spread, exact_frequencies,
                          gibbs_from_energy, gibbs_from_lambda, length_statistics, log_partition, mode_basis,
                          printed_frequencies, zero_mode_residuals, zero_point_energy)
from mepack.core import PacketParams
from mepack.dynamics import PolynomialPotential, matrix_oracle
from mepack.errors import InfeasibleEnergyError, ValidationError
from mepack.qpacket import QuantumMEPacket


def model(N=64, mu=1.3, kappa=0.8, xi=1.1, hbar=1.0):
    return ChainModel(N, mu, kappa, xi, hbar)


@pytest.mark.parametrize("kwargs", [{"N": 1}, {"mu": 0.0}, {"kappa": -1.0}, {"xi": 0.0}, {"hbar": 0.0}])
def test_model_validation(kwargs):
    with pytest.raises(ValidationError):
        model(**kwargs)


# modes


def test_zero_mode():
    b = mode_basis(model())
    assert b.omega[0] == 0.0
    assert b.Y[:, 0] == pytest.approx(np.full(65, 1 / math.sqrt(65)))


def test_top_frequency():
    m = model()
    top = 2 * m.kappa / math.sqrt(m.mu)
    assert printed_frequencies(m)[-1] == pytest.approx(top)
    # the Laplacian spectrum stops just short of it
    assert exact_frequencies(m)[-1] == pytest.approx(top * math.sin(64 * math.pi / 130))
    assert mode_basis(m).omega[-1] < top


def test_numerical_spectrum_n64():
    b = mode_basis(model())
    assert b.residuals["vs_exact_frequencies"] < 1e-12
    assert b.residuals["orthogonality"] < 1e-12
    assert b.residuals["vs_cosine_basis"] < 1e-10
    # the sin(m pi / 2N) frequencies and the pi m / N basis are only approximate
    assert b.residuals["vs_printed_frequencies"] > 1e-3
    assert b.residuals["printed_orthogonality"] > 1e-3


def test_diagonalization_n256():
    m = model(N=256)
    b = mode_basis(m)
    assert b.residuals["offdiagonal_rel"] < 1e-10
    D = b.Y.T @ m.coupling_matrix() @ b.Y
    assert np.diag(D) == pytest.approx(m.mu * b.omega**2, abs=1e-10)


def test_large_chain_uses_cosine_form():
    m = model(N=3000)
    b = mode_basis(m)
    assert b.source == "cosine" and b.Y is None
    small = model(N=40)
    dense = mode_basis(small)
    lazy = mode_basis(small, dense=False)
    for n in (1, 7, 41):
        assert lazy.row(small, n) == pytest.approx(dense.row(small, n), abs=1e-12)


def test_zero_mode_decouples():
    res = zero_mode_residuals(model(N=100))
    assert max(res.values()) < 1e-12


def test_cosine_basis_orthonormal():
    Y = cosine_basis(model(N=33))
    assert np.abs(Y.T @ Y - np.eye(34)).max() < 1e-12


# thermodynamics


def test_occupations_from_energy_round_trip():
    m = model()
    g = gibbs_from_lambda(m, 0.7)
    back = gibbs_from_energy(m, g.E)
    assert back.lam == pytest.approx(0.7, rel=1e-10)
    assert np.all(back.nbar >= 0)


def test_two_mode_closed_form():
    m = ChainModel(2, 1.0, 1.0, 1.0, hbar=0.5)
    w = exact_frequencies(m)[1:]
    lam = 1.7
    # E = sum (hbar w / 2) coth(lambda hbar w / 2)
    closed = float(np.sum(0.5 * m.hbar * w / np.tanh(0.5 * lam * m.hbar * w)))
    assert energy_of_lambda(w, lam, m.hbar) == pytest.approx(closed, rel=1e-14)
    assert gibbs_from_energy(m, closed).lam == pytest.approx(lam, rel=1e-10)


def test_energy_is_minus_log_partition_slope():
    w = mode_basis(model())
    omega = w.omega[1:]
    lam, h = 0.9, 1e-6
    slope = (log_partition(omega, lam + h, 1.0) - log_partition(omega, lam - h, 1.0)) / (2 * h)
    assert energy_of_lambda(omega, lam, 1.0) == pytest.approx(-slope, rel=1e-8)


def test_energy_variance_is_log_partition_curvature():
    m = model()
    g = gibbs_from_lambda(m, 0.9)
    h = 1e-4
    curv = (log_partition(g.omega, 0.9 + h, 1.0) - 2 * log_partition(g.omega, 0.9, 1.0)
            + log_partition(g.omega, 0.9 - h, 1.0)) / h**2
    assert energy_fluctuation(g) == pytest.approx(math.sqrt(curv) / g.E, rel=1e-5)


def test_relative_energy_spread_falls_with_size():
    spreads = [energy_fluctuation(gibbs_from_lambda(model(N=N), 0.5)) for N in (10, 100, 1000)]
    assert spreads[0] > spreads[1] > spreads[2]


def test_ground_state_limit():
    m = model()
    E0 = zero_point_energy(m)
    g = gibbs_from_energy(m, E0 * (1 + 1e-9))
    assert g.lam > 50
    assert np.all(g.nbar < 1e-6)


def test_energy_below_zero_point_rejected():
    m = model()
    with pytest.raises(InfeasibleEnergyError):
        gibbs_from_energy(m, zero_point_energy(m))


def test_high_temperature_equipartition():
    m = model(N=1000)
    omega_max = mode_basis(m).omega.max()
    lam = 0.01 / (m.hbar * omega_max)
    g = gibbs_from_lambda(m, lam)
    assert g.E == pytest.approx(m.N / lam, rel=0.01)


def test_gibbs_lambda_must_be_positive():
    with pytest.raises(ValidationError):
        gibbs_from_lambda(model(), 0.0)


# length


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 80), st.floats(0.05, 20))
def test_mean_length_and_odd_modes(N, lam):
    m = model(N=N)
    b = mode_basis(m)
    stats = length_statistics(m, gibbs_from_lambda(m, lam, b), b)
    assert stats.mean == N * m.xi
    assert np.abs(stats.coefficients[0::2]).max() < 1e-12
    assert stats.variance > 0


def test_printed_length_convention():
    m = model(N=64)
    b = mode_basis(m)
    g = gibbs_from_lambda(m, 0.3, b)
    alt = length_statistics(m, g, b, convention="printed")
    assert alt.mean == pytest.approx(63 * m.xi)
    assert np.abs(alt.coefficients[2::2]).max() > 1e-3
    with pytest.raises(ValidationError):
        length_statistics(m, g, b, convention="middle")


def _high_t_spread(N, lam_scale=0.01):
    m = model(N=N)
    b = mode_basis(m)
    lam = lam_scale / (m.hbar * b.omega.max())
    stats = length_statistics(m, gibbs_from_lambda(m, lam, b), b)
    return m, lam, stats.relative_spread


def test_high_temperature_spread_matches_equipartition():
    m, lam, rel = _high_t_spread(400)
    assert rel == pytest.approx(equipartition_relative_spread(m, lam), rel=1e-3)
    assert rel / asymptotic_relative_spread(m, lam) == pytest.approx(math.pi / (2 * math.sqrt(3)), rel=0.01)


def test_spread_slope_in_size():
    Ns = np.array([100, 300, 1000, 3000])
    lam = 1e-3
    rel = []
    for N in Ns:
        m = model(N=int(N))
        b = mode_basis(m)
        rel.append(length_statistics(m, gibbs_from_lambda(m, lam, b), b).relative_spread)
    slope = np.polyfit(np.log(Ns), np.log(rel), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.02)


def test_report_csv():
    m = model(N=5)
    b = mode_basis(m)
    g = gibbs_from_lambda(m, 1.0, b)
    rows = list(csv.reader(io.StringIO(chain_report_csv(b, g, length_statistics(m, g, b)))))
    assert rows[0] == ["m", "omega_m", "nbar_m"]
    assert len(rows) == 1 + 6 + 1 + 2
    assert rows[-2] == ["lambda", "E", "L_mean", "dL_rel"]


# centre of mass


def test_cm_packet_free_motion():
    m = model(N=9)
    params = PacketParams.single(0.0, 2.0, 0.4, 0.3, hbar=m.hbar)
    t = np.linspace(0, 10, 6)
    rec = cm_packet(m, params, t)
    M = m.total_mass
    assert np.all(rec.P == 2.0)
    assert rec.dQ == pytest.approx(np.sqrt(0.16 + t**2 * 0.09 / M**2))


def test_cm_packet_matches_matrix_oracle():
    m = model(N=9)
    params = PacketParams.single(0.0, 2.0, 0.4, 0.3, hbar=0.05)
    t = np.linspace(0, 10, 6)
    rec = cm_packet(m, params, t)
    mat = matrix_oracle(QuantumMEPacket.from_params(params), PolynomialPotential(m.total_mass, (0.0,)), t, dim=200)
    assert rec.max_difference(mat) < 1e-6
