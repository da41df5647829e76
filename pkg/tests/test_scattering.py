import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netscatter.exceptions import VanishingAmplitude
from netscatter.network import NetworkParams, build_deterministic, exchange_operator, sample_random
from netscatter.scattering import (ChannelCoupling, dwell_time, effective_hamiltonian,
                                   energy_grid, find_peaks, read_response_csv, s_matrix, scan,
                                   transfer_amplitudes, transfer_probability)


def dimer(e_prime=0.0, v=1.0):
    return build_deterministic(NetworkParams(2, onsite_energy=e_prime, direct_coupling=v), [], [])


def dimer_s_oracle(e, e_prime, v, gamma):
    # hand inversion of [[x, -V], [-V, x]] with x = E - E' + i Gamma/2
    x = e - e_prime + 0.5j * gamma
    return -1j * gamma * v / (x * x - v * v)


def test_channel_coupling_defaults_and_validation():
    c = ChannelCoupling(2.0)
    assert c.gamma_out == 2.0 and c.symmetric
    assert not ChannelCoupling(1.0, 2.0).symmetric
    for bad in (-1.0, np.nan, np.inf):
        with pytest.raises(ValueError):
            ChannelCoupling(bad)


def test_heff_dimer_assembly():
    np.testing.assert_array_equal(effective_hamiltonian(dimer(), 2.0), [[-1j, 1], [1, -1j]])


def test_heff_gamma_zero_is_hermitian(fig1_network):
    np.testing.assert_array_equal(effective_hamiltonian(fig1_network, 0.0), fig1_network.matrix)


def test_heff_trace_and_symmetry(fig1_network):
    heff = effective_hamiltonian(fig1_network, ChannelCoupling(3.0, 1.0))
    assert np.trace(heff).imag == pytest.approx(-2.0)
    sym = effective_hamiltonian(fig1_network, 3.0)
    j = exchange_operator(8)
    assert np.max(np.abs(j @ sym @ j - sym)) <= 1e-12


def test_dimer_closed_form_grid():
    for v in (0.3, 1.0, 2.5):
        for gamma in (0.1, 1.0, 2 * v, 7.0):
            for e in np.linspace(-3, 3, 13):
                s = s_matrix(dimer(0.2, v), gamma, 0.2 + e)[0, 1]
                assert abs(s - dimer_s_oracle(0.2 + e, 0.2, v, gamma)) < 1e-12


def test_dimer_on_site_probability():
    v = 1.3
    for gamma in np.linspace(0.1, 6, 9):
        expected = 16 * gamma ** 2 * v ** 2 / (4 * v ** 2 + gamma ** 2) ** 2
        assert transfer_probability(dimer(0.0, v), gamma, 0.0) == pytest.approx(expected, abs=1e-12)
    assert transfer_probability(dimer(), 2.0, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_decoupled_channels_give_identity(fig1_network):
    np.testing.assert_allclose(s_matrix(fig1_network, 0.0, 0.3), np.eye(2), atol=1e-15)
    assert transfer_probability(fig1_network, 0.0, 0.3) == 0.0
    np.testing.assert_allclose(s_matrix(fig1_network, 1e-9, 0.3), np.eye(2), atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5).map(lambda k: 2 * k), st.integers(0, 2**32 - 1),
       st.floats(0.01, 20.0), st.floats(-6.0, 6.0))
def test_unitarity_reciprocity_conservation(n, seed, gamma, e):
    h = sample_random(NetworkParams(n, bulk_scale=1.0, link_scale=1.0, sample_onsite=True), seed)
    s = s_matrix(h, gamma, e)
    assert np.max(np.abs(s.conj().T @ s - np.eye(2))) <= 1e-10
    assert abs(s[0, 1] - s[1, 0]) <= 1e-10
    assert abs(abs(s[0, 0]) ** 2 + abs(s[0, 1]) ** 2 - 1.0) <= 1e-10


def test_unequal_widths_still_unitary(fig1_network):
    s = s_matrix(fig1_network, ChannelCoupling(1.0, 4.0), 0.7)
    np.testing.assert_allclose(s.conj().T @ s, np.eye(2), atol=1e-12)


def test_transfer_amplitudes_matches_s_matrix(fig1_network):
    gammas = np.array([0.1, 1.0, 5.0, 20.0])
    energies = np.array([-1.0, 0.0, 0.4, 3.0])
    amps = transfer_amplitudes(fig1_network, gammas, energies)
    for a, g, e in zip(amps, gammas, energies):
        assert abs(a - s_matrix(fig1_network, g, e)[0, 1]) < 1e-13


def test_dwell_dimer_split_resonance():
    v = 1.0
    for gamma in (0.1, 0.5, 1.0, 1.5):
        e_res = 0.5 * np.sqrt(4 * v * v - gamma * gamma)
        for e in (e_res, -e_res):
            assert dwell_time(dimer(0.0, v), gamma, e) == pytest.approx(2.0 / gamma, rel=1e-12)


def test_dwell_time_matches_finite_difference():
    rng = np.random.default_rng(8)
    checked = 0
    for seed in range(30):
        h = sample_random(NetworkParams(8, bulk_scale=1.0, link_scale=1.0), seed)
        gamma = rng.uniform(0.2, 5.0)
        e = rng.uniform(-2, 2)
        s = s_matrix(h, gamma, e)[0, 1]
        if abs(s) <= 1e-6:
            continue
        step = 1e-6 * max(1.0, abs(e))
        ds = (s_matrix(h, gamma, e + step)[0, 1] - s_matrix(h, gamma, e - step)[0, 1]) / (2 * step)
        fd = (ds / s).imag
        tau = dwell_time(h, gamma, e)
        assert abs(tau - fd) <= 1e-5 * max(1.0, abs(tau))
        checked += 1
    assert checked >= 25


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 10.0), st.floats(0.05, 10.0),
       st.floats(-4.0, 4.0))
def test_dwell_time_is_sum_of_resonance_lorentzians(seed, g_in, g_out, e):
    # the in->out numerator is a real polynomial in E, so only the poles of
    # H_eff contribute to the phase derivative and the delay stays positive
    h = sample_random(NetworkParams(8, bulk_scale=1.0, link_scale=1.0, sample_onsite=True), seed)
    c = ChannelCoupling(g_in, g_out)
    lam = np.linalg.eigvals(effective_hamiltonian(h, c))
    try:
        tau = dwell_time(h, c, e)
    except VanishingAmplitude:
        return
    oracle = np.sum(-lam.imag / np.abs(e - lam) ** 2)
    assert tau > 0
    assert tau == pytest.approx(oracle, rel=1e-8)


def test_vanishing_amplitude():
    with pytest.raises(VanishingAmplitude):
        dwell_time(dimer(), 0.0, 0.5)


def test_dimer_scan_resonances():
    resp = scan(dimer(0.3, 1.0), 0.8, energy_grid(-2, 2, 11))
    np.testing.assert_allclose(resp.resonances.eigenvalues, [-0.7 - 0.4j, 1.3 - 0.4j], atol=1e-14)


def test_scan_invariants(fig1_network):
    resp = scan(fig1_network, 5.0, energy_grid(-4, 4, 400))
    assert np.all(resp.p >= 0) and np.all(resp.p <= 1 + 1e-10)
    np.testing.assert_allclose(resp.p, np.abs(resp.s_elem) ** 2, atol=1e-12)
    assert len(resp.resonances) == 8
    assert np.all(resp.resonances.eigenvalues.imag <= 1e-12)


def test_fig1_has_unit_peaks(fig1_network):
    peaks = find_peaks(fig1_network, 5.0, energy_grid(-4, 4, 2000))
    assert max(pk.height for pk in peaks) > 0.99
    assert all(pk.height <= 1 + 1e-10 for pk in peaks)


def test_fig1_long_dwell_times_at_narrow_peaks(fig1_network):
    resp = scan(fig1_network, 5.0, energy_grid(-4, 4, 4000))
    k = int(np.nanargmax(resp.tau))
    narrowest = min(find_peaks(fig1_network, 5.0, resp.energies), key=lambda pk: pk.width)
    assert abs(resp.energies[k] - narrowest.energy) < 0.05
    assert resp.tau[k] > 10 * np.nanmedian(resp.tau)


def test_single_point_grid():
    resp = scan(dimer(), 1.0, energy_grid(0.0, 0.0, 1))
    assert len(resp.p) == 1


def test_grid_validation():
    with pytest.raises(ValueError):
        energy_grid(1.0, 0.0, 5)
    with pytest.raises(ValueError):
        energy_grid(0.0, 1.0, 0)
    with pytest.raises(ValueError):
        scan(dimer(), 1.0, [1.0, 0.0])
    with pytest.raises(ValueError):
        scan(dimer(), 1.0, [])


def test_csv_json_roundtrip(tmp_path):
    resp = scan(dimer(), 1.0, energy_grid(-2, 2, 9))
    object.__setattr__(resp, "tau", resp.tau.copy())
    resp.tau[3] = np.nan
    path = tmp_path / "r.csv"
    resp.write_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == "E,p,tau,Re_S,Im_S"
        assert ",," in fh.read()
    back = read_response_csv(path)
    np.testing.assert_array_equal(back["E"], resp.energies)
    np.testing.assert_array_equal(back["p"], resp.p)
    np.testing.assert_array_equal(back["Re_S"], resp.s_elem.real)
    assert np.isnan(back["tau"][3])
    resp.write_json(tmp_path / "r.json", gamma=1.0)
    side = json.loads((tmp_path / "r.json").read_text())
    assert side["n_missing_tau"] == 1 and len(side["resonances"]) == 2
    assert side["params"] == {"gamma": 1.0}


def test_find_peaks_dimer():
    gamma, v = 0.5, 1.0
    peaks = find_peaks(dimer(0.0, v), gamma, energy_grid(-3, 3, 301))
    half = 0.5 * np.sqrt(4 * v * v - gamma * gamma)
    np.testing.assert_allclose(sorted(pk.energy for pk in peaks), [-half, half], atol=1e-7)
    assert all(pk.height == pytest.approx(1.0, abs=1e-12) for pk in peaks)
    assert find_peaks(dimer(0.0, v), gamma, energy_grid(-3, 3, 301), min_height=1.5) == []
