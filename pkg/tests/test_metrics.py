import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfuca.channel import assemble_channel
from qfuca.demodulation import calibrate
from qfuca.geometry import ArrayConfig
from qfuca.metrics import (
    PowerAllocation,
    dimension_comparison,
    leakage_matrix,
    link_se,
    noise_for_snr,
    spectrum_efficiency,
    uniform_allocation,
)
from qfuca.presets import PRESETS


def test_unit_snr_gives_one_bit():
    assert spectrum_efficiency([1.0], [1.0], 1.0).total == pytest.approx(1.0, abs=1e-15)


def test_snr_three_gives_two_bits():
    assert spectrum_efficiency([np.sqrt(3)], [1.0], 1.0).total == pytest.approx(2.0, abs=1e-15)


def test_twenty_five_modes_at_15_db():
    snr = 10**1.5
    se = spectrum_efficiency(np.ones(25), uniform_allocation(25.0, 25), 1 / snr)
    assert se.total == pytest.approx(25 * np.log2(1 + snr), abs=1e-9)
    assert se.total == pytest.approx(125.7, abs=0.05)
    assert se.active_modes == 25


def test_mappings_accepted_and_aligned():
    gains = {(0, 1): 1.0, (0, 0): 2.0}
    powers = {(0, 0): 1.0, (0, 1): 3.0}
    se = spectrum_efficiency(gains, powers, {(0, 1): 1.0, (0, 0): 1.0})
    assert se.total == pytest.approx(np.log2(1 + 3) + np.log2(1 + 4))


def test_mismatched_mode_sets():
    with pytest.raises(ValueError):
        spectrum_efficiency({(0,): 1.0}, {(1,): 1.0}, 1.0)
    with pytest.raises(ValueError, match="length"):
        spectrum_efficiency([1.0, 1.0], [1.0], 1.0)


@pytest.mark.parametrize("sigma2", [0.0, -1.0])
def test_nonpositive_noise_rejected(sigma2):
    with pytest.raises(ValueError):
        spectrum_efficiency([1.0], [1.0], sigma2)


def test_inactive_modes_contribute_zero():
    se = spectrum_efficiency([1.0, 5.0], [1.0, 1.0], [1.0, 0.0], active=[True, False])
    assert se.per_mode[1] == 0 and se.total == pytest.approx(1.0) and se.active_modes == 1


def test_power_allocation_invariants():
    with pytest.raises(ValueError):
        PowerAllocation(np.array([1.0, -0.1]), 0.9)
    with pytest.raises(ValueError):
        PowerAllocation(np.array([1.0, 1.0]), 3.0)
    a = uniform_allocation(2.0, 4)
    assert a.powers.sum() == pytest.approx(2.0, rel=1e-12)


def test_noise_references():
    c = PRESETS["1d-25"].config()
    assert noise_for_snr(c, 10.0, "transmit") == pytest.approx(0.1)
    g0 = c.wavelength / (4 * np.pi * 100.0)
    assert noise_for_snr(c, 10.0, "boresight") == pytest.approx(0.1 * g0**2)
    with pytest.raises(ValueError):
        noise_for_snr(c, 10.0, "receiver")


def test_leakage_identity_channel():
    pipe = calibrate(np.eye(12), (3, 4))
    np.testing.assert_allclose(leakage_matrix(pipe), np.eye(12), atol=1e-12)


def test_leakage_single_ring_diagonal():
    pipe = calibrate(assemble_channel(PRESETS["1d-25"].config()))
    L = leakage_matrix(pipe)
    off = L - np.diag(np.diag(L))
    assert off.max() < 1e-18


def test_leakage_conserves_power_for_unitary_composition():
    rng = np.random.default_rng(0)
    n = 16
    U0, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    pipe = calibrate(np.eye(n), (4, 4))
    # unitary perturbation of an identity-calibrated chain: every column keeps unit energy
    L = leakage_matrix(pipe, U0)
    np.testing.assert_allclose(L.sum(axis=0), 1.0, atol=1e-9)
    np.testing.assert_allclose(L.sum(axis=1), 1.0, atol=1e-9)


def test_processed_equals_fixed_for_exact_two_level_chain():
    c = PRESETS["2d-5x5"].config()
    pipe = calibrate(assemble_channel(c))
    s2 = noise_for_snr(c, 15.0)
    a = link_se(pipe, s2, c.total_power, "processed")
    b = link_se(pipe, s2, c.total_power, "fixed")
    assert a.total == pytest.approx(b.total, rel=1e-9)


def test_unknown_policy():
    with pytest.raises(ValueError):
        link_se(calibrate(np.eye(4), (4,)), 1.0, 1.0, "greedy")


def test_snr_sweep_monotone():
    rows = dimension_comparison({"1d": PRESETS["1d-25"].config()}, snr_db=np.arange(0, 31, 2.5))
    se = [r.total_se for r in rows]
    assert all(b >= a for a, b in zip(se, se[1:]))


def test_grid_order_is_canonical():
    configs = {k: PRESETS[k].config() for k in ("2d-5x5", "1d-25")}
    rows = dimension_comparison(configs, snr_db=[0, 10], distances=[50, 100], workers=4)
    keys = [(r.config_id, r.distance, r.snr_db) for r in rows]
    assert keys == [(c, d, s) for c in configs for d in (50.0, 100.0) for s in (0.0, 10.0)]
    serial = dimension_comparison(configs, snr_db=[0, 10], distances=[50, 100], workers=1)
    assert [r.total_se for r in serial] == [r.total_se for r in rows]


def test_single_ring_se_falls_beyond_knee():
    rows = dimension_comparison({"1d": PRESETS["1d-25"].config()}, distances=np.geomspace(250, 2000, 12))
    se = [r.total_se for r in rows]
    assert all(b <= a for a, b in zip(se, se[1:]))


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.01, 10), min_size=1, max_size=8),
    st.floats(0.01, 10),
    st.floats(1e-3, 1e3),
)
def test_se_scale_invariance_and_additivity(gains, noise, scale):
    n = len(gains)
    alloc = uniform_allocation(1.0, n)
    a = spectrum_efficiency(gains, alloc, noise)
    b = spectrum_efficiency(gains, uniform_allocation(scale, n), noise * scale)
    assert b.total == pytest.approx(a.total, rel=1e-12, abs=1e-12)
    assert a.total == pytest.approx(a.per_mode.sum(), rel=1e-15)
    assert np.all(a.per_mode >= 0)
