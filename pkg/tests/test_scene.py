"""Geometry, channels, targets, waveform synthesis, and echo simulation."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irs_sensing.errors import ContractError, SynthesisError
from irs_sensing.rng import complex_normal, substream
from irs_sensing.scene import (ExtendedTarget, ExtendedTargetSpec, PathLossModel,
                               PointTarget, PointTargetSpec, Scenario,
                               db_to_linear, dbm_to_watts, make_channel,
                               make_target, noiseless_echo, path_loss,
                               point_alpha_magnitude, point_theta,
                               simulate_echo, synthesize_waveform)


@given(st.floats(-100, 100))
def test_dbm_watts_round_trip(dbm):
    w = dbm_to_watts(dbm)
    assert w > 0
    assert abs(10.0 * np.log10(w * 1000.0) - dbm) < 1e-9


def test_db_to_linear():
    assert abs(db_to_linear(10.0) - 10.0) < 1e-12
    assert abs(db_to_linear(0.0) - 1.0) < 1e-12


def test_path_loss_power_law():
    model = PathLossModel(k0=1e-3, d0=1.0, exponent=2.5)
    assert abs(path_loss(1.0, model) - 1e-3) < 1e-18
    ratio = path_loss(2.0, model) / path_loss(1.0, model)
    assert abs(ratio - 2.0 ** -2.5) < 1e-12
    with pytest.raises(ContractError):
        path_loss(0.0, model)


def test_reference_geometry_angles():
    # IRS directly above the target: DoA zero.  AP level with the IRS base.
    sc = Scenario()
    assert abs(point_theta(sc)) < 1e-12
    assert abs(sc.ap_irs_distance - np.hypot(5.0, 5.0)) < 1e-12
    # Target east of straight-down is a positive DoA.
    sc2 = Scenario(target_spec=PointTargetSpec((7.0, 0.0)))
    assert point_theta(sc2) > 0.0


def test_round_trip_alpha_is_single_path_loss():
    sc = Scenario()
    d = 5.0
    assert abs(point_alpha_magnitude(sc) - path_loss(d, sc.pathloss)) < 1e-18


def test_scenario_validation():
    with pytest.raises(ContractError):
        Scenario(m_antennas=1)
    with pytest.raises(ContractError):
        Scenario(power=0.0)
    with pytest.raises(ContractError):
        Scenario(dwell=0)


def test_make_channel_rician_limits():
    sc = Scenario(rician_factor=np.inf)
    ch = make_channel(sc, substream(0, "chan"))
    # Pure LoS channel is rank one.
    assert ch.rank() == 1
    sc2 = Scenario(rician_factor=0.5)
    ch2 = make_channel(sc2, substream(0, "chan"))
    assert ch2.rank() == min(sc2.m_antennas, sc2.n_elements)
    # SVD cache reconstructs G (square case).
    rebuilt = (ch2.left * ch2.singvals) @ ch2.right_h
    assert np.allclose(rebuilt, ch2.G, atol=1e-12)


def test_make_target_point():
    sc = Scenario()
    tgt = make_target(sc, substream(0, "target"))
    assert isinstance(tgt, PointTarget)
    assert abs(abs(tgt.alpha) - point_alpha_magnitude(sc)) < 1e-18
    H = tgt.response_matrix(sc.n_elements, sc.element_spacing_ratio)
    assert np.allclose(H, H.T)
    assert H.shape == (sc.n_elements, sc.n_elements)


def test_make_target_extended():
    sc = Scenario(target_spec=ExtendedTargetSpec((5.0, 0.0), 0.5, 7))
    tgt = make_target(sc, substream(0, "target"))
    assert isinstance(tgt, ExtendedTarget)
    assert tgt.H.shape == (sc.n_elements, sc.n_elements)
    assert np.allclose(tgt.H, tgt.H.T)
    assert len(tgt.thetas) == 7
    # Scatterers in a 0.5 m disc 5 m below the IRS subtend a small DoA span.
    assert np.all(np.abs(tgt.thetas) < np.deg2rad(10.0))


def test_synthesize_waveform_exact():
    rng = substream(0, "wave")
    r = complex_normal(rng, (6, 6))
    r = r @ r.conj().T / 6
    wf = synthesize_waveform(r, 64)
    assert np.allclose(wf.sample_coherence, r, atol=1e-12)


def test_synthesize_waveform_low_rank():
    b = complex_normal(substream(1, "wave"), 5)
    r = np.outer(b, b.conj())
    wf = synthesize_waveform(r, 32)
    assert np.allclose(wf.sample_coherence, r, atol=1e-12)
    with pytest.raises(SynthesisError):
        synthesize_waveform(np.eye(8), 4)


def test_synthesize_waveform_rejects_bad_input():
    with pytest.raises(ContractError):
        synthesize_waveform(np.array([[0.0, 1.0], [0.0, 0.0]]), 8)
    with pytest.raises(ContractError):
        synthesize_waveform(-np.eye(3), 8)


def test_echo_linear_model():
    sc = Scenario(m_antennas=4, n_elements=4, dwell=16)
    ch = make_channel(sc, substream(0, "chan"))
    tgt = make_target(sc, substream(0, "target"))
    v = np.exp(1j * substream(0, "v").uniform(0, 2 * np.pi, 4))
    wf = synthesize_waveform((sc.power / 4) * np.eye(4), sc.dwell)
    H = tgt.response_matrix(4, 0.5)
    y = noiseless_echo(ch, v, H, wf)
    phi = np.diag(v)
    expected = ch.G.T @ phi.T @ H @ phi @ ch.G @ wf.X
    assert np.allclose(y, expected, atol=1e-18)
    # Noise obeys the configured power.
    y_noisy = simulate_echo(ch, v, np.zeros((4, 4)), wf, 2.0,
                            substream(0, "noise"))
    assert abs(np.mean(np.abs(y_noisy) ** 2) - 2.0) < 0.3


def test_echo_rejects_non_unit_modulus():
    sc = Scenario(m_antennas=4, n_elements=4)
    ch = make_channel(sc, substream(0, "chan"))
    wf = synthesize_waveform(np.eye(4), 16)
    with pytest.raises(ContractError):
        simulate_echo(ch, 2.0 * np.ones(4), np.eye(4), wf, 0.0, None)
