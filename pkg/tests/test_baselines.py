"""Benchmark beamformer schemes."""

import itertools

import numpy as np

from irs_sensing.baselines import (isotropic_extended, reflective_only,
                                   snr_max_design, transmit_only)
from irs_sensing.optpoint import PointOptParams
from irs_sensing.rng import substream
from irs_sensing.scene import Channel, Scenario, make_channel, point_theta
from irs_sensing.sensing import steering_vector

FAST = PointOptParams(max_outer=4, max_inner=8, randomizations=50)


def _setup(seed, m=4, n=4):
    sc = Scenario(m_antennas=m, n_elements=n, dwell=32, power=1.0,
                  noise_power=1e-3)
    ch = make_channel(sc, substream(seed, "chan"))
    return sc, ch


def _snr(channel, theta, v, r_x, spacing=0.5):
    # Echo mean is alpha * b b^T X, so the transmit side sees b^T R_x b*.
    a = steering_vector(theta, channel.G.shape[0], spacing)
    b = channel.G.T @ (a * v)
    return float(np.real(b @ r_x @ b.conj()) * np.real(b.conj() @ b))


def test_snr_max_transmit_is_rank_one_mrt():
    sc, ch = _setup(0)
    theta = point_theta(sc)
    pair = snr_max_design(ch, theta, sc.power, substream(0, "sdr"), 100)
    evals = np.linalg.eigvalsh(pair.r_x)
    assert abs(np.real(np.trace(pair.r_x)) - sc.power) < 1e-9
    assert evals[-1] > 1e-6
    assert np.all(evals[:-1] < 1e-9 * evals[-1])
    assert np.allclose(np.abs(pair.v), 1.0, atol=1e-9)
    # MRT: top eigenvector aligned with conj(b).
    a = steering_vector(theta, 4, 0.5)
    b = ch.G.T @ (a * pair.v)
    top = np.linalg.eigh(pair.r_x)[1][:, -1]
    corr = abs(top.conj() @ (b.conj() / np.linalg.norm(b)))
    assert corr > 1.0 - 1e-9


def test_snr_max_brute_force_small():
    # N=3, 16 phases per element: exhaustive check of the reflect pattern.
    sc, ch = _setup(1, m=4, n=3)
    theta = 0.1
    pair = snr_max_design(ch, theta, sc.power, substream(1, "sdr"), 300)
    achieved = _snr(ch, theta, pair.v, pair.r_x)
    phases = np.exp(2j * np.pi * np.arange(16) / 16)
    best = 0.0
    for combo in itertools.product(phases, repeat=2):
        v = np.array([1.0, *combo])
        a = steering_vector(theta, 3, 0.5)
        b = ch.G.T @ (a * v)
        bn = float(np.real(b.conj() @ b))
        # MRT transmit against each candidate pattern.
        best = max(best, bn * bn * sc.power)
    assert achieved >= best * (1.0 - 5e-3)


def test_reflective_only_isotropic_transmit():
    sc, ch = _setup(2)
    pair = reflective_only(sc, ch, point_theta(sc), substream(2, "r"), FAST)
    assert np.allclose(pair.r_x, (sc.power / 4) * np.eye(4))
    assert np.allclose(np.abs(pair.v), 1.0, atol=1e-9)


def test_transmit_only_random_reflect():
    sc, ch = _setup(3)
    pair = transmit_only(sc, ch, point_theta(sc), substream(3, "t"))
    assert np.allclose(np.abs(pair.v), 1.0, atol=1e-9)
    assert np.real(np.trace(pair.r_x)) <= sc.power + 1e-9
    assert np.linalg.eigvalsh(pair.r_x)[0] > -1e-10


def test_isotropic_extended_budget():
    sc = Scenario(power=2.0)
    r = isotropic_extended(sc)
    assert np.allclose(r, (2.0 / 8) * np.eye(8))


def test_schemes_deterministic():
    sc, ch = _setup(4)
    theta = point_theta(sc)
    p1 = snr_max_design(ch, theta, sc.power, substream(4, "sdr"), 100)
    p2 = snr_max_design(ch, theta, sc.power, substream(4, "sdr"), 100)
    assert np.array_equal(p1.v, p2.v)
    assert np.array_equal(p1.r_x, p2.r_x)
