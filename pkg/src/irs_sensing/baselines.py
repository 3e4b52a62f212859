"""Benchmark beamforming schemes for the common evaluation harness.

Four designs: echo-SNR maximization (reflect SDR plus maximum-ratio
transmission), reflective-only with isotropic transmission, transmit-only
with random phase shifts, and plain isotropic transmission for the extended
target.  Each returns the same (R_x, v) pair shape as the joint optimizer so
all schemes run through one evaluation path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimabilityError, SolverError
from .rng import complex_normal
from .scene import Channel, Scenario
from .sensing import RANK_REL_TOL, steering_vector
from .optpoint import PointOptParams, solve_reflective, solve_transmit
from .sdp import ComplexSdpBuilder, hermitian_entry_re


@dataclass(frozen=True)
class BeamformerPair:
    """A transmit covariance and reflect vector produced by one scheme."""

    r_x: np.ndarray
    v: np.ndarray
    status: str = "optimal"


def _snr_quadratic(channel: Channel, theta: float,
                   spacing_ratio: float) -> np.ndarray:
    """R_1 = A^H G* G^T A, the quadratic form behind the echo SNR."""
    G = channel.G
    N = G.shape[0]
    a = steering_vector(theta, N, spacing_ratio)
    A = np.diag(a)
    r1 = A.conj().T @ G.conj() @ G.T @ A
    return 0.5 * (r1 + r1.conj().T)


def snr_max_design(channel: Channel, theta: float, power: float,
                   rng: np.random.Generator, randomizations: int = 500,
                   spacing_ratio: float = 0.5) -> BeamformerPair:
    """Echo-SNR maximization: SDR over the reflect pattern, then
    maximum-ratio transmission toward the resulting effective direction.

    The transmit covariance is rank one with trace exactly the power budget.
    """
    if channel.rank(RANK_REL_TOL) < 1:
        raise EstimabilityError("channel is zero: no echo to maximize")
    r1 = _snr_quadratic(channel, theta, spacing_ratio)
    N = r1.shape[0]
    scale = max(np.linalg.norm(r1), 1e-300)
    r1s = r1 / scale

    bld = ComplexSdpBuilder(sense="max")
    blk = bld.add_block(N)
    bld.set_objective({blk: r1s})
    for i in range(N):
        bld.add_constraint({blk: hermitian_entry_re(N, i, i)}, 1.0)
    sol = bld.solve()
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(f"reflect SDR solver returned {sol.status}")
    V = 0.5 * (sol.block(blk) + sol.block(blk).conj().T)

    evals, evecs = np.linalg.eigh(V)
    factor = evecs * np.sqrt(np.clip(evals, 0.0, None))
    candidates = [np.exp(1j * np.angle(evecs[:, -1] + 0j))]
    if randomizations > 0:
        z = factor @ (complex_normal(rng, (N, randomizations)))
        candidates.extend(np.exp(1j * np.angle(z[:, k]))
                          for k in range(randomizations))
    best_v, best_obj = None, -np.inf
    for cand in candidates:
        obj = float(np.real(cand.conj() @ r1s @ cand))
        if obj > best_obj:
            best_v, best_obj = cand, obj

    a = steering_vector(theta, N, spacing_ratio)
    b = channel.G.T @ (a * best_v)
    bn = float(np.real(b.conj() @ b))
    if bn <= 0.0:
        raise EstimabilityError("effective echo direction vanished")
    # Maximum-ratio transmission: rank-1 covariance along conj(b).
    r_x = power * np.outer(b.conj(), b) / bn
    r_x = 0.5 * (r_x + r_x.conj().T)
    return BeamformerPair(r_x=r_x, v=best_v, status=sol.status)


def reflective_only(scenario: Scenario, channel: Channel, theta: float,
                    rng: np.random.Generator,
                    params: PointOptParams = PointOptParams()) -> BeamformerPair:
    """Isotropic transmission with an optimized reflect pattern."""
    if channel.rank(RANK_REL_TOL) < 2:
        raise EstimabilityError("DoA not estimable: channel has rank < 2")
    M = scenario.m_antennas
    r_x = (scenario.power / M) * np.eye(M)
    v_init = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, scenario.n_elements))
    result = solve_reflective(channel, r_x, theta, v_init, params, rng,
                              scenario.element_spacing_ratio)
    return BeamformerPair(r_x=r_x, v=result.v, status=result.status)


def transmit_only(scenario: Scenario, channel: Channel, theta: float,
                  rng: np.random.Generator) -> BeamformerPair:
    """Random reflect phases with an optimized transmit covariance."""
    if channel.rank(RANK_REL_TOL) < 2:
        raise EstimabilityError("DoA not estimable: channel has rank < 2")
    v = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, scenario.n_elements))
    result = solve_transmit(channel, v, theta, scenario.power,
                            scenario.element_spacing_ratio)
    return BeamformerPair(r_x=result.r_x, v=v, status=result.status)


def isotropic_extended(scenario: Scenario) -> np.ndarray:
    """Uniform power over all antennas, (P0/M) I."""
    M = scenario.m_antennas
    return (scenario.power / M) * np.eye(M)
