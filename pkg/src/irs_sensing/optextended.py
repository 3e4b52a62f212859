"""Closed-form transmit design for target response matrix estimation.

The reflect pattern cancels out of the extended-target CRB, so this module
deliberately takes no reflect vector anywhere.  The optimal covariance
follows from an inverse-singular-value power allocation over the channel's
right singular space; an SDP cross-check solves the same problem numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimabilityError, SolverError
from .scene import Channel
from .sensing import RANK_REL_TOL, crb_extended
from .sdp import (ComplexSdpBuilder, hermitian_entry_im, hermitian_entry_re)


@dataclass(frozen=True)
class ExtendedDesign:
    r_x: np.ndarray
    crb: float


def _require_full_rank(channel: Channel) -> None:
    N, M = channel.G.shape
    if M < N:
        raise EstimabilityError(
            f"response matrix not estimable: M={M} antennas < N={N} elements")
    if channel.rank(RANK_REL_TOL) < N:
        raise EstimabilityError("response matrix not estimable: rank(G) < N")


def power_allocation(singular_values: np.ndarray, power: float) -> np.ndarray:
    """Inverse-amplitude water levels: p_i proportional to 1/sigma_i."""
    sv = np.asarray(singular_values, dtype=float)
    if np.any(sv <= 0.0):
        raise EstimabilityError("power allocation needs strictly positive "
                                "singular values")
    if power <= 0.0:
        raise EstimabilityError("power budget must be positive")
    inv = 1.0 / sv
    return inv / inv.sum() * power


def optimal_rx_extended(channel: Channel, power: float, dwell: int,
                        noise_power: float) -> ExtendedDesign:
    """Covariance aligned with the right singular vectors of G, powers from
    the inverse-amplitude allocation, and the closed-form CRB it achieves."""
    _require_full_rank(channel)
    N = channel.G.shape[0]
    sv = channel.singvals[:N]
    p = power_allocation(sv, power)
    # Right singular vectors (columns) spanning the illuminated subspace.
    q = channel.right_h.conj().T[:, :N]
    r_x = (q * p) @ q.conj().T
    r_x = 0.5 * (r_x + r_x.conj().T)
    inv_sum = float(np.sum(1.0 / sv))
    inv2_sum = float(np.sum(1.0 / sv ** 2))
    crb = noise_power * inv_sum ** 2 * inv2_sum / (power * dwell)
    return ExtendedDesign(r_x=r_x, crb=crb)


def isotropic_crb(channel: Channel, power: float, dwell: int,
                  noise_power: float) -> float:
    """CRB of uniform power over all antennas, (P0/M) I."""
    _require_full_rank(channel)
    N, M = channel.G.shape
    sv = channel.singvals[:N]
    inv2_sum = float(np.sum(1.0 / sv ** 2))
    return M * noise_power * inv2_sum ** 2 / (power * dwell)


def sdp_cross_check(channel: Channel, power: float) -> np.ndarray:
    """Numerically optimal covariance for the response-matrix CRB.

    Epigraph form: minimize tr(U) subject to the 2N x 2N block LMI
    [[U, I], [I, G R_x G^H]] being PSD, tr(R_x) <= P0.  At the optimum
    tr(U) = tr((G R_x G^H)^{-1}), the CRB's covariance-dependent factor.
    """
    _require_full_rank(channel)
    G = channel.G
    N, M = G.shape
    # Scale so that G R_x G^H is O(1) for the solver.
    g_scale = float(np.linalg.norm(G, 2))
    Gs = G / g_scale

    bld = ComplexSdpBuilder(sense="min")
    r_blk = bld.add_block(M)
    big = bld.add_block(2 * N)      # [[U, I], [I, S]] with S = Gs R Gs^H
    slack = bld.add_block(1)
    obj = np.zeros((2 * N, 2 * N), dtype=complex)
    obj[:N, :N] = np.eye(N)
    bld.set_objective({big: obj})
    bld.add_constraint({r_blk: np.eye(M), slack: np.eye(1)}, power)
    for i in range(N):
        for j in range(i, N):
            # Bottom-right block pinned to the mapped covariance.
            e_ij = np.zeros((N, N), dtype=complex)
            e_ij[i, j] = 1.0
            q_ij = Gs.conj().T @ e_ij.conj().T @ Gs   # tr(q_ij R) = S_ij
            bld.add_constraint(
                {big: hermitian_entry_re(2 * N, N + i, N + j),
                 r_blk: -0.5 * (q_ij + q_ij.conj().T)}, 0.0)
            if i != j:
                bld.add_constraint(
                    {big: hermitian_entry_im(2 * N, N + i, N + j),
                     r_blk: -0.5 * (-1j * q_ij + 1j * q_ij.conj().T)}, 0.0)
    for i in range(N):
        for j in range(N):
            # Top-right block pinned to the identity.
            bld.add_constraint({big: hermitian_entry_re(2 * N, i, N + j)},
                               1.0 if i == j else 0.0)
            bld.add_constraint({big: hermitian_entry_im(2 * N, i, N + j)}, 0.0)
    sol = bld.solve()
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(f"extended cross-check solver returned {sol.status}")
    r_x = sol.block(r_blk)
    r_x = 0.5 * (r_x + r_x.conj().T)
    evals, evecs = np.linalg.eigh(r_x)
    r_x = (evecs * np.clip(evals, 0.0, None)) @ evecs.conj().T
    tr = float(np.real(np.trace(r_x)))
    if tr > power:
        r_x = r_x * (power / tr)
    return 0.5 * (r_x + r_x.conj().T)
