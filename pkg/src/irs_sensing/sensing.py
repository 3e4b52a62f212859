"""Steering vectors, Fisher information, and closed-form CRB evaluation.

Point targets: 3x3 FIM over (theta, Re alpha, Im alpha) and the DoA CRB in
both its trace form and the reflect-vector form; the two are cross-checked on
every evaluation.  Extended targets: the trace-product CRB and, for small N,
the explicit block FIM used only for validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .scene import Channel

RANK_REL_TOL = 1e-9
DUAL_FORM_REL_TOL = 1e-8
_EXPLICIT_FIM_MAX_N = 4


def steering_vector(theta: float, n: int, spacing_ratio: float) -> np.ndarray:
    """ULA steering vector: unit-modulus phase ramp in sin(theta)."""
    if n < 1:
        raise ContractError("array needs at least one element")
    idx = np.arange(n)
    return np.exp(2j * np.pi * spacing_ratio * idx * np.sin(theta))


def steering_derivative(theta: float, n: int, spacing_ratio: float) -> np.ndarray:
    """d a(theta) / d theta."""
    idx = np.arange(n)
    a = steering_vector(theta, n, spacing_ratio)
    return 2j * np.pi * spacing_ratio * np.cos(theta) * idx * a


@dataclass(frozen=True)
class CrbReport:
    """CRB value with its estimability verdict; +inf when not estimable."""

    value: float
    estimable: bool
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReflectGeometry:
    """Quadratic forms for the reflect-vector CRB expression.

    r1 = A^H conj(G) G^T A and r2 = A^H conj(G) conj(R_x) G^T A with
    A = diag(a(theta)); d_index = diag(0..N-1).
    """

    theta: float
    spacing_ratio: float
    a: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    d_index: np.ndarray

    @classmethod
    def build(cls, channel: Channel, r_x: np.ndarray, theta: float,
              spacing_ratio: float) -> "ReflectGeometry":
        G = channel.G
        N = G.shape[0]
        a = steering_vector(theta, N, spacing_ratio)
        A = np.diag(a)
        gc = G.conj()
        r1 = A.conj().T @ gc @ G.T @ A
        r2 = A.conj().T @ gc @ r_x.conj() @ G.T @ A
        d_index = np.diag(np.arange(N, dtype=float))
        return cls(theta=theta, spacing_ratio=spacing_ratio, a=a, r1=r1, r2=r2,
                   d_index=d_index)


def echo_directions(channel: Channel, v: np.ndarray, theta: float,
                    spacing_ratio: float) -> tuple[np.ndarray, np.ndarray]:
    """Effective echo direction b = G^T A v and its DoA derivative."""
    G = channel.G
    N = G.shape[0]
    a = steering_vector(theta, N, spacing_ratio)
    d = np.arange(N)
    b = G.T @ (a * v)
    b_dot = 2j * np.pi * spacing_ratio * np.cos(theta) * (G.T @ (d * a * v))
    return b, b_dot


def _point_traces(channel: Channel, v: np.ndarray, r_x: np.ndarray, theta: float,
                  spacing_ratio: float) -> tuple[complex, float, float]:
    """tr(B Rx Bdot^H), tr(Bdot Rx Bdot^H), tr(B Rx B^H) for B = b b^T."""
    b, b_dot = echo_directions(channel, v, theta, spacing_ratio)
    B = np.outer(b, b)
    B_dot = np.outer(b_dot, b) + np.outer(b, b_dot)
    t_bd = np.trace(B @ r_x @ B_dot.conj().T)
    t_dd = float(np.real(np.trace(B_dot @ r_x @ B_dot.conj().T)))
    t_bb = float(np.real(np.trace(B @ r_x @ B.conj().T)))
    return t_bd, t_dd, t_bb


def fim_point(channel: Channel, v: np.ndarray, r_x: np.ndarray, theta: float,
              alpha: complex, dwell: int, noise_power: float,
              spacing_ratio: float) -> np.ndarray:
    """3x3 FIM over (theta, Re alpha, Im alpha)."""
    t_bd, t_dd, t_bb = _point_traces(channel, v, r_x, theta, spacing_ratio)
    c = 2.0 * dwell / noise_power
    f_tt = c * abs(alpha) ** 2 * t_dd
    f_ta = c * np.array([np.real(np.conj(alpha) * t_bd),
                         np.real(np.conj(alpha) * t_bd * 1j)])
    f_aa = c * t_bb * np.eye(2)
    F = np.zeros((3, 3))
    F[0, 0] = f_tt
    F[0, 1:] = f_ta
    F[1:, 0] = f_ta
    F[1:, 1:] = f_aa
    return F


def point_crb_denominator(channel: Channel, v: np.ndarray, r_x: np.ndarray,
                          theta: float, spacing_ratio: float) -> float:
    """The transmit-design objective: tr(Bd Rx Bd^H) - |tr(B Rx Bd^H)|^2 / tr(B Rx B^H)."""
    t_bd, t_dd, t_bb = _point_traces(channel, v, r_x, theta, spacing_ratio)
    if t_bb <= 0.0:
        return 0.0
    return t_dd - abs(t_bd) ** 2 / t_bb


def reflective_objective(geom: ReflectGeometry, v: np.ndarray,
                         clamp: float = 1e-12) -> float:
    """The bracketed reflect-vector objective maximized by the SCA stage.

    Denominators are clamped at `clamp` times the problem scale to survive
    adversarial initializations.
    """
    r1, r2, d = geom.r1, geom.r2, geom.d_index
    q1 = float(np.real(v.conj() @ r1 @ v))
    q2 = float(np.real(v.conj() @ r2 @ v))
    d1 = float(np.real(v.conj() @ d @ r1 @ d @ v))
    d2 = float(np.real(v.conj() @ d @ r2 @ d @ v))
    c1 = complex(v.conj() @ d @ r1 @ v)
    c2 = complex(v.conj() @ d @ r2 @ v)
    scale = max(abs(q1), abs(q2), 1e-300)
    q1c = max(q1, clamp * scale)
    q2c = max(q2, clamp * scale)
    return q2 * (d1 - abs(c1) ** 2 / q1c) + q1 * (d2 - abs(c2) ** 2 / q2c)


def crb_point_vform(channel: Channel, v: np.ndarray, r_x: np.ndarray, theta: float,
                    alpha: complex, dwell: int, noise_power: float,
                    spacing_ratio: float) -> float:
    geom = ReflectGeometry.build(channel, r_x, theta, spacing_ratio)
    h = reflective_objective(geom, v)
    cos2 = np.cos(theta) ** 2
    denom = 8.0 * dwell * abs(alpha) ** 2 * np.pi ** 2 * spacing_ratio ** 2 * cos2 * h
    if denom <= 0.0:
        return np.inf
    return noise_power / denom


def crb_point(channel: Channel, v: np.ndarray, r_x: np.ndarray, theta: float,
              alpha: complex, dwell: int, noise_power: float,
              spacing_ratio: float, check_dual_form: bool = True) -> CrbReport:
    """DoA CRB via the Schur-complement trace form, cross-checked against the
    reflect-vector form; +inf sentinel when the channel has a single path."""
    diagnostics = {"rank_G": channel.rank(RANK_REL_TOL)}
    if diagnostics["rank_G"] < 2:
        return CrbReport(value=np.inf, estimable=False, diagnostics=diagnostics)
    if abs(np.cos(theta)) < 1e-12:
        diagnostics["endfire"] = True
        return CrbReport(value=np.inf, estimable=False, diagnostics=diagnostics)
    denom_core = point_crb_denominator(channel, v, r_x, theta, spacing_ratio)
    denom = 2.0 * dwell * abs(alpha) ** 2 * denom_core
    if denom <= 0.0:
        return CrbReport(value=np.inf, estimable=False, diagnostics=diagnostics)
    value = noise_power / denom
    if check_dual_form:
        alt = crb_point_vform(channel, v, r_x, theta, alpha, dwell, noise_power,
                              spacing_ratio)
        rel = abs(alt - value) / value
        diagnostics["dual_form_rel_err"] = rel
        if rel > DUAL_FORM_REL_TOL:
            raise AssertionError(
                f"trace-form and reflect-form CRB disagree: rel err {rel:.3e}")
    return CrbReport(value=value, estimable=True, diagnostics=diagnostics)


def crb_extended(channel: Channel, r_x: np.ndarray, dwell: int,
                 noise_power: float) -> CrbReport:
    """Response-matrix CRB: (sigma^2/T) tr((G Rx G^H)^-1) tr((G G^H)^-1)."""
    G = channel.G
    N = G.shape[0]
    rank_g = channel.rank(RANK_REL_TOL)
    diagnostics = {"rank_G": rank_g}
    if rank_g < N:
        return CrbReport(value=np.inf, estimable=False, diagnostics=diagnostics)
    ggh = G @ G.conj().T
    grg = G @ r_x @ G.conj().T
    sv = np.linalg.svd(grg, compute_uv=False)
    diagnostics["rank_GRxGh"] = int(np.sum(sv > RANK_REL_TOL * max(sv[0], 1e-300)))
    if diagnostics["rank_GRxGh"] < N:
        return CrbReport(value=np.inf, estimable=False, diagnostics=diagnostics)
    value = (noise_power / dwell
             * float(np.real(np.trace(np.linalg.inv(grg))))
             * float(np.real(np.trace(np.linalg.inv(ggh)))))
    return CrbReport(value=value, estimable=True, diagnostics=diagnostics)


def fim_extended_explicit(channel: Channel, v: np.ndarray, r_x: np.ndarray,
                          dwell: int, noise_power: float) -> np.ndarray:
    """Explicit 2N^2 x 2N^2 FIM over (Re vec H, Im vec H).

    Validation-only: production paths use the trace formula.  Guarded to small
    N because the explicit form costs O(N^4) memory.
    """
    G = channel.G
    N = G.shape[0]
    if N > _EXPLICIT_FIM_MAX_N:
        raise ContractError(
            f"explicit extended FIM limited to N <= {_EXPLICIT_FIM_MAX_N}")
    phi = np.diag(v)
    p = phi.conj() @ G.conj()          # conj(Phi) conj(G)
    left = p @ r_x.T @ p.conj().T      # conj(Phi G Rx^H G^H Phi^H) when Rx Hermitian
    right = p @ p.conj().T
    kron = np.kron(left, right)
    c = 2.0 * dwell / noise_power
    f_rr = c * np.real(kron)
    f_ir = c * np.imag(kron)
    F = np.zeros((2 * N * N, 2 * N * N))
    F[: N * N, : N * N] = f_rr
    F[N * N:, N * N:] = f_rr
    F[N * N:, : N * N] = f_ir
    F[: N * N, N * N:] = -f_ir
    return F
