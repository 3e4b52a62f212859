"""Scenario construction: geometry, channels, targets, waveforms, and echoes.

The AP illuminates the target through an IRS; the echo returns over the same
cascaded link.  Everything here works in linear units; dB/dBm conversion
happens at the configuration boundary only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, SynthesisError
from .rng import complex_normal


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class PathLossModel:
    """Distance-dependent power gain K0*(d/d0)^(-alpha0), all linear."""

    k0: float = 1e-3
    d0: float = 1.0
    exponent: float = 2.5


@dataclass(frozen=True)
class PointTargetSpec:
    position: tuple[float, float]


@dataclass(frozen=True)
class ExtendedTargetSpec:
    center: tuple[float, float]
    radius: float
    count: int


@dataclass(frozen=True)
class Scenario:
    """Immutable experiment description; the single source of truth for a run."""

    ap_position: tuple[float, float] = (0.0, 0.0)
    irs_position: tuple[float, float] = (5.0, 5.0)
    target_spec: PointTargetSpec | ExtendedTargetSpec = PointTargetSpec((5.0, 0.0))
    m_antennas: int = 8
    n_elements: int = 8
    dwell: int = 256
    power: float = 1.0
    noise_power: float = 1e-15
    rician_factor: float = 0.5
    pathloss: PathLossModel = field(default_factory=PathLossModel)
    element_spacing_ratio: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.m_antennas <= 1 or self.n_elements <= 1:
            raise ContractError("need M > 1 antennas and N > 1 reflecting elements")
        if self.dwell < 1:
            raise ContractError("dwell length must be at least 1")
        if self.power <= 0 or self.noise_power <= 0:
            raise ContractError("power budgets must be positive")
        if self.element_spacing_ratio <= 0:
            raise ContractError("element spacing ratio must be positive")
        if isinstance(self.target_spec, ExtendedTargetSpec) and self.target_spec.count < 1:
            raise ContractError("extended target needs at least one scatterer")

    @property
    def ap_irs_distance(self) -> float:
        return float(np.hypot(self.irs_position[0] - self.ap_position[0],
                              self.irs_position[1] - self.ap_position[1]))


@dataclass(frozen=True)
class Channel:
    """AP-to-IRS channel with its SVD cached (left @ diag(singvals) @ right_h == G)."""

    G: np.ndarray
    left: np.ndarray
    singvals: np.ndarray
    right_h: np.ndarray

    @classmethod
    def from_matrix(cls, G: np.ndarray) -> "Channel":
        left, s, right_h = np.linalg.svd(G, full_matrices=True)
        return cls(G=G, left=left, singvals=s, right_h=right_h)

    def rank(self, rel_tol: float = 1e-9) -> int:
        if self.singvals[0] == 0.0:
            return 0
        return int(np.sum(self.singvals > rel_tol * self.singvals[0]))


@dataclass(frozen=True)
class PointTarget:
    theta: float
    alpha: complex

    def response_matrix(self, n_elements: int, spacing_ratio: float) -> np.ndarray:
        from .sensing import steering_vector

        a = steering_vector(self.theta, n_elements, spacing_ratio)
        return self.alpha * np.outer(a, a)


@dataclass(frozen=True)
class ExtendedTarget:
    H: np.ndarray
    thetas: np.ndarray
    alphas: np.ndarray


@dataclass(frozen=True)
class Waveform:
    X: np.ndarray

    @property
    def sample_coherence(self) -> np.ndarray:
        T = self.X.shape[1]
        return self.X @ self.X.conj().T / T


def path_loss(d: float, model: PathLossModel) -> float:
    """Linear power gain at distance d meters."""
    if d <= 0:
        raise ContractError(f"distance must be positive, got {d}")
    return model.k0 * (d / model.d0) ** (-model.exponent)


def _bearing(src: tuple[float, float], dst: tuple[float, float]) -> float:
    """Angle of dst as seen from src, measured like the target DoA convention.

    Zero points straight down (negative y), positive toward positive x, so the
    reference geometry (IRS above the target) gives theta = 0.
    """
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    return float(np.arctan2(dx, -dy))


def make_channel(scenario: Scenario, rng: np.random.Generator) -> Channel:
    """Rician AP-IRS channel: sqrt(L) * (LoS mixture), with the SVD cached."""
    from .sensing import steering_vector

    M, N = scenario.m_antennas, scenario.n_elements
    gain = path_loss(scenario.ap_irs_distance, scenario.pathloss)
    # Deterministic rank-1 LoS term from the AP->IRS bearing; half-wavelength ULAs.
    psi_irs = _bearing(scenario.irs_position, scenario.ap_position)
    psi_ap = _bearing(scenario.ap_position, scenario.irs_position)
    a_irs = steering_vector(psi_irs, N, 0.5)
    a_ap = steering_vector(psi_ap, M, 0.5)
    g_los = np.outer(a_irs, a_ap)
    beta = scenario.rician_factor
    if np.isinf(beta):
        G = np.sqrt(gain) * g_los
    else:
        g_nlos = complex_normal(rng, (N, M))
        G = np.sqrt(gain) * (np.sqrt(beta / (1.0 + beta)) * g_los
                             + np.sqrt(1.0 / (1.0 + beta)) * g_nlos)
    return Channel.from_matrix(G)


def _round_trip_alpha_mag(distance: float, model: PathLossModel) -> float:
    # Unit RCS; path_loss is a power gain, so each leg contributes sqrt(L)
    # in amplitude and the round trip through the target contributes L.
    return path_loss(distance, model)


def make_target(scenario: Scenario, rng: np.random.Generator) -> PointTarget | ExtendedTarget:
    """Build the target model from the scenario geometry.

    Point: DoA from geometry, |alpha| from the round-trip IRS-target path
    loss, uniform phase.  Extended: scatterers placed uniformly in the
    configured circle, response matrix assembled as the steering outer-product
    sum (complex symmetric by construction).
    """
    from .sensing import steering_vector

    spec = scenario.target_spec
    irs = scenario.irs_position
    model = scenario.pathloss
    if isinstance(spec, PointTargetSpec):
        theta = _bearing(irs, spec.position)
        d = float(np.hypot(spec.position[0] - irs[0], spec.position[1] - irs[1]))
        phase = rng.uniform(0.0, 2.0 * np.pi)
        alpha = _round_trip_alpha_mag(d, model) * np.exp(1j * phase)
        return PointTarget(theta=theta, alpha=complex(alpha))

    # Uniform sampling over the disc: radius scales with sqrt of a uniform draw.
    n_s = spec.count
    radii = spec.radius * np.sqrt(rng.uniform(size=n_s))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n_s)
    xs = spec.center[0] + radii * np.cos(angles)
    ys = spec.center[1] + radii * np.sin(angles)
    thetas = np.array([_bearing(irs, (x, y)) for x, y in zip(xs, ys)])
    dists = np.hypot(xs - irs[0], ys - irs[1])
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_s)
    alphas = np.array([_round_trip_alpha_mag(d, model) * np.exp(1j * p)
                       for d, p in zip(dists, phases)])
    N = scenario.n_elements
    H = np.zeros((N, N), dtype=complex)
    for theta_i, alpha_i in zip(thetas, alphas):
        a = steering_vector(theta_i, N, scenario.element_spacing_ratio)
        H += alpha_i * np.outer(a, a)
    return ExtendedTarget(H=H, thetas=thetas, alphas=alphas)


def synthesize_waveform(r_x: np.ndarray, dwell: int, rank_tol: float = 1e-12) -> Waveform:
    """Exact waveform synthesis: (1/T) X X^H reproduces r_x to machine precision.

    Mixes the eigenbeams of r_x with orthonormal DFT rows, so the sample
    coherence matrix is exact rather than a T-sample estimate.
    """
    M = r_x.shape[0]
    if r_x.shape != (M, M) or np.linalg.norm(r_x - r_x.conj().T) > 1e-10 * max(1.0, np.linalg.norm(r_x)):
        raise ContractError("sample coherence matrix must be square Hermitian")
    evals, evecs = np.linalg.eigh(r_x)
    scale = max(evals[-1], 0.0)
    if evals[0] < -1e-10 * max(scale, 1.0):
        raise ContractError("sample coherence matrix must be PSD")
    evals = np.clip(evals, 0.0, None)
    keep = evals > rank_tol * max(scale, 1.0)
    k = int(np.sum(keep))
    if dwell < k:
        raise SynthesisError(f"dwell {dwell} shorter than coherence rank {k}")
    if k == 0:
        return Waveform(X=np.zeros((M, dwell), dtype=complex))
    lam = evals[keep]
    W = evecs[:, keep]
    t = np.arange(dwell)
    rows = np.arange(k)[:, None]
    U = np.exp(-2j * np.pi * rows * t / dwell) / np.sqrt(dwell)  # orthonormal rows
    X = (W * np.sqrt(lam)) @ U * np.sqrt(dwell)
    return Waveform(X=X)


def simulate_echo(channel: Channel, v: np.ndarray, target_response: np.ndarray,
                  waveform: Waveform, noise_power: float,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Received M x T echo through the AP-IRS-target-IRS-AP link plus AWGN."""
    G = channel.G
    N, M = G.shape
    if v.shape != (N,):
        raise ContractError(f"reflect vector must have length {N}")
    if not np.allclose(np.abs(v), 1.0, atol=1e-9):
        raise ContractError("reflect vector entries must be unit modulus")
    if target_response.shape != (N, N):
        raise ContractError("target response matrix must be N x N")
    X = waveform.X
    if X.shape[0] != M:
        raise ContractError("waveform row count must match antenna count")
    phi = np.diag(v)
    Y = G.T @ phi.T @ target_response @ phi @ G @ X
    if noise_power > 0 and rng is not None:
        Y = Y + complex_normal(rng, Y.shape, noise_power)
    return Y


def noiseless_echo(channel: Channel, v: np.ndarray, target_response: np.ndarray,
                   waveform: Waveform) -> np.ndarray:
    return simulate_echo(channel, v, target_response, waveform, 0.0, None)


def point_alpha_magnitude(scenario: Scenario) -> float:
    """Deterministic |alpha| of the scenario's point target (phase excluded)."""
    spec = scenario.target_spec
    if not isinstance(spec, PointTargetSpec):
        raise ContractError("scenario does not describe a point target")
    irs = scenario.irs_position
    d = float(np.hypot(spec.position[0] - irs[0], spec.position[1] - irs[1]))
    return _round_trip_alpha_mag(d, scenario.pathloss)


def point_theta(scenario: Scenario) -> float:
    """DoA of the scenario's point target as seen from the IRS."""
    spec = scenario.target_spec
    if not isinstance(spec, PointTargetSpec):
        raise ContractError("scenario does not describe a point target")
    return _bearing(scenario.irs_position, spec.position)
