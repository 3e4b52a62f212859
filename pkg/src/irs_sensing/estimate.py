"""Maximum-likelihood estimators and the Monte-Carlo MSE harness.

Point targets: DoA by coarse grid search plus golden-section refinement of
the concentrated likelihood, with the gain estimated in closed form.
Extended targets: the linear least-squares solve in its Kronecker-factored
form, so the full design matrix is never materialized.  The Monte-Carlo
harness draws fresh noise per trial from named substreams and reports the
achieved MSE next to the matching CRB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import ContractError, EstimabilityError, EstimationError
from .rng import substream
from .scene import (Channel, ExtendedTarget, PointTarget, Scenario,
                    make_channel, make_target, simulate_echo,
                    synthesize_waveform)
from .sensing import RANK_REL_TOL, crb_extended, crb_point, echo_directions

_DENSE_SOLVE_MAX_N = 4


@dataclass(frozen=True)
class GridParams:
    """Search controls for the DoA likelihood maximization."""

    step: float = np.deg2rad(0.2)
    refine_tol: float = 1e-8
    lo: float = -np.pi / 2
    hi: float = np.pi / 2


@dataclass(frozen=True)
class MseReport:
    """Monte-Carlo MSE next to the CRB it is benchmarked against."""

    trials: int
    mse: float
    crb: float
    ratio: float
    stderr: float
    failures: int = 0


def _ml_objective(Y: np.ndarray, X: np.ndarray, channel: Channel,
                  v: np.ndarray, theta: float, spacing_ratio: float) -> float:
    """Concentrated DoA likelihood |b^H Y X^H b*|^2 / (||b||^2 ||X^T b||^2)."""
    b, _ = echo_directions(channel, v, theta, spacing_ratio)
    bn = float(np.real(b.conj() @ b))
    xb = X.T @ b
    denom = bn * float(np.real(xb.conj() @ xb))
    if denom <= 0.0:
        return -np.inf
    num = abs(b.conj() @ (Y @ (X.conj().T @ b.conj()))) ** 2
    return num / denom


def mle_point(Y: np.ndarray, X: np.ndarray, channel: Channel, v: np.ndarray,
              grid: GridParams = GridParams(),
              spacing_ratio: float = 0.5) -> tuple[float, complex]:
    """DoA and gain estimates maximizing the likelihood of the echo.

    The gain is profiled out in closed form, leaving a scalar objective in
    theta that is swept on a coarse grid and then refined by golden-section
    search around the best cell.  The refined estimate never scores below the
    best grid point.
    """
    M, T = Y.shape
    if X.shape != (M, T):
        raise ContractError("echo and waveform dimensions disagree")
    thetas = np.arange(grid.lo, grid.hi + grid.step / 2, grid.step)
    values = np.array([_ml_objective(Y, X, channel, v, t, spacing_ratio)
                       for t in thetas])
    if not np.any(np.isfinite(values)) or np.max(values) <= 0.0:
        raise EstimationError("likelihood degenerate over the whole DoA grid")
    k = int(np.argmax(values))
    theta_best = float(thetas[k])
    value_best = float(values[k])
    lo = max(grid.lo, theta_best - grid.step)
    hi = min(grid.hi, theta_best + grid.step)
    try:
        res = scipy.optimize.minimize_scalar(
            lambda t: -_ml_objective(Y, X, channel, v, float(t), spacing_ratio),
            bracket=(lo, theta_best, hi), method="golden",
            options={"xtol": grid.refine_tol})
        if np.isfinite(res.x) and -res.fun > value_best:
            theta_best = float(np.clip(res.x, grid.lo, grid.hi))
    except ValueError:
        pass  # bracket degenerate (edge or flat); keep the grid argmax
    b, _ = echo_directions(channel, v, theta_best, spacing_ratio)
    xb = X.T @ b
    denom = float(np.real(b.conj() @ b)) * float(np.real(xb.conj() @ xb))
    alpha_hat = complex(b.conj() @ (Y @ (X.conj().T @ b.conj()))) / denom
    return theta_best, alpha_hat


def _factor_matrices(X: np.ndarray, channel: Channel,
                     v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """C2 = G^T Phi^T (receive side) and C1 = X^T G^T Phi^T (transmit side)."""
    c2 = channel.G.T * v[np.newaxis, :]
    c1 = X.T @ c2
    return c1, c2


def mle_extended(Y: np.ndarray, X: np.ndarray, channel: Channel,
                 v: np.ndarray) -> np.ndarray:
    """Least-squares estimate of the target response matrix.

    The linear model factorizes over a Kronecker product, so the normal
    equations split into two N x N solves; the full MT x N^2 design matrix
    never exists in memory.
    """
    N, M = channel.G.shape
    if M < N or channel.rank(RANK_REL_TOL) < N:
        raise EstimabilityError("response matrix not estimable: rank(G) < N")
    if np.linalg.matrix_rank(X) < N:
        raise EstimabilityError("waveform excites fewer than N dimensions")
    c1, c2 = _factor_matrices(X, channel, v)
    k1 = c1.conj().T @ c1
    k2 = c2.conj().T @ c2
    w = c2.conj().T @ Y @ c1.conj()
    h1 = np.linalg.solve(k2, w)
    return np.linalg.solve(k1, h1.T).T


def mle_extended_dense(Y: np.ndarray, X: np.ndarray, channel: Channel,
                       v: np.ndarray) -> np.ndarray:
    """Materialized-design-matrix solve, for validating the factored path.

    Guarded to small N because the dense design matrix costs O(M T N^2)
    memory.
    """
    N = channel.G.shape[0]
    if N > _DENSE_SOLVE_MAX_N:
        raise ContractError(
            f"dense solve limited to N <= {_DENSE_SOLVE_MAX_N}")
    c1, c2 = _factor_matrices(X, channel, v)
    E = np.kron(c1, c2)
    h, *_ = np.linalg.lstsq(E, Y.reshape(-1, order="F"), rcond=None)
    return h.reshape((N, N), order="F")


def monte_carlo_mse(scenario: Scenario, r_x: np.ndarray, v: np.ndarray,
                    estimator: str, trials: int, seed: int,
                    redraw: bool = False, channel: Channel | None = None,
                    target: PointTarget | ExtendedTarget | None = None,
                    grid: GridParams = GridParams()) -> MseReport:
    """Average squared estimation error of a fixed design over noisy echoes.

    Each trial draws fresh noise from its own substream; with `redraw` the
    channel and target are re-drawn per trial as well.  Failed trials are
    excluded from the average and counted.  Units: radians^2 for the DoA,
    squared Frobenius norm for the response matrix.
    """
    if trials < 1:
        raise ContractError("need at least one trial")
    if estimator not in ("point", "extended"):
        raise ContractError(f"unknown estimator kind {estimator!r}")
    waveform = synthesize_waveform(r_x, scenario.dwell)
    if channel is None:
        channel = make_channel(scenario, substream(seed, "chan"))
    if target is None:
        target = make_target(scenario, substream(seed, "target"))
    spacing = scenario.element_spacing_ratio
    errors: list[float] = []
    crbs: list[float] = []
    failures = 0
    for i in range(trials):
        if redraw:
            channel = make_channel(scenario, substream(seed, "chan", i + 1))
            target = make_target(scenario, substream(seed, "target", i + 1))
        noise_rng = substream(seed, "noise", i)
        try:
            if estimator == "point":
                if not isinstance(target, PointTarget):
                    raise ContractError("point estimator needs a point target")
                H = target.response_matrix(scenario.n_elements, spacing)
                Y = simulate_echo(channel, v, H, waveform,
                                  scenario.noise_power, noise_rng)
                theta_hat, _ = mle_point(Y, waveform.X, channel, v, grid,
                                         spacing)
                errors.append((theta_hat - target.theta) ** 2)
                crbs.append(crb_point(channel, v, r_x, target.theta,
                                      target.alpha, scenario.dwell,
                                      scenario.noise_power, spacing).value)
            else:
                if not isinstance(target, ExtendedTarget):
                    raise ContractError(
                        "extended estimator needs an extended target")
                Y = simulate_echo(channel, v, target.H, waveform,
                                  scenario.noise_power, noise_rng)
                H_hat = mle_extended(Y, waveform.X, channel, v)
                errors.append(float(np.linalg.norm(H_hat - target.H) ** 2))
                crbs.append(crb_extended(channel, r_x, scenario.dwell,
                                         scenario.noise_power).value)
        except (EstimationError, EstimabilityError, np.linalg.LinAlgError):
            failures += 1
    if not errors:
        raise EstimationError(f"all {trials} trials failed")
    err = np.array(errors)
    mse = float(np.sum(err)) / len(err)
    crb = float(np.mean(crbs))
    stderr = (float(np.std(err, ddof=1)) / np.sqrt(len(err))
              if len(err) > 1 else 0.0)
    ratio = mse / crb if crb > 0 else np.inf
    return MseReport(trials=len(err), mse=mse, crb=crb, ratio=ratio,
                     stderr=stderr, failures=failures)
