"""Experiment execution: sweeps, scheme dispatch, and result rows.

Pure computation layer under the CLI: every row is produced from named RNG
substreams keyed by (seed, sweep index), so a (config, seed) pair fully
determines the numerical output regardless of execution order.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import (BeamformerPair, isotropic_extended, reflective_only,
                        snr_max_design, transmit_only)
from .config import ExperimentConfig
from .errors import (ContractError, EstimabilityError, EstimationError,
                     SolverError, SynthesisError)
from .estimate import monte_carlo_mse
from .optextended import isotropic_crb, optimal_rx_extended
from .optpoint import PointOptParams, algorithm1
from .rng import substream
from .scene import (Scenario, dbm_to_watts, make_channel,
                    point_alpha_magnitude, point_theta)
from .sensing import crb_extended, crb_point

_RECOVERABLE = (EstimabilityError, EstimationError, SolverError,
                SynthesisError, ContractError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class ResultRow:
    """One CSV line: a scheme evaluated at one sweep point."""

    experiment: str
    scheme: str
    axis: str
    axis_value: float
    crb: float
    mse: float | None = None
    mse_stderr: float | None = None
    iterations: int | None = None
    wall_ms: float = 0.0
    seed: int = 0


def scenario_at(cfg: ExperimentConfig, value: float) -> Scenario:
    """Scenario for one sweep point; the trials axis leaves it untouched."""
    sc = cfg.scenario
    if cfg.sweep.axis == "P0_dbm":
        return replace(sc, power=dbm_to_watts(value))
    if cfg.sweep.axis == "M":
        return replace(sc, m_antennas=int(value))
    if cfg.sweep.axis == "N":
        return replace(sc, n_elements=int(value))
    return sc


def trials_at(cfg: ExperimentConfig, value: float) -> int:
    return int(value) if cfg.sweep.axis == "trials" else cfg.trials


def _opt_params(cfg: ExperimentConfig) -> PointOptParams:
    return PointOptParams(tol_outer=cfg.tol_outer, max_outer=cfg.max_outer,
                          tol_inner=cfg.tol_inner, max_inner=cfg.max_inner,
                          randomizations=cfg.randomizations)


def _point_design(cfg: ExperimentConfig, scheme: str, scenario: Scenario,
                  channel, theta: float, idx: int) -> tuple[BeamformerPair, int | None]:
    rng = substream(cfg.seed, f"design:{scheme}", idx)
    if scheme == "joint":
        trace = algorithm1(scenario, channel, theta, _opt_params(cfg), rng)
        rec = trace.final
        return BeamformerPair(r_x=rec.r_x, v=rec.v), len(trace.records)
    if scheme == "snr-max":
        return snr_max_design(channel, theta, scenario.power, rng,
                              cfg.randomizations,
                              scenario.element_spacing_ratio), None
    if scheme == "reflective-only":
        return reflective_only(scenario, channel, theta, rng,
                               _opt_params(cfg)), None
    if scheme == "transmit-only":
        return transmit_only(scenario, channel, theta, rng), None
    raise ContractError(f"unknown point scheme {scheme!r}")


def _extended_rx(cfg: ExperimentConfig, scheme: str, scenario: Scenario,
                 channel) -> np.ndarray:
    if scheme == "joint":
        return optimal_rx_extended(channel, scenario.power, scenario.dwell,
                                   scenario.noise_power).r_x
    if scheme == "isotropic":
        return isotropic_extended(scenario)
    raise ContractError(f"unknown extended scheme {scheme!r}")


def _sweep_point_rows(cfg: ExperimentConfig, idx: int) -> list[ResultRow]:
    value = cfg.sweep.values[idx]
    scenario = scenario_at(cfg, value)
    # The channel depends only on the array sizes, so sweeps over power or
    # trial count reuse one realization and produce smooth curves.
    chan_idx = idx if cfg.sweep.axis in ("M", "N") else 0
    channel = make_channel(scenario, substream(cfg.seed, "chan", chan_idx))
    rows: list[ResultRow] = []
    for scheme in cfg.schemes:
        t0 = time.perf_counter()
        crb = np.inf
        mse = stderr = None
        iters = None
        try:
            if cfg.point_target:
                theta = point_theta(scenario)
                alpha = point_alpha_magnitude(scenario)
                pair, iters = _point_design(cfg, scheme, scenario, channel,
                                            theta, idx)
                crb = crb_point(channel, pair.v, pair.r_x, theta, alpha,
                                scenario.dwell, scenario.noise_power,
                                scenario.element_spacing_ratio).value
                if cfg.experiment == "mse-sweep":
                    rep = monte_carlo_mse(
                        scenario, pair.r_x, pair.v, "point",
                        trials_at(cfg, value), cfg.seed, redraw=cfg.redraw,
                        channel=channel)
                    mse, stderr = rep.mse, rep.stderr
            else:
                r_x = _extended_rx(cfg, scheme, scenario, channel)
                if scheme == "isotropic":
                    crb = isotropic_crb(channel, scenario.power,
                                        scenario.dwell, scenario.noise_power)
                else:
                    crb = crb_extended(channel, r_x, scenario.dwell,
                                       scenario.noise_power).value
                if cfg.experiment == "mse-sweep":
                    v = np.exp(1j * substream(cfg.seed, "reflect", idx)
                               .uniform(0.0, 2.0 * np.pi, scenario.n_elements))
                    rep = monte_carlo_mse(
                        scenario, r_x, v, "extended", trials_at(cfg, value),
                        cfg.seed, redraw=cfg.redraw, channel=channel)
                    mse, stderr = rep.mse, rep.stderr
        except _RECOVERABLE:
            crb = np.inf
        rows.append(ResultRow(
            experiment=cfg.experiment, scheme=scheme, axis=cfg.sweep.axis,
            axis_value=value, crb=crb, mse=mse, mse_stderr=stderr,
            iterations=iters,
            wall_ms=(time.perf_counter() - t0) * 1e3, seed=cfg.seed))
    return rows


def _convergence_rows(cfg: ExperimentConfig) -> list[ResultRow]:
    value = cfg.sweep.values[0]
    scenario = scenario_at(cfg, value)
    channel = make_channel(scenario, substream(cfg.seed, "chan", 0))
    theta = point_theta(scenario)
    t0 = time.perf_counter()
    trace = algorithm1(scenario, channel, theta, _opt_params(cfg),
                       substream(cfg.seed, "design:joint", 0))
    wall = (time.perf_counter() - t0) * 1e3
    return [ResultRow(experiment=cfg.experiment, scheme="joint",
                      axis="iteration", axis_value=float(k + 1),
                      crb=rec.crb, iterations=rec.inner_iterations,
                      wall_ms=wall / len(trace.records), seed=cfg.seed)
            for k, rec in enumerate(trace.records)]


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[ResultRow]:
    """Execute the configured sweep and return rows in deterministic order."""
    if cfg.experiment == "convergence":
        if not cfg.point_target:
            raise ContractError("convergence experiments need a point target")
        return _convergence_rows(cfg)
    indices = range(len(cfg.sweep.values))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda i: _sweep_point_rows(cfg, i), indices))
    else:
        chunks = [_sweep_point_rows(cfg, i) for i in indices]
    return [row for chunk in chunks for row in chunk]
