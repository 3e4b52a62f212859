"""Experiment configuration: parsing, validation, and canonical hashing.

Configs are YAML files with a scenario block, an experiment kind, a sweep
axis, and a scheme list.  `load_config` parses and validates in one pass and
reports every schema violation it can find rather than stopping at the
first.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ContractError
from .scene import (ExtendedTargetSpec, PathLossModel, PointTargetSpec,
                    Scenario, dbm_to_watts)

EXPERIMENT_KINDS = ("crb-point", "crb-extended", "optimize-point",
                    "optimize-extended", "mse-sweep", "convergence")
SWEEP_AXES = ("P0_dbm", "M", "N", "trials")
POINT_SCHEMES = ("joint", "snr-max", "reflective-only", "transmit-only")
EXTENDED_SCHEMES = ("joint", "isotropic")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    scenario: Scenario
    sweep: SweepSpec
    schemes: tuple[str, ...]
    trials: int = 100
    redraw: bool = False
    seed: int = 0
    output: str = "results"
    tol_outer: float = 1e-3
    max_outer: int = 20
    tol_inner: float = 1e-4
    max_inner: int = 30
    randomizations: int = 500

    @property
    def point_target(self) -> bool:
        return isinstance(self.scenario.target_spec, PointTargetSpec)

    def resolved(self) -> dict:
        """Canonical plain-dict form used for hashing and the JSON sidecar."""
        sc = self.scenario
        target: dict = {}
        if isinstance(sc.target_spec, PointTargetSpec):
            target = {"kind": "point", "position": list(sc.target_spec.position)}
        else:
            target = {"kind": "extended", "center": list(sc.target_spec.center),
                      "radius": sc.target_spec.radius,
                      "count": sc.target_spec.count}
        return {
            "experiment": self.experiment,
            "scenario": {
                "ap_position": list(sc.ap_position),
                "irs_position": list(sc.irs_position),
                "target": target,
                "m_antennas": sc.m_antennas,
                "n_elements": sc.n_elements,
                "dwell": sc.dwell,
                "power_watts": sc.power,
                "noise_power_watts": sc.noise_power,
                "rician_factor": sc.rician_factor,
                "pathloss": {"k0": sc.pathloss.k0, "d0": sc.pathloss.d0,
                             "exponent": sc.pathloss.exponent},
                "element_spacing_ratio": sc.element_spacing_ratio,
            },
            "sweep": {"axis": self.sweep.axis,
                      "values": list(self.sweep.values)},
            "schemes": list(self.schemes),
            "trials": self.trials,
            "redraw": self.redraw,
            "seed": self.seed,
            "optimizer": {"tol_outer": self.tol_outer,
                          "max_outer": self.max_outer,
                          "tol_inner": self.tol_inner,
                          "max_inner": self.max_inner,
                          "randomizations": self.randomizations},
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.resolved(), sort_keys=True,
                           separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _allowed_schemes(experiment: str, point_target: bool) -> tuple[str, ...]:
    if experiment in ("crb-point", "optimize-point"):
        return POINT_SCHEMES if experiment == "crb-point" else ("joint",)
    if experiment in ("crb-extended", "optimize-extended"):
        return EXTENDED_SCHEMES if experiment == "crb-extended" else ("joint",)
    if experiment == "convergence":
        return ("joint",)
    # mse-sweep follows the target type
    return POINT_SCHEMES if point_target else EXTENDED_SCHEMES


def _parse_scenario(raw: dict, diagnostics: list[str]) -> Scenario | None:
    def num(key, default, lo=None):
        val = raw.get(key, default)
        if not isinstance(val, (int, float)):
            diagnostics.append(f"scenario.{key}: expected a number, got {val!r}")
            return default
        if lo is not None and val < lo:
            diagnostics.append(f"scenario.{key}: must be >= {lo}, got {val}")
            return default
        return val

    def pair(key, default):
        val = raw.get(key, list(default))
        if (not isinstance(val, (list, tuple)) or len(val) != 2
                or not all(isinstance(x, (int, float)) for x in val)):
            diagnostics.append(f"scenario.{key}: expected [x, y], got {val!r}")
            return default
        return (float(val[0]), float(val[1]))

    target_raw = raw.get("target", {"kind": "point", "position": [5.0, 0.0]})
    target: PointTargetSpec | ExtendedTargetSpec
    kind = target_raw.get("kind") if isinstance(target_raw, dict) else None
    if kind == "point":
        pos = target_raw.get("position", [5.0, 0.0])
        target = PointTargetSpec((float(pos[0]), float(pos[1])))
    elif kind == "extended":
        center = target_raw.get("center", [5.0, 0.0])
        target = ExtendedTargetSpec((float(center[0]), float(center[1])),
                                    float(target_raw.get("radius", 0.5)),
                                    int(target_raw.get("count", 7)))
    else:
        diagnostics.append(
            f"scenario.target.kind: expected 'point' or 'extended', got {kind!r}")
        return None

    pl = raw.get("pathloss", {})
    try:
        return Scenario(
            ap_position=pair("ap_position", (0.0, 0.0)),
            irs_position=pair("irs_position", (5.0, 5.0)),
            target_spec=target,
            m_antennas=int(num("m_antennas", 8, 2)),
            n_elements=int(num("n_elements", 8, 2)),
            dwell=int(num("dwell", 256, 1)),
            power=dbm_to_watts(float(num("power_dbm", 30.0))),
            noise_power=dbm_to_watts(float(num("noise_power_dbm", -120.0))),
            rician_factor=float(num("rician_factor", 0.5, 0.0)),
            pathloss=PathLossModel(
                k0=float(pl.get("k0", 1e-3)),
                d0=float(pl.get("d0", 1.0)),
                exponent=float(pl.get("exponent", 2.5))),
            element_spacing_ratio=float(num("element_spacing_ratio", 0.5)),
        )
    except ContractError as exc:
        diagnostics.append(f"scenario: {exc}")
        return None


def _check_estimability(cfg_kind: str, point_target: bool, scenario: Scenario,
                        sweep: SweepSpec, diagnostics: list[str]) -> None:
    """Static rejection of extended runs that can never be estimable."""
    extended_run = (cfg_kind in ("crb-extended", "optimize-extended")
                    or (cfg_kind == "mse-sweep" and not point_target))
    if not extended_run:
        return
    for value in sweep.values:
        m = int(value) if sweep.axis == "M" else scenario.m_antennas
        n = int(value) if sweep.axis == "N" else scenario.n_elements
        if m < n:
            diagnostics.append(
                "estimability: the target response matrix is estimable only "
                f"when M >= N (antennas >= reflecting elements); sweep point "
                f"gives M={m} < N={n}")
            return


def validate_raw(raw: object) -> tuple[ExperimentConfig | None, list[str]]:
    """Validate a parsed YAML document; returns (config, diagnostics).

    The config is None whenever diagnostics are non-empty.
    """
    diagnostics: list[str] = []
    if not isinstance(raw, dict):
        return None, ["top level: expected a mapping of configuration keys"]

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENT_KINDS:
        diagnostics.append(
            f"experiment: expected one of {', '.join(EXPERIMENT_KINDS)}, "
            f"got {experiment!r}")

    scenario = _parse_scenario(raw.get("scenario", {}) or {}, diagnostics)

    sweep_raw = raw.get("sweep")
    sweep = None
    if not isinstance(sweep_raw, dict):
        diagnostics.append("sweep: expected a mapping with axis and values")
    else:
        axis = sweep_raw.get("axis")
        values = sweep_raw.get("values")
        if axis not in SWEEP_AXES:
            diagnostics.append(
                f"sweep.axis: expected one of {', '.join(SWEEP_AXES)}, got {axis!r}")
        if (not isinstance(values, list) or len(values) == 0
                or not all(isinstance(x, (int, float)) for x in values)):
            diagnostics.append("sweep.values: expected a non-empty list of numbers")
        elif not np.all(np.diff(np.asarray(values, dtype=float)) > 0):
            diagnostics.append("sweep.values: must be strictly increasing")
        elif axis in SWEEP_AXES:
            sweep = SweepSpec(axis=axis, values=tuple(float(x) for x in values))

    schemes_raw = raw.get("schemes", ["joint"])
    schemes: tuple[str, ...] = ()
    if (not isinstance(schemes_raw, list) or len(schemes_raw) == 0
            or not all(isinstance(s, str) for s in schemes_raw)):
        diagnostics.append("schemes: expected a non-empty list of scheme names")
    elif scenario is not None and experiment in EXPERIMENT_KINDS:
        allowed = _allowed_schemes(experiment,
                                   isinstance(scenario.target_spec, PointTargetSpec))
        bad = [s for s in schemes_raw if s not in allowed]
        if bad:
            diagnostics.append(
                f"schemes: {', '.join(bad)} not valid for {experiment} "
                f"(allowed: {', '.join(allowed)})")
        else:
            schemes = tuple(schemes_raw)

    trials = raw.get("trials", 100)
    if not isinstance(trials, int) or trials < 1:
        diagnostics.append(f"trials: expected a positive integer, got {trials!r}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        diagnostics.append(f"seed: expected a non-negative integer, got {seed!r}")
    redraw = raw.get("redraw", False)
    if not isinstance(redraw, bool):
        diagnostics.append(f"redraw: expected true/false, got {redraw!r}")
    output = raw.get("output", "results")
    if not isinstance(output, str) or not output:
        diagnostics.append(f"output: expected a non-empty path, got {output!r}")

    opt = raw.get("optimizer", {}) or {}
    if not isinstance(opt, dict):
        diagnostics.append("optimizer: expected a mapping of overrides")
        opt = {}

    if scenario is not None and sweep is not None and experiment in EXPERIMENT_KINDS:
        _check_estimability(experiment,
                            isinstance(scenario.target_spec, PointTargetSpec),
                            scenario, sweep, diagnostics)

    if diagnostics or scenario is None or sweep is None:
        return None, diagnostics
    cfg = ExperimentConfig(
        experiment=experiment, scenario=scenario, sweep=sweep,
        schemes=schemes, trials=int(trials), redraw=bool(redraw),
        seed=int(seed), output=output,
        tol_outer=float(opt.get("tol_outer", 1e-3)),
        max_outer=int(opt.get("max_outer", 20)),
        tol_inner=float(opt.get("tol_inner", 1e-4)),
        max_inner=int(opt.get("max_inner", 30)),
        randomizations=int(opt.get("randomizations", 500)))
    return cfg, []


def load_config(path: str | Path) -> tuple[ExperimentConfig | None, list[str]]:
    """Parse and validate a YAML config file.

    Parse errors come back as line-precise diagnostics; schema violations are
    collected exhaustively.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ContractError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        return None, [f"parse error{where}: {getattr(exc, 'problem', exc)}"]
    return validate_raw(raw)
