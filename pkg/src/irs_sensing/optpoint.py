"""Joint transmit and reflective beamforming for point-target DoA sensing.

Three layers: the transmit covariance design (an exact SDP through a Schur
complement), the reflect-vector design (semidefinite relaxation driven by a
minorize-maximize loop, then Gaussian randomization back to unit modulus),
and the alternating driver that couples them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EstimabilityError, SolverError
from .scene import Channel, Scenario, point_alpha_magnitude
from .sensing import (RANK_REL_TOL, ReflectGeometry, crb_point, echo_directions,
                      point_crb_denominator, reflective_objective)
from .sdp import (ComplexSdpBuilder, hermitian_entry_im, hermitian_entry_re,
                  im_trace_functional, re_trace_functional)


@dataclass(frozen=True)
class PointOptParams:
    """Loop controls for the alternating optimization."""

    tol_outer: float = 1e-3
    max_outer: int = 20
    tol_inner: float = 1e-4
    max_inner: int = 30
    randomizations: int = 500


@dataclass(frozen=True)
class TransmitResult:
    r_x: np.ndarray
    objective: float
    schur_scalar: float
    status: str


@dataclass(frozen=True)
class ScaState:
    """Iterate of the relaxed reflect design: lifted V plus the two
    fractional-term epigraph scalars."""

    V: np.ndarray
    t1: float
    t2: float
    objective: float


@dataclass(frozen=True)
class SurrogateCoefficients:
    """Affine minorant of the convex half of the split objective.

    evaluate() returns constant + tr(v_coeff V) + t1_coeff*t1 + t2_coeff*t2,
    which touches the convex part at the expansion point and never exceeds it.
    """

    v_coeff: np.ndarray
    t1_coeff: float
    t2_coeff: float
    constant: float

    def evaluate(self, V: np.ndarray, t1: float, t2: float) -> float:
        return (self.constant + float(np.real(np.trace(self.v_coeff @ V)))
                + self.t1_coeff * t1 + self.t2_coeff * t2)


@dataclass(frozen=True)
class ReflectiveResult:
    v: np.ndarray
    objective: float
    inner_iterations: int
    status: str
    sca_objectives: tuple = ()


@dataclass(frozen=True)
class OuterRecord:
    crb: float
    r_x: np.ndarray
    v: np.ndarray
    inner_iterations: int
    randomization_objective: float


@dataclass(frozen=True)
class Algorithm1Trace:
    records: list[OuterRecord] = field(default_factory=list)

    @property
    def crbs(self) -> np.ndarray:
        return np.array([r.crb for r in self.records])

    @property
    def final(self) -> OuterRecord:
        return self.records[-1]


def solve_transmit(channel: Channel, v: np.ndarray, theta: float, power: float,
                   spacing_ratio: float = 0.5) -> TransmitResult:
    """Optimal transmit covariance for a fixed reflect vector.

    Maximizes the Schur-complement scalar of the DoA information, which is
    exactly the denominator core of the CRB, subject to the power budget.
    """
    if channel.rank(RANK_REL_TOL) < 2:
        raise EstimabilityError("DoA not estimable: channel has rank < 2")
    M = channel.G.shape[1]
    b, b_dot = echo_directions(channel, v, theta, spacing_ratio)
    B = np.outer(b, b)
    B_dot = np.outer(b_dot, b) + np.outer(b, b_dot)
    q_dd = B_dot.conj().T @ B_dot
    q_bd = B_dot.conj().T @ B
    q_bb = B.conj().T @ B
    # Channel gains put these matrices many orders of magnitude below the
    # solver's tolerances; the optimal covariance is invariant to a common
    # positive rescaling, so normalize and undo it on the Schur scalar.
    scale = max(np.linalg.norm(q_dd), np.linalg.norm(q_bd),
                np.linalg.norm(q_bb), 1e-300)
    q_dd = q_dd / scale
    q_bd = q_bd / scale
    q_bb = q_bb / scale

    bld = ComplexSdpBuilder(sense="max")
    r_blk = bld.add_block(M)
    s_blk = bld.add_block(2)
    slack = bld.add_block(1)
    (t_var,) = bld.add_free(1)
    bld.set_objective({}, free={t_var: 1.0})
    bld.add_constraint({r_blk: np.eye(M), slack: np.eye(1)}, power)
    # Schur block entries pinned to the covariance functionals.
    bld.add_constraint({s_blk: hermitian_entry_re(2, 0, 0),
                        r_blk: -re_trace_functional(q_dd)}, 0.0,
                       free={t_var: 1.0})
    bld.add_constraint({s_blk: hermitian_entry_re(2, 0, 1),
                        r_blk: -re_trace_functional(q_bd)}, 0.0)
    bld.add_constraint({s_blk: hermitian_entry_im(2, 0, 1),
                        r_blk: -im_trace_functional(q_bd)}, 0.0)
    bld.add_constraint({s_blk: hermitian_entry_re(2, 1, 1),
                        r_blk: -re_trace_functional(q_bb)}, 0.0)
    sol = bld.solve()
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(f"transmit design solver returned {sol.status}")
    r_x = _clean_covariance(sol.block(r_blk), power)
    objective = point_crb_denominator(channel, v, r_x, theta, spacing_ratio)
    return TransmitResult(r_x=r_x, objective=objective,
                          schur_scalar=float(sol.free[t_var]) * scale,
                          status=sol.status)


def _clean_covariance(r_x: np.ndarray, power: float) -> np.ndarray:
    """Project solver output to an exactly feasible Hermitian PSD covariance."""
    r_x = 0.5 * (r_x + r_x.conj().T)
    evals, evecs = np.linalg.eigh(r_x)
    evals = np.clip(evals, 0.0, None)
    r_x = (evecs * evals) @ evecs.conj().T
    tr = float(np.real(np.trace(r_x)))
    if tr > power:
        r_x = r_x * (power / tr)
    return 0.5 * (r_x + r_x.conj().T)


def _split_matrices(r1: np.ndarray, r2: np.ndarray):
    """Coefficient matrices of the difference-of-squares split of the
    product objective."""
    N = r1.shape[0]
    d = np.arange(N, dtype=float)
    dr1d = (d[:, None] * r1) * d[None, :]
    dr2d = (d[:, None] * r2) * d[None, :]
    m1_plus = r2 + dr1d
    m2_plus = r1 + dr2d
    m1_minus = r2 - dr1d
    m2_minus = r1 - dr2d
    return m1_plus, m2_plus, m1_minus, m2_minus


def _linear_terms(state: ScaState, r1: np.ndarray, r2: np.ndarray):
    m1_plus, m2_plus, m1_minus, m2_minus = _split_matrices(r1, r2)
    l1 = float(np.real(np.trace(m1_plus @ state.V))) - state.t1
    l2 = float(np.real(np.trace(m2_plus @ state.V))) - state.t2
    return m1_plus, m2_plus, l1, l2


def sca_surrogate(state: ScaState, r1: np.ndarray, r2: np.ndarray) -> SurrogateCoefficients:
    """First-order minorant of the convex part at the current iterate.

    The objective splits as a difference of sums of squares; the convex sum
    is replaced by its tangent plane, leaving a concave surrogate whose
    maximizer can only improve the true objective.
    """
    m1_plus, m2_plus, l1, l2 = _linear_terms(state, r1, r2)
    f1 = 0.25 * (l1 * l1 + l2 * l2)
    v_coeff = 0.5 * (l1 * m1_plus + l2 * m2_plus)
    v_coeff = 0.5 * (v_coeff + v_coeff.conj().T)
    return SurrogateCoefficients(v_coeff=v_coeff, t1_coeff=-0.5 * l1,
                                 t2_coeff=-0.5 * l2, constant=-f1)


def relaxed_objective(state: ScaState, r1: np.ndarray, r2: np.ndarray) -> float:
    """Exact objective of the lifted reflect design at (V, t1, t2)."""
    N = r1.shape[0]
    d = np.arange(N, dtype=float)
    dr1d = (d[:, None] * r1) * d[None, :]
    dr2d = (d[:, None] * r2) * d[None, :]
    tr = lambda m: float(np.real(np.trace(m @ state.V)))
    return (tr(r2) * (tr(dr1d) - state.t1) + tr(r1) * (tr(dr2d) - state.t2))


def _initial_state(geom: ReflectGeometry, v: np.ndarray) -> ScaState:
    V = np.outer(v, v.conj())
    r1, r2, d = geom.r1, geom.r2, geom.d_index
    q1 = float(np.real(v.conj() @ r1 @ v))
    q2 = float(np.real(v.conj() @ r2 @ v))
    c1 = complex(v.conj() @ d @ r1 @ v)
    c2 = complex(v.conj() @ d @ r2 @ v)
    scale = max(abs(q1), abs(q2), 1e-300)
    t1 = abs(c1) ** 2 / max(q1, 1e-12 * scale)
    t2 = abs(c2) ** 2 / max(q2, 1e-12 * scale)
    state = ScaState(V=V, t1=t1, t2=t2, objective=0.0)
    obj = relaxed_objective(state, r1, r2)
    return ScaState(V=V, t1=t1, t2=t2, objective=obj)


def _sca_step(state: ScaState, r1: np.ndarray, r2: np.ndarray) -> ScaState:
    """One surrogate maximization: lifted SDP with the two fractional Schur
    blocks and epigraphs for the concave squares."""
    N = r1.shape[0]
    d = np.arange(N, dtype=float)
    dr1 = d[:, None] * r1          # D R1: off-diagonal functional c1 = tr(D R1 V)
    dr2 = d[:, None] * r2
    _, _, m1_minus, m2_minus = _split_matrices(r1, r2)
    surr = sca_surrogate(state, r1, r2)

    bld = ComplexSdpBuilder(sense="max")
    v_blk = bld.add_block(N)
    s1 = bld.add_block(2)
    s2 = bld.add_block(2)
    e1 = bld.add_block(2)
    e2 = bld.add_block(2)
    t1_var, t2_var, q1_var, q2_var = bld.add_free(4)
    bld.set_objective({v_blk: surr.v_coeff},
                      free={t1_var: surr.t1_coeff, t2_var: surr.t2_coeff,
                            q1_var: -0.25, q2_var: -0.25})
    for i in range(N):
        bld.add_constraint({v_blk: hermitian_entry_re(N, i, i)}, 1.0)
    for s_blk, rm, drm in ((s1, r1, dr1), (s2, r2, dr2)):
        bld.add_constraint({s_blk: hermitian_entry_re(2, 0, 0)}, 0.0,
                           free={(t1_var if s_blk == s1 else t2_var): -1.0})
        bld.add_constraint({s_blk: hermitian_entry_re(2, 0, 1),
                            v_blk: -re_trace_functional(drm)}, 0.0)
        bld.add_constraint({s_blk: hermitian_entry_im(2, 0, 1),
                            v_blk: -im_trace_functional(drm)}, 0.0)
        bld.add_constraint({s_blk: hermitian_entry_re(2, 1, 1),
                            v_blk: -re_trace_functional(rm)}, 0.0)
    for e_blk, mm, (tv, qv) in ((e1, m1_minus, (t1_var, q1_var)),
                                (e2, m2_minus, (t2_var, q2_var))):
        bld.add_constraint({e_blk: hermitian_entry_re(2, 0, 0)}, 0.0,
                           free={qv: -1.0})
        bld.add_constraint({e_blk: hermitian_entry_re(2, 0, 1),
                            v_blk: -re_trace_functional(mm)}, 0.0,
                           free={tv: -1.0})
        bld.add_constraint({e_blk: hermitian_entry_im(2, 0, 1)}, 0.0)
        bld.add_constraint({e_blk: hermitian_entry_re(2, 1, 1)}, 1.0)
    sol = bld.solve()
    if sol.status not in ("optimal", "inaccurate"):
        raise SolverError(f"reflect surrogate solver returned {sol.status}")
    V = 0.5 * (sol.block(v_blk) + sol.block(v_blk).conj().T)
    t1 = float(sol.free[t1_var])
    t2 = float(sol.free[t2_var])
    new = ScaState(V=V, t1=t1, t2=t2, objective=0.0)
    obj = relaxed_objective(new, r1, r2)
    return ScaState(V=V, t1=t1, t2=t2, objective=obj)


def _randomize(geom: ReflectGeometry, V: np.ndarray, incumbent: np.ndarray,
               count: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    """Gaussian randomization of the lifted solution, incumbent included."""
    N = V.shape[0]
    evals, evecs = np.linalg.eigh(0.5 * (V + V.conj().T))
    evals = np.clip(evals, 0.0, None)
    factor = evecs * np.sqrt(evals)
    candidates = [incumbent, np.exp(1j * np.angle(evecs[:, -1] + 0j))]
    if count > 0:
        z = factor @ ((rng.standard_normal((N, count))
                       + 1j * rng.standard_normal((N, count))) / np.sqrt(2.0))
        candidates.extend(np.exp(1j * np.angle(z[:, k])) for k in range(count))
    best_v, best_obj = incumbent, -np.inf
    for cand in candidates:
        obj = reflective_objective(geom, cand)
        if obj > best_obj:
            best_v, best_obj = cand, obj
    return best_v, best_obj


def solve_reflective(channel: Channel, r_x: np.ndarray, theta: float,
                     v_init: np.ndarray, params: PointOptParams,
                     rng: np.random.Generator,
                     spacing_ratio: float = 0.5) -> ReflectiveResult:
    """Reflect-vector design for a fixed transmit covariance.

    Lifts v to V, ascends the relaxed objective with the surrogate loop, then
    projects back to unit modulus by randomization.  The incumbent v_init is
    always a candidate, so the returned objective never regresses.
    """
    if not np.allclose(np.abs(v_init), 1.0, atol=1e-9):
        raise EstimabilityError("initial reflect vector must be unit modulus")
    geom = ReflectGeometry.build(channel, r_x, theta, spacing_ratio)
    # Normalize each quadratic form: the objective scales multiplicatively,
    # so maximizers are unchanged while the solver sees O(1) data.
    s1 = max(np.linalg.norm(geom.r1), 1e-300)
    s2 = max(np.linalg.norm(geom.r2), 1e-300)
    scaled = ReflectGeometry(theta=geom.theta, spacing_ratio=geom.spacing_ratio,
                             a=geom.a, r1=geom.r1 / s1, r2=geom.r2 / s2,
                             d_index=geom.d_index)
    r1, r2 = scaled.r1, scaled.r2
    state = _initial_state(scaled, v_init)
    objectives = [state.objective]
    status = "optimal"
    inner = 0
    for inner in range(1, params.max_inner + 1):
        try:
            new = _sca_step(state, r1, r2)
        except SolverError:
            status = "warning"
            break
        objectives.append(new.objective)
        prev = state.objective
        state = new
        if abs(new.objective - prev) <= params.tol_inner * max(1.0, abs(prev)):
            break
    best_v, _ = _randomize(scaled, state.V, v_init,
                           params.randomizations, rng)
    best_obj = reflective_objective(geom, best_v)
    return ReflectiveResult(v=best_v, objective=best_obj,
                            inner_iterations=inner, status=status,
                            sca_objectives=tuple(objectives))


def algorithm1(scenario: Scenario, channel: Channel, theta_prior: float,
               params: PointOptParams, rng: np.random.Generator) -> Algorithm1Trace:
    """Alternating transmit/reflective optimization from a random-phase start.

    Each outer pass re-solves the transmit SDP for the current reflect vector
    and then improves the reflect vector for the new covariance; the CRB of
    the pair is recorded and the loop stops when it plateaus.
    """
    if channel.rank(RANK_REL_TOL) < 2:
        raise EstimabilityError("DoA not estimable: channel has rank < 2")
    N = scenario.n_elements
    alpha_mag = point_alpha_magnitude(scenario)
    v = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=N))
    records: list[OuterRecord] = []
    prev_crb = np.inf
    for _ in range(params.max_outer):
        transmit = solve_transmit(channel, v, theta_prior, scenario.power,
                                  scenario.element_spacing_ratio)
        reflect = solve_reflective(channel, transmit.r_x, theta_prior, v,
                                   params, rng, scenario.element_spacing_ratio)
        v = reflect.v
        report = crb_point(channel, v, transmit.r_x, theta_prior, alpha_mag,
                           scenario.dwell, scenario.noise_power,
                           scenario.element_spacing_ratio)
        records.append(OuterRecord(crb=report.value, r_x=transmit.r_x, v=v,
                                   inner_iterations=reflect.inner_iterations,
                                   randomization_objective=reflect.objective))
        if np.isfinite(report.value) and np.isfinite(prev_crb):
            if abs(prev_crb - report.value) <= params.tol_outer * prev_crb:
                break
        prev_crb = report.value
    return Algorithm1Trace(records=records)
