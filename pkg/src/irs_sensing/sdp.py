"""Dense primal-dual interior-point solver for small block-diagonal SDPs.

Standard form over a block-diagonal PSD cone with an optional free variable
vector u:

    min  sum_b tr(C_b X_b) + c_u . u
    s.t. sum_b tr(A_kb X_b) + f_k . u = b_k,   X_b >= 0.

Path-following with Nesterov-Todd scaling and a Mehrotra-style adaptive
centering parameter; everything dense, deterministic, and single-threaded.
Problem sizes here never exceed a few tens per block, so dense factorizations
are the right tool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ContractError

GAP_TARGET = 1e-8
GAP_ACCEPT = 1e-7
FEAS_TARGET = 1e-9
FEAS_ACCEPT = 1e-7
GAP_INACCURATE = 1e-5
FEAS_INACCURATE = 1e-6
MAX_ITERATIONS = 200
PRESOLVE_TOL = 1e-10
_STEP_FRACTION = 0.98


@dataclass
class SdpProblem:
    """Standard-form SDP; constraint/objective matrices are stored per block.

    `objective` and each constraint's matrix dict map block index -> dense
    symmetric matrix (blocks not present contribute zero).  `sense` is "min"
    or "max".
    """

    blocks: list[int]
    sense: str = "min"
    objective: dict[int, np.ndarray] = field(default_factory=dict)
    objective_free: np.ndarray | None = None
    constraints: list[tuple[dict[int, np.ndarray], np.ndarray | None, float]] = \
        field(default_factory=list)
    n_free: int = 0

    def add_constraint(self, mats: dict[int, np.ndarray],
                       rhs: float, free: np.ndarray | None = None) -> None:
        self.constraints.append((mats, free, rhs))

    def validate(self) -> None:
        if any(d <= 0 for d in self.blocks):
            raise ContractError("block dimensions must be positive")
        if self.sense not in ("min", "max"):
            raise ContractError(f"unknown sense {self.sense!r}")
        for mats in [self.objective] + [c[0] for c in self.constraints]:
            for bi, mat in mats.items():
                d = self.blocks[bi]
                if mat.shape != (d, d):
                    raise ContractError(f"matrix for block {bi} has shape {mat.shape}, "
                                        f"expected {(d, d)}")
                if np.linalg.norm(mat - mat.T) > 1e-12 * max(1.0, np.linalg.norm(mat)):
                    raise ContractError(f"matrix for block {bi} is not symmetric")


@dataclass
class SdpSolution:
    X: list[np.ndarray]
    free: np.ndarray
    y: np.ndarray
    Z: list[np.ndarray]
    status: str
    gap: float
    iterations: int
    primal_objective: float
    dual_objective: float
    primal_residual: float
    dual_residual: float
    trace: list[tuple[float, float, float, float]] = field(default_factory=list)

    def block(self, i: int) -> np.ndarray:
        return self.X[i]


def embed_hermitian(h: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.

    Preserves PSD-ness, doubles the trace, and duplicates every eigenvalue.
    """
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractError("embedding requires a square matrix")
    if np.linalg.norm(h - h.conj().T) > 1e-10 * max(1.0, np.linalg.norm(h)):
        raise ContractError("embedding requires a Hermitian matrix")
    re, im = np.real(h), np.imag(h)
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    out = np.vstack([top, bot])
    return 0.5 * (out + out.T)


def extract_hermitian(e: np.ndarray) -> np.ndarray:
    """Inverse of `embed_hermitian`, projecting onto the embedded subspace.

    For an arbitrary symmetric 2n x 2n argument this returns the Hermitian
    matrix whose embedding is the nearest point of the embedded subspace, so
    solver output that drifted off the subspace is symmetrized for free.
    """
    two_n = e.shape[0]
    if two_n % 2 != 0:
        raise ContractError("embedded matrix must have even dimension")
    n = two_n // 2
    re = 0.5 * (e[:n, :n] + e[n:, n:])
    im = 0.5 * (e[n:, :n] - e[:n, n:])
    h = re + 1j * im
    return 0.5 * (h + h.conj().T)


def _svec_indices(d: int):
    iu = np.triu_indices(d)
    weights = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return iu, weights


def _svec(mat: np.ndarray, cache) -> np.ndarray:
    iu, w = cache
    return mat[iu] * w


def _psd_step_length(L: np.ndarray, delta: np.ndarray) -> float:
    """Largest alpha with X + alpha*delta staying PSD, given X = L L^T."""
    m = scipy.linalg.solve_triangular(L, delta.T, lower=True)
    m = scipy.linalg.solve_triangular(L, m.T, lower=True)
    m = 0.5 * (m + m.T)
    lam_min = float(np.linalg.eigvalsh(m)[0])
    if lam_min >= 0.0:
        return np.inf
    return -1.0 / lam_min


def _robust_cholesky(mat: np.ndarray) -> np.ndarray:
    """Cholesky factor of a nearly-PSD symmetric matrix.

    Iterates near the cone boundary can acquire tiny negative eigenvalues
    from roundoff; escalate diagonal jitter, then fall back to an eigenvalue
    clip.
    """
    n = mat.shape[0]
    base = max(float(np.trace(mat)) / n, 1e-200)
    eye = np.eye(n)
    for jitter in (0.0, 1e-14, 1e-11, 1e-8):
        try:
            return np.linalg.cholesky(mat + jitter * base * eye)
        except np.linalg.LinAlgError:
            continue
    lam, q = np.linalg.eigh(mat)
    lam = np.clip(lam, 1e-12 * max(lam[-1], 1e-200), None)
    return np.linalg.cholesky((q * lam) @ q.T + 1e-12 * base * eye)


def _nt_scaling(X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Nesterov-Todd scaling matrix W with W Z W = X."""
    lz, qz = np.linalg.eigh(Z)
    lz = np.clip(lz, 1e-14 * max(lz[-1], 1e-200), None)
    z_half = (qz * np.sqrt(lz)) @ qz.T
    z_ihalf = (qz * (1.0 / np.sqrt(lz))) @ qz.T
    mid = z_half @ X @ z_half
    mid = 0.5 * (mid + mid.T)
    lm, qm = np.linalg.eigh(mid)
    lm = np.clip(lm, 1e-14 * max(lm[-1], 1e-200), None)
    mid_half = (qm * np.sqrt(lm)) @ qm.T
    W = z_ihalf @ mid_half @ z_ihalf
    return 0.5 * (W + W.T)


def _presolve(A: np.ndarray, F: np.ndarray, b: np.ndarray):
    """Drop linearly dependent equality rows; flag inconsistent systems."""
    m = A.shape[0]
    stacked = np.hstack([A, F]) if F.size else A
    if m == 0:
        return np.arange(0), False
    # Rank from pivoted QR of the transposed constraint matrix.
    _, r, piv = scipy.linalg.qr(stacked.T, mode="economic", pivoting=True)
    rdiag = np.abs(np.diag(r))
    tol = PRESOLVE_TOL * max(rdiag[0], 1.0) if rdiag.size else 0.0
    rank = int(np.sum(rdiag > tol))
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, False
    dropped = np.setdiff1d(np.arange(m), keep)
    # Dependent rows must carry consistent right-hand sides.
    coeffs, *_ = np.linalg.lstsq(stacked[keep].T, stacked[dropped].T, rcond=None)
    b_pred = coeffs.T @ b[keep]
    inconsistent = bool(np.any(np.abs(b_pred - b[dropped]) >
                               1e-7 * (1.0 + np.abs(b[dropped]))))
    return keep, inconsistent


def solve(problem: SdpProblem, gap_target: float = GAP_TARGET,
          max_iterations: int = MAX_ITERATIONS) -> SdpSolution:
    """Solve the SDP; returns status "optimal", "infeasible", or "max-iter"."""
    problem.validate()
    blocks = problem.blocks
    nb = len(blocks)
    caches = [_svec_indices(d) for d in blocks]
    dims = [d * (d + 1) // 2 for d in blocks]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    total = int(offsets[-1])
    nf = problem.n_free
    sign = 1.0 if problem.sense == "min" else -1.0

    def pack(mats: dict[int, np.ndarray]) -> np.ndarray:
        out = np.zeros(total)
        for bi, mat in mats.items():
            out[offsets[bi]: offsets[bi + 1]] = _svec(mat, caches[bi])
        return out

    def unpack(vec: np.ndarray) -> list[np.ndarray]:
        out = []
        for bi, d in enumerate(blocks):
            iu, w = caches[bi]
            mat = np.zeros((d, d))
            vals = vec[offsets[bi]: offsets[bi + 1]] / w
            mat[iu] = vals
            mat = mat + mat.T - np.diag(np.diag(mat))
            out.append(mat)
        return out

    m = len(problem.constraints)
    A = np.zeros((m, total))
    F = np.zeros((m, nf))
    b = np.zeros(m)
    for k, (mats, free, rhs) in enumerate(problem.constraints):
        A[k] = pack(mats)
        if free is not None:
            F[k] = free
        b[k] = rhs
    c = sign * pack(problem.objective)
    cf = sign * (problem.objective_free if problem.objective_free is not None
                 else np.zeros(nf))

    keep, inconsistent = _presolve(A, F, b)
    if inconsistent:
        return SdpSolution(X=[np.zeros((d, d)) for d in blocks], free=np.zeros(nf),
                           y=np.zeros(m), Z=[np.eye(d) for d in blocks],
                           status="infeasible", gap=np.inf, iterations=0,
                           primal_objective=np.nan, dual_objective=np.nan,
                           primal_residual=np.inf, dual_residual=np.inf)
    A_r, F_r, b_r = A[keep], F[keep], b[keep]
    m_r = len(keep)

    n_cone = sum(blocks)
    data_scale = max(1.0, float(np.max(np.abs(b_r))) if m_r else 1.0)
    init = max(1.0, data_scale)
    X = [init * np.eye(d) for d in blocks]
    Z = [max(1.0, np.linalg.norm(c) / max(1.0, np.sqrt(n_cone))) * np.eye(d)
         for d in blocks]
    y = np.zeros(m_r)
    u = np.zeros(nf)

    b_norm = 1.0 + np.linalg.norm(b_r)
    c_norm = 1.0 + np.linalg.norm(c) + np.linalg.norm(cf)
    C_mats = unpack(c)

    status = "max-iter"
    trace_rows: list[tuple[float, float, float, float]] = []
    it = 0
    for it in range(1, max_iterations + 1):
        x_vec = np.concatenate([_svec(Xb, caches[bi]) for bi, Xb in enumerate(X)])
        rp = b_r - A_r @ x_vec - (F_r @ u if nf else 0.0)
        Aty = unpack(A_r.T @ y)
        Rd = [C_mats[bi] - Aty[bi] - Z[bi] for bi in range(nb)]
        rf = cf - F_r.T @ y if nf else np.zeros(0)
        mu = sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z)) / n_cone

        pobj = float(c @ x_vec) + float(cf @ u)
        dobj = float(b_r @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / b_norm
        dinf = (np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd)) +
                (np.linalg.norm(rf) if nf else 0.0)) / c_norm
        trace_rows.append((pobj, dobj, pinf, dinf))
        if it == 1:
            pinf0 = max(pinf, 1e-30)
            dinf0 = max(dinf, 1e-30)
            mu0 = mu
        if gap <= gap_target and pinf <= FEAS_TARGET and dinf <= FEAS_TARGET:
            status = "optimal"
            break
        # Keep the best iterate seen: pushing for the last digits of accuracy
        # can destabilize the endgame, and the final classification should
        # reflect the best point visited, not wherever the loop stopped.
        score = max(gap / GAP_ACCEPT, pinf / FEAS_ACCEPT, dinf / FEAS_ACCEPT)
        if it == 1 or score < best_score:
            best_score = score
            snapshot = ([Xb.copy() for Xb in X], y.copy(),
                        [Zb.copy() for Zb in Z], u.copy())
        # Stall detection: once neither the gap nor the residuals improve
        # over a window of iterations, further work only burns time; the
        # final diagnostics decide which accuracy tier the iterate earned.
        if it == 1:
            best_gap, best_pinf, best_dinf = gap, pinf, dinf
            stall = 0
        elif (gap < 0.99 * best_gap or pinf < 0.99 * best_pinf
              or dinf < 0.99 * best_dinf):
            best_gap = min(best_gap, gap)
            best_pinf = min(best_pinf, pinf)
            best_dinf = min(best_dinf, dinf)
            stall = 0
        else:
            stall = stall + 1
            if stall >= 12:
                break

        W = [_nt_scaling(X[bi], Z[bi]) for bi in range(nb)]
        # Schur complement M_kl = sum_b tr(A_k W A_l W).
        AW = np.zeros_like(A_r)
        for bi in range(nb):
            sl = slice(offsets[bi], offsets[bi + 1])
            for k in range(m_r):
                mat = np.zeros((blocks[bi], blocks[bi]))
                iu, w = caches[bi]
                vals = A_r[k, sl] / w
                mat[iu] = vals
                mat = mat + mat.T - np.diag(np.diag(mat))
                AW[k, sl] = _svec(W[bi] @ mat @ W[bi], caches[bi])
        M = A_r @ AW.T
        M = 0.5 * (M + M.T)

        kkt = np.zeros((m_r + nf, m_r + nf))
        kkt[:m_r, :m_r] = M
        if nf:
            kkt[:m_r, m_r:] = F_r
            kkt[m_r:, :m_r] = F_r.T
        ridge = 1e-13 * max(1.0, float(np.max(np.abs(M))) if m_r else 1.0)
        try:
            kkt_factor = scipy.linalg.lu_factor(
                kkt + ridge * np.eye(m_r + nf))
        except (scipy.linalg.LinAlgError, ValueError):
            kkt_factor = None

        def kkt_solve(rhs: np.ndarray) -> np.ndarray:
            if kkt_factor is None:
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
                return sol
            sol = scipy.linalg.lu_solve(kkt_factor, rhs)
            # Refine against the unregularized matrix: removes both the
            # ridge bias and most of the ill-conditioning error, which
            # otherwise produces directions that hit the cone boundary
            # after tiny steps.
            for _ in range(2):
                sol = sol + scipy.linalg.lu_solve(kkt_factor, rhs - kkt @ sol)
            return sol

        # NT frame per block: W^(1/2), W^(-1/2), the scaled iterate
        # V = W^(-1/2) X W^(-1/2) = W^(1/2) Z W^(1/2), and V's eigensystem
        # for Jordan-product (Lyapunov) solves.
        W_half, W_ihalf, V_lam, V_vec = [], [], [], []
        for bi in range(nb):
            lw, qw = np.linalg.eigh(W[bi])
            lw = np.clip(lw, 1e-150, None)
            W_half.append((qw * np.sqrt(lw)) @ qw.T)
            W_ihalf.append((qw * (1.0 / np.sqrt(lw))) @ qw.T)
            v_mat = W_ihalf[bi] @ X[bi] @ W_ihalf[bi]
            lv, qv = np.linalg.eigh(0.5 * (v_mat + v_mat.T))
            V_lam.append(np.clip(lv, 1e-150, None))
            V_vec.append(qv)

        L_X = [_robust_cholesky(0.5 * (Xb + Xb.T)) for Xb in X]
        L_Z = [_robust_cholesky(0.5 * (Zb + Zb.T)) for Zb in Z]

        def complementarity_rhs(sigma_mu: float, correction=None):
            """Rc with ΔX + W ΔZ W = Rc from the Jordan-Newton equation
            V o ΔS = sigma_mu I - V^2 - correction, solved in V's eigenbasis
            and mapped back through W^(1/2)."""
            out = []
            for bi in range(nb):
                lam, q = V_lam[bi], V_vec[bi]
                rhs = -np.diag(lam * lam)
                if sigma_mu != 0.0:
                    rhs = rhs + sigma_mu * np.eye(len(lam))
                if correction is not None:
                    rhs = rhs - q.T @ correction[bi] @ q
                denom = 0.5 * (lam[:, None] + lam[None, :])
                ds = rhs / denom
                rc = W_half[bi] @ (q @ ds @ q.T) @ W_half[bi]
                out.append(0.5 * (rc + rc.T))
            return out

        def directions(Rc):
            rc_vec = np.concatenate([_svec(Rc[bi], caches[bi]) for bi in range(nb)])
            wrdw = np.concatenate([_svec(W[bi] @ Rd[bi] @ W[bi], caches[bi])
                                   for bi in range(nb)])
            rhs = np.concatenate([rp - A_r @ rc_vec + A_r @ wrdw, rf])
            sol = kkt_solve(rhs)
            dy = sol[:m_r]
            du = sol[m_r:]
            atdy = unpack(A_r.T @ dy)
            dZ = [Rd[bi] - atdy[bi] for bi in range(nb)]
            dX = [Rc[bi] - W[bi] @ dZ[bi] @ W[bi] for bi in range(nb)]
            dX = [0.5 * (d_ + d_.T) for d_ in dX]
            dZ = [0.5 * (d_ + d_.T) for d_ in dZ]
            return dX, dZ, dy, du

        def step_lengths(dX, dZ):
            ap = min([_psd_step_length(L_X[bi], dX[bi]) for bi in range(nb)] + [np.inf])
            ad = min([_psd_step_length(L_Z[bi], dZ[bi]) for bi in range(nb)] + [np.inf])
            return (min(1.0, _STEP_FRACTION * ap), min(1.0, _STEP_FRACTION * ad))

        # Predictor (pure affine) fixes the centering parameter and supplies
        # the second-order correction.
        dXa, dZa, _, _ = directions(complementarity_rhs(0.0))
        if not all(np.all(np.isfinite(d_)) for d_ in dXa + dZa):
            break
        ap_a, ad_a = step_lengths(dXa, dZa)
        mu_aff = sum(float(np.sum((X[bi] + ap_a * dXa[bi]) *
                                  (Z[bi] + ad_a * dZa[bi]))) for bi in range(nb)) / n_cone
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 1e-10, 1.0 - 1e-10))
        # While still notably infeasible, keep enough centering that steps
        # stay long; otherwise mu collapses before the residuals do and the
        # iterates jam against the cone boundary.
        if max(pinf, dinf) > 1e2 * FEAS_TARGET:
            sigma = max(sigma, 0.2)

        correction = []
        with np.errstate(over="ignore", invalid="ignore"):
            for bi in range(nb):
                dxs = W_ihalf[bi] @ dXa[bi] @ W_ihalf[bi]
                dzs = W_half[bi] @ dZa[bi] @ W_half[bi]
                correction.append(0.5 * (dxs @ dzs + dzs @ dxs))
        if not all(np.all(np.isfinite(cb)) for cb in correction):
            correction = None

        dX, dZ, dy, du = directions(complementarity_rhs(sigma * mu, correction))
        if not all(np.all(np.isfinite(d_)) for d_ in dX + dZ):
            # Correction overflowed; the first-order direction may survive.
            dX, dZ, dy, du = directions(complementarity_rhs(sigma * mu))
            if not all(np.all(np.isfinite(d_)) for d_ in dX + dZ):
                break
        ap, ad = step_lengths(dX, dZ)
        # Centering backtrack: tiny steps mean the iterate is too close to
        # the boundary for this sigma; retreat toward the central path
        # (dropping the correction, which can overshoot when steps shrink).
        for sigma_retry in (0.5, 0.9):
            if min(ap, ad) >= 0.05 or sigma >= sigma_retry:
                break
            sigma = sigma_retry
            dX, dZ, dy, du = directions(complementarity_rhs(sigma * mu))
            ap, ad = step_lengths(dX, dZ)
        # Neighborhood guard: decoupled primal/dual steps are fast but can
        # collapse complementarity while the residuals stall, jamming the
        # iterates against the cone boundary.  Allow them only while mu stays
        # above a floor proportional to the relative infeasibility; otherwise
        # take a common step, which shrinks mu and both residuals at the same
        # (1 - alpha) rate.
        if max(pinf, dinf) > FEAS_TARGET:
            mu_sep = sum(float(np.sum((X[bi] + ap * dX[bi]) *
                                      (Z[bi] + ad * dZ[bi])))
                         for bi in range(nb)) / n_cone
            res_after = max((1.0 - ap) * pinf / pinf0,
                            (1.0 - ad) * dinf / dinf0)
            if mu_sep <= 0.1 * mu0 * res_after:
                ap = ad = min(ap, ad)
            # Cap the per-step mu collapse: once mu outruns feasibility the
            # iterates jam against the boundary and never recover.
            for _ in range(10):
                mu_next = sum(float(np.sum((X[bi] + ap * dX[bi]) *
                                           (Z[bi] + ad * dZ[bi])))
                              for bi in range(nb)) / n_cone
                if mu_next >= 0.01 * mu:
                    break
                ap *= 0.5
                ad *= 0.5
        if min(ap, ad) < 1e-10:
            break
        for bi in range(nb):
            X[bi] = 0.5 * ((X[bi] + ap * dX[bi]) + (X[bi] + ap * dX[bi]).T)
            Z[bi] = 0.5 * ((Z[bi] + ad * dZ[bi]) + (Z[bi] + ad * dZ[bi]).T)
        y = y + ad * dy
        if nf:
            u = u + ap * du

    # Final diagnostics (recomputed so a break mid-loop still reports truth).
    def _diagnostics():
        x_vec = np.concatenate([_svec(Xb, caches[bi]) for bi, Xb in enumerate(X)])
        rp = b_r - A_r @ x_vec - (F_r @ u if nf else 0.0)
        Aty = unpack(A_r.T @ y)
        Rd = [C_mats[bi] - Aty[bi] - Z[bi] for bi in range(nb)]
        rf = cf - F_r.T @ y if nf else np.zeros(0)
        pobj = float(c @ x_vec) + float(cf @ u)
        dobj = float(b_r @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / b_norm
        dinf = (np.sqrt(sum(np.linalg.norm(r) ** 2 for r in Rd)) +
                (np.linalg.norm(rf) if nf else 0.0)) / c_norm
        return Rd, rf, pobj, dobj, gap, pinf, dinf

    Rd, rf, pobj, dobj, gap, pinf, dinf = _diagnostics()
    if status != "optimal" and it > 0:
        final_score = max(gap / GAP_ACCEPT, pinf / FEAS_ACCEPT, dinf / FEAS_ACCEPT)
        if final_score > best_score:
            X, y, Z, u = snapshot
            Rd, rf, pobj, dobj, gap, pinf, dinf = _diagnostics()
    # Residual-corrected gap: by the identity
    #   pobj - dobj = tr(X Z) + <Rd, X> + rf.u - rp.y,
    # subtracting the rp.y term recovers the complementarity slackness the
    # iterate actually achieved.  When the dual multipliers are huge, the
    # plain objective gap is dominated by rp.y even though the primal iterate
    # is essentially optimal; the corrected gap is the honest measure then.
    comp = (sum(float(np.sum(Xb * Zb)) for Xb, Zb in zip(X, Z))
            + sum(float(np.sum(Rd[bi] * X[bi])) for bi in range(nb))
            + (float(rf @ u) if nf else 0.0))
    gap_corrected = abs(comp) / (1.0 + abs(pobj) + abs(dobj))
    if status != "optimal" and gap <= GAP_ACCEPT and pinf <= FEAS_ACCEPT and dinf <= FEAS_ACCEPT:
        status = "optimal"
    elif (status not in ("optimal", "infeasible")
          and min(gap, gap_corrected) <= GAP_INACCURATE
          and pinf <= FEAS_INACCURATE and dinf <= FEAS_INACCURATE):
        # Stalled short of the target but close enough for downstream use;
        # callers decide whether to accept this tier.
        status = "inaccurate"

    y_full = np.zeros(m)
    y_full[keep] = y
    return SdpSolution(X=X, free=u, y=y_full, Z=Z, status=status, gap=gap,
                       iterations=it, primal_objective=sign * pobj,
                       dual_objective=sign * dobj, primal_residual=pinf,
                       dual_residual=dinf, trace=trace_rows)


def dump_problem(problem: SdpProblem, path: str) -> None:
    """Debug dump: one line per nonzero, `block i j value`, objective block -1,
    constraints prefixed with their index and right-hand side."""
    with open(path, "w") as fh:
        fh.write(f"# blocks {' '.join(str(d) for d in problem.blocks)} "
                 f"sense {problem.sense} nfree {problem.n_free}\n")
        for bi, mat in sorted(problem.objective.items()):
            for i, j in zip(*np.nonzero(mat)):
                if i <= j:
                    fh.write(f"obj {bi} {i} {j} {mat[i, j]:.17g}\n")
        for k, (mats, free, rhs) in enumerate(problem.constraints):
            fh.write(f"con {k} rhs {rhs:.17g}\n")
            for bi, mat in sorted(mats.items()):
                for i, j in zip(*np.nonzero(mat)):
                    if i <= j:
                        fh.write(f"con {k} {bi} {i} {j} {mat[i, j]:.17g}\n")
            if free is not None:
                for fi in np.nonzero(free)[0]:
                    fh.write(f"con {k} free {fi} {free[fi]:.17g}\n")

def hermitian_entry_re(n: int, i: int, j: int) -> np.ndarray:
    """Hermitian C with tr(C S) = Re S_ij for Hermitian S."""
    C = np.zeros((n, n), dtype=complex)
    C[i, j] += 0.5
    C[j, i] += 0.5
    return C


def hermitian_entry_im(n: int, i: int, j: int) -> np.ndarray:
    """Hermitian C with tr(C S) = Im S_ij for Hermitian S."""
    C = np.zeros((n, n), dtype=complex)
    C[i, j] += 0.5j
    C[j, i] += -0.5j
    return C


@dataclass
class ComplexSolution:
    """Complex view of an embedded-SDP solution."""

    blocks: list[np.ndarray]
    free: np.ndarray
    status: str
    gap: float
    iterations: int
    objective: float
    primal_residual: float
    dual_residual: float
    raw: SdpSolution

    def block(self, i: int) -> np.ndarray:
        return self.blocks[i]


class ComplexSdpBuilder:
    """Assemble an SDP over complex Hermitian PSD variables.

    Each complex n x n block becomes a real 2n x 2n block via the standard
    [[Re, -Im], [Im, Re]] embedding; coefficient matrices are halved so that
    real traces agree with the complex traces they encode.  All data matrices
    live in the embedded subspace, which is invariant under the symplectic
    conjugation that averages any feasible point back onto it, so the optimum
    is unchanged and solutions are recovered by projection.
    """

    def __init__(self, sense: str = "min"):
        self._sizes: list[int] = []
        self._sense = sense
        self._objective: dict[int, np.ndarray] = {}
        self._constraints: list[tuple[dict[int, np.ndarray],
                                      dict[int, float] | None, float]] = []
        self._objective_free_dict: dict[int, float] | None = None
        self._n_free = 0

    def add_block(self, n: int) -> int:
        if n < 1:
            raise ContractError("block size must be positive")
        self._sizes.append(n)
        return len(self._sizes) - 1

    def add_free(self, count: int = 1) -> list[int]:
        idx = list(range(self._n_free, self._n_free + count))
        self._n_free += count
        return idx

    def _embed_terms(self, terms: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
        out = {}
        for bi, mat in terms.items():
            n = self._sizes[bi]
            arr = np.asarray(mat, dtype=complex)
            if arr.shape != (n, n):
                raise ContractError(f"coefficient for block {bi} has shape "
                                    f"{arr.shape}, expected {(n, n)}")
            out[bi] = 0.5 * embed_hermitian(arr)
        return out

    def _free_vec(self, free: dict[int, float] | None) -> np.ndarray | None:
        # Materialized at solve time so free variables may be declared in any
        # order relative to the constraints that reference them.
        if not free:
            return None
        vec = np.zeros(self._n_free)
        for idx, coeff in free.items():
            vec[idx] = coeff
        return vec

    def set_objective(self, terms: dict[int, np.ndarray],
                      free: dict[int, float] | None = None) -> None:
        self._objective = self._embed_terms(terms)
        self._objective_free_dict = free

    def add_constraint(self, terms: dict[int, np.ndarray], rhs: float,
                       free: dict[int, float] | None = None) -> None:
        self._constraints.append((self._embed_terms(terms), free, float(rhs)))

    def solve(self, gap_target: float = GAP_TARGET,
              max_iterations: int = MAX_ITERATIONS) -> ComplexSolution:
        problem = SdpProblem(blocks=[2 * n for n in self._sizes],
                             sense=self._sense, n_free=self._n_free)
        problem.objective = self._objective
        obj_free = self._free_vec(self._objective_free_dict)
        if obj_free is not None:
            problem.objective_free = obj_free
        elif self._n_free:
            problem.objective_free = np.zeros(self._n_free)
        for mats, fdict, rhs in self._constraints:
            problem.add_constraint(mats, rhs, free=self._free_vec(fdict))
        sol = solve(problem, gap_target=gap_target, max_iterations=max_iterations)
        blocks = [extract_hermitian(Xb) for Xb in sol.X]
        return ComplexSolution(blocks=blocks, free=sol.free, status=sol.status,
                               gap=sol.gap, iterations=sol.iterations,
                               objective=sol.primal_objective,
                               primal_residual=sol.primal_residual,
                               dual_residual=sol.dual_residual, raw=sol)


def re_trace_functional(q: np.ndarray) -> np.ndarray:
    """Hermitian C with tr(C V) = Re tr(Q V) for Hermitian V."""
    return 0.5 * (q + q.conj().T)


def im_trace_functional(q: np.ndarray) -> np.ndarray:
    """Hermitian C with tr(C V) = Im tr(Q V) for Hermitian V."""
    return 0.5 * (-1j * q + 1j * q.conj().T)
