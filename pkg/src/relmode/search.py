"""Constructive search for relative periodic orbits.

The chain implemented here: Taylor/radiality analysis of the
Hamiltonian on a fixed-point subspace, multistart critical-orbit search
on momentum-times-quadratic level sets, blow-up branch continuation in
the level radius with Lagrange-multiplier extraction, shooting-based
certification in the full phase space, and deduplication of
certificates modulo the group action.

The search objective at order k is the temporal-circle average of the
k-th ray coefficient (the resonant part): the average is what the
reduced counting theory sees, while certificates are always produced by
full-space shooting, which is insensitive to the choice.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.special import ndtri
from scipy.stats import qmc

from .dynamics import (
    ADAPTIVE_SCHEME,
    IntegratorConfig,
    flow,
    flow_final,
    flow_final_batch,
    vector_field,
)
from .equivariance import integer_kernel, weight_coordinates
from .errors import (
    ConvergedToRelativeEquilibrium,
    EmptyLevelSet,
    IndefiniteQuadraticForm,
    MultiplierBlowup,
    BranchFold,
    NoConvergence,
    RadialToMaxOrder,
    RankDeficientConstraints,
)
from .homogeneous import fit_homogeneous, homogeneous_exponents
from .symplectic import Subspace

# ---------------------------------------------------------------------------
# Ray (Taylor) coefficients along directions
# ---------------------------------------------------------------------------


class RayCoefficients:
    """Taylor ray coefficients a_j(u) of t -> h(t u) by Chebyshev fitting.

    The fit is a fixed linear functional of the samples h(t_i u), so
    gradients of a_j come exactly from the model's analytic gradient:
    grad a_j(u) = sum_i W[j, i] t_i grad_h(t_i u).
    """

    def __init__(self, h, grad, dim, max_order, t_scale=0.1, extra_degree=6):
        self.h = h
        self.grad = grad
        self.dim = dim
        self.max_order = max_order
        self.degree = max_order + extra_degree
        n_nodes = self.degree + 8
        theta = (np.arange(n_nodes) + 0.5) / n_nodes * np.pi
        self.t = t_scale * np.cos(theta)
        powers = np.arange(1, self.degree + 1)
        V = self.t[:, None] ** powers[None, :]
        self.weights = np.linalg.pinv(V)  # (degree, n_nodes); row j-1 -> a_j

    def coefficients(self, U):
        """a_1..a_degree at each direction; U is (N, dim)."""
        U = np.atleast_2d(U)
        states = U[:, None, :] * self.t[None, :, None]
        f = self.h(states)
        return f @ self.weights.T

    def coefficient(self, U, order):
        return self.coefficients(U)[:, order - 1]

    def gradient(self, u, order):
        states = np.asarray(u)[None, :] * self.t[:, None]
        G = self.grad(states)
        return (self.weights[order - 1] * self.t) @ G


# ---------------------------------------------------------------------------
# Taylor / radiality analysis
# ---------------------------------------------------------------------------


@dataclass
class TaylorAnalysis:
    """Radiality diagnostics and the order-k search objective on a subspace.

    q_matrix is the (sign-corrected, positive definite) coefficient
    matrix of Q = d^2 h(0)/2 restricted to the subspace, defining the
    norm; hk is the temporally averaged ray-coefficient polynomial at
    the first non-radial order, hk_raw the unaveraged one.
    """

    subspace: Subspace
    q_matrix: np.ndarray
    q_sign: float
    max_order: int
    radial_coefficients: dict
    residuals: dict
    averaged_residuals: dict
    first_nonradial_order: object
    hk: object
    hk_raw: object
    temporal_generator: np.ndarray
    fit_error: float
    warnings: list = field(default_factory=list)

    @property
    def dim(self):
        return self.subspace.dim

    @property
    def is_radial(self):
        return self.first_nonradial_order is None

    def q_value(self, y):
        y = np.asarray(y)
        return np.einsum("...i,ij,...j->...", y, self.q_matrix, y)

    def sphere_project(self, y):
        y = np.asarray(y, dtype=float)
        q = self.q_value(y)
        return y / np.sqrt(np.abs(q))[..., None] if y.ndim > 1 else y / np.sqrt(abs(q))

    def hk_value(self, y):
        return self.hk.value(y)


def _temporal_rotations(gen, n_theta):
    if gen is None:
        return [np.eye(1)]
    thetas = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    return [scipy.linalg.expm(t * gen) for t in thetas]


def radiality_analysis(
    model,
    S,
    k_max=8,
    temporal_generator=None,
    tol_rad=1e-6,
    n_design=None,
    n_theta=64,
    t_scale=0.1,
    rng=None,
    raise_radial=True,
):
    """Ray-coefficient radiality analysis of h on the subspace S.

    Probes orders 3..k_max on an N-point design of the Q-unit sphere
    (N >= 4 dim).  Order j counts as radial when the design standard
    deviation of a_j stays below tol_rad relative to max(1, |mean|);
    the first non-radial order is decided on the temporally averaged
    coefficients when a temporal generator (A_s/nu0 restricted to S) is
    supplied.  The returned objective hk is the averaged coefficient
    fitted as a homogeneous polynomial.

    Raises IndefiniteQuadraticForm when Q = d^2h(0)/2|_S is indefinite,
    and RadialToMaxOrder (carrying the analysis) when every probed
    order is radial.
    """
    if k_max < 4:
        raise ValueError("k_max must be at least 4")
    rng = rng or np.random.default_rng(0)
    B = S.basis
    dim = S.dim
    hess0 = model.hessian0()
    C = 0.5 * B.T @ hess0 @ B
    eigs = np.linalg.eigvalsh(C)
    scale_c = max(np.max(np.abs(eigs)), 1e-300)
    if np.all(eigs > 1e-10 * scale_c):
        sgn = 1.0
    elif np.all(eigs < -1e-10 * scale_c):
        sgn = -1.0
    else:
        raise IndefiniteQuadraticForm(
            "d^2 h(0)/2 restricted to the subspace is indefinite"
        )
    C_pos = sgn * C

    def h_sub(y):
        return model.h(np.asarray(y) @ B.T)

    def grad_sub(y):
        return model.grad_h(np.asarray(y) @ B.T) @ B

    rays = RayCoefficients(h_sub, grad_sub, dim, k_max, t_scale=t_scale)
    n_design = n_design or max(4 * dim, 24)
    raw = rng.standard_normal((n_design, dim))
    qvals = np.einsum("ni,ij,nj->n", raw, C_pos, raw)
    design = raw / np.sqrt(qvals)[:, None]

    rotations = _temporal_rotations(temporal_generator, n_theta)
    all_coeffs = rays.coefficients(design)  # (N, degree)

    radial_coefficients = {}
    residuals = {}
    averaged_residuals = {}
    first_k = None
    warnings = []
    for order in range(3, k_max + 1):
        vals = all_coeffs[:, order - 1]
        mean = float(np.mean(vals))
        std = float(np.std(vals))
        rel = std / max(1.0, abs(mean))
        residuals[order] = rel
        radial_coefficients[order] = mean
        if rel <= tol_rad:
            averaged_residuals[order] = rel
            continue
        # Raw order is non-radial; confirm on the temporal average.
        if temporal_generator is None:
            averaged_residuals[order] = rel
            first_k = order
            break
        rotated = np.stack([design @ R.T for R in rotations])  # (T, N, dim)
        avg_vals = np.zeros(n_design)
        for block in rotated:
            avg_vals += rays.coefficient(block, order)
        avg_vals /= len(rotations)
        mean_a = float(np.mean(avg_vals))
        rel_a = float(np.std(avg_vals)) / max(1.0, abs(mean_a))
        averaged_residuals[order] = rel_a
        if rel_a > tol_rad:
            first_k = order
            radial_coefficients[order] = mean_a
            break
        warnings.append(
            "order %d is non-radial raw but radial after temporal averaging" % order
        )

    radial_coefficients = {
        j: c for j, c in radial_coefficients.items() if j < (first_k or k_max + 1)
    }

    hk_poly = None
    hk_raw = None
    fit_error = 0.0
    if first_k is not None:
        n_terms = len(homogeneous_exponents(dim, first_k))
        if n_terms > 4000:
            raise NoConvergence(
                "order-%d objective in dimension %d is beyond desk scale"
                % (first_k, dim)
            )
        hk_raw, fit_error = fit_homogeneous(
            lambda U: rays.coefficient(U, first_k), dim, first_k
        )
        if temporal_generator is not None:
            hk_poly = hk_raw.averaged_over(rotations)
        else:
            hk_poly = hk_raw
        if first_k % 2:
            warnings.append(
                "first non-radial order %d is odd (the reduced theory expects "
                "an even order)" % first_k
            )

    analysis = TaylorAnalysis(
        subspace=S,
        q_matrix=C_pos,
        q_sign=sgn,
        max_order=k_max,
        radial_coefficients=radial_coefficients,
        residuals=residuals,
        averaged_residuals=averaged_residuals,
        first_nonradial_order=first_k,
        hk=hk_poly,
        hk_raw=hk_raw,
        temporal_generator=temporal_generator,
        fit_error=fit_error,
        warnings=warnings,
    )
    if first_k is None and raise_radial:
        err = RadialToMaxOrder(
            "h restricted to the subspace is radial through order %d" % k_max
        )
        err.analysis = analysis
        raise err
    return analysis


# ---------------------------------------------------------------------------
# Constraint handling
# ---------------------------------------------------------------------------


def _restricted_momentum_constraints(model, S, lam, zero_tol=1e-12):
    """Independent momentum constraints (matrix, level, label) on S-coords.

    Constraints whose restricted matrices vanish or are linearly
    dependent on earlier ones (including the quadratic form) are
    dropped after checking level consistency; an inconsistent requested
    level raises EmptyLevelSet.
    """
    B = S.basis
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    mats = [B.T @ M @ B for M in model.momentum.matrices]
    if len(mats) != len(lam):
        raise ValueError(
            "momentum level has %d components, expected %d" % (len(lam), len(mats))
        )
    return mats, lam


def _filter_constraints(q_matrix, q_level, mom_mats, mom_levels, labels=None):
    """Drop zero/dependent momentum constraints with level consistency."""
    labels = labels or ["J%d" % (i + 1) for i in range(len(mom_mats))]
    kept = [(q_matrix, q_level, "Q")]
    basis_flat = [q_matrix.ravel()]
    basis_levels = [q_level]
    for M, lev, lab in zip(mom_mats, mom_levels, labels):
        nrm = np.linalg.norm(M)
        if nrm <= 1e-12:
            if abs(lev) > 1e-9:
                raise EmptyLevelSet(
                    "constraint %s vanishes on the subspace but level %g requested"
                    % (lab, lev)
                )
            continue
        A = np.vstack(basis_flat).T
        coef, res, *_ = np.linalg.lstsq(A, M.ravel(), rcond=None)
        resid = np.linalg.norm(A @ coef - M.ravel())
        if resid <= 1e-10 * nrm:
            implied = float(np.dot(coef, basis_levels))
            if abs(implied - lev) > 1e-9 * max(1.0, abs(lev)):
                raise EmptyLevelSet(
                    "constraint %s is dependent with inconsistent level "
                    "(implied %g, requested %g)" % (lab, implied, lev)
                )
            continue
        kept.append((M, lev, lab))
        basis_flat.append(M.ravel())
        basis_levels.append(lev)
    return kept


def _constraint_residual(constraints, y):
    return np.array([y @ A @ y - lev for A, lev, _ in constraints])


def _constraint_rows(constraints, y):
    return np.stack([2.0 * (A @ y) for A, _, _ in constraints])


def _project_feasible(constraints, y0, max_iter=80, tol=1e-13):
    y = np.asarray(y0, dtype=float).copy()
    for _ in range(max_iter):
        r = _constraint_residual(constraints, y)
        if np.max(np.abs(r)) <= tol:
            return y, True
        Jrows = _constraint_rows(constraints, y)
        step, *_ = np.linalg.lstsq(Jrows, -r, rcond=None)
        ns = np.linalg.norm(step)
        if not np.isfinite(ns):
            return y, False
        if ns > 2.0:
            step *= 2.0 / ns
        y = y + step
    return y, np.max(np.abs(_constraint_residual(constraints, y))) <= 1e-10


def _check_transversality(constraints, y, tol=1e-8):
    rows = _constraint_rows(constraints, y)
    s = np.linalg.svd(rows, compute_uv=False)
    if s[-1] <= tol * max(s[0], 1e-300):
        raise RankDeficientConstraints(
            "constraint Jacobian is rank deficient at a feasible point "
            "(sigma_min/sigma_max = %.3e)" % (s[-1] / s[0])
        )


# ---------------------------------------------------------------------------
# KKT critical-point solver
# ---------------------------------------------------------------------------


class _Objective:
    """Uniform value/grad/hess facade over polynomials and callables."""

    def __init__(self, value, grad, hess):
        self.value = value
        self.grad = grad
        self.hess = hess

    @classmethod
    def from_poly(cls, poly):
        return cls(poly.value, poly.grad, poly.hess)

    @classmethod
    def from_model(cls, model, S):
        B = S.basis

        def value(y):
            return float(model.h(B @ np.asarray(y)))

        def grad(y):
            return B.T @ model.grad_h(B @ np.asarray(y))

        def hess(y):
            return B.T @ model.hess_h(B @ np.asarray(y)) @ B

        return cls(value, grad, hess)


def _kkt_solve(
    objective,
    constraints,
    y0,
    mult0=None,
    max_iter=80,
    tol_grad=1e-10,
    tol_con=1e-12,
):
    """Newton (least-squares step) on the Lagrange stationarity system.

    Unknowns (y, multipliers); converged when the projected stationarity
    residual and constraint residuals are below tolerance.  Returns
    (ok, y, multipliers, info).
    """
    n = len(y0)
    m = len(constraints)
    y = np.asarray(y0, dtype=float).copy()
    if mult0 is None:
        rows = _constraint_rows(constraints, y)
        mult, *_ = np.linalg.lstsq(rows.T, objective.grad(y), rcond=None)
    else:
        mult = np.asarray(mult0, dtype=float).copy()

    def residual(y, mult):
        rows = _constraint_rows(constraints, y)
        fg = objective.grad(y) - rows.T @ mult
        fc = _constraint_residual(constraints, y)
        return np.concatenate([fg, fc]), rows

    F, rows = residual(y, mult)
    best = (np.linalg.norm(F), y.copy(), mult.copy())
    for _ in range(max_iter):
        if (
            np.linalg.norm(F[:n]) <= tol_grad
            and np.max(np.abs(F[n:])) <= tol_con
        ):
            return True, y, mult, {"residual": float(np.linalg.norm(F))}
        H = objective.hess(y) - sum(
            2.0 * mu * A for mu, (A, _, _) in zip(mult, constraints)
        )
        jac = np.zeros((n + m, n + m))
        jac[:n, :n] = H
        jac[:n, n:] = -rows.T
        jac[n:, :n] = rows
        # Truncated least-squares step: the Jacobian is singular along
        # the group-orbit directions, which must not blow up the step.
        step, *_ = np.linalg.lstsq(jac, -F, rcond=1e-8)
        if not np.all(np.isfinite(step)):
            break
        # Backtracking on the merit ||F||.
        base = np.linalg.norm(F)
        t = 1.0
        for _ in range(30):
            y_new = y + t * step[:n]
            mult_new = mult + t * step[n:]
            F_new, rows_new = residual(y_new, mult_new)
            if np.linalg.norm(F_new) < (1.0 - 1e-4 * t) * base:
                break
            t *= 0.5
        else:
            break
        y, mult, F, rows = y_new, mult_new, F_new, rows_new
        if np.linalg.norm(F) < best[0]:
            best = (np.linalg.norm(F), y.copy(), mult.copy())
    ok = (
        np.linalg.norm(F[:n]) <= 10 * tol_grad
        and np.max(np.abs(F[n:])) <= 10 * tol_con
    )
    return ok, y, mult, {"residual": float(np.linalg.norm(F))}


# ---------------------------------------------------------------------------
# Orbit fingerprints (dedup modulo a torus action)
# ---------------------------------------------------------------------------


class TorusFingerprint:
    """Exact invariants of a torus action from commuting generators."""

    def __init__(self, generators, dim, tol=1e-7):
        gens = [g for g in generators if np.linalg.norm(g) > 1e-12]
        self.tol = tol
        if not gens:
            self.coords = np.zeros((0, dim), dtype=complex)
            self.kernel = np.eye(dim)
            self.phase_combos = []
            return
        coords, W, kernel = weight_coordinates(gens, dim)
        self.coords = coords
        self.kernel = kernel
        Wr = np.round(W)
        if np.max(np.abs(W - Wr)) > 1e-6 * max(1.0, np.max(np.abs(W))):
            # Non-integer weights: fall back to moduli-only invariants.
            self.phase_combos = []
        else:
            self.phase_combos = integer_kernel(Wr)

    def describe(self, y):
        z = self.coords @ np.asarray(y, dtype=float)
        moduli = np.abs(z)
        fixed = self.kernel.T @ np.asarray(y, dtype=float)
        phases = np.angle(z)
        return moduli, phases, fixed

    def distance(self, y1, y2):
        m1, p1, f1 = self.describe(y1)
        m2, p2, f2 = self.describe(y2)
        d = 0.0
        if len(f1):
            d = max(d, float(np.max(np.abs(f1 - f2))))
        if len(m1):
            d = max(d, float(np.max(np.abs(m1 - m2))))
        for combo in self.phase_combos:
            active = np.nonzero(combo)[0]
            if np.any(m1[active] < self.tol) or np.any(m2[active] < self.tol):
                continue
            dphi = float(combo @ p1 - combo @ p2)
            gap = abs((dphi + np.pi) % (2 * np.pi) - np.pi)
            amp = min(np.min(m1[active]), np.min(m2[active]))
            d = max(d, amp * gap)
        return d


def _cluster_by_distance(points, metric, tol):
    reps = []
    groups = []
    for idx, p in enumerate(points):
        placed = False
        for gi, rep in enumerate(reps):
            if metric(p, rep) <= tol:
                groups[gi].append(idx)
                placed = True
                break
        if not placed:
            reps.append(p)
            groups.append([idx])
    return reps, groups


# ---------------------------------------------------------------------------
# Critical orbits
# ---------------------------------------------------------------------------


@dataclass
class CriticalOrbit:
    """A critical orbit of the order-k objective on the level set."""

    y: np.ndarray
    point: np.ndarray
    isotropy: str
    value: float
    lam: np.ndarray
    multipliers: dict
    constraint_residual: float
    projected_gradient: float
    hessian_spectrum: np.ndarray
    complement_dim: int
    multiplicity_tag: str
    analysis: object = None
    n_found: int = 1

    @property
    def g_morse(self):
        if self.complement_dim == 0:
            return True
        return bool(np.min(np.abs(self.hessian_spectrum)) > 1e-6)


def _orbit_tangent(y, dedup_generators):
    cols = [g @ y for g in dedup_generators]
    cols = [c for c in cols if np.linalg.norm(c) > 1e-12]
    if not cols:
        return np.zeros((len(y), 0))
    return Subspace.from_spanning(np.stack(cols, axis=1)).basis


def _complement_basis(constraints, y, dedup_generators):
    rows = _constraint_rows(constraints, y)
    tangent = scipy.linalg.null_space(rows)
    orbit = _orbit_tangent(y, dedup_generators)
    if orbit.shape[1] == 0:
        return tangent
    proj = tangent - orbit @ (orbit.T @ tangent)
    u, s, _ = np.linalg.svd(proj, full_matrices=False)
    keep = int(np.sum(s > 1e-8 * max(1.0, s[0] if s.size else 1.0)))
    return u[:, :keep]


def _reduced_hessian(objective, constraints, y, mult, dedup_generators):
    W = _complement_basis(constraints, y, dedup_generators)
    if W.shape[1] == 0:
        return np.zeros(0), 0
    H = objective.hess(y) - sum(
        2.0 * mu * A for mu, (A, _, _) in zip(mult, constraints)
    )
    eigs = np.linalg.eigvalsh(W.T @ H @ W)
    return eigs, W.shape[1]


def constrained_critical_orbits(
    model,
    analysis,
    lam,
    n_starts=None,
    seed=0,
    dedup_generators=None,
    dedup_tol=1e-6,
    isotropy="K",
):
    """Critical orbits of the order-k objective on {J = lam, Q = 1}.

    Runs a multistart Newton solve of the Lagrange stationarity system
    on the subspace carried by the analysis, then deduplicates the
    converged points modulo the torus generated by dedup_generators
    (the identity components of L_lambda and the temporal circle).

    The count is not asserted against the theoretical bound here; that
    comparison happens in the acceptance layer.
    """
    if analysis.is_radial or analysis.hk is None:
        err = RadialToMaxOrder(
            "no finite non-radial order: the full Hamiltonian is rejected as "
            "an objective (only relative equilibria exist)"
        )
        err.analysis = analysis
        raise err
    S = analysis.subspace
    d = S.dim
    mats, lam = _restricted_momentum_constraints(model, S, lam)
    constraints = _filter_constraints(analysis.q_matrix, analysis.q_sign * 1.0, mats, lam)
    n_con = len(constraints)

    if dedup_generators is None:
        dedup_generators = []
        if analysis.temporal_generator is not None:
            dedup_generators = [analysis.temporal_generator]
    fingerprint = TorusFingerprint(dedup_generators, d)

    reduced_dim = max(d - n_con - len(dedup_generators), 0)
    if n_starts is None:
        n_starts = 64 * (reduced_dim + 1)

    # Low-discrepancy starts mapped to directions through the inverse
    # normal CDF (reproducible for a fixed seed).
    sob = qmc.Sobol(d, scramble=True, seed=seed)
    raw = sob.random(int(2 ** np.ceil(np.log2(max(n_starts, 2)))))[:n_starts]
    gauss = ndtri(np.clip(raw, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    directions = list(gauss / np.where(norms > 0, norms, 1.0))

    # Extra starts on the weight-coordinate strata (one eigenplane
    # zeroed): isolated critical orbits often sit on these poles of the
    # reduced space and are thin targets for random starts.
    for j in range(fingerprint.coords.shape[0]):
        row = fingerprint.coords[j]
        plane = Subspace.from_spanning(
            np.stack([row.real, row.imag], axis=1)
        ).basis
        for x0 in directions[: max(8, n_starts // 16)]:
            proj = x0 - plane @ (plane.T @ x0)
            if np.linalg.norm(proj) > 1e-8:
                directions.append(proj / np.linalg.norm(proj))

    objective = _Objective.from_poly(analysis.hk)
    feasible_found = False
    converged = []
    for x0 in directions:
        qv = analysis.q_value(x0)
        y0 = x0 / np.sqrt(abs(qv))
        y0, ok = _project_feasible(constraints, y0)
        if not ok:
            continue
        if not feasible_found:
            _check_transversality(constraints, y0)
            feasible_found = True
        ok, y, mult, info = _kkt_solve(objective, constraints, y0)
        if not ok:
            continue
        y, fok = _project_feasible(constraints, y)
        if not fok:
            continue
        converged.append((y, mult))
    if not feasible_found:
        raise EmptyLevelSet(
            "no feasible point found on {Q = 1, J = lambda} from %d starts"
            % n_starts
        )
    if not converged:
        raise NoConvergence("no critical point converged from %d starts" % n_starts)

    reps, groups = _cluster_by_distance(
        [y for y, _ in converged],
        fingerprint.distance,
        dedup_tol,
    )
    orbits = []
    for rep_idx, idxs in enumerate(groups):
        y, mult = converged[idxs[0]]
        eigs, comp_dim = _reduced_hessian(
            objective, constraints, y, mult, dedup_generators
        )
        if comp_dim == 0:
            tag = "component"
        elif np.min(np.abs(eigs)) > 1e-6 * max(1.0, np.max(np.abs(eigs))):
            tag = "morse"
        else:
            tag = "degenerate"
        rows = _constraint_rows(constraints, y)
        fg = objective.grad(y) - rows.T @ mult
        mults = {"c": float(mult[0])}
        mults["Lambda"] = {
            lab: float(mu) for mu, (_, _, lab) in zip(mult[1:], constraints[1:])
        }
        orbits.append(
            CriticalOrbit(
                y=y,
                point=S.basis @ y,
                isotropy=isotropy,
                value=float(objective.value(y)),
                lam=lam,
                multipliers=mults,
                constraint_residual=float(
                    np.max(np.abs(_constraint_residual(constraints, y)))
                ),
                projected_gradient=float(np.linalg.norm(fg)),
                hessian_spectrum=eigs,
                complement_dim=comp_dim,
                multiplicity_tag=tag,
                analysis=analysis,
                n_found=len(idxs),
            )
        )
    orbits = _merge_degenerate_components(orbits)
    orbits.sort(key=lambda o: (round(o.value, 10), -o.n_found))
    return orbits


def _merge_degenerate_components(orbits, value_tol=1e-7):
    """Collapse degenerate critical sets to one entry per component.

    Points on a positive-dimensional (non-Morse) critical set share the
    critical value; group-inequivalent representatives with matching
    values are reported as a single connected component.
    """
    merged = []
    for orbit in orbits:
        if orbit.multiplicity_tag != "degenerate":
            merged.append(orbit)
            continue
        hit = None
        for prev in merged:
            if prev.multiplicity_tag != "degenerate":
                continue
            if abs(prev.value - orbit.value) <= value_tol * max(1.0, abs(prev.value)):
                hit = prev
                break
        if hit is None:
            merged.append(orbit)
        else:
            hit.n_found += orbit.n_found
    return merged


def morse_nondegeneracy_check(model, orbit, tol=1e-6):
    """Hessian nondegeneracy of the objective transverse to the orbit.

    Recomputes the reduced Hessian on the complement of the group-orbit
    tangent inside the constraint tangent; g_morse is true when the
    smallest absolute eigenvalue clears tol (relative to the spectral
    radius), or trivially when the complement is zero dimensional.
    """
    eigs = orbit.hessian_spectrum
    if orbit.complement_dim == 0:
        return {"min_abs_eig": np.inf, "g_morse": True, "complement_dim": 0}
    scale = max(1.0, float(np.max(np.abs(eigs))))
    min_abs = float(np.min(np.abs(eigs)))
    return {
        "min_abs_eig": min_abs,
        "g_morse": bool(min_abs > tol * scale),
        "complement_dim": int(orbit.complement_dim),
    }


# ---------------------------------------------------------------------------
# Branch continuation
# ---------------------------------------------------------------------------


@dataclass
class RpoBranch:
    """Blow-up branch v(r, lambda) with multipliers Lambda(r), c(r)."""

    seed: CriticalOrbit
    lam: np.ndarray
    r: np.ndarray
    points: np.ndarray  # subspace coordinates, one row per r
    c: np.ndarray
    Lambda: np.ndarray  # (n_samples, n_momentum_constraints)
    constraint_defect: float
    c_quadratic_constant: float
    lambda_quadratic_constant: float
    flags: list = field(default_factory=list)

    def ambient_points(self):
        B = self.seed.analysis.subspace.basis
        return self.points @ B.T

    def sample_near(self, r_target):
        idx = int(np.argmin(np.abs(self.r - r_target)))
        return idx


def branch_continuation(model, orbit, lam, r_max, n_samples=16, r_min_factor=0.01):
    """Continue the constrained critical point of h in the level radius r.

    At each r on a geometric grid the stationarity system of h
    restricted to {Q = r^2, J = r^2 lambda} is solved, seeded by
    r * (previous direction); multipliers (Lambda, c) come from the
    converged Lagrange system (equivalently the least-squares fit of
    dh = c dQ + dJ^Lambda).
    """
    analysis = orbit.analysis
    S = analysis.subspace
    mats, lam = _restricted_momentum_constraints(model, S, lam)
    base = _filter_constraints(analysis.q_matrix, analysis.q_sign * 1.0, mats, lam)
    objective = _Objective.from_model(model, S)

    check = morse_nondegeneracy_check(model, orbit)
    flags = []
    if not check["g_morse"]:
        flags.append("seed-orbit-degenerate")
    if analysis.is_radial:
        flags.append("radial-degenerate")

    rs = np.geomspace(r_min_factor * r_max, r_max, n_samples)
    rho_prev = orbit.y.copy()
    mult_prev = None
    rows_out = {"r": [], "y": [], "c": [], "Lambda": []}
    defect = 0.0
    for r in rs:
        constraints = [(A, lev * r * r, lab) for A, lev, lab in base]
        y0 = r * rho_prev
        ok, y, mult, info = _kkt_solve(
            objective, constraints, y0, mult0=mult_prev, max_iter=120
        )
        if not ok:
            partial = _branch_from_rows(orbit, lam, rows_out, flags, defect)
            raise BranchFold(
                "corrector failed at r = %.4g (%d samples kept)"
                % (r, len(rows_out["r"])),
                partial=partial,
            )
        defect = max(defect, float(np.max(np.abs(_constraint_residual(constraints, y)))))
        rows_out["r"].append(r)
        rows_out["y"].append(y)
        rows_out["c"].append(float(mult[0]))
        rows_out["Lambda"].append(np.asarray(mult[1:], dtype=float))
        rho_prev = y / r
        mult_prev = mult
    branch = _branch_from_rows(orbit, lam, rows_out, flags, defect)

    # Multiplier decay |Lambda| ~ r^e: a violently non-decaying fit
    # signals an H1/H2 violation.
    lam_norms = np.linalg.norm(branch.Lambda, axis=1)
    if np.max(lam_norms) > 1e-10:
        mask = lam_norms > 1e-14
        if np.sum(mask) >= 4:
            e, _ = np.polyfit(np.log(branch.r[mask]), np.log(lam_norms[mask]), 1)
            if e < 0.5 and lam_norms[0] > 1e-8:
                raise MultiplierBlowup(
                    "||Lambda(r)|| does not decay as r -> 0 (exponent %.2f)" % e
                )
    return branch


def _branch_from_rows(orbit, lam, rows, flags, defect):
    r = np.asarray(rows["r"])
    if len(r) == 0:
        return RpoBranch(orbit, lam, r, np.zeros((0, len(orbit.y))), np.zeros(0),
                         np.zeros((0, 0)), defect, 0.0, 0.0, list(flags))
    y = np.stack(rows["y"])
    c = np.asarray(rows["c"])
    Lam = np.stack([np.atleast_1d(v) for v in rows["Lambda"]])
    if Lam.ndim == 1:
        Lam = Lam.reshape(len(r), -1)
    r2 = r * r
    c_const = float(np.max(np.abs(c - 1.0) / r2))
    l_const = float(np.max(np.linalg.norm(Lam, axis=1) / r2)) if Lam.size else 0.0
    return RpoBranch(orbit, lam, r, y, c, Lam, defect, c_const, l_const, list(flags))


# ---------------------------------------------------------------------------
# Shooting certification
# ---------------------------------------------------------------------------


@dataclass
class ShootingConfig:
    max_iterations: int = 40
    tol_residual: float = 1e-8
    fd_step: float = 1e-6
    jacobian_rtol: float = 1e-11
    jacobian_atol: float = 1e-13
    residual_rtol: float = 1e-13
    residual_atol: float = 1e-16
    nontriviality_tol: float = 1e-6
    n_trajectory_samples: int = 64


@dataclass
class RpoCertificate:
    """A certified relative periodic orbit.

    residual is ||exp(-tau xi) F_tau(m) - m|| under the certifying
    integrator; residual_crosscheck re-evaluates it with the other
    scheme.  xi_coeffs are drift coefficients against the group's
    generator basis, witness the nontriviality margin
    min_xi' ||X_h(m) - xi'.m||.
    """

    state: np.ndarray
    period: float
    xi_coeffs: np.ndarray
    residual: float
    residual_crosscheck: float
    energy: float
    momentum: np.ndarray
    isotropy: str
    witness: float
    provenance: dict
    trajectory: np.ndarray
    action: object = None

    @property
    def state_scale(self):
        return max(float(np.linalg.norm(self.state)), 1e-12)


def _nontriviality_witness(model, m):
    """min over xi of ||X_h(m) - xi.m|| and the minimizing coefficients."""
    X = vector_field(model, m)
    gens = model.action.generators
    if not gens:
        return float(np.linalg.norm(X)), np.zeros(0)
    A = np.stack([g @ m for g in gens], axis=1)
    coef, *_ = np.linalg.lstsq(A, X, rcond=None)
    return float(np.linalg.norm(X - A @ coef)), coef


def _group_exp(model, tau, coeffs):
    if model.action.group.dim == 0 or not len(coeffs):
        return np.eye(model.dim)
    return scipy.linalg.expm(-tau * model.action.algebra_element(coeffs))


def shoot_rpo(model, m0, tau0, xi0=None, algebra_basis=None, config=None,
              isotropy="K", provenance=None):
    """Gauss-Newton shooting for F_tau(m) = exp(tau xi) m.

    Unknowns are a correction dm constrained to the tangent of the
    energy-momentum level set at the seed (with the phase fixed by
    <X_h(m0), dm> = 0), the relative period tau, and the drift
    coefficients against algebra_basis (coefficient vectors over the
    group's generators; defaults to the full basis).

    Raises NoConvergence when the residual stalls above tolerance and
    ConvergedToRelativeEquilibrium (carrying the point) when the
    nontriviality witness fails at the converged point.
    """
    config = config or ShootingConfig()
    m0 = np.asarray(m0, dtype=float).copy()
    n = m0.size
    d = model.action.group.dim
    if algebra_basis is None:
        algebra_basis = [np.eye(d)[i] for i in range(d)]
    n_b = len(algebra_basis)
    xi0 = np.zeros(n_b) if xi0 is None else np.atleast_1d(np.asarray(xi0, dtype=float))
    if tau0 <= 0:
        raise ValueError("tau0 must be positive")
    basis_mats = [model.action.algebra_element(c) for c in algebra_basis]

    # Tangent of the (h, J) level set at the seed, with the phase fix.
    rows = [model.grad_h(m0)]
    jrows = model.momentum.tangent_map(m0)
    for row in jrows:
        if np.linalg.norm(row) > 1e-12:
            rows.append(row)
    rows.append(vector_field(model, m0))
    rows = np.stack(rows)
    W = scipy.linalg.null_space(rows, rcond=1e-10)
    n_w = W.shape[1]

    jac_cfg = IntegratorConfig(
        scheme=ADAPTIVE_SCHEME,
        rtol=config.jacobian_rtol,
        atol=config.jacobian_atol,
        method="DOP853",
    )
    res_cfg = IntegratorConfig(
        scheme=ADAPTIVE_SCHEME,
        rtol=config.residual_rtol,
        atol=config.residual_atol,
        method="DOP853",
    )

    def full_coeffs(a):
        out = np.zeros(d)
        for ai, cv in zip(a, algebra_basis):
            out += ai * np.atleast_1d(cv)
        return out

    def residual(z, tau, a, cfg):
        y = m0 + W @ z
        F = flow_final(model, y, tau, cfg)
        g = _group_exp(model, tau, full_coeffs(a))
        return g @ F - y, F, g, y

    z = np.zeros(n_w)
    tau = float(tau0)
    a = xi0.copy()
    scale = max(np.linalg.norm(m0), 1e-12)
    tol_abs = config.tol_residual * scale

    R, F_end, g_end, y_cur = residual(z, tau, a, res_cfg)
    best = (np.linalg.norm(R), z.copy(), tau, a.copy())
    mu_damp = 0.0
    for it in range(config.max_iterations):
        if np.linalg.norm(R) <= tol_abs:
            break
        # Jacobian: dm-columns by batched finite differences, tau and
        # drift columns analytically.
        h_fd = config.fd_step * max(1.0, np.linalg.norm(m0))
        cols = []
        if n_w:
            seeds = []
            for i in range(n_w):
                e = np.zeros(n_w)
                e[i] = h_fd
                seeds.append(m0 + W @ (z + e))
                seeds.append(m0 + W @ (z - e))
            ends = flow_final_batch(model, np.array(seeds), tau, jac_cfg)
            for i in range(n_w):
                dF = (ends[2 * i] - ends[2 * i + 1]) / (2.0 * h_fd)
                cols.append(g_end @ dF - W[:, i])
        xi_full = full_coeffs(a)
        xi_mat = model.action.algebra_element(xi_full) if d else np.zeros((n, n))
        dtau = -xi_mat @ (g_end @ F_end) + g_end @ vector_field(model, F_end)
        cols.append(dtau)
        for cb, Gm in zip(algebra_basis, basis_mats):
            if d == 0:
                continue
            dg = scipy.linalg.expm_frechet(
                -tau * xi_mat, -tau * Gm, compute_expm=False
            )
            cols.append(dg @ F_end)
        J = np.stack(cols, axis=1)
        rhs = -R
        step, *_ = np.linalg.lstsq(
            np.vstack([J, np.sqrt(mu_damp) * np.eye(J.shape[1])]) if mu_damp else J,
            np.concatenate([rhs, np.zeros(J.shape[1])]) if mu_damp else rhs,
            rcond=1e-10,
        )
        # Trust region: near-collinear (tau, drift) columns on rotating
        # orbits can explode the raw step and stall the line search on
        # absurdly long integrations.
        cap = 1.0
        if n_w:
            zn = np.linalg.norm(step[:n_w])
            if zn > 0.5 * scale:
                cap = min(cap, 0.5 * scale / zn)
        if abs(step[n_w]) > 0.25 * tau0:
            cap = min(cap, 0.25 * tau0 / abs(step[n_w]))
        an = np.linalg.norm(step[n_w + 1:]) if n_b else 0.0
        if an > 0.5:
            cap = min(cap, 0.5 / an)
        step = cap * step
        improved = False
        t = 1.0
        for _ in range(12):
            z_n = z + t * step[:n_w]
            tau_n = tau + t * step[n_w]
            a_n = a + t * step[n_w + 1:]
            if not 0.2 * tau0 <= tau_n <= 4.0 * tau0:
                t *= 0.5
                continue
            R_n, F_n, g_n, y_n = residual(z_n, tau_n, a_n, res_cfg)
            if np.linalg.norm(R_n) < np.linalg.norm(R):
                z, tau, a = z_n, tau_n, a_n
                R, F_end, g_end, y_cur = R_n, F_n, g_n, y_n
                improved = True
                break
            t *= 0.5
        if improved:
            mu_damp = max(mu_damp * 0.25, 0.0)
            if np.linalg.norm(R) < best[0]:
                best = (np.linalg.norm(R), z.copy(), tau, a.copy())
        else:
            if mu_damp == 0.0:
                mu_damp = 1e-8
            else:
                mu_damp *= 16.0
            if mu_damp > 1e3:
                break

    res_norm = float(np.linalg.norm(R))
    if res_norm > tol_abs:
        raise NoConvergence(
            "shooting stalled at residual %.3e (tolerance %.3e)"
            % (res_norm, tol_abs)
        )

    m_star = y_cur
    witness, best_fit = _nontriviality_witness(model, m_star)
    xi_full = full_coeffs(a)

    # Cross-check with the symplectic scheme.
    sym_cfg = IntegratorConfig(step=tau / 2000.0)
    F_sym = flow(model, m_star, tau, sym_cfg).final
    res_cross = float(
        np.linalg.norm(_group_exp(model, tau, xi_full) @ F_sym - m_star)
    )

    traj = flow(
        model,
        m_star,
        tau,
        res_cfg,
        t_eval=np.linspace(0.0, tau, config.n_trajectory_samples, endpoint=False),
    ).states

    cert = RpoCertificate(
        state=m_star,
        period=float(tau),
        xi_coeffs=xi_full,
        residual=res_norm,
        residual_crosscheck=res_cross,
        energy=float(model.h(m_star)),
        momentum=model.momentum.value(m_star),
        isotropy=isotropy,
        witness=witness,
        provenance=dict(provenance or {}),
        trajectory=traj,
        action=model.action,
    )
    if witness <= config.nontriviality_tol:
        raise ConvergedToRelativeEquilibrium(
            "converged point is a relative equilibrium within tolerance "
            "(witness %.3e)" % witness,
            point=cert,
            witness=witness,
        )
    return cert


# ---------------------------------------------------------------------------
# Deduplication of certificates
# ---------------------------------------------------------------------------


def _hausdorff(A, B):
    d2 = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=2)
    return float(
        max(np.sqrt(d2.min(axis=1)).max(), np.sqrt(d2.min(axis=0)).max())
    )


def _so3_align_distance(action, traj1, traj2, mom1, mom2, n_angles=180):
    """Best Hausdorff distance over the physically possible rotations."""
    from .equivariance import so3_generators

    Ls = so3_generators()
    n1, n2 = np.linalg.norm(mom1), np.linalg.norm(mom2)
    if abs(n1 - n2) > 1e-6 * max(n1, n2, 1e-12):
        return np.inf
    if max(n1, n2) < 1e-10:
        rotations = action.sample_elements(512, rng=np.random.default_rng(5))
        return min(_hausdorff(traj1 @ g.T, traj2) for g in rotations)
    # Rotate mom1 onto mom2, then search the circle about mom2.
    u1, u2 = mom1 / n1, mom2 / n2
    v = np.cross(u1, u2)
    c = float(np.dot(u1, u2))
    if np.linalg.norm(v) < 1e-12:
        R0 = np.eye(3) if c > 0 else scipy.linalg.expm(
            np.pi * _hat(Ls, _orthogonal_unit(u1))
        )
    else:
        angle = np.arctan2(np.linalg.norm(v), c)
        R0 = scipy.linalg.expm(angle * _hat(Ls, v / np.linalg.norm(v)))
    best = np.inf
    for th in np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False):
        R = scipy.linalg.expm(th * _hat(Ls, u2)) @ R0
        G = scipy.linalg.block_diag(R, R)
        best = min(best, _hausdorff(traj1 @ G.T, traj2))
    return best


def _hat(Ls, v):
    return sum(c * L for c, L in zip(v, Ls))


def _orthogonal_unit(u):
    e = np.zeros(3)
    e[int(np.argmin(np.abs(u)))] = 1.0
    v = np.cross(u, e)
    return v / np.linalg.norm(v)


def _abelian_align_distance(action, traj1, traj2, n_angles=256):
    d = action.group.dim
    if d == 0:
        return _hausdorff(traj1, traj2)
    best = np.inf
    if d == 1:
        for th in np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False):
            g = action.element([th])
            best = min(best, _hausdorff(traj1 @ g.T, traj2))
        return best
    rng = np.random.default_rng(9)
    for _ in range(min(n_angles * d, 2048)):
        g = action.element(rng.uniform(0, 2 * np.pi, d))
        best = min(best, _hausdorff(traj1 @ g.T, traj2))
    return best


def orbit_distance(cert1, cert2):
    """Alignment distance between two certificates' trajectories."""
    action = cert1.action
    if action is None or action.group.kind in ("Trivial",):
        return _hausdorff(cert1.trajectory, cert2.trajectory)
    if action.group.kind == "SO3":
        return _so3_align_distance(
            action, cert1.trajectory, cert2.trajectory, cert1.momentum, cert2.momentum
        )
    return _abelian_align_distance(action, cert1.trajectory, cert2.trajectory)


def distinct_orbits(certs, tol=1e-4):
    """Deduplicate certificates modulo group and time phase.

    Two certificates merge when the Hausdorff distance between their
    sampled trajectories after optimal group alignment stays within
    tol * state scale.  Returns representatives with multiplicity
    counts attached in provenance['multiplicity'].
    """
    reps = []
    counts = []
    for cert in certs:
        placed = False
        for i, rep in enumerate(reps):
            scale = max(rep.state_scale, cert.state_scale)
            if orbit_distance(cert, rep) <= tol * scale:
                counts[i] += 1
                if cert.residual < rep.residual:
                    reps[i] = cert
                placed = True
                break
        if not placed:
            reps.append(cert)
            counts.append(1)
    for rep, cnt in zip(reps, counts):
        rep.provenance["multiplicity"] = cnt
    return reps
