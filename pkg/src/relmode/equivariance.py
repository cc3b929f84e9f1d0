"""Compact-group linear actions on symplectic vector spaces.

Supported groups: trivial, S^1, T^k, SO(3).  Each group carries a
hardcoded table of closed-subgroup conjugacy classes with the
normalizer-quotient dimensions and coadjoint-isotropy rules that feed
the orbit-count estimates; general closed-subgroup lattices are out of
scope.  The module also builds quadratic momentum maps, fixed-point
subspaces, the induced circle action on a resonance space, and twisted
(spatiotemporal) subgroups of G x S^1 with integer temporal weights.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateRestriction,
    NonPeriodicGenerator,
    NotCanonicalAction,
    NotSimpleAction,
    UnknownSubgroup,
    UnsupportedGroup,
)
from .symplectic import QuadraticForm, Subspace, SymplecticSpace, restrict_matrix

TRIVIAL_NAME = "{e}"


@dataclass
class SubgroupClass:
    """One conjugacy class of closed subgroups with its estimate data.

    generator_coeffs are coefficient vectors over the parent group's
    generator basis spanning Lie(K).  coadjoint_rule names how
    dim (N(K)/K)_lambda depends on lambda: 'abelian' (always dim L),
    'so3-full' (3 at lambda=0, else 1), or 'zero'.
    """

    name: str
    dim: int
    generator_coeffs: list
    dim_normalizer_quotient: int
    coadjoint_rule: str
    dim_normalizer: int
    character_rank: int

    def dim_l_lambda(self, lam=None, zero_tol=1e-12):
        if self.coadjoint_rule == "abelian":
            return self.dim_normalizer_quotient
        if self.coadjoint_rule == "zero":
            return 0
        if self.coadjoint_rule == "so3-full":
            if lam is None:
                return 1
            return 3 if np.linalg.norm(np.atleast_1d(lam)) <= zero_tol else 1
        raise UnsupportedGroup("unknown coadjoint rule %r" % self.coadjoint_rule)


class GroupDescriptor:
    """Descriptor of a supported compact group and its subgroup table."""

    def __init__(self, kind, torus_rank=1):
        self.kind = kind
        if kind == "Trivial":
            self.dim = 0
            self.subgroups = [
                SubgroupClass(TRIVIAL_NAME, 0, [], 0, "zero", 0, 0),
            ]
        elif kind == "Circle":
            self.dim = 1
            self.subgroups = [
                SubgroupClass(TRIVIAL_NAME, 0, [], 1, "abelian", 1, 0),
                SubgroupClass("SO(2)", 1, [np.array([1.0])], 0, "abelian", 1, 1),
            ]
        elif kind == "Torus":
            k = int(torus_rank)
            if k < 1:
                raise ValueError("torus rank must be >= 1")
            self.dim = k
            subs = [SubgroupClass(TRIVIAL_NAME, 0, [], k, "abelian", k, 0)]
            for i in range(k):
                coeff = np.zeros(k)
                coeff[i] = 1.0
                subs.append(
                    SubgroupClass("T_%d" % (i + 1), 1, [coeff], k - 1, "abelian", k, 1)
                )
            subs.append(
                SubgroupClass(
                    "T^%d" % k, k, [np.eye(k)[i] for i in range(k)], 0, "abelian", k, k
                )
            )
            self.subgroups = subs
        elif kind == "SO3":
            self.dim = 3
            self.subgroups = [
                SubgroupClass(TRIVIAL_NAME, 0, [], 3, "so3-full", 3, 0),
                SubgroupClass("SO(2)", 1, [np.array([0.0, 0.0, 1.0])], 0, "zero", 1, 1),
                SubgroupClass("SO(3)", 3, [np.eye(3)[i] for i in range(3)], 0, "zero", 3, 0),
            ]
        else:
            raise UnsupportedGroup("unsupported group kind %r" % kind)
        for sub in self.subgroups:
            if not sub.dim <= sub.dim_normalizer <= self.dim:
                raise ValueError("inconsistent subgroup table entry %s" % sub.name)

    @property
    def is_abelian(self):
        return self.kind in ("Trivial", "Circle", "Torus")

    def subgroup(self, name):
        for sub in self.subgroups:
            if sub.name == name:
                return sub
        raise UnknownSubgroup(
            "subgroup %r not in the %s table" % (name, self.kind)
        )

    def __repr__(self):
        return "GroupDescriptor(%s, dim=%d)" % (self.kind, self.dim)


def so3_generators():
    """Standard basis L1, L2, L3 of so(3) with [L1, L2] = L3 cyclic."""
    L1 = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    L2 = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])
    L3 = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    return [L1, L2, L3]


class LinearAction:
    """Linear symplectic action of a supported group on (V, omega).

    Parameters
    ----------
    group : GroupDescriptor
    space : SymplecticSpace
    generators : list of (dim, dim) ndarray
        Infinitesimal generators, one per Lie-algebra basis element.
    validate : bool
        Check the symplectic condition and the bracket relations.
    """

    def __init__(self, group, space, generators, validate=True):
        self.group = group
        self.space = space
        self.generators = [np.asarray(g, dtype=float) for g in generators]
        if len(self.generators) != group.dim:
            raise ValueError(
                "expected %d generators, got %d" % (group.dim, len(self.generators))
            )
        if validate:
            self._validate()

    def _validate(self, tol=1e-10):
        omega = self.space.omega
        for i, g in enumerate(self.generators):
            resid = np.linalg.norm(omega @ g + g.T @ omega)
            if resid > tol * max(1.0, np.linalg.norm(g)):
                raise NotCanonicalAction(
                    "generator %d is not infinitesimally symplectic (%.3e)" % (i, resid)
                )
        gens = self.generators
        if self.group.is_abelian:
            for i in range(len(gens)):
                for j in range(i + 1, len(gens)):
                    comm = gens[i] @ gens[j] - gens[j] @ gens[i]
                    if np.linalg.norm(comm) > tol * max(
                        1.0, np.linalg.norm(gens[i]) * np.linalg.norm(gens[j])
                    ):
                        raise NotCanonicalAction("abelian generators do not commute")
        elif self.group.kind == "SO3":
            eps = np.zeros((3, 3, 3))
            for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                eps[i, j, k] = 1.0
                eps[j, i, k] = -1.0
            for i in range(3):
                for j in range(3):
                    comm = gens[i] @ gens[j] - gens[j] @ gens[i]
                    expect = sum(eps[i, j, k] * gens[k] for k in range(3))
                    if np.linalg.norm(comm - expect) > tol * max(
                        1.0, np.linalg.norm(gens[i])
                    ):
                        raise NotCanonicalAction("so(3) bracket relations fail")

    def algebra_element(self, coeffs):
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        out = np.zeros((self.space.dim, self.space.dim))
        for c, g in zip(coeffs, self.generators):
            out += c * g
        return out

    def element(self, theta):
        """Group element exp(sum theta_i xi_i) as a matrix on V."""
        if self.group.dim == 0:
            return np.eye(self.space.dim)
        return scipy.linalg.expm(self.algebra_element(theta))

    def infinitesimal(self, coeffs, v):
        return self.algebra_element(coeffs) @ np.asarray(v)

    def sample_elements(self, n, rng=None, radius=np.pi):
        """n group elements; uniform angles for circles/tori, random for SO3."""
        if self.group.dim == 0:
            return [np.eye(self.space.dim)] * max(1, n)
        out = []
        if self.group.is_abelian:
            grid = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
            if self.group.dim == 1:
                out = [self.element([t]) for t in grid]
            else:
                rng = rng or np.random.default_rng(0)
                for _ in range(n):
                    out.append(self.element(rng.uniform(0, 2 * np.pi, self.group.dim)))
        else:
            rng = rng or np.random.default_rng(0)
            for _ in range(n):
                axis = rng.standard_normal(3)
                axis *= rng.uniform(0, np.pi) / np.linalg.norm(axis)
                out.append(self.element(axis))
        return out

    def subgroup_generators(self, name):
        """Generator matrices spanning Lie(K) for a table subgroup."""
        sub = self.group.subgroup(name)
        return sub, [self.algebra_element(c) for c in sub.generator_coeffs]

    def __repr__(self):
        return "LinearAction(%s on dim %d)" % (self.group.kind, self.space.dim)


class MomentumMapQuadratic:
    """Quadratic momentum map of a linear symplectic action.

    <J(v), xi_i> = omega(xi_i v, v)/2 = v @ M_i @ v with
    M_i = -Omega xi_i / 2 (symmetric for xi_i in sp(V)).
    """

    def __init__(self, action):
        self.action = action
        omega = action.space.omega
        self.matrices = []
        for g in action.generators:
            m = -0.5 * omega @ g
            self.matrices.append(0.5 * (m + m.T))

    @property
    def dim_g(self):
        return len(self.matrices)

    def value(self, v):
        """J(v) as a vector of components against the generator basis."""
        v = np.asarray(v)
        if not self.matrices:
            return np.zeros(v.shape[:-1] + (0,))
        if v.ndim == 1:
            return np.array([v @ m @ v for m in self.matrices])
        return np.stack(
            [np.einsum("...i,ij,...j->...", v, m, v) for m in self.matrices], axis=-1
        )

    def component(self, v, coeffs):
        """J^xi(v) for xi given by coefficients against the generators."""
        coeffs = np.atleast_1d(coeffs)
        return float(np.dot(coeffs, self.value(v)))

    def component_matrix(self, coeffs):
        coeffs = np.atleast_1d(coeffs)
        out = np.zeros_like(self.matrices[0]) if self.matrices else None
        for c, m in zip(coeffs, self.matrices):
            out = out + c * m
        return out

    def gradient(self, v):
        """Rows d J_i(v) = 2 M_i v, stacked (dim_g, dim)."""
        v = np.asarray(v)
        return np.stack([2.0 * (m @ v) for m in self.matrices])

    def tangent_map(self, v):
        """T_v J as a (dim_g, dim) matrix (same as gradient)."""
        return self.gradient(v)


def momentum_map(action, space=None, check_points=20, tol=1e-8, rng=None):
    """Momentum map of a linear action, with Noether-pairing validation.

    Checks dJ^xi(v).w = omega(xi v, w) at random points for every
    generator; failures raise NotCanonicalAction.
    """
    space = space or action.space
    if space is not action.space and not np.allclose(space.omega, action.space.omega):
        raise ValueError("space does not match the action's space")
    jm = MomentumMapQuadratic(action)
    rng = rng or np.random.default_rng(1234)
    omega = space.omega
    for _ in range(check_points):
        v = rng.standard_normal(space.dim)
        w = rng.standard_normal(space.dim)
        grads = jm.gradient(v)
        for i, g in enumerate(action.generators):
            lhs = float(grads[i] @ w)
            rhs = float((g @ v) @ omega @ w)
            if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
                raise NotCanonicalAction(
                    "momentum pairing fails for generator %d (%.3e vs %.3e)"
                    % (i, lhs, rhs)
                )
    return jm


def fixed_point_space(action, subgroup_name, tol=1e-10):
    """Basis of the K-fixed subspace V^K for a table subgroup K."""
    sub, gens = action.subgroup_generators(subgroup_name)
    n = action.space.dim
    if not gens:
        return Subspace(np.eye(n))
    stacked = np.vstack(gens)
    _, s, vt = np.linalg.svd(stacked)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    return Subspace(vt[rank:].T, parent_dim=n)


@dataclass
class IsotropyDatum:
    """Isotropy bookkeeping for one subgroup class on a resonance space.

    fixed_space holds the basis in the coordinates of the space the
    table was generated on (ambient V or resonance-space coordinates;
    see ambient_basis for the embedded version when built on U).
    """

    subgroup: SubgroupClass
    fixed_space: Subspace
    dim_l: int
    spatial: bool = True
    ambient_basis: np.ndarray = None

    @property
    def name(self):
        return self.subgroup.name

    @property
    def dim_fixed(self):
        return self.fixed_space.dim

    def dim_l_lambda(self, lam=None):
        return self.subgroup.dim_l_lambda(lam)


def _restricted_generators(action, U):
    """Generators of the G-action restricted to a resonance space."""
    sub = U.subspace()
    return [restrict_matrix(g, sub, invariance_tol=1e-8) for g in action.generators]


def isotropy_table(action, U, omega_tol=1e-10):
    """IsotropyDatum list for subgroup classes with nonzero fixed space in U.

    Entries are expressed in the resonance-space coordinates; each fixed
    space is checked to be omega-nondegenerate.
    """
    if action.group.kind not in ("Trivial", "Circle", "Torus", "SO3"):
        raise UnsupportedGroup(action.group.kind)
    gens_u = _restricted_generators(action, U)
    omega_u = U.restricted_omega
    out = []
    for sub in action.group.subgroups:
        if sub.generator_coeffs:
            stacked = np.vstack(
                [sum(c * g for c, g in zip(coeff, gens_u)) for coeff in sub.generator_coeffs]
            )
            _, s, vt = np.linalg.svd(stacked)
            scale = s[0] if s.size and s[0] > 0 else 1.0
            rank = int(np.sum(s > 1e-10 * scale))
            basis = vt[rank:].T
        else:
            basis = np.eye(U.dim)
        if basis.shape[1] == 0:
            continue
        fixed = Subspace(basis, parent_dim=U.dim)
        omega_f = fixed.basis.T @ omega_u @ fixed.basis
        sv = np.linalg.svd(omega_f, compute_uv=False)
        if sv[-1] <= omega_tol * max(sv[0], 1e-300):
            raise DegenerateRestriction(
                "fixed-point space of %s is not symplectic" % sub.name
            )
        out.append(
            IsotropyDatum(
                subgroup=sub,
                fixed_space=fixed,
                dim_l=sub.dim_normalizer_quotient,
                spatial=True,
                ambient_basis=U.basis @ fixed.basis,
            )
        )
    return out


def circle_action_from_semisimple(U, tol_periodic=1e-8, tol_momentum=1e-9):
    """The S^1-action on a resonance space generated by A_s / nu0.

    Returns a LinearAction of a Circle descriptor on the resonance-space
    coordinates.  Validates 2-pi periodicity of the generator, the
    momentum identity J_{S^1} = Q_{A_s}|_U / nu0, and commutation is
    left to the caller (the G-action need not be present).
    """
    gen = U.restricted_semisimple / U.nu0
    E = scipy.linalg.expm(2.0 * np.pi * gen)
    defect = np.linalg.norm(E - np.eye(U.dim))
    if defect > tol_periodic:
        raise NonPeriodicGenerator(
            "exp(2 pi A_s / nu0) differs from identity by %.3e" % defect
        )
    space_u = SymplecticSpace(U.dim, omega=U.restricted_omega)
    action = LinearAction(GroupDescriptor("Circle"), space_u, [gen], validate=False)
    # Momentum of the circle action vs the restricted Q_{A_s} / nu0.
    m_circle = MomentumMapQuadratic(action).matrices[0]
    parent = U.parent_map
    q_as = QuadraticForm.of_linear_field(parent.semisimple_part, parent.space)
    q_restr = U.basis.T @ q_as.matrix @ U.basis / U.nu0
    if np.linalg.norm(m_circle - q_restr) > tol_momentum * max(
        1.0, np.linalg.norm(q_restr)
    ):
        raise NonPeriodicGenerator(
            "circle momentum map does not match Q_{A_s}/nu0 on the resonance space"
        )
    return action


def commutant_basis(matrices, dim, tol=1e-9):
    """Basis of {X : [X, M] = 0 for all M} as a list of (dim, dim) arrays."""
    if not matrices:
        blocks = np.zeros((0, dim * dim))
    else:
        rows = []
        eye = np.eye(dim)
        for M in matrices:
            rows.append(np.kron(eye, M) - np.kron(M.T, eye))
        blocks = np.vstack(rows)
    if blocks.shape[0] == 0:
        u = np.eye(dim * dim)
        return [u[:, i].reshape(dim, dim) for i in range(dim * dim)]
    _, s, vt = np.linalg.svd(blocks)
    scale = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol * scale))
    null = vt[rank:]
    return [null[i].reshape(dim, dim) for i in range(null.shape[0])]


def _complex_structure_from(candidate, commutant, tol=1e-7):
    """Try to turn a commuting semisimple matrix into a complex structure.

    Maps each eigenvalue i*mu (mu != 0) to i*sign(mu); returns None when
    the candidate is singular, non-semisimple, or the result fails
    J^2 = -I / reality / commutation checks.
    """
    vals, vecs = np.linalg.eig(candidate)
    if np.min(np.abs(vals)) < 1e-8 * max(1.0, np.max(np.abs(vals))):
        return None
    if np.max(np.abs(vals.real)) > 1e-7 * np.max(np.abs(vals)):
        return None
    target = 1j * np.sign(vals.imag)
    try:
        J = (vecs * target) @ np.linalg.inv(vecs)
    except np.linalg.LinAlgError:
        return None
    if np.linalg.norm(J.imag) > tol * max(1.0, np.linalg.norm(J.real)):
        return None
    J = J.real
    n = J.shape[0]
    if np.linalg.norm(J @ J + np.eye(n)) > 1e-6 * n:
        return None
    return J


def simplicity_proxy(action, U):
    """Numerical stand-in for the G-simplicity hypothesis.

    Checks whether the commutant of the restricted G-action on U
    contains a complex structure (a sufficient condition for
    G-simplicity).  Returns a dict with the flag, the commutant
    dimension, and how the structure was found; the hypothesis itself
    has no finite numerical certificate, so this is reported, never
    silently assumed.
    """
    gens_u = _restricted_generators(action, U)
    comm = commutant_basis(gens_u, U.dim)
    candidates = [("semisimple-generator", U.restricted_semisimple / U.nu0)]
    rng = np.random.default_rng(7)
    for k in range(8):
        coeffs = rng.standard_normal(len(comm))
        X = sum(c * B for c, B in zip(coeffs, comm))
        candidates.append(("commutant-sample-%d" % k, X - X.T))
    for label, X in candidates:
        J = _complex_structure_from(X, comm)
        if J is None:
            continue
        ok = all(
            np.linalg.norm(J @ g - g @ J) <= 1e-7 * max(1.0, np.linalg.norm(g))
            for g in gens_u
        )
        if ok:
            return {
                "g_simple_proxy": True,
                "commutant_dim": len(comm),
                "witness": label,
            }
    return {"g_simple_proxy": False, "commutant_dim": len(comm), "witness": None}


@dataclass
class SpatiotemporalSubgroup:
    """A subgroup H subset G x S^1 with integer temporal weights.

    weights has one integer per continuous character of the spatial
    projection K; rho_H is the temporal velocity expressed against the
    dual basis of K's generators.  fixed_space lives in the
    resonance-space coordinates.
    """

    spatial: SubgroupClass
    weights: tuple
    fixed_space: Subspace
    nu0: float
    rho_ad_invariant: bool = True

    @property
    def name(self):
        if not any(self.weights):
            return self.spatial.name
        return "%s~w%s" % (self.spatial.name, ",".join(str(w) for w in self.weights))

    @property
    def rho_h(self):
        return np.asarray(self.weights, dtype=float)

    @property
    def is_purely_spatial(self):
        return not any(self.weights)

    @property
    def dim_fixed(self):
        return self.fixed_space.dim

    def momentum_level(self, chi=None):
        """J-level chi - rho_H / nu0 on the K-character directions.

        Expressed against the dual basis of K's generators; chi defaults
        to zero (the only K-fixed annihilator value for the supported
        one-weight classes is 0 anyway for SO(2) in SO(3)).
        """
        chi = np.zeros(len(self.weights)) if chi is None else np.atleast_1d(chi)
        return chi - self.rho_h / self.nu0


def spatiotemporal_subgroups(action, U, circle, w_max=3, force=False,
                             include_spatial=True):
    """Twisted isotropy subgroups of the G x S^1-action on U.

    For each table subgroup with a continuous character lattice,
    enumerates integer weight vectors |w_i| <= w_max, computes the
    twisted fixed space ker(xi_K + <rho_H, xi_K> A_s / nu0) in U, and
    keeps the nonzero ones.  Purely spatial rows (w = 0) are included
    when include_spatial is set.

    Raises NotSimpleAction when the G-simplicity proxy fails, unless
    force is given (the caller then proceeds with a warning).
    """
    proxy = simplicity_proxy(action, U)
    if not proxy["g_simple_proxy"] and not force:
        raise NotSimpleAction(
            "commutant of the G-action on U exposes no complex structure; "
            "pass force=True to continue anyway"
        )
    gens_u = _restricted_generators(action, U)
    temporal = circle.generators[0]
    out = []
    for sub in action.group.subgroups:
        k_gens = [sum(c * g for c, g in zip(coeff, gens_u)) for coeff in sub.generator_coeffs]
        rank = sub.character_rank
        if rank == 0:
            weight_lists = [()] if not k_gens else [(0,) * len(k_gens)]
        else:
            rng_w = range(-w_max, w_max + 1)
            weight_lists = list(product(rng_w, repeat=rank))
        for weights in weight_lists:
            if not include_spatial and not any(weights):
                continue
            if k_gens:
                padded = list(weights) + [0] * (len(k_gens) - len(weights))
                stacked = np.vstack(
                    [g + w * temporal for g, w in zip(k_gens, padded)]
                )
                _, s, vt = np.linalg.svd(stacked)
                scale = s[0] if s.size and s[0] > 0 else 1.0
                rank_s = int(np.sum(s > 1e-10 * scale))
                basis = vt[rank_s:].T
            else:
                basis = np.eye(U.dim)
            if basis.shape[1] == 0:
                continue
            fixed = Subspace(basis, parent_dim=U.dim)
            omega_f = fixed.basis.T @ U.restricted_omega @ fixed.basis
            sv = np.linalg.svd(omega_f, compute_uv=False)
            if sv.size and sv[-1] <= 1e-10 * max(sv[0], 1e-300):
                raise DegenerateRestriction(
                    "twisted fixed space of %s (w=%s) is not symplectic"
                    % (sub.name, weights)
                )
            out.append(
                SpatiotemporalSubgroup(
                    spatial=sub,
                    weights=tuple(weights),
                    fixed_space=fixed,
                    nu0=U.nu0,
                )
            )
    return out


def weight_coordinates(generators, dim, tol=1e-8):
    """Simultaneous weight decomposition of commuting semisimple generators.

    Returns (coords, weights, kernel) where coords is an (m, dim)
    complex matrix of coordinate functionals z_j(u) = coords[j] @ u (one
    per conjugate eigenplane), weights is an (r, m) array of the
    generator weights on each plane, and kernel is a real (dim, z) basis
    of the joint zero space.  A generic sqrt-prime combination of the
    generators separates integer weight vectors, so degenerate
    eigenvalue mixing only happens within equal-weight planes where it
    is harmless.
    """
    gens = [np.asarray(g, dtype=float) for g in generators]
    r = len(gens)
    if r == 0:
        return np.zeros((0, dim), dtype=complex), np.zeros((0, 0)), np.eye(dim)
    primes = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0][:r]
    combo = sum(np.sqrt(p) * g for p, g in zip(primes, gens))
    vals, vecs = np.linalg.eig(combo)
    scale = max(1.0, float(np.max(np.abs(vals))))
    plane_idx = [i for i in range(dim) if vals[i].imag > tol * scale]
    zero_idx = [i for i in range(dim) if abs(vals[i]) <= tol * scale]
    if 2 * len(plane_idx) + len(zero_idx) != dim:
        raise ValueError("generators are not jointly semisimple-imaginary")
    if zero_idx:
        zcols = vecs[:, zero_idx]
        kernel = Subspace.from_spanning(
            np.hstack([zcols.real, zcols.imag])
        ).basis
        if kernel.shape[1] != len(zero_idx):
            raise ValueError("joint kernel failed to realify")
    else:
        kernel = np.zeros((dim, 0))
    V = np.zeros((dim, dim), dtype=complex)
    for j, idx in enumerate(plane_idx):
        V[:, 2 * j] = vecs[:, idx]
        V[:, 2 * j + 1] = np.conj(vecs[:, idx])
    V[:, 2 * len(plane_idx):] = kernel
    dual = np.linalg.inv(V)
    coords = dual[: 2 * len(plane_idx) : 2]
    weights = np.zeros((r, len(plane_idx)))
    for j, idx in enumerate(plane_idx):
        v = vecs[:, idx]
        nrm = np.vdot(v, v).real
        for i, g in enumerate(gens):
            weights[i, j] = (np.vdot(v, g @ v) / nrm).imag
    return coords, weights, kernel


def integer_kernel(mat, denom_tol=1e-9, max_den=64):
    """Integer basis of {n : mat @ n = 0} for a small near-integer matrix."""
    mat = np.asarray(mat, dtype=float)
    rounded = np.round(mat)
    if np.max(np.abs(mat - rounded)) > 1e-6 * max(1.0, np.max(np.abs(mat))):
        raise ValueError("weight matrix is not near-integer")
    rows, cols = rounded.shape
    frac = [[Fraction(int(rounded[i, j])) for j in range(cols)] for i in range(rows)]
    # Gauss-Jordan over the rationals.
    pivots = []
    rank = 0
    for c in range(cols):
        pivot = None
        for r_ in range(rank, rows):
            if frac[r_][c] != 0:
                pivot = r_
                break
        if pivot is None:
            continue
        frac[rank], frac[pivot] = frac[pivot], frac[rank]
        pv = frac[rank][c]
        frac[rank] = [x / pv for x in frac[rank]]
        for r_ in range(rows):
            if r_ != rank and frac[r_][c] != 0:
                f = frac[r_][c]
                frac[r_] = [a - f * b for a, b in zip(frac[r_], frac[rank])]
        pivots.append(c)
        rank += 1
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * cols
        vec[fc] = Fraction(1)
        for r_, pc in enumerate(pivots):
            vec[pc] = -frac[r_][fc]
        denom = 1
        for x in vec:
            denom = denom * x.denominator // np.gcd(denom, x.denominator)
        basis.append(np.array([int(x * denom) for x in vec]))
    return basis
