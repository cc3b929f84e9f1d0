"""Hamiltonian models, conservative flows, and reconstruction equations.

The model base class bundles a symplectic space, a group action with its
quadratic momentum map, and Hamiltonian evaluators (vectorized over
leading batch axes).  Two integrators are provided: a fixed-step
implicit Gauss-Legendre scheme (symplectic, conserves quadratic
momentum maps to solver tolerance) and an adaptive explicit RK45 used
for shooting sensitivities.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp

from .equivariance import MomentumMapQuadratic
from .errors import (
    DegenerateSplit,
    NonFiniteState,
    NotRelativeEquilibrium,
    StepLimitExceeded,
    UnsupportedCase,
)
from .symplectic import Subspace, SymplecticSpace

SYMPLECTIC_SCHEME = "symplectic_implicit_order4"
ADAPTIVE_SCHEME = "adaptive_explicit_order5"


@dataclass
class IntegratorConfig:
    """Scheme selection and tolerances for flow evaluation.

    method optionally overrides the solve_ivp stepper used for the
    adaptive scheme (the default RK45 realizes the named order-5
    scheme; shooting internals use DOP853 for cheap tight tolerances).
    """

    scheme: str = SYMPLECTIC_SCHEME
    step: float = None
    rtol: float = 1e-12
    atol: float = 1e-14
    max_steps: int = 2_000_000
    stage_tol: float = 1e-14
    stage_iterations: int = 100
    store_points: int = 257
    method: str = None

    def __post_init__(self):
        if self.scheme not in (SYMPLECTIC_SCHEME, ADAPTIVE_SCHEME):
            raise ValueError("unknown scheme %r" % self.scheme)
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")

    def other_scheme(self):
        scheme = (
            ADAPTIVE_SCHEME if self.scheme == SYMPLECTIC_SCHEME else SYMPLECTIC_SCHEME
        )
        return IntegratorConfig(
            scheme=scheme,
            step=self.step,
            rtol=self.rtol,
            atol=self.atol,
            max_steps=self.max_steps,
        )


class EquivariantHamiltonianModel:
    """A G-invariant Hamiltonian system on a linear symplectic space.

    Subclasses implement h(v) and grad_h(v), both accepting arrays of
    shape (..., dim).  hess_h is optional (finite differences are used
    otherwise); hessian0() should return the exact d^2 h at the
    equilibrium when available.
    """

    def __init__(self, space, action, name="", params=None):
        self.space = space
        self.action = action
        self.momentum = MomentumMapQuadratic(action)
        self.name = name
        self.params = dict(params or {})
        self._hess0 = None

    # --- evaluators -----------------------------------------------------
    def h(self, v):
        raise NotImplementedError

    def grad_h(self, v):
        raise NotImplementedError

    def hess_h(self, v):
        return finite_difference_hessian(self.grad_h, v)

    def hessian0(self):
        if self._hess0 is None:
            self._hess0 = self.hess_h(np.zeros(self.space.dim))
        return self._hess0

    def admissible(self, v):
        """Domain guard; override for models with restricted charts."""
        return np.ones(np.shape(v)[:-1], dtype=bool) if np.ndim(v) > 1 else True

    # --- generic helpers ------------------------------------------------
    @property
    def dim(self):
        return self.space.dim

    def linearization(self):
        """A = D X_h(0), the linear Hamiltonian vector field at 0."""
        return self.space.poisson @ self.hessian0()

    def augmented(self, xi_coeffs):
        """The model with Hamiltonian h - J^xi (same space and action)."""
        return AugmentedModel(self, xi_coeffs)

    def validate(self, rng=None, n_states=50, scale=0.1, tol_inv=1e-9, tol_grad=1e-6):
        """Sampled G-invariance of h and analytic-vs-FD gradient checks."""
        rng = rng or np.random.default_rng(2024)
        states = scale * rng.standard_normal((n_states, self.dim))
        elements = self.action.sample_elements(8, rng=rng)
        hv = self.h(states)
        href = max(1.0, float(np.max(np.abs(hv))))
        for g in elements:
            moved = states @ g.T
            dh = np.abs(self.h(moved) - hv)
            if np.max(dh) > tol_inv * href:
                raise ValueError(
                    "%s: h is not G-invariant (drift %.3e)" % (self.name, np.max(dh))
                )
        for v in states[: min(n_states, 50)]:
            g_an = self.grad_h(v)
            g_fd = finite_difference_gradient(self.h, v)
            denom = max(1.0, float(np.linalg.norm(g_an)))
            if np.linalg.norm(g_an - g_fd) > tol_grad * denom:
                raise ValueError(
                    "%s: analytic gradient disagrees with finite differences"
                    % self.name
                )
        return True

    def __repr__(self):
        return "%s(dim=%d)" % (self.name or type(self).__name__, self.dim)


class AugmentedModel(EquivariantHamiltonianModel):
    """h^xi = h - J^xi for a fixed algebra element xi."""

    def __init__(self, base, xi_coeffs):
        super().__init__(
            base.space,
            base.action,
            name="%s-augmented" % base.name,
            params=base.params,
        )
        self.base = base
        self.xi_coeffs = np.atleast_1d(np.asarray(xi_coeffs, dtype=float))
        m = self.momentum.component_matrix(self.xi_coeffs)
        self._m_xi = m if m is not None else np.zeros((base.dim, base.dim))

    def h(self, v):
        v = np.asarray(v)
        return self.base.h(v) - np.einsum("...i,ij,...j->...", v, self._m_xi, v)

    def grad_h(self, v):
        v = np.asarray(v)
        return self.base.grad_h(v) - 2.0 * (v @ self._m_xi.T)

    def hess_h(self, v):
        return self.base.hess_h(v) - 2.0 * self._m_xi

    def hessian0(self):
        return self.base.hessian0() - 2.0 * self._m_xi

    def admissible(self, v):
        return self.base.admissible(v)


def finite_difference_gradient(fun, v, step=1e-6):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    scale = max(1.0, float(np.linalg.norm(v)))
    h = step * scale
    for i in range(v.size):
        e = np.zeros_like(v)
        e[i] = h
        out[i] = (fun(v + e) - fun(v - e)) / (2.0 * h)
    return out


def finite_difference_hessian(grad, v, step=1e-6):
    v = np.asarray(v, dtype=float)
    n = v.size
    out = np.zeros((n, n))
    scale = max(1.0, float(np.linalg.norm(v)))
    h = step * scale
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        out[:, i] = (grad(v + e) - grad(v - e)) / (2.0 * h)
    return 0.5 * (out + out.T)


def vector_field(model, v):
    """X_h(v) solving i_X omega = dh; batched over leading axes."""
    grad = model.grad_h(np.asarray(v))
    return grad @ model.space.poisson.T


@dataclass
class FlowResult:
    """Sampled trajectory with conservation series and integrator stats."""

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    momentum: np.ndarray
    steps: int
    rejected: int
    scheme: str

    @property
    def final(self):
        return self.states[-1]

    @property
    def energy_drift(self):
        return float(np.max(np.abs(self.energy - self.energy[0])))

    @property
    def momentum_drift(self):
        if self.momentum.shape[1] == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.momentum - self.momentum[0], axis=1)))


_GL2_A = np.array(
    [
        [0.25, 0.25 - np.sqrt(3.0) / 6.0],
        [0.25 + np.sqrt(3.0) / 6.0, 0.25],
    ]
)
_GL2_B = np.array([0.5, 0.5])


def _gauss_legendre_step(field, y, h, config):
    """One 2-stage Gauss-Legendre step by fixed-point stage iteration."""
    k = np.broadcast_to(field(y), (2, y.size)).copy()
    for _ in range(config.stage_iterations):
        stage_states = y + h * (_GL2_A @ k)
        k_new = field(stage_states)
        delta = float(np.max(np.abs(k_new - k)))
        k = k_new
        if delta <= config.stage_tol * max(1.0, float(np.max(np.abs(k)))):
            break
    else:
        raise NonFiniteState("implicit stage iteration failed to converge")
    return y + h * (_GL2_B @ k)


def _flow_symplectic(model, v0, T, config, default_step):
    field = lambda y: vector_field(model, y)
    step = config.step or default_step
    n_steps = int(np.ceil(abs(T) / step))
    if n_steps > config.max_steps:
        raise StepLimitExceeded(
            "%d steps exceed the configured limit %d" % (n_steps, config.max_steps)
        )
    h = np.sign(T) * abs(T) / max(n_steps, 1)
    stride = max(1, n_steps // max(config.store_points - 1, 1))
    times = [0.0]
    states = [np.asarray(v0, dtype=float).copy()]
    y = states[0].copy()
    for i in range(n_steps):
        y = _gauss_legendre_step(field, y, h, config)
        if not np.all(np.isfinite(y)):
            raise NonFiniteState("state became non-finite at step %d" % (i + 1))
        if not np.all(model.admissible(y[None, :])):
            raise NonFiniteState("state left the model's admissible domain")
        if (i + 1) % stride == 0 or i == n_steps - 1:
            times.append((i + 1) * h)
            states.append(y.copy())
    return np.array(times), np.array(states), n_steps, 0


def _flow_adaptive(model, v0, T, config, t_eval=None):
    sol = solve_ivp(
        lambda t, y: vector_field(model, y),
        (0.0, T),
        np.asarray(v0, dtype=float),
        method=config.method or "RK45",
        rtol=config.rtol,
        atol=config.atol,
        t_eval=t_eval,
        dense_output=False,
    )
    if not sol.success:
        raise NonFiniteState("adaptive integration failed: %s" % sol.message)
    return sol.t, sol.y.T, sol.nfev, int(getattr(sol, "nlu", 0))


def flow(model, v0, T, config=None, t_eval=None):
    """Integrate X_h from v0 for time T under the configured scheme.

    The default symplectic step is T_characteristic / 200 with the
    characteristic time inferred from the linearization when no step is
    given.
    """
    config = config or IntegratorConfig()
    v0 = np.asarray(v0, dtype=float)
    if not np.isfinite(T):
        raise ValueError("T must be finite")
    if config.scheme == SYMPLECTIC_SCHEME:
        default_step = _default_step(model)
        times, states, nsteps, nrej = _flow_symplectic(
            model, v0, T, config, default_step
        )
    else:
        if t_eval is None:
            t_eval = np.linspace(0.0, T, config.store_points)
        times, states, nsteps, nrej = _flow_adaptive(model, v0, T, config, t_eval)
    energy = model.h(states)
    momentum = model.momentum.value(states)
    if momentum.ndim == 1:
        momentum = momentum.reshape(len(states), -1)
    return FlowResult(times, states, energy, momentum, nsteps, nrej, config.scheme)


def _default_step(model):
    try:
        eigs = np.linalg.eigvals(model.linearization())
        w = np.max(np.abs(eigs.imag))
        if w > 0:
            return (2.0 * np.pi / w) / 200.0
    except Exception:
        pass
    return 1e-2


def flow_final(model, v0, T, config=None):
    """Final state only (no sampling overhead beyond the scheme's)."""
    config = config or IntegratorConfig(scheme=ADAPTIVE_SCHEME)
    if config.scheme == SYMPLECTIC_SCHEME:
        return flow(model, v0, T, config).final
    times, states, _, _ = _flow_adaptive(model, v0, T, config, t_eval=[T])
    return states[-1]


def flow_final_batch(model, V0, T, config=None):
    """Final states for a batch of initial conditions, one ODE solve.

    V0 has shape (B, dim); the batched system is integrated as a single
    flattened ODE, which shares step-size control across columns (fine
    for the nearby states used in shooting Jacobians).
    """
    config = config or IntegratorConfig(scheme=ADAPTIVE_SCHEME)
    V0 = np.asarray(V0, dtype=float)
    B, n = V0.shape

    def rhs(t, y):
        return vector_field(model, y.reshape(B, n)).ravel()

    sol = solve_ivp(
        rhs,
        (0.0, T),
        V0.ravel(),
        method=config.method or "RK45",
        rtol=config.rtol,
        atol=config.atol,
        t_eval=[T],
    )
    if not sol.success:
        raise NonFiniteState("batched integration failed: %s" % sol.message)
    return sol.y[:, -1].reshape(B, n)


def augmented_flow(model, xi_coeffs, v0, T, config=None, t_eval=None):
    """Flow of the augmented Hamiltonian h - J^xi."""
    return flow(model.augmented(xi_coeffs), v0, T, config, t_eval=t_eval)


@dataclass
class SymplecticNormalSpaceData:
    """Symplectic normal space and Lie-algebra splittings at a point m.

    Subalgebras are stored as coefficient bases over the action's
    generator basis: g = g_m + m_frak + q_frak (orthogonal columns of
    basis_gm / basis_m / basis_q), with the matching orthogonal
    projections in coefficient space.
    """

    point: np.ndarray
    velocity: np.ndarray
    mu: np.ndarray
    normal_space: Subspace
    restricted_omega: np.ndarray
    basis_gm: np.ndarray
    basis_m: np.ndarray
    basis_q: np.ndarray
    proj_gm: np.ndarray
    proj_m: np.ndarray
    proj_q: np.ndarray
    inner_product: np.ndarray

    @property
    def dim(self):
        return self.normal_space.dim


def _coefficient_complement(inside, of, tol=1e-10):
    """Orthogonal complement of span(inside) within span(of) (columns)."""
    if of.shape[1] == 0:
        return np.zeros((of.shape[0], 0))
    if inside.shape[1] == 0:
        return of
    proj = of - inside @ (inside.T @ of)
    u, s, _ = np.linalg.svd(proj, full_matrices=False)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return u[:, :rank]


def _coadjoint_isotropy_basis(action, mu, tol=1e-10):
    """Coefficient basis of g_mu for the supported group kinds."""
    kind = action.group.kind
    d = action.group.dim
    if d == 0:
        return np.zeros((0, 0))
    if action.group.is_abelian:
        return np.eye(d)
    if kind == "SO3":
        nrm = np.linalg.norm(mu)
        if nrm <= tol:
            return np.eye(3)
        return (mu / nrm).reshape(3, 1)
    raise UnsupportedCase("coadjoint isotropy for %s" % kind)


def symplectic_normal_space(model, m, xi_coeffs, tol_re=1e-8, n_average=32):
    """Symplectic normal space V_m at a relative equilibrium m.

    V_m is the complement of T_m(G_mu . m) inside ker T_m J, orthogonal
    with respect to a G_m-invariant inner product obtained by averaging
    the Euclidean product over n_average sampled G_m elements.
    """
    m = np.asarray(m, dtype=float)
    xi_coeffs = np.atleast_1d(np.asarray(xi_coeffs, dtype=float))
    action = model.action
    n = model.dim
    xi_m = action.infinitesimal(xi_coeffs, m) if action.group.dim else np.zeros(n)
    defect = np.linalg.norm(vector_field(model, m) - xi_m)
    if defect > tol_re * max(1.0, np.linalg.norm(m)):
        raise NotRelativeEquilibrium(
            "||X_h(m) - xi.m|| = %.3e exceeds tolerance" % defect
        )
    mu = model.momentum.value(m)

    d = action.group.dim
    if d:
        gen_at_m = np.stack([g @ m for g in action.generators], axis=1)  # (n, d)
        _, s, vt = np.linalg.svd(gen_at_m)
        scale = s[0] if s.size and s[0] > 0 else 1.0
        rank = int(np.sum(s > 1e-10 * scale))
        basis_gm = vt[rank:].T  # coefficient vectors killing m
    else:
        gen_at_m = np.zeros((n, 0))
        basis_gm = np.zeros((0, 0))

    basis_gmu = _coadjoint_isotropy_basis(action, mu)
    basis_m = _coefficient_complement(basis_gm, basis_gmu)
    basis_q = _coefficient_complement(
        np.hstack([basis_gm, basis_m]) if d else basis_gm, np.eye(d) if d else basis_gm
    )

    def proj(basis):
        if basis.size == 0:
            return np.zeros((d, d))
        return basis @ basis.T

    # G_m-invariant inner product by group averaging.
    C = np.eye(n)
    if basis_gm.size and basis_gm.shape[1] > 0:
        samples = []
        if basis_gm.shape[1] == 1:
            thetas = np.linspace(0.0, 2.0 * np.pi, n_average, endpoint=False)
            samples = [
                scipy.linalg.expm(t * action.algebra_element(basis_gm[:, 0]))
                for t in thetas
            ]
        else:
            rng = np.random.default_rng(11)
            for _ in range(n_average):
                c = basis_gm @ rng.uniform(0, 2 * np.pi, basis_gm.shape[1])
                samples.append(scipy.linalg.expm(action.algebra_element(c)))
        C = sum(g.T @ g for g in samples) / len(samples)

    # ker T_m J.
    tj = model.momentum.tangent_map(m) if d else np.zeros((0, n))
    if tj.shape[0]:
        _, s, vt = np.linalg.svd(tj)
        scale = s[0] if s.size and s[0] > 0 else 1.0
        rank_j = int(np.sum(s > 1e-10 * max(scale, 1e-300)))
        ker_j = vt[rank_j:].T
    else:
        ker_j = np.eye(n)

    # Tangent of the G_mu-orbit through m.
    if d and basis_gmu.shape[1]:
        tangent = gen_at_m @ basis_gmu
        tangent = Subspace.from_spanning(tangent).basis
    else:
        tangent = np.zeros((n, 0))

    if tangent.shape[1]:
        cross = tangent.T @ C @ ker_j
        _, s, vt = np.linalg.svd(cross)
        scale = s[0] if s.size and s[0] > 0 else 1.0
        rank_c = int(np.sum(s > 1e-10 * max(scale, 1e-300)))
        z_basis = vt[rank_c:].T
        v_cols = ker_j @ z_basis
    else:
        v_cols = ker_j
    normal = Subspace.from_spanning(v_cols)

    omega_v = normal.basis.T @ model.space.omega @ normal.basis
    if normal.dim:
        sv = np.linalg.svd(omega_v, compute_uv=False)
        if sv[-1] <= 1e-10 * max(sv[0], 1e-300):
            raise DegenerateSplit("omega restricts degenerately to V_m")

    return SymplecticNormalSpaceData(
        point=m,
        velocity=xi_coeffs,
        mu=mu,
        normal_space=normal,
        restricted_omega=omega_v,
        basis_gm=basis_gm if d else np.zeros((0, 0)),
        basis_m=basis_m if d else np.zeros((0, 0)),
        basis_q=basis_q if d else np.zeros((0, 0)),
        proj_gm=proj(basis_gm) if d else np.zeros((0, 0)),
        proj_m=proj(basis_m) if d else np.zeros((0, 0)),
        proj_q=proj(basis_q) if d else np.zeros((0, 0)),
        inner_product=C,
    )


class _ChartHamiltonian:
    """First-order local chart for h o pi on m* x V_m.

    Evaluates h(m + B v + L rho) where L is the minimal-norm momentum
    lift (T_m J o L = identity on the m*-directions).  Exact for the
    built-in verification cases (trivial G_m or rho = 0); first order
    otherwise.
    """

    def __init__(self, model, nsd):
        self.model = model
        self.m = nsd.point
        self.B = nsd.normal_space.basis
        d = model.action.group.dim
        if d and nsd.basis_m.shape[1]:
            tj = model.momentum.tangent_map(self.m)
            self.L = np.linalg.pinv(tj) @ nsd.basis_m
        else:
            self.L = np.zeros((model.dim, 0))

    def point(self, rho, v):
        rho = np.atleast_1d(rho)
        return self.m + self.B @ np.asarray(v) + (self.L @ rho if self.L.size else 0.0)

    def value(self, rho, v):
        return float(self.model.h(self.point(rho, v)))

    def d_v(self, rho, v):
        return self.B.T @ self.model.grad_h(self.point(rho, v))

    def d_rho(self, rho, v):
        if not self.L.size:
            return np.zeros(0)
        return self.L.T @ self.model.grad_h(self.point(rho, v))


@dataclass
class BundleTrajectory:
    """Trajectory in G x m* x V_m coordinates plus conservation data.

    group_coeffs holds exp-coordinates a(t) with g(t) = g0 exp(a(t));
    all supported cases keep a(t) inside the abelian subalgebra g_mu so
    the quadrature is exact.
    """

    times: np.ndarray
    group_coeffs: np.ndarray
    rho: np.ndarray
    normal_states: np.ndarray
    momentum_series: np.ndarray

    @property
    def momentum_drift(self):
        if self.momentum_series.shape[1] == 0:
            return 0.0
        return float(
            np.max(np.linalg.norm(self.momentum_series - self.momentum_series[0], axis=1))
        )


def _case_tag(model, nsd):
    group = model.action.group
    if group.is_abelian:
        return "abelian"
    if nsd.basis_m.shape[1] == 0:
        return "gm-equals-gmu"
    if group.kind == "SO3" and np.linalg.norm(nsd.mu) > 1e-12:
        return "split-abelian-gmu"
    raise UnsupportedCase(
        "non-Abelian reconstruction with nonvanishing eta/psi is not supported"
    )


def bundle_flow_abelian(model, nsd, state0, T, config=None, h_pi=None):
    """Integrate the reduced (bundle) equations in the Abelian cases.

    state0 = (a0, rho0, v0): exp-coordinates of the initial group
    element, the (constant) m*-component, and V_m coordinates.  The
    reduced equations are rho' = 0, v' = Hamiltonian flow of
    h o pi(rho0, .) on (V_m, omega|V_m), and g recovered by quadrature
    of the m-component of dh.  The reconstructed momentum
    Ad*_{g^{-1}}(mu + rho + J_{V_m}(v)) is returned as a series.
    """
    tag = _case_tag(model, nsd)
    config = config or IntegratorConfig(scheme=ADAPTIVE_SCHEME, rtol=1e-11, atol=1e-13)
    a0, rho0, v0 = state0
    a0 = np.atleast_1d(np.asarray(a0, dtype=float))
    rho0 = np.atleast_1d(np.asarray(rho0, dtype=float))
    v0 = np.asarray(v0, dtype=float)
    k = nsd.dim
    chart = h_pi or _ChartHamiltonian(model, nsd)
    if tag == "gm-equals-gmu" and rho0.size and np.linalg.norm(rho0) > 0:
        raise UnsupportedCase("m* = 0 in the g_m = g_mu case; rho0 must vanish")

    omega_v = nsd.restricted_omega
    poisson_v = -np.linalg.inv(omega_v) if k else np.zeros((0, 0))
    n_m = nsd.basis_m.shape[1]

    def rhs(t, y):
        v = y[:k]
        dv = poisson_v @ chart.d_v(rho0, v)
        da = chart.d_rho(rho0, v) if n_m else np.zeros(0)
        return np.concatenate([dv, da])

    t_eval = np.linspace(0.0, T, config.store_points)
    sol = solve_ivp(
        rhs,
        (0.0, T),
        np.concatenate([v0, np.zeros(n_m)]),
        method="DOP853",
        rtol=config.rtol,
        atol=config.atol,
        t_eval=t_eval,
    )
    if not sol.success:
        raise NonFiniteState("bundle integration failed: %s" % sol.message)
    v_traj = sol.y[:k].T
    a_m = sol.y[k:].T  # integral of D_rho(h o pi) in m-frak coordinates

    d = model.action.group.dim
    group_coeffs = np.tile(a0, (len(t_eval), 1)) if d else np.zeros((len(t_eval), 0))
    if n_m:
        group_coeffs = group_coeffs + a_m @ nsd.basis_m.T

    # Momentum of the G_m-action on V_m, embedded in g-coefficients.
    n_gm = nsd.basis_gm.shape[1] if nsd.basis_gm.size else 0
    mom_series = np.zeros((len(t_eval), d))
    for i, v in enumerate(v_traj):
        total = nsd.mu.copy() if d else np.zeros(0)
        if rho0.size and n_m:
            total = total + nsd.basis_m @ rho0
        if n_gm:
            for j in range(n_gm):
                gj = sum(
                    c * M for c, M in zip(nsd.basis_gm[:, j], model.action.generators)
                )
                mj = -0.5 * model.space.omega @ gj
                mj = 0.5 * (mj + mj.T)
                w = nsd.normal_space.embed(v)
                total = total + nsd.basis_gm[:, j] * float(w @ mj @ w)
        if d:
            mom_series[i] = _coadjoint_inverse(model.action, group_coeffs[i]) @ total
    return BundleTrajectory(
        times=t_eval,
        group_coeffs=group_coeffs,
        rho=rho0,
        normal_states=v_traj,
        momentum_series=mom_series,
    )


def _coadjoint_inverse(action, coeffs):
    """Matrix of Ad*_{g^{-1}} on coefficient space for g = exp(coeffs)."""
    d = action.group.dim
    if action.group.is_abelian or d == 0:
        return np.eye(d)
    if action.group.kind == "SO3":
        from .equivariance import so3_generators

        hat = sum(c * L for c, L in zip(coeffs, so3_generators()))
        return scipy.linalg.expm(hat)
    raise UnsupportedCase("coadjoint action for %s" % action.group.kind)
