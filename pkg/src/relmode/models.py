"""Built-in model instances: perturbed spherical pendulum, 3-d spring
pendulum, an SO(3)-isotropic oscillator, and harmonic test fixtures.

All models are expressed in displacement coordinates around their
stable equilibrium (so the equilibrium sits at the origin and h(0) = 0)
with the equilibrium position recorded in params.  Evaluators are
vectorized over leading batch axes.
"""

import numpy as np
import scipy.linalg

from .dynamics import EquivariantHamiltonianModel
from .equivariance import GroupDescriptor, LinearAction, so3_generators
from .errors import InvalidPerturbation
from .symplectic import SymplecticSpace

_JROT = np.array([[0.0, -1.0], [1.0, 0.0]])


def _diagonal_circle_action_4d():
    """S^1 rotating (x, y) and (p_x, p_y) together on R^4."""
    xi = np.zeros((4, 4))
    xi[:2, :2] = _JROT
    xi[2:, 2:] = _JROT
    return LinearAction(GroupDescriptor("Circle"), SymplecticSpace(4), [xi])


def _z_axis_circle_action_6d():
    """S^1 rotating (x, y) and (p_x, p_y) about the z-axis on R^6."""
    xi = np.zeros((6, 6))
    xi[:2, :2] = _JROT
    xi[3:5, 3:5] = _JROT
    return LinearAction(GroupDescriptor("Circle"), SymplecticSpace(6), [xi])


def _poly_eval(coeffs, *args):
    """Evaluate a {exponent-tuple: coefficient} polynomial and its partials.

    Returns (value, [d/d arg_i ...]) with everything vectorized over the
    broadcast shape of the argument arrays.
    """
    shape = np.broadcast_shapes(*(np.shape(a) for a in args)) if args else ()
    value = np.zeros(shape)
    partials = [np.zeros(shape) for _ in args]
    for expo, c in coeffs.items():
        term = np.full(shape, float(c))
        for a, e in zip(args, expo):
            if e:
                term = term * np.asarray(a) ** e
        value = value + term
        for i, (a, e) in enumerate(zip(args, expo)):
            if not e:
                continue
            dterm = np.full(shape, float(c) * e)
            for j, (aj, ej) in enumerate(zip(args, expo)):
                ejj = ej - 1 if j == i else ej
                if ejj:
                    dterm = dterm * np.asarray(aj) ** ejj
            partials[i] = partials[i] + dterm
    return value, partials


class SphericalPendulum(EquivariantHamiltonianModel):
    """Nonlinearly perturbed spherical pendulum in local (x, y) chart.

    h = |p|^2/(2m) - (x p_x + y p_y)^2/(2 m l^2) - m g sqrt(l^2 - x^2 - y^2)
        + phi(x^2+y^2, p_x^2+p_y^2, x p_x + y p_y) + m g l,

    with the perturbation phi a polynomial of total order >= 2 in its
    three (quadratic) arguments.  The chart is guarded at
    x^2 + y^2 < 0.98 l^2.
    """

    def __init__(self, m=1.0, l=1.0, g=1.0, pert=None):
        if min(m, l, g) <= 0:
            raise ValueError("m, l, g must be positive")
        pert = {(0, 0, 2): 0.1} if pert is None else dict(pert)
        for expo in pert:
            if len(expo) != 3 or sum(expo) < 2:
                raise InvalidPerturbation(
                    "phi term %s has total order < 2 in (x^2+y^2, |p|^2, x.p)"
                    % (expo,)
                )
        super().__init__(
            SymplecticSpace(4),
            _diagonal_circle_action_4d(),
            name="spherical_pendulum",
            params={"m": m, "l": l, "g": g, "pert": dict(pert),
                    "equilibrium": [0.0, 0.0, 0.0, 0.0]},
        )
        self.m = m
        self.l = l
        self.g = g
        self.pert = pert
        self._hess0 = np.diag([m * g / l, m * g / l, 1.0 / m, 1.0 / m])

    def _parts(self, v):
        x, y, px, py = (v[..., i] for i in range(4))
        a = x * x + y * y
        b = px * px + py * py
        s = x * px + y * py
        return x, y, px, py, a, b, s

    def admissible(self, v):
        v = np.asarray(v)
        a = v[..., 0] ** 2 + v[..., 1] ** 2
        return a < 0.98 * self.l**2

    def h(self, v):
        v = np.asarray(v, dtype=float)
        x, y, px, py, a, b, s = self._parts(v)
        phi, _ = _poly_eval(self.pert, a, b, s)
        root = np.sqrt(self.l**2 - a)
        return (
            b / (2.0 * self.m)
            - s * s / (2.0 * self.m * self.l**2)
            - self.m * self.g * root
            + phi
            + self.m * self.g * self.l
        )

    def grad_h(self, v):
        v = np.asarray(v, dtype=float)
        x, y, px, py, a, b, s = self._parts(v)
        _, (phi_a, phi_b, phi_s) = _poly_eval(self.pert, a, b, s)
        root = np.sqrt(self.l**2 - a)
        cs = s / (self.m * self.l**2)
        grav = self.m * self.g / root
        out = np.empty_like(v)
        out[..., 0] = -cs * px + grav * x + 2.0 * phi_a * x + phi_s * px
        out[..., 1] = -cs * py + grav * y + 2.0 * phi_a * y + phi_s * py
        out[..., 2] = px / self.m - cs * x + 2.0 * phi_b * px + phi_s * x
        out[..., 3] = py / self.m - cs * y + 2.0 * phi_b * py + phi_s * y
        return out


class SpringPendulum3D(EquivariantHamiltonianModel):
    """Spring pendulum in space, in displacement coordinates.

    Raw coordinates (x, y, z, p): h = |p|^2/2 - m g z + sigma with
    sigma = (k/2)(x^2 + y^2 + (z-l)^2) + higher terms; the stable
    equilibrium sits at (0, 0, l + m g / k, 0, 0, 0) and the model works
    in v = (x, y, z - z*, p).  Extra sigma monomials
    u1^i u2^j z^a pz^b (u1 = x^2+y^2+(z-l)^2, u2 = px^2+py^2) must have
    i + j >= 2 or a + b >= 3.
    """

    def __init__(self, m=1.0, l=1.0, g=1.0, k=1.0, sigma=None):
        if min(m, l, g, k) <= 0:
            raise ValueError("m, l, g, k must be positive")
        sigma = {(0, 2, 0, 0): 0.05, (0, 0, 0, 4): 0.04} if sigma is None else dict(sigma)
        for expo in sigma:
            if len(expo) != 4:
                raise InvalidPerturbation("sigma exponents must be 4-tuples")
            i, j, a, b = expo
            if not (i + j >= 2 or a + b >= 3):
                raise InvalidPerturbation(
                    "sigma term %s is too low order (needs order >= 2 in "
                    "(u1, u2) or > 2 in (z, pz))" % (expo,)
                )
        z_star = l + g * m / k
        super().__init__(
            SymplecticSpace(6),
            _z_axis_circle_action_6d(),
            name="spring_pendulum_3d",
            params={"m": m, "l": l, "g": g, "k": k, "sigma": dict(sigma),
                    "equilibrium": [0.0, 0.0, z_star, 0.0, 0.0, 0.0]},
        )
        self.m, self.l, self.g, self.k = m, l, g, k
        self.sigma = sigma
        self.z_star = z_star
        self.beta = g * m / k
        self._h0 = self._h_raw_shiftless(np.zeros(6))
        self._hess0 = np.diag([k, k, k, 1.0, 1.0, 1.0])

    def _args(self, v):
        x, y, zeta, px, py, pz = (v[..., i] for i in range(6))
        u1 = x * x + y * y + (zeta + self.beta) ** 2
        u2 = px * px + py * py
        z = zeta + self.z_star
        return x, y, zeta, px, py, pz, u1, u2, z

    def _h_raw_shiftless(self, v):
        v = np.asarray(v, dtype=float)
        x, y, zeta, px, py, pz, u1, u2, z = self._args(v)
        extra, _ = _poly_eval(self.sigma, u1, u2, z, pz)
        return (
            0.5 * (u2 + pz * pz)
            - self.m * self.g * z
            + 0.5 * self.k * u1
            + extra
        )

    def h(self, v):
        return self._h_raw_shiftless(v) - self._h0

    def grad_h(self, v):
        v = np.asarray(v, dtype=float)
        x, y, zeta, px, py, pz, u1, u2, z = self._args(v)
        _, (s1, s2, s3, s4) = _poly_eval(self.sigma, u1, u2, z, pz)
        out = np.empty_like(v)
        out[..., 0] = (self.k + 2.0 * s1) * x
        out[..., 1] = (self.k + 2.0 * s1) * y
        out[..., 2] = (self.k + 2.0 * s1) * (zeta + self.beta) - self.m * self.g + s3
        out[..., 3] = px + 2.0 * s2 * px
        out[..., 4] = py + 2.0 * s2 * py
        out[..., 5] = pz + s4
        return out


class SO3Isotropic(EquivariantHamiltonianModel):
    """Isotropic oscillator on R^3 x R^3 with diagonal SO(3) symmetry.

    h = a|p|^2 + b|q|^2 + f(|p|^2, |q|^2, q.p) with f of total order
    >= 2 in its arguments; J(q, p) = q x p.
    """

    def __init__(self, a=0.5, b=0.5, f=None):
        if min(a, b) <= 0:
            raise ValueError("a, b must be positive")
        f = {(0, 0, 2): 0.05} if f is None else dict(f)
        for expo in f:
            if len(expo) != 3 or sum(expo) < 2:
                raise InvalidPerturbation(
                    "f term %s has total order < 2 in (|p|^2, |q|^2, q.p)" % (expo,)
                )
        gens = [scipy.linalg.block_diag(L, L) for L in so3_generators()]
        action = LinearAction(GroupDescriptor("SO3"), SymplecticSpace(6), gens)
        super().__init__(
            action.space,
            action,
            name="so3_isotropic",
            params={"a": a, "b": b, "f": dict(f),
                    "equilibrium": [0.0] * 6},
        )
        self.a, self.b = a, b
        self.f = f
        self._hess0 = np.diag([2 * b] * 3 + [2 * a] * 3)

    def _args(self, v):
        q = v[..., :3]
        p = v[..., 3:]
        u1 = np.sum(p * p, axis=-1)
        u2 = np.sum(q * q, axis=-1)
        u3 = np.sum(q * p, axis=-1)
        return q, p, u1, u2, u3

    def h(self, v):
        v = np.asarray(v, dtype=float)
        q, p, u1, u2, u3 = self._args(v)
        fval, _ = _poly_eval(self.f, u1, u2, u3)
        return self.a * u1 + self.b * u2 + fval

    def grad_h(self, v):
        v = np.asarray(v, dtype=float)
        q, p, u1, u2, u3 = self._args(v)
        _, (f1, f2, f3) = _poly_eval(self.f, u1, u2, u3)
        out = np.empty_like(v)
        out[..., :3] = (2.0 * (self.b + f2))[..., None] * q + f3[..., None] * p
        out[..., 3:] = (2.0 * (self.a + f1))[..., None] * p + f3[..., None] * q
        return out


class HarmonicFixture(EquivariantHamiltonianModel):
    """Decoupled oscillators with an optional quartic coupling.

    h = sum_j nu_j (q_j^2 + p_j^2)/2 + coupling * (sum_j q_j^2)^2.
    Pure-quadratic fixtures (coupling = 0) are radial to all orders.
    """

    def __init__(self, frequencies=(1.0, 1.0), coupling=0.0):
        freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
        if np.any(freqs <= 0):
            raise ValueError("frequencies must be positive")
        n = len(freqs)
        space = SymplecticSpace(2 * n)
        action = LinearAction(GroupDescriptor("Trivial"), space, [])
        super().__init__(
            space,
            action,
            name="harmonic_fixture",
            params={"frequencies": list(map(float, freqs)),
                    "coupling": float(coupling),
                    "equilibrium": [0.0] * (2 * n)},
        )
        self.frequencies = freqs
        self.coupling = float(coupling)
        self.n = n
        self._hess0 = np.diag(np.concatenate([freqs, freqs]))

    def h(self, v):
        v = np.asarray(v, dtype=float)
        q = v[..., : self.n]
        p = v[..., self.n :]
        quad = 0.5 * np.sum(self.frequencies * (q * q + p * p), axis=-1)
        if self.coupling:
            quad = quad + self.coupling * np.sum(q * q, axis=-1) ** 2
        return quad

    def grad_h(self, v):
        v = np.asarray(v, dtype=float)
        q = v[..., : self.n]
        p = v[..., self.n :]
        out = np.empty_like(v)
        out[..., : self.n] = self.frequencies * q
        out[..., self.n :] = self.frequencies * p
        if self.coupling:
            out[..., : self.n] += 4.0 * self.coupling * np.sum(q * q, axis=-1)[..., None] * q
        return out


def spherical_pendulum(m=1.0, l=1.0, g=1.0, pert=None, validate=True):
    model = SphericalPendulum(m=m, l=l, g=g, pert=pert)
    if validate:
        model.validate(scale=0.1)
    return model


def spring_pendulum_3d(m=1.0, l=1.0, g=1.0, k=1.0, sigma=None, validate=True):
    model = SpringPendulum3D(m=m, l=l, g=g, k=k, sigma=sigma)
    if validate:
        model.validate(scale=0.1)
    return model


def so3_isotropic(a=0.5, b=0.5, f=None, validate=True):
    model = SO3Isotropic(a=a, b=b, f=f)
    if validate:
        model.validate(scale=0.1)
    return model


def harmonic_fixture(frequencies=(1.0, 1.0), coupling=0.0, validate=True):
    model = HarmonicFixture(frequencies=frequencies, coupling=coupling)
    if validate:
        model.validate(scale=0.1)
    return model


MODEL_BUILDERS = {
    "spherical_pendulum": spherical_pendulum,
    "spring_pendulum_3d": spring_pendulum_3d,
    "so3_isotropic": so3_isotropic,
    "harmonic_fixture": harmonic_fixture,
}


def build_model(name, params=None, validate=True):
    """Construct a built-in model by name from a parameter dict."""
    if name not in MODEL_BUILDERS:
        raise KeyError(
            "unknown model %r (available: %s)" % (name, sorted(MODEL_BUILDERS))
        )
    params = dict(params or {})
    # JSON configs carry perturbation keys as lists; normalize to tuples.
    for key in ("pert", "sigma", "f"):
        if key in params and params[key] is not None:
            params[key] = {
                tuple(int(e) for e in _parse_expo(expo)): float(c)
                for expo, c in params[key].items()
            }
    return MODEL_BUILDERS[name](**params, validate=validate)


def _parse_expo(expo):
    if isinstance(expo, (tuple, list)):
        return expo
    return [tok for tok in str(expo).replace(",", " ").split() if tok]


def model_schemas():
    """Parameter schema dump for the CLI's list-models command."""
    return {
        "spherical_pendulum": {
            "params": {"m": 1.0, "l": 1.0, "g": 1.0},
            "perturbation": {
                "key": "pert",
                "arguments": ["x^2+y^2", "px^2+py^2", "x*px+y*py"],
                "default": {"0 0 2": 0.1},
                "constraint": "total order >= 2",
            },
            "group": "Circle",
            "dim": 4,
        },
        "spring_pendulum_3d": {
            "params": {"m": 1.0, "l": 1.0, "g": 1.0, "k": 1.0},
            "perturbation": {
                "key": "sigma",
                "arguments": ["x^2+y^2+(z-l)^2", "px^2+py^2", "z", "pz"],
                "default": {"0 2 0 0": 0.05, "0 0 0 4": 0.04},
                "constraint": "order >= 2 in (u1,u2) or > 2 in (z,pz)",
            },
            "group": "Circle",
            "dim": 6,
        },
        "so3_isotropic": {
            "params": {"a": 0.5, "b": 0.5},
            "perturbation": {
                "key": "f",
                "arguments": ["|p|^2", "|q|^2", "q.p"],
                "default": {"0 0 2": 0.05},
                "constraint": "total order >= 2",
            },
            "group": "SO3",
            "dim": 6,
        },
        "harmonic_fixture": {
            "params": {"frequencies": [1.0, 1.0], "coupling": 0.0},
            "perturbation": None,
            "group": "Trivial",
            "dim": "2 * len(frequencies)",
        },
    }
