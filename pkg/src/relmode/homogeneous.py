"""Homogeneous polynomial representation with exact derivatives.

Degree-k Taylor ray coefficients of a smooth Hamiltonian are
homogeneous polynomials; fitting them once in a monomial basis makes
the search objectives cheap and their gradients/Hessians exact.
"""

from itertools import combinations_with_replacement

import numpy as np


def homogeneous_exponents(n_vars, degree):
    """All exponent tuples of total degree `degree` in n_vars variables."""
    out = []
    for combo in combinations_with_replacement(range(n_vars), degree):
        e = [0] * n_vars
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return out


class HomogeneousPolynomial:
    """p(u) = sum_m coeffs[m] * prod_i u_i^exponents[m, i]."""

    def __init__(self, exponents, coeffs):
        self.exponents = np.asarray(exponents, dtype=int)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.n_vars = self.exponents.shape[1]
        self.degree = int(self.exponents[0].sum()) if len(self.exponents) else 0
        self._grad_polys = None
        self._hess_polys = None

    # --- evaluation ------------------------------------------------------
    def value(self, u):
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        pts = u[None, :] if single else u.reshape(-1, self.n_vars)
        mono = np.prod(
            pts[:, None, :] ** self.exponents[None, :, :], axis=2
        )
        vals = mono @ self.coeffs
        if single:
            return float(vals[0])
        return vals.reshape(u.shape[:-1])

    def _build_grad(self):
        polys = []
        for i in range(self.n_vars):
            mask = self.exponents[:, i] > 0
            exps = self.exponents[mask].copy()
            cfs = self.coeffs[mask] * exps[:, i]
            exps[:, i] -= 1
            polys.append(HomogeneousPolynomial(exps, cfs) if len(cfs) else None)
        return polys

    def grad(self, u):
        if self._grad_polys is None:
            self._grad_polys = self._build_grad()
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        pts = u[None, :] if single else u
        out = np.zeros(pts.shape)
        for i, p in enumerate(self._grad_polys):
            if p is not None:
                out[..., i] = p.value(pts)
        return out[0] if single else out

    def hess(self, u):
        if self._grad_polys is None:
            self._grad_polys = self._build_grad()
        if self._hess_polys is None:
            self._hess_polys = [
                (p._build_grad() if p is not None else None) for p in self._grad_polys
            ]
        u = np.asarray(u, dtype=float)
        n = self.n_vars
        out = np.zeros((n, n))
        for i, row in enumerate(self._hess_polys):
            if row is None:
                continue
            for j, p in enumerate(row):
                if p is not None:
                    out[i, j] = p.value(u)
        return 0.5 * (out + out.T)

    def compose_linear(self, M):
        """The polynomial u -> p(M u), refit on deterministic nodes."""
        nodes = _fit_nodes(self.n_vars, len(self.coeffs))
        vals = self.value(nodes @ np.asarray(M).T)
        return fit_homogeneous_values(nodes, vals, self.n_vars, self.degree)

    def averaged_over(self, rotations):
        """Average of p over a list of linear maps (e.g. a circle orbit)."""
        nodes = _fit_nodes(self.n_vars, len(self.coeffs))
        vals = np.zeros(len(nodes))
        for R in rotations:
            vals += self.value(nodes @ np.asarray(R).T)
        vals /= len(rotations)
        return fit_homogeneous_values(nodes, vals, self.n_vars, self.degree)


def _fit_nodes(n_vars, n_terms, oversample=3, seed=1729):
    rng = np.random.default_rng(seed + 65537 * n_vars + n_terms)
    pts = rng.standard_normal((oversample * n_terms + 8, n_vars))
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def fit_homogeneous_values(points, values, n_vars, degree):
    """Least-squares fit of a homogeneous polynomial to point values."""
    exps = np.array(homogeneous_exponents(n_vars, degree), dtype=int)
    mono = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
    coeffs, *_ = np.linalg.lstsq(mono, values, rcond=None)
    return HomogeneousPolynomial(exps, coeffs)


def fit_homogeneous(fun, n_vars, degree, oversample=3, seed=1729):
    """Fit from a batched callable fun((M, n_vars)) -> (M,).

    Returns (polynomial, max holdout error on fresh directions).
    """
    n_terms = len(homogeneous_exponents(n_vars, degree))
    nodes = _fit_nodes(n_vars, n_terms, oversample=oversample, seed=seed)
    poly = fit_homogeneous_values(nodes, np.asarray(fun(nodes)), n_vars, degree)
    rng = np.random.default_rng(seed + 999)
    hold = rng.standard_normal((64, n_vars))
    hold /= np.linalg.norm(hold, axis=1, keepdims=True)
    err = float(np.max(np.abs(poly.value(hold) - np.asarray(fun(hold)))))
    return poly, err
