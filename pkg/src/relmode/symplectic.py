"""Linear symplectic algebra.

Symplectic forms, infinitesimally symplectic maps and their
Jordan-Chevalley decomposition, Krein definiteness checks, resonance
spaces of a linear Hamiltonian vector field, quadratic forms, and
restriction of all of these to subspaces.

Conventions (fixed once for the whole package): the form is
omega(u, v) = u @ Omega @ v with the canonical matrix
Omega = [[0, I], [-I, 0]] in (q, p) ordering, and the Hamiltonian
vector field solving i_X omega = dh is X = (dh/dp, -dh/dq), i.e.
X = -Omega^{-1} grad h.
"""

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateForm,
    DegenerateRestriction,
    FrequencyNotInSpectrum,
    IllConditionedSpectrum,
    KreinViolation,
    NotInfinitesimallySymplectic,
    NotInvariant,
)


def canonical_omega(dim):
    """Canonical symplectic matrix [[0, I], [-I, 0]] in (q, p) ordering."""
    if dim % 2:
        raise ValueError("symplectic dimension must be even, got %d" % dim)
    n = dim // 2
    omega = np.zeros((dim, dim))
    omega[:n, n:] = np.eye(n)
    omega[n:, :n] = -np.eye(n)
    return omega


class SymplecticSpace:
    """A real symplectic vector space (R^dim, omega).

    Parameters
    ----------
    dim : int
        Even dimension.
    omega : (dim, dim) ndarray, optional
        Antisymmetric nondegenerate form matrix; defaults to the
        canonical block form.  User-supplied forms are validated, never
        silently fixed.
    """

    def __init__(self, dim, omega=None):
        if dim <= 0 or dim % 2:
            raise ValueError("dim must be an even positive integer")
        self.dim = dim
        if omega is None:
            self.omega = canonical_omega(dim)
            self.is_canonical = True
        else:
            omega = np.asarray(omega, dtype=float)
            if omega.shape != (dim, dim):
                raise ValueError("omega has wrong shape")
            asym = np.linalg.norm(omega + omega.T)
            if asym > 1e-12 * max(1.0, np.linalg.norm(omega)):
                raise ValueError("omega is not antisymmetric (residual %.3e)" % asym)
            sv = np.linalg.svd(omega, compute_uv=False)
            if sv[-1] <= 1e-10 * sv[0]:
                raise ValueError("omega is degenerate")
            self.omega = omega
            self.is_canonical = bool(
                np.allclose(omega, canonical_omega(dim), atol=1e-14)
            )
        # Poisson matrix: X_h = poisson @ grad h.
        self.poisson = -np.linalg.inv(self.omega)

    def form(self, u, v):
        """omega(u, v)."""
        return float(np.asarray(u) @ self.omega @ np.asarray(v))

    def hamiltonian_field_matrix(self, hess):
        """Linear field X of the quadratic Hamiltonian v -> v@hess@v/2."""
        return self.poisson @ np.asarray(hess)

    def __repr__(self):
        tag = "canonical" if self.is_canonical else "general"
        return "SymplecticSpace(dim=%d, %s)" % (self.dim, tag)


class Subspace:
    """An orthonormal-basis subspace of R^parent_dim.

    basis is (parent_dim, dim) with orthonormal columns (checked to 1e-12).
    """

    def __init__(self, basis, parent_dim=None):
        basis = np.atleast_2d(np.asarray(basis, dtype=float))
        if basis.ndim != 2:
            raise ValueError("basis must be a 2-d array of column vectors")
        self.basis = basis
        self.parent_dim = basis.shape[0] if parent_dim is None else parent_dim
        if basis.shape[0] != self.parent_dim:
            raise ValueError("basis rows do not match parent dimension")
        self.dim = basis.shape[1]
        if self.dim:
            gram = basis.T @ basis
            if np.linalg.norm(gram - np.eye(self.dim)) > 1e-12 * self.dim:
                raise ValueError("basis columns are not orthonormal")

    @classmethod
    def from_spanning(cls, vectors, tol=1e-10):
        """Orthonormalize a (possibly rank-deficient) spanning set."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))
        if vectors.size == 0:
            return cls(np.zeros((vectors.shape[0], 0)), parent_dim=vectors.shape[0])
        u, s, _ = np.linalg.svd(vectors, full_matrices=False)
        rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
        return cls(u[:, :rank], parent_dim=vectors.shape[0])

    def project(self, v):
        """Coordinates of v in the subspace basis."""
        return self.basis.T @ np.asarray(v)

    def embed(self, y):
        """Ambient vector of subspace coordinates y."""
        return self.basis @ np.asarray(y)

    def contains(self, v, tol=1e-9):
        v = np.asarray(v)
        resid = v - self.basis @ (self.basis.T @ v)
        return np.linalg.norm(resid) <= tol * max(1.0, np.linalg.norm(v))

    def __repr__(self):
        return "Subspace(dim=%d of %d)" % (self.dim, self.parent_dim)


class QuadraticForm:
    """Quadratic form Q(v) = v @ C @ v with symmetric coefficient matrix C.

    The definiteness flag is one of 'positive', 'negative', 'indefinite'
    (within eigenvalue threshold 1e-10 relative to the spectral radius).
    """

    def __init__(self, matrix, space=None):
        matrix = np.asarray(matrix, dtype=float)
        if np.linalg.norm(matrix - matrix.T) > 1e-10 * max(1.0, np.linalg.norm(matrix)):
            raise ValueError("coefficient matrix is not symmetric")
        self.matrix = 0.5 * (matrix + matrix.T)
        self.space = space
        eigs = np.linalg.eigvalsh(self.matrix)
        self.eigenvalues = eigs
        scale = max(np.max(np.abs(eigs)), 1e-300)
        if np.all(eigs > 1e-10 * scale):
            self.definiteness = "positive"
        elif np.all(eigs < -1e-10 * scale):
            self.definiteness = "negative"
        else:
            self.definiteness = "indefinite"

    @classmethod
    def of_linear_field(cls, A, space):
        """Q_A(v) = omega(A v, v)/2 for an infinitesimally symplectic A."""
        A = np.asarray(A, dtype=float)
        m = 0.5 * A.T @ space.omega
        return cls(0.5 * (m + m.T), space=space)

    @property
    def is_definite(self):
        return self.definiteness in ("positive", "negative")

    def value(self, v):
        v = np.asarray(v)
        return float(v @ self.matrix @ v)

    def gradient(self, v):
        return 2.0 * (self.matrix @ np.asarray(v))

    def __repr__(self):
        return "QuadraticForm(dim=%d, %s)" % (self.matrix.shape[0], self.definiteness)


def is_infinitesimally_symplectic(A, space, tol=1e-8):
    """Residual test of Omega A + A^T Omega = 0, scaled by ||A||."""
    A = np.asarray(A, dtype=float)
    resid = np.linalg.norm(space.omega @ A + A.T @ space.omega)
    return resid <= tol * max(1.0, np.linalg.norm(A))


def random_infinitesimally_symplectic(space, rng, scale=1.0):
    """Random element of sp(V): poisson @ S with S random symmetric."""
    n = space.dim
    S = rng.standard_normal((n, n))
    S = 0.5 * (S + S.T) * scale
    return space.poisson @ S


def _cluster_eigenvalues(eigs, tol):
    """Transitive clustering of complex eigenvalues at absolute gap tol.

    Returns a list of index arrays.  Clusters are kept closed under
    complex conjugation by construction (conjugate spectra of real A).
    """
    n = len(eigs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(eigs[i] - eigs[j]) <= tol:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(v) for v in groups.values()]


class LinearHamiltonianMap:
    """An infinitesimally symplectic map with its Jordan-Chevalley split.

    Attributes
    ----------
    A, semisimple_part, nilpotent_part : (dim, dim) ndarray
        A = A_s + A_n with A_s complex-diagonalizable, A_n nilpotent,
        [A_s, A_n] = 0, all three in sp(V).
    eigenvalues : list of (complex value, int multiplicity)
        One entry per eigenvalue cluster (cluster mean, algebraic
        multiplicity).
    """

    def __init__(self, space, A, semisimple_part, nilpotent_part, eigenvalues):
        self.space = space
        self.A = A
        self.semisimple_part = semisimple_part
        self.nilpotent_part = nilpotent_part
        self.eigenvalues = eigenvalues

    @property
    def spectral_radius(self):
        return max((abs(v) for v, _ in self.eigenvalues), default=0.0)

    def quadratic_form(self):
        return QuadraticForm.of_linear_field(self.A, self.space)

    def __repr__(self):
        return "LinearHamiltonianMap(dim=%d, clusters=%d)" % (
            self.space.dim,
            len(self.eigenvalues),
        )


def _spectral_projector(A, select):
    """Projector onto the sum of invariant subspaces selected by `select`.

    Uses a sorted complex Schur form and a Sylvester solve; `select` is a
    boolean function of a complex eigenvalue.
    """
    T, Z, sdim = scipy.linalg.schur(
        A.astype(complex), output="complex", sort=lambda lam: bool(select(lam))
    )
    n = A.shape[0]
    if sdim == 0:
        return np.zeros((n, n), dtype=complex), Z, 0
    if sdim == n:
        return np.eye(n, dtype=complex), Z, n
    T11 = T[:sdim, :sdim]
    T12 = T[:sdim, sdim:]
    T22 = T[sdim:, sdim:]
    # Block-diagonalization: T11 Y - Y T22 = -T12.
    Y = scipy.linalg.solve_sylvester(T11, -T22, -T12)
    P_t = np.zeros((n, n), dtype=complex)
    P_t[:sdim, :sdim] = np.eye(sdim)
    P_t[:sdim, sdim:] = -Y
    return Z @ P_t @ Z.conj().T, Z, sdim


def jordan_chevalley(A, space, cluster_tol=1e-8, pre_tol=1e-8):
    """Jordan-Chevalley decomposition of A in sp(V).

    Eigenvalues are clustered transitively at absolute gap
    cluster_tol * spectral_radius; A_s acts as the cluster mean on each
    generalized eigenspace (computed through Schur-based spectral
    projectors) and A_n = A - A_s.

    Raises
    ------
    NotInfinitesimallySymplectic
        If Omega A + A^T Omega != 0 beyond pre_tol * ||A||.
    IllConditionedSpectrum
        If two distinct clusters sit within 10x the cluster tolerance.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (space.dim, space.dim):
        raise ValueError("A has wrong shape for the space")
    resid = np.linalg.norm(space.omega @ A + A.T @ space.omega)
    if resid > pre_tol * max(1.0, np.linalg.norm(A)):
        raise NotInfinitesimallySymplectic(
            "Omega A + A^T Omega residual %.3e exceeds tolerance" % resid
        )

    eigs = np.linalg.eigvals(A)
    rho = max(np.max(np.abs(eigs)), 1e-300)
    tol = cluster_tol * rho
    clusters = _cluster_eigenvalues(eigs, tol)
    means = [complex(np.mean(eigs[idx])) for idx in clusters]

    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            if abs(means[i] - means[j]) < 10.0 * tol:
                raise IllConditionedSpectrum(
                    "clusters %s and %s closer than 10x cluster tolerance"
                    % (means[i], means[j])
                )

    mean_arr = np.array(means)

    def nearest_cluster(lam):
        return int(np.argmin(np.abs(mean_arr - lam)))

    if all(len(idx) == 1 for idx in clusters):
        # Simple spectrum: A is semisimple up to roundoff.
        A_s = A.copy()
    else:
        A_s = np.zeros((space.dim, space.dim), dtype=complex)
        for ci, (mean, idx) in enumerate(zip(means, clusters)):
            if abs(mean) <= tol:
                continue  # zero cluster contributes nothing to A_s
            P, _, sdim = _spectral_projector(
                A, lambda lam, c=ci: nearest_cluster(lam) == c
            )
            if sdim != len(idx):
                raise IllConditionedSpectrum(
                    "projector rank %d does not match cluster size %d"
                    % (sdim, len(idx))
                )
            A_s = A_s + mean * P
        imag_norm = np.linalg.norm(A_s.imag)
        if imag_norm > 1e-7 * max(1.0, np.linalg.norm(A_s.real)):
            raise IllConditionedSpectrum(
                "semisimple part failed to realify (imag %.3e)" % imag_norm
            )
        A_s = A_s.real

    A_n = A - A_s
    eigenvalues = sorted(
        ((m, len(idx)) for m, idx in zip(means, clusters)),
        key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)),
    )
    return LinearHamiltonianMap(space, A, A_s, A_n, eigenvalues)


def krein_check(Q, lin_map, re_tol=1e-9, nil_tol=1e-9):
    """Definiteness vs spectrum sanity gate (Krein).

    If Q (the quadratic form of lin_map.A) is definite, the spectrum must
    be purely imaginary and the nilpotent part must vanish; a definite Q
    with a failing spectrum check raises KreinViolation.

    Returns a dict with flags 'definite', 'spectrum_imaginary',
    'semisimple' plus diagnostics.
    """
    A = lin_map.A
    norm_a = max(np.linalg.norm(A), 1e-300)
    max_re = max((abs(v.real) for v, _ in lin_map.eigenvalues), default=0.0)
    spectrum_imaginary = max_re <= re_tol * norm_a
    nil_norm = np.linalg.norm(lin_map.nilpotent_part)
    semisimple = nil_norm <= nil_tol * norm_a
    definite = Q.is_definite
    if definite and not (spectrum_imaginary and semisimple):
        raise KreinViolation(
            "definite form but max|Re| = %.3e, ||A_n|| = %.3e" % (max_re, nil_norm)
        )
    return {
        "definite": definite,
        "spectrum_imaginary": spectrum_imaginary,
        "semisimple": semisimple,
        "max_abs_re": max_re,
        "nilpotent_norm": nil_norm,
    }


class ResonanceSpace:
    """The resonance space U of a linear Hamiltonian map at frequency nu0.

    U is the sum of the real generalized eigenspaces for eigenvalues
    +/- i k nu0 (k = 1, 2, ...), equivalently ker(exp(A_s T) - I) for
    T = 2 pi / nu0.

    Attributes
    ----------
    parent_map : LinearHamiltonianMap
    nu0, period : float
    basis : (dim, 2m) ndarray with orthonormal columns
    restricted_semisimple, restricted_a, restricted_omega : (2m, 2m)
        Matrices of A_s, A, omega in the basis coordinates.
    weights : list of int
        Multiples k detected in the spectrum of A_s on U.
    """

    def __init__(self, parent_map, nu0, basis, weights):
        self.parent_map = parent_map
        self.nu0 = float(nu0)
        self.period = 2.0 * np.pi / self.nu0
        self.basis = basis
        self.weights = weights
        self.dim = basis.shape[1]
        B = basis
        self.restricted_semisimple = B.T @ parent_map.semisimple_part @ B
        self.restricted_a = B.T @ parent_map.A @ B
        self.restricted_omega = B.T @ parent_map.space.omega @ B

    def subspace(self):
        return Subspace(self.basis)

    def exp_semisimple_defect(self):
        """|| exp(restricted A_s * T) - I ||, zero in exact arithmetic."""
        E = scipy.linalg.expm(self.restricted_semisimple * self.period)
        return float(np.linalg.norm(E - np.eye(self.dim)))

    def __repr__(self):
        return "ResonanceSpace(nu0=%g, dim=%d of %d)" % (
            self.nu0,
            self.dim,
            self.parent_map.space.dim,
        )


def resonance_space(lin_map, nu0, multiple_tol=1e-6, invariance_tol=1e-9):
    """Resonance space of lin_map at frequency nu0 > 0.

    An eigenvalue cluster lam belongs to the space when
    |lam / (i nu0) -/+ k| <= multiple_tol for some integer k >= 1.

    Raises
    ------
    FrequencyNotInSpectrum
        If no eigenvalue is within multiple_tol * nu0 of i*nu0.
    DegenerateForm
        If omega restricts degenerately (eigenvalue mis-clustering).
    """
    if nu0 <= 0:
        raise ValueError("nu0 must be positive")
    space = lin_map.space

    def multiple_of(lam):
        ratio = lam / (1j * nu0)
        k = int(round(abs(ratio.real)))
        if k >= 1 and min(abs(ratio - k), abs(ratio + k)) <= multiple_tol:
            return k
        return 0

    if not any(
        abs(v - 1j * nu0) <= multiple_tol * nu0 or abs(v + 1j * nu0) <= multiple_tol * nu0
        for v, _ in lin_map.eigenvalues
    ):
        raise FrequencyNotInSpectrum(
            "no eigenvalue within %.1e of +/- i %g" % (multiple_tol * nu0, nu0)
        )

    weights = sorted(
        {multiple_of(v) for v, _ in lin_map.eigenvalues if multiple_of(v) >= 1}
    )
    P, Z, sdim = _spectral_projector(lin_map.A, lambda lam: multiple_of(lam) >= 1)
    cols = Z[:, :sdim]
    spanning = np.hstack([cols.real, cols.imag])
    sub = Subspace.from_spanning(spanning)
    if sub.dim != sdim:
        raise DegenerateForm(
            "realified basis rank %d != selected multiplicity %d" % (sub.dim, sdim)
        )
    B = sub.basis

    # Invariance of the span under A.
    AB = lin_map.A @ B
    defect = np.linalg.norm(AB - B @ (B.T @ AB))
    if defect > invariance_tol * max(1.0, np.linalg.norm(lin_map.A)):
        raise DegenerateForm("A does not leave the resonance span invariant")

    rs = ResonanceSpace(lin_map, nu0, B, weights)
    if rs.dim % 2:
        raise DegenerateForm("resonance space has odd dimension %d" % rs.dim)
    sv = np.linalg.svd(rs.restricted_omega, compute_uv=False)
    if sv.size and sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateForm("omega restricts degenerately to the resonance space")
    return rs


def restrict_matrix(M, sub, invariance_tol=1e-8):
    """Matrix of M on an invariant subspace, in the basis coordinates.

    Raises NotInvariant when M does not map the subspace into itself.
    """
    M = np.asarray(M, dtype=float)
    B = sub.basis
    MB = M @ B
    defect = np.linalg.norm(MB - B @ (B.T @ MB))
    if defect > invariance_tol * max(1.0, np.linalg.norm(M)):
        raise NotInvariant("subspace is not invariant (defect %.3e)" % defect)
    return B.T @ MB


def restrict_form(form, sub):
    """Quadratic form (matrix or QuadraticForm) pulled back to a subspace."""
    C = form.matrix if isinstance(form, QuadraticForm) else np.asarray(form, dtype=float)
    restricted = sub.basis.T @ C @ sub.basis
    if isinstance(form, QuadraticForm):
        return QuadraticForm(restricted)
    return restricted


def restrict_omega(space, sub, require_nondegenerate=True):
    """omega restricted to a subspace; degenerate restrictions raise."""
    omega_r = sub.basis.T @ space.omega @ sub.basis
    if require_nondegenerate and sub.dim:
        sv = np.linalg.svd(omega_r, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise DegenerateRestriction(
                "omega degenerate on the subspace (sigma_min/sigma_max = %.3e)"
                % (sv[-1] / sv[0])
            )
    return omega_r


def restrict(obj, sub, **kwargs):
    """Restrict a matrix, QuadraticForm, or SymplecticSpace form to sub."""
    if isinstance(obj, QuadraticForm):
        return restrict_form(obj, sub)
    if isinstance(obj, SymplecticSpace):
        return restrict_omega(obj, sub, **kwargs)
    return restrict_matrix(np.asarray(obj), sub, **kwargs)
