"""Lower bounds on the number of relative periodic orbits per cell.

Three dimensional (Lusternik-Schnirelman) estimates, one per setting:
around a symmetric equilibrium with prescribed spatial isotropy, with
prescribed spatiotemporal isotropy, and around a stable relative
equilibrium.  The Euler-characteristic branch is evaluated only for
zero-dimensional reduced spaces, where it coincides with the point
count; equivariant Betti-number machinery is out of scope.
"""

from dataclasses import dataclass, field

from .errors import NonIntegerBound

EQUILIBRIUM = "Equilibrium"
SPATIOTEMPORAL = "Spatiotemporal"
RELATIVE_EQUILIBRIUM = "RelativeEquilibrium"


@dataclass
class RpoEstimate:
    """One lower-bound row: theorem branch, cell labels, and the bound.

    dimensional_bound is the half-dimension count; euler_bound is
    populated only when the reduced space is zero dimensional (then it
    equals the dimensional bound: one orbit per point).  branch records
    which side of the max produced the reported bound.
    """

    theorem: str
    isotropy: str
    momentum: object
    dimensional_bound: int
    reduced_space_dim: int
    euler_bound: int = None
    warnings: list = field(default_factory=list)

    @property
    def bound(self):
        if self.euler_bound is not None:
            return max(self.dimensional_bound, self.euler_bound)
        return self.dimensional_bound

    @property
    def branch(self):
        if self.euler_bound is not None and self.euler_bound > self.dimensional_bound:
            return "euler"
        return "dimensional"


def _half(value, context):
    if value % 2:
        raise NonIntegerBound(
            "%s: %d is odd, the half-count is not an integer "
            "(inconsistent group data)" % (context, value)
        )
    return value // 2


def _finish(theorem, isotropy, momentum, raw_bound, context):
    warnings = []
    bound = _half(raw_bound, context)
    if bound < 0:
        warnings.append(
            "formula value %d clamped to 0 (empty or singular level set "
            "should be detected upstream)" % bound
        )
        bound = 0
    reduced_dim = max(2 * bound - 2, 0) if bound > 0 else 0
    euler = bound if (bound > 0 and reduced_dim == 0) else None
    return RpoEstimate(
        theorem=theorem,
        isotropy=isotropy,
        momentum=momentum,
        dimensional_bound=bound,
        reduced_space_dim=reduced_dim,
        euler_bound=euler,
        warnings=warnings,
    )


def ls_estimate_equilibrium(dim_uk, dim_l, dim_l_lambda, isotropy="K", momentum=None):
    """Bound (dim U^K - dim N(K)/K - dim (N(K)/K)_lambda) / 2.

    Counts RPOs with prescribed energy, momentum lambda, and spatial
    isotropy K near a stable symmetric equilibrium.
    """
    if dim_uk % 2:
        raise NonIntegerBound("dim U^K = %d must be even" % dim_uk)
    if not 0 <= dim_l_lambda <= dim_l:
        raise ValueError("need 0 <= dim_l_lambda <= dim_l")
    raw = dim_uk - dim_l - dim_l_lambda
    return _finish(EQUILIBRIUM, isotropy, momentum, raw, "equilibrium estimate")


def ls_estimate_spatiotemporal(
    dim_uh, dim_ngk, dim_nrho_chi, dim_k, isotropy="H", momentum=None
):
    """Bound (dim U^H - dim N_G(K) - dim(N_G(K)_rho ^ N_G(K)_chi) + 2 dim K)/2.

    Counts RPOs with prescribed spatiotemporal isotropy H covering
    K = pi(H); reduces to the equilibrium estimate at zero temporal
    velocity.
    """
    if dim_uh % 2:
        raise NonIntegerBound("dim U^H = %d must be even" % dim_uh)
    if dim_k > dim_ngk:
        raise ValueError("dim K cannot exceed dim N_G(K)")
    raw = dim_uh - dim_ngk - dim_nrho_chi + 2 * dim_k
    return _finish(SPATIOTEMPORAL, isotropy, momentum, raw, "spatiotemporal estimate")


def ls_estimate_relative_equilibrium(
    dim_uh, dim_ngm_k, dim_k, isotropy="H", momentum=None
):
    """Bound (dim U^H - 2 dim N_{G_m}(K) + 2 dim K)/2 around a stable RE."""
    if dim_uh % 2:
        raise NonIntegerBound("dim U^H = %d must be even" % dim_uh)
    if dim_k > dim_ngm_k:
        raise ValueError("dim K cannot exceed dim N_{G_m}(K)")
    raw = dim_uh - 2 * dim_ngm_k + 2 * dim_k
    return _finish(
        RELATIVE_EQUILIBRIUM, isotropy, momentum, raw, "relative-equilibrium estimate"
    )
