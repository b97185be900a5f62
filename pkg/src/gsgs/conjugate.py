"""Conjugate direction sets and exact Gaussian sampling along them.

Given a precision operator Q in factored form, `build_conjugate_set` grows a
set of unit directions that are mutually conjugate with respect to Q, and
`sample_along` draws the exact Gaussian coefficients of the target
N(m, Q^{-1}) along those directions. With a full set (as many directions as
dimensions) one call produces an exact draw from the target; with fewer it is
an exact draw from the conditional restricted to the spanned affine subspace.
"""

from math import sqrt

import numpy as np

from .errors import (
    DegenerateDirectionError,
    DimensionError,
    IndefinitePrecisionError,
    SizeCapError,
)
from .rng import standard_normal_vector

CURVATURE_DROP = 1e-12
BREAKDOWN_TOL = 1e-12


class PrecisionModel:
    """Symmetric positive (semi)definite precision in factored form.

    Q x = sum_k M_k^T (w_k * (M_k x)) with positive weights w_k (scalar or a
    per-row vector), plus the vector b = Q m that pins the Gaussian mean
    without ever forming m. Symmetry and positive semidefiniteness hold by
    construction; strict positivity along a direction is checked where the
    direction is used.
    """

    def __init__(self, dim, factors, b):
        dim = int(dim)
        if dim < 1:
            raise DimensionError(f"dim must be positive, got {dim}")
        factors = list(factors)
        if not factors:
            raise DimensionError("a precision model needs at least one factor")
        checked = []
        for op, weights in factors:
            if op.in_dim != dim:
                raise DimensionError(
                    f"factor input dim {op.in_dim} does not match model dim {dim}"
                )
            if np.isscalar(weights):
                weights = float(weights)
                if weights <= 0:
                    raise ValueError(f"factor weight must be positive, got {weights}")
            else:
                weights = np.asarray(weights, dtype=float)
                if weights.shape != (op.out_dim,):
                    raise DimensionError(
                        f"weight vector shape {weights.shape} != ({op.out_dim},)"
                    )
                if not (weights > 0).all():
                    raise ValueError("all factor weights must be positive")
            checked.append((op, weights))
        b = np.asarray(b, dtype=float)
        if b.shape != (dim,):
            raise DimensionError(f"b has shape {b.shape}, expected ({dim},)")
        self.dim = dim
        self.factors = checked
        self.b = b

    def apply(self, x):
        """Q x."""
        out = None
        for op, weights in self.factors:
            t = op.apply(x)
            t *= weights
            t = op.adjoint_apply(t)
            out = t if out is None else out + t
        return out

    def gradient(self, x):
        """Gradient of the quadratic potential: Q x - b = Q (x - m)."""
        return self.apply(x) - self.b


def draw_factored_noise(precision, rng):
    """One draw from N(0, Q) using the factored form of Q.

    eps = sum_k M_k^T (sqrt(w_k) * z_k) with z_k standard normal has
    covariance sum_k M_k^T w_k M_k = Q exactly. Factors are visited in model
    order, which fixes the stream layout for reproducibility.
    """
    out = None
    for op, weights in precision.factors:
        z = standard_normal_vector(rng, op.out_dim)
        z *= np.sqrt(weights)
        t = op.adjoint_apply(z)
        out = t if out is None else out + t
    return out


def densify_precision(precision, max_entries=10_000_000):
    """Dense symmetric matrix for Q, for small-dimension oracles only."""
    n = precision.dim
    if n * n > max_entries:
        raise SizeCapError(f"dense precision would hold {n * n} entries (cap {max_entries})")
    matrix = np.empty((n, n))
    unit = np.zeros(n)
    for j in range(n):
        unit[j] = 1.0
        matrix[:, j] = precision.apply(unit)
        unit[j] = 0.0
    # apply() is symmetric up to rounding; make the oracle exactly so.
    return 0.5 * (matrix + matrix.T)


class ConjugateSet:
    """Unit-norm directions that are mutually conjugate w.r.t. one precision.

    Stores the directions (rows of ``directions``), their images under Q and
    the curvatures c_n = d_n^T Q d_n, all strictly positive.
    """

    __slots__ = ("directions", "q_directions", "curvatures")

    def __init__(self, directions, q_directions, curvatures):
        self.directions = directions
        self.q_directions = q_directions
        self.curvatures = curvatures

    def __len__(self):
        return self.directions.shape[0]

    @property
    def size(self):
        return self.directions.shape[0]

    def conjugacy_defect(self):
        """max over i != j of |d_i^T Q d_j| / sqrt(c_i c_j)."""
        if len(self) < 2:
            return 0.0
        gram = self.directions @ self.q_directions.T
        scale = np.sqrt(np.outer(self.curvatures, self.curvatures))
        off = np.abs(gram) / scale
        np.fill_diagonal(off, 0.0)
        return float(off.max())


def build_conjugate_set(precision, d1, n_dirs, candidate_rule="power"):
    """Grow up to ``n_dirs`` mutually conjugate unit directions from seed d1.

    Parameters
    ----------
    precision : PrecisionModel
    d1 : array
        Seed direction (kept first, normalized). Must be nonzero.
    n_dirs : int
        Requested number of directions, at most the space dimension.
    candidate_rule : str
        How the next raw candidate is produced. The only supported rule,
        "power", multiplies the most recent direction by Q; each candidate is
        then re-orthogonalized (two passes) against *all* kept directions in
        the Q inner product. This full re-orthogonalization costs
        O(n_dirs^2 * dim), negligible next to the operator applications for
        the direction counts used here, and is numerically safer than a
        two-term recurrence.

    Construction stops early -- returning a shorter set -- when the candidate
    collapses during orthogonalization (Krylov breakdown, e.g. repeated
    eigenvalues) or when a curvature falls below 1e-12 times the first one.

    Raises
    ------
    DegenerateDirectionError
        If d1 is exactly zero.
    IndefinitePrecisionError
        If the seed direction has non-positive curvature.
    """
    if candidate_rule != "power":
        raise ValueError(f"unknown candidate rule {candidate_rule!r}")
    n = precision.dim
    n_dirs = int(n_dirs)
    if n_dirs < 1:
        raise ValueError(f"n_dirs must be >= 1, got {n_dirs}")
    if n_dirs > n:
        raise DimensionError(f"n_dirs {n_dirs} exceeds dimension {n}")
    d1 = np.asarray(d1, dtype=float)
    if d1.shape != (n,):
        raise DimensionError(f"d1 has shape {d1.shape}, expected ({n},)")
    seed_norm = sqrt(d1 @ d1)
    if seed_norm == 0.0:
        raise DegenerateDirectionError("seed direction is zero")

    dirs = np.empty((n_dirs, n))
    qdirs = np.empty((n_dirs, n))
    curv = np.empty(n_dirs)

    v = d1 / seed_norm
    q = precision.apply(v)
    c = v @ q
    if c <= 0.0:
        raise IndefinitePrecisionError(f"seed curvature {c} is not positive")
    dirs[0], qdirs[0], curv[0] = v, q, c
    drop = CURVATURE_DROP * c

    k = 1
    while k < n_dirs:
        cand = qdirs[k - 1].copy()
        pre_norm = sqrt(cand @ cand)
        for _ in range(2):
            coef = (qdirs[:k] @ cand) / curv[:k]
            cand -= coef @ dirs[:k]
        norm = sqrt(cand @ cand)
        if norm <= BREAKDOWN_TOL * pre_norm:
            break
        v = cand / norm
        q = precision.apply(v)
        c = v @ q
        if c <= drop:
            break
        dirs[k], qdirs[k], curv[k] = v, q, c
        k += 1

    return ConjugateSet(dirs[:k], qdirs[:k], curv[:k])


def sample_along(precision, cset, x0, rng, gradient=None):
    """Exact conditional Gaussian draw along a conjugate set, from point x0.

    Each coefficient is independent:
    alpha_n ~ Normal(d_n^T g / c_n, 1 / c_n) with g = Q x0 - b, and the new
    point is x0 - sum_n alpha_n d_n. Returns (x_new, alphas); the alphas are
    kept for diagnostics.

    ``gradient`` may pass a precomputed Q x0 - b to save one operator
    application.
    """
    curv = cset.curvatures
    if curv.min() <= 0.0:
        raise IndefinitePrecisionError("conjugate set holds a non-positive curvature")
    g = precision.gradient(x0) if gradient is None else gradient
    means = (cset.directions @ g) / curv
    alphas = means + standard_normal_vector(rng, len(cset)) / np.sqrt(curv)
    return x0 - alphas @ cset.directions, alphas
