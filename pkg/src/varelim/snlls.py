"""Separable nonlinear least squares ``1/2 ||G(x) y - z||^2`` and variable projection."""

import numpy as np

from ._validation import as_vector
from .core import FD_GRAD_STEP, FD_HESS_STEP, HessianBlocks, SeparablePoint, SeparableProblem, fd_derivative
from .exceptions import DimensionError, RankError, ValidationError

RANK_TOL = 1e-10
JACOBIAN_MODES = ("full", "kaufman", "finite_diff")


def _truncated_svd(G, rank_tol):
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return U[:, :0], s[:0], Vt[:0]
    keep = s > rank_tol * s[0]
    return U[:, keep], s[keep], Vt[keep]


def pinv_solve(G, z, rank_tol=RANK_TOL):
    """Minimum-norm least squares solution ``G^+ z`` by truncated SVD.

    Singular values below ``rank_tol * sigma_max`` are dropped.
    """
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    z = as_vector(z, G.shape[0], "z")
    U, s, Vt = _truncated_svd(G, rank_tol)
    return Vt.T @ ((U.T @ z) / s)


def projector(G, rank_tol=RANK_TOL):
    """Orthogonal projector ``G G^+`` onto the column space of ``G``."""
    U, _, _ = _truncated_svd(np.atleast_2d(G), rank_tol)
    return U @ U.T


class SnllsProblem:
    """A separable nonlinear least squares problem.

    Parameters
    ----------
    model_matrix : callable
        ``x -> G(x)`` with shape ``(m, q)``.
    data : array_like
        Observations ``z`` of length ``m``.
    p : int
        Number of nonlinear parameters.
    model_matrix_derivs : callable, optional
        ``x -> dG`` with shape ``(p, m, q)``, ``dG[k] = dG/dx_k``. Central
        differences with ``h = 1e-6`` are used when omitted.
    model_matrix_second_derivs : callable, optional
        ``x -> d2G`` with shape ``(p, p, m, q)``. Only needed for exact Hessian
        blocks; differenced from ``model_matrix_derivs`` when omitted.
    rank_tol : float
        Relative singular value cutoff for pseudoinverses.
    """

    def __init__(self, model_matrix, data, p, model_matrix_derivs=None,
                 model_matrix_second_derivs=None, rank_tol=RANK_TOL, name="snlls"):
        self._G = model_matrix
        self._dG = model_matrix_derivs
        self._d2G = model_matrix_second_derivs
        self.z = as_vector(data, name="data")
        self.z.setflags(write=False)
        self.p = int(p)
        self.rank_tol = rank_tol
        self.name = name
        G0 = self.model_matrix(np.zeros(self.p))
        self.m, self.q = G0.shape
        if self.m < self.q:
            raise ValidationError(f"need m >= q, got m={self.m}, q={self.q}")

    def model_matrix(self, x):
        G = np.atleast_2d(np.asarray(self._G(as_vector(x, self.p, "x")), dtype=np.float64))
        if G.shape[0] != self.z.shape[0]:
            raise DimensionError(f"G(x) has {G.shape[0]} rows, data has {self.z.shape[0]}")
        return G

    def model_matrix_derivs(self, x):
        x = as_vector(x, self.p, "x")
        if self._dG is not None:
            return np.asarray(self._dG(x), dtype=np.float64)
        return np.moveaxis(fd_derivative(self.model_matrix, x, FD_GRAD_STEP), -1, 0)

    def model_matrix_second_derivs(self, x):
        x = as_vector(x, self.p, "x")
        if self._d2G is not None:
            return np.asarray(self._d2G(x), dtype=np.float64)
        # A differenced dG needs the coarser Hessian step to limit roundoff.
        h = FD_GRAD_STEP if self._dG is not None else FD_HESS_STEP
        d2 = fd_derivative(self.model_matrix_derivs, x, h)
        d2 = np.moveaxis(d2, -1, 1)
        return 0.5 * (d2 + np.swapaxes(d2, 0, 1))

    def inner_solve(self, x):
        return pinv_solve(self.model_matrix(x), self.z, self.rank_tol)

    def residual(self, x, y):
        """Full residual ``G(x) y - z``."""
        return self.model_matrix(x) @ as_vector(y, self.q, "y") - self.z

    def jacobian_x(self, x, y):
        return np.einsum("kmq,q->mk", self.model_matrix_derivs(x), as_vector(y, self.q, "y"))

    def full_jacobian(self, x, y):
        """Jacobian ``[J_x, J_y]`` of the full residual in ``(x, y)`` ordering."""
        return np.hstack([self.jacobian_x(x, y), self.model_matrix(x)])

    def as_separable(self):
        return SnllsSeparable(self)


class SnllsSeparable(SeparableProblem):
    """:class:`SeparableProblem` view of an SNLLS problem with pseudoinverse inner solve."""

    def __init__(self, snlls: SnllsProblem):
        self.snlls = snlls
        self.p, self.q = snlls.p, snlls.q
        self.name = snlls.name

    def value(self, x, y):
        r = self.snlls.residual(x, y)
        return 0.5 * float(r @ r)

    def grad_x(self, x, y):
        return self.snlls.jacobian_x(x, y).T @ self.snlls.residual(x, y)

    def grad_y(self, x, y):
        return self.snlls.model_matrix(x).T @ self.snlls.residual(x, y)

    def hessian_blocks(self, x, y):
        s = self.snlls
        y = as_vector(y, self.q, "y")
        G = s.model_matrix(x)
        dG = s.model_matrix_derivs(x)
        eps = G @ y - s.z
        Jx = np.einsum("kmq,q->mk", dG, y)
        A = Jx.T @ Jx + np.einsum("klmq,m,q->kl", s.model_matrix_second_derivs(x), eps, y)
        B = np.einsum("kmq,m->qk", dG, eps) + G.T @ Jx
        D = G.T @ G
        return HessianBlocks(0.5 * (A + A.T), B, 0.5 * (D + D.T))

    def inner_solve(self, x):
        return self.snlls.inner_solve(x)

    def sample_x(self, rng):
        return rng.uniform(-1.5, 1.5, size=self.p)

    def sample_point(self, rng):
        return SeparablePoint(self.sample_x(rng), rng.uniform(-2.0, 2.0, size=self.q))


def reduced_residual(problem: SnllsProblem, x):
    """``r(x) = G(x) G(x)^+ z - z``; the reduced value is ``1/2 ||r||^2``."""
    G = problem.model_matrix(x)
    return G @ pinv_solve(G, problem.z, problem.rank_tol) - problem.z


def varpro_jacobian(problem: SnllsProblem, x, mode="kaufman", strict=True):
    """Jacobian of :func:`reduced_residual` (shape ``(m, p)``).

    ``mode="full"`` is the Golub-Pereyra derivative of the projector,
    ``"kaufman"`` keeps only its first term ``P_perp dG_k y`` and
    ``"finite_diff"`` differences the reduced residual directly.

    The analytic modes raise :class:`RankError` when ``G(x)`` is rank
    deficient unless ``strict=False``, in which case the truncated SVD is used
    as is (exact only where the numerical rank is locally constant).
    """
    if mode not in JACOBIAN_MODES:
        raise ValidationError(f"mode must be one of {JACOBIAN_MODES}, got {mode!r}")
    x = as_vector(x, problem.p, "x")
    if mode == "finite_diff":
        return fd_derivative(lambda v: reduced_residual(problem, v), x, FD_GRAD_STEP)
    G = problem.model_matrix(x)
    U, s, Vt = _truncated_svd(G, problem.rank_tol)
    if strict and s.size < problem.q:
        raise RankError(f"G(x) has rank {s.size} < {problem.q}")
    y = Vt.T @ ((U.T @ problem.z) / s)
    r = G @ y - problem.z
    dG = problem.model_matrix_derivs(x)
    dGy = np.einsum("kmq,q->mk", dG, y)
    J = dGy - U @ (U.T @ dGy)
    if mode == "full":
        dGtr = np.einsum("kmq,m->qk", dG, r)
        J -= U @ ((Vt @ dGtr) / s[:, None])
    return J


def delta_y_approx(problem: SnllsProblem, x_k, y_k, dx):
    """Linearized update ``-G(x_k)^+ (eps(x_k, y_k) + J_x(x_k, y_k) dx)``."""
    x_k = as_vector(x_k, problem.p, "x_k")
    y_k = as_vector(y_k, problem.q, "y_k")
    dx = as_vector(dx, problem.p, "dx")
    rhs = problem.residual(x_k, y_k) + problem.jacobian_x(x_k, y_k) @ dx
    return -pinv_solve(problem.model_matrix(x_k), rhs, problem.rank_tol)


def delta_y_exact(problem: SnllsProblem, x_next, y_k):
    """Exact update ``-G(x_next)^+ eps(x_next, y_k)``.

    ``y_k + delta`` solves the linear inner problem at ``x_next`` outright.
    """
    x_next = as_vector(x_next, problem.p, "x_next")
    return -pinv_solve(problem.model_matrix(x_next), problem.residual(x_next, y_k),
                       problem.rank_tol)


def inner_residual_norm(problem: SnllsProblem, x, y):
    """``||grad_y F(x, y)|| = ||G(x)^T (G(x) y - z)||``."""
    return float(np.linalg.norm(problem.model_matrix(x).T @ problem.residual(x, y)))
