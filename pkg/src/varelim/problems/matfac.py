"""Low-rank matrix factorization ``1/2 ||X Y^T - M||_F^2`` and its Grassmannian reduction."""

import numpy as np

from .._validation import as_vector, check_orthonormal
from ..core import HessianBlocks, SeparableProblem
from ..exceptions import DomainError, ValidationError

# Rank-1 target used in the two-dimensional illustrations, u* = e1, v* = e2.
EXAMPLE_M = np.array([[0.0, 1.0], [0.0, 0.0]])


class MatFacRank1(SeparableProblem):
    """Rank-1 factorization ``1/2 ||x y^T - M||_F^2`` of a unit-norm rank-1 ``M``."""

    name = "matfac"

    def __init__(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=np.float64))
        U, s, Vt = np.linalg.svd(M)
        if abs(s[0] - 1.0) > 1e-10 or (s.size > 1 and s[1] > 1e-10):
            raise ValidationError(f"M must be rank 1 with unit-norm factors, singular values {s}")
        self.M = M
        self.M.setflags(write=False)
        self.u_star, self.v_star = U[:, 0], Vt[0]
        self.p, self.q = M.shape

    def value(self, x, y):
        R = np.outer(x, y) - self.M
        return 0.5 * float(np.sum(R * R))

    def grad_x(self, x, y):
        return (np.outer(x, y) - self.M) @ y

    def grad_y(self, x, y):
        return (np.outer(x, y) - self.M).T @ x

    def hessian_blocks(self, x, y):
        A = float(y @ y) * np.eye(self.p)
        D = float(x @ x) * np.eye(self.q)
        B = 2.0 * np.outer(y, x) - self.M.T
        return HessianBlocks(A, B, D)

    def inner_solve(self, x):
        nx2 = float(x @ x)
        if nx2 == 0.0:
            raise DomainError("inner solution M^T x / ||x||^2 is undefined at x = 0")
        return self.M.T @ x / nx2

    def reduced_closed_form(self, x):
        """``1/2 (1 - (x^T u*)^2 / ||x||^2)``."""
        x = np.asarray(x, dtype=np.float64)
        return 0.5 * (1.0 - (x @ self.u_star) ** 2 / (x @ x))

    def sample_x(self, rng):
        while True:
            x = rng.uniform(-2.0, 2.0, size=self.p)
            if np.linalg.norm(x) > 0.2:
                return x


def make_matfac_rank1(M=EXAMPLE_M):
    return MatFacRank1(M)


def example_reduced_value(x1, x2):
    """Reduced value for ``M = [[0, 1], [0, 0]]``: ``1/2 (1 - x1^2 / (x1^2 + x2^2))``."""
    return 0.5 * (1.0 - x1**2 / (x1**2 + x2**2))


def random_low_rank(d1, d2, r, rng):
    """Random ``d1 x d2`` matrix of exact rank ``r``; returns ``(M, (U, s, Vt))``."""
    U, _ = np.linalg.qr(rng.standard_normal((d1, r)))
    V, _ = np.linalg.qr(rng.standard_normal((d2, r)))
    s = np.sort(rng.uniform(0.5, 3.0, size=r))[::-1]
    return (U * s) @ V.T, (U, s, V.T)


def random_orthonormal_basis(d, r, rng):
    Q, R = np.linalg.qr(rng.standard_normal((d, r)))
    return Q * np.sign(np.diag(R))


def orthogonal_complement_basis(U, r):
    """An orthonormal ``r``-column basis for a subspace orthogonal to ``C(U)``."""
    d, k = U.shape
    if k + r > d:
        raise ValidationError(f"no {r}-dimensional subspace orthogonal to a rank-{k} space in R^{d}")
    Q, _ = np.linalg.qr(np.hstack([U, np.eye(d)]))
    return Q[:, k:k + r]


def grassmann_reduced_value(M_svd, basis):
    """Reduced factorization value ``1/2 (||M||_F^2 - ||Q^T M||_F^2)`` of a subspace.

    Parameters
    ----------
    M_svd : tuple
        Thin SVD ``(U, s, Vt)`` of the target matrix.
    basis : ndarray, shape (d1, r)
        Orthonormal basis ``Q`` of the subspace. The value depends only on its
        column space.
    """
    U, s, _ = M_svd
    s = as_vector(s, name="singular values")
    Q = check_orthonormal(basis)
    if Q.shape[0] != U.shape[0]:
        raise ValidationError(f"basis has {Q.shape[0]} rows, M has {U.shape[0]}")
    proj = (Q.T @ U) * s
    return 0.5 * (float(s @ s) - float(np.sum(proj * proj)))
