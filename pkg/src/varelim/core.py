"""Separable problem interface and derivative evaluation.

A separable problem is an objective ``F(x, y)`` over a decision variable split
into a block ``x`` of length ``p`` and a block ``y`` of length ``q`` such that
minimizing over ``y`` with ``x`` held fixed is tractable.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ._validation import as_vector, check_positive, check_symmetric
from .exceptions import CapabilityError, DimensionError

FD_GRAD_STEP = 1e-6
FD_HESS_STEP = 1e-4


@dataclass(frozen=True)
class SeparablePoint:
    """The partitioned decision variable ``(x, y)``."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x, name="x"))
        object.__setattr__(self, "y", as_vector(self.y, name="y"))

    @classmethod
    def from_flat(cls, theta, p):
        theta = as_vector(theta, name="theta")
        return cls(theta[:p], theta[p:])

    def flat(self):
        return np.concatenate([self.x, self.y])


@dataclass(frozen=True)
class HessianBlocks:
    """Blocks of the full Hessian ``[[A, B.T], [B, D]]``.

    ``A`` is ``p x p`` (xx block), ``B`` is ``q x p`` (yx block) and ``D`` is
    ``q x q`` (yy block).
    """

    A: np.ndarray
    B: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        D = np.atleast_2d(np.asarray(self.D, dtype=np.float64))
        B = np.asarray(self.B, dtype=np.float64)
        if B.size != D.shape[0] * A.shape[0]:
            raise DimensionError(f"B must be {D.shape[0]}x{A.shape[0]}, got shape {B.shape}")
        B = B.reshape(D.shape[0], A.shape[0])
        check_symmetric(A, tol=1e-12, name="A")
        check_symmetric(D, tol=1e-12, name="D")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)

    @property
    def p(self):
        return self.A.shape[0]

    @property
    def q(self):
        return self.D.shape[0]

    def full(self):
        return np.block([[self.A, self.B.T], [self.B, self.D]])


class SeparableProblem(ABC):
    """Abstract separable objective ``F(x, y)``.

    Subclasses set ``p`` and ``q`` and implement :meth:`value`,
    :meth:`grad_x` and :meth:`grad_y`. Problems with a closed-form inner
    solver override :meth:`inner_solve`; otherwise the reduction module falls
    back to Newton's method on ``grad_y``. Problem instances must not mutate
    after construction.
    """

    p: int
    q: int
    #: Tolerance on ``||grad_y F(x, y*(x))||`` accepted from the inner solve.
    inner_tol = 1e-10
    name = "separable"

    @abstractmethod
    def value(self, x, y):
        """Objective value ``F(x, y)``."""

    @abstractmethod
    def grad_x(self, x, y):
        """Partial gradient with respect to ``x``."""

    @abstractmethod
    def grad_y(self, x, y):
        """Partial gradient with respect to ``y``."""

    def hessian_blocks(self, x, y):
        raise CapabilityError(f"{type(self).__name__} does not provide Hessian blocks")

    def inner_solve(self, x):
        raise CapabilityError(f"{type(self).__name__} has no closed-form inner solver")

    @property
    def has_inner_solver(self):
        return type(self).inner_solve is not SeparableProblem.inner_solve

    def inner_guess(self, x):
        """Starting point for iterative inner solves."""
        return np.zeros(self.q)

    # Sampling of test points; subclasses restrict these to their domain.
    def sample_x(self, rng):
        return rng.uniform(-2.0, 2.0, size=self.p)

    def sample_point(self, rng):
        return SeparablePoint(self.sample_x(rng), rng.uniform(-2.0, 2.0, size=self.q))


def _check_point(problem, point):
    if not isinstance(point, SeparablePoint):
        point = SeparablePoint(*point)
    if point.x.shape[0] != problem.p or point.y.shape[0] != problem.q:
        raise DimensionError(
            f"point has dimensions ({point.x.shape[0]}, {point.y.shape[0]}), "
            f"problem expects ({problem.p}, {problem.q})"
        )
    return point


def evaluate(problem, point):
    """Return ``F(x, y)`` at ``point``."""
    point = _check_point(problem, point)
    return float(problem.value(point.x, point.y))


def gradient(problem, point):
    """Return the pair of partial gradients ``(grad_x F, grad_y F)``."""
    point = _check_point(problem, point)
    gx = as_vector(problem.grad_x(point.x, point.y), problem.p, "grad_x")
    gy = as_vector(problem.grad_y(point.x, point.y), problem.q, "grad_y")
    return gx, gy


def hessian_blocks(problem, point):
    point = _check_point(problem, point)
    blocks = problem.hessian_blocks(point.x, point.y)
    if blocks.p != problem.p or blocks.q != problem.q:
        raise DimensionError("Hessian blocks do not match problem dimensions")
    return blocks


def fd_derivative(fun, v, h=FD_GRAD_STEP):
    """Central-difference gradient (or Jacobian, for vector ``fun``) at ``v``."""
    check_positive(h, "h")
    v = as_vector(v)
    cols = []
    for k in range(v.shape[0]):
        e = np.zeros_like(v)
        e[k] = h
        cols.append((np.asarray(fun(v + e)) - np.asarray(fun(v - e))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def fd_hessian_of(fun, v, h=FD_HESS_STEP):
    """Central second-difference Hessian of a scalar function from values only."""
    check_positive(h, "h")
    v = as_vector(v)
    n = v.shape[0]
    f0 = fun(v)
    H = np.empty((n, n))
    eye = np.eye(n) * h
    for i in range(n):
        H[i, i] = (fun(v + eye[i]) - 2.0 * f0 + fun(v - eye[i])) / h**2
        for j in range(i + 1, n):
            fpp = fun(v + eye[i] + eye[j])
            fpm = fun(v + eye[i] - eye[j])
            fmp = fun(v - eye[i] + eye[j])
            fmm = fun(v - eye[i] - eye[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h**2)
    return H


def fd_gradient(problem, point, h=FD_GRAD_STEP):
    """Central-difference ``(grad_x F, grad_y F)``; a test oracle only."""
    point = _check_point(problem, point)
    p = problem.p
    g = fd_derivative(lambda t: problem.value(t[:p], t[p:]), point.flat(), h)
    return g[:p], g[p:]


def fd_hessian(problem, point, h=FD_HESS_STEP):
    """Central-difference full Hessian of ``F`` in ``(x, y)`` ordering."""
    point = _check_point(problem, point)
    p = problem.p
    return fd_hessian_of(lambda t: problem.value(t[:p], t[p:]), point.flat(), h)
