"""Variable elimination: inner solve, reduced objective and its derivatives."""

from dataclasses import dataclass

import numpy as np

from ._validation import as_vector
from .core import SeparableProblem
from .exceptions import ConvergenceError, SingularityError

ITERATIVE_INNER_TOL = 1e-8
MAX_CONDITION = 1e12


def _newton_inner(problem, x, tol, max_iter=100):
    y = as_vector(problem.inner_guess(x), problem.q, "inner guess").copy()
    f = problem.value(x, y)
    for _ in range(max_iter):
        g = as_vector(problem.grad_y(x, y))
        if np.linalg.norm(g) <= tol:
            return y
        D = problem.hessian_blocks(x, y).D
        w, V = np.linalg.eigh(D)
        # Newton on the convexified model keeps the iteration a descent method.
        w = np.maximum(np.abs(w), 1e-12 * max(1.0, np.abs(w).max()))
        step = -V @ ((V.T @ g) / w)
        t = 1.0
        while t > 1e-12:
            y_new = y + t * step
            f_new = problem.value(x, y_new)
            if f_new <= f:
                break
            t *= 0.5
        y, f = y_new, f_new
    raise ConvergenceError("Newton inner solve did not converge",
                           float(np.linalg.norm(problem.grad_y(x, y))))


def inner_solve(problem: SeparableProblem, x, inner_tol=None):
    """Return ``y*(x)``, the minimizer of ``F(x, .)``.

    Uses the problem's closed-form solver when it has one, else damped Newton
    iterations from ``problem.inner_guess(x)``. The optimality residual
    ``||grad_y F(x, y*)||`` is checked against ``inner_tol`` (defaults:
    ``problem.inner_tol`` for closed forms, ``1e-8`` for Newton).
    """
    x = as_vector(x, problem.p, "x")
    if problem.has_inner_solver:
        tol = problem.inner_tol if inner_tol is None else inner_tol
        y = as_vector(problem.inner_solve(x), problem.q, "y*")
    else:
        tol = ITERATIVE_INNER_TOL if inner_tol is None else inner_tol
        y = _newton_inner(problem, x, tol)
    resid = float(np.linalg.norm(problem.grad_y(x, y)))
    if not resid <= tol:
        raise ConvergenceError("inner solution fails the optimality check", resid)
    return y


def reduced_value(problem, x, inner_tol=None):
    """``F(x, y*(x))``."""
    x = as_vector(x, problem.p, "x")
    return float(problem.value(x, inner_solve(problem, x, inner_tol)))


def reduced_gradient(problem, x, inner_tol=None):
    """Gradient of the reduced objective.

    The ``grad_y`` term of the chain rule vanishes at the inner minimizer, so
    this is just ``grad_x F(x, y*(x))``.
    """
    x = as_vector(x, problem.p, "x")
    y = inner_solve(problem, x, inner_tol)
    return as_vector(problem.grad_x(x, y), problem.p, "grad_x")


def solve_inner_hessian(D, rhs):
    """Solve ``D @ X = rhs`` for the symmetric inner Hessian, refusing if singular."""
    w, V = np.linalg.eigh(D)
    amax = float(np.abs(w).max()) if w.size else 0.0
    amin = float(np.abs(w).min()) if w.size else 0.0
    cond = np.inf if amin == 0.0 else amax / amin
    if not cond <= MAX_CONDITION:
        raise SingularityError(
            f"inner Hessian is singular to working precision (condition {cond:.3e})", cond
        )
    return V @ ((V.T @ rhs) / w[:, None])


def inner_sensitivity(problem, x, inner_tol=None):
    """Jacobian ``dy*/dx = -D^{-1} B`` of the inner solution (``q x p``)."""
    x = as_vector(x, problem.p, "x")
    y = inner_solve(problem, x, inner_tol)
    blocks = problem.hessian_blocks(x, y)
    return -solve_inner_hessian(blocks.D, blocks.B)


def reduced_hessian(problem, x, inner_tol=None):
    """Schur complement ``A - B.T D^{-1} B`` at ``(x, y*(x))``."""
    x = as_vector(x, problem.p, "x")
    y = inner_solve(problem, x, inner_tol)
    blocks = problem.hessian_blocks(x, y)
    S = blocks.A - blocks.B.T @ solve_inner_hessian(blocks.D, blocks.B)
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class ReducedObjective:
    """The reduced problem ``min_x F(x, y*(x))`` bound to a base problem."""

    base: SeparableProblem
    inner_tol: float = None

    @property
    def p(self):
        return self.base.p

    def inner_solve(self, x):
        return inner_solve(self.base, x, self.inner_tol)

    def value(self, x):
        return reduced_value(self.base, x, self.inner_tol)

    def gradient(self, x):
        return reduced_gradient(self.base, x, self.inner_tol)

    def hessian(self, x):
        return reduced_hessian(self.base, x, self.inner_tol)

    def sensitivity(self, x):
        return inner_sensitivity(self.base, x, self.inner_tol)

    __call__ = value
