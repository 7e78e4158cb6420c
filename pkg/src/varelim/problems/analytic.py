"""Closed-form two-dimensional examples and block quadratics."""

import numpy as np

from ..core import HessianBlocks, SeparablePoint, SeparableProblem


class Rosenbrock(SeparableProblem):
    """``(1 - x)^2 + 100 (y - x^2)^2``; the inner minimizer is ``y = x^2``."""

    p = q = 1
    name = "rosenbrock"

    def value(self, x, y):
        x, y = x[0], y[0]
        return (1.0 - x) ** 2 + 100.0 * (y - x * x) ** 2

    def grad_x(self, x, y):
        x, y = x[0], y[0]
        return np.array([-2.0 * (1.0 - x) - 400.0 * x * (y - x * x)])

    def grad_y(self, x, y):
        return np.array([200.0 * (y[0] - x[0] ** 2)])

    def hessian_blocks(self, x, y):
        x, y = x[0], y[0]
        return HessianBlocks([[2.0 - 400.0 * y + 1200.0 * x * x]], [[-400.0 * x]], [[200.0]])

    def inner_solve(self, x):
        return np.array([x[0] ** 2])


class Cubic(SeparableProblem):
    """``x^3/3 + y^2 + 2xy - 6x - 3y + 4``.

    Saddle at ``(-1, 2.5)``, local minimum at ``(3, -1.5)``; the reduced
    function is ``x^3/3 - x^2 - 3x + 7/4``.
    """

    p = q = 1
    name = "cubic"

    def value(self, x, y):
        x, y = x[0], y[0]
        return x**3 / 3.0 + y * y + 2.0 * x * y - 6.0 * x - 3.0 * y + 4.0

    def grad_x(self, x, y):
        return np.array([x[0] ** 2 + 2.0 * y[0] - 6.0])

    def grad_y(self, x, y):
        return np.array([2.0 * y[0] + 2.0 * x[0] - 3.0])

    def hessian_blocks(self, x, y):
        return HessianBlocks([[2.0 * x[0]]], [[2.0]], [[2.0]])

    def inner_solve(self, x):
        return np.array([(3.0 - 2.0 * x[0]) / 2.0])

    @staticmethod
    def reduced_closed_form(x):
        return x**3 / 3.0 - x**2 - 3.0 * x + 7.0 / 4.0


class AppendixB(SeparableProblem):
    """``xy + y^4/4 - y^3``: a full critical point off the optimal submanifold.

    ``(0, 0)`` is the only critical point of ``F`` but ``y*(0) = 3``, so the
    reduced gradient at ``x = 0`` is ``3``.
    """

    p = q = 1
    name = "appendix-b"

    def value(self, x, y):
        x, y = x[0], y[0]
        return x * y + 0.25 * y**4 - y**3

    def grad_x(self, x, y):
        return np.array([y[0]])

    def grad_y(self, x, y):
        x, y = x[0], y[0]
        return np.array([x + y**3 - 3.0 * y * y])

    def hessian_blocks(self, x, y):
        y = y[0]
        return HessianBlocks([[0.0]], [[1.0]], [[3.0 * y * y - 6.0 * y]])

    def inner_solve(self, x):
        # Global minimizer among the real roots of x + y^3 - 3y^2 = 0.
        x = x[0]
        roots = np.roots([1.0, -3.0, 0.0, x])
        real = roots[np.abs(roots.imag) <= 1e-7 * np.maximum(1.0, np.abs(roots))].real
        cands = []
        for y in real:
            for _ in range(3):
                d = 3.0 * y * y - 6.0 * y
                if d == 0.0:
                    break
                y = y - (x + y**3 - 3.0 * y * y) / d
            cands.append(y)
        vals = np.array([self.value([x], [y]) for y in cands])
        best = vals.min()
        tied = [y for y, v in zip(cands, vals) if v - best <= 1e-12 * max(1.0, abs(best))]
        return np.array([min(tied, key=abs)])

    def sample_x(self, rng):
        # x < 0 keeps y*(x) on a single smooth branch.
        return rng.uniform(-4.0, -0.1, size=1)


class Quadratic(SeparableProblem):
    """``1/2 [x; y]^T H [x; y]`` for Hessian blocks with ``D`` positive definite."""

    name = "quadratic"

    def __init__(self, blocks: HessianBlocks):
        self.blocks = blocks
        self.p, self.q = blocks.p, blocks.q

    def value(self, x, y):
        t = np.concatenate([x, y])
        return 0.5 * float(t @ self.blocks.full() @ t)

    def grad_x(self, x, y):
        return self.blocks.A @ x + self.blocks.B.T @ y

    def grad_y(self, x, y):
        return self.blocks.B @ x + self.blocks.D @ y

    def hessian_blocks(self, x, y):
        return self.blocks

    def inner_solve(self, x):
        return -np.linalg.solve(self.blocks.D, self.blocks.B @ x)

    def sample_point(self, rng):
        return SeparablePoint(rng.uniform(-1, 1, self.p), rng.uniform(-1, 1, self.q))


def make_rosenbrock():
    return Rosenbrock()


def make_cubic():
    return Cubic()


def make_appendix_b():
    return AppendixB()
