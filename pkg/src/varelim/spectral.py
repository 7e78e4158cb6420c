"""Hessian inertia, Haynsworth additivity and stationary-point classification."""

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import as_vector, check_positive, check_symmetric
from .core import HessianBlocks
from .exceptions import HypothesisError, NotStationaryError
from .reduction import inner_solve, reduced_gradient, reduced_value, solve_inner_hessian

STATIONARITY_TOL = 1e-6
ZERO_EIG_RTOL = 1e-8


class Inertia(NamedTuple):
    """Counts of positive, negative and zero eigenvalues."""

    n_plus: int
    n_minus: int
    n_zero: int

    def as_dict(self):
        return self._asdict()


class PointClass(str, enum.Enum):
    MINIMUM = "Minimum"
    MAXIMUM = "Maximum"
    SADDLE = "Saddle"
    DEGENERATE = "Degenerate"


def default_tol(M):
    """Scale-aware zero threshold ``1e-8 * max(1, ||M||_2)``."""
    M = np.atleast_2d(M)
    norm = float(np.linalg.norm(M, 2)) if M.size else 0.0
    return ZERO_EIG_RTOL * max(1.0, norm)


def inertia(M, tol=None):
    """Inertia of the symmetric matrix ``M`` with zero band ``[-tol, tol]``."""
    M = check_symmetric(M, tol=1e-10)
    tol = default_tol(M) if tol is None else check_positive(tol, "tol")
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    return Inertia(int(np.sum(w > tol)), int(np.sum(w < -tol)), int(np.sum(np.abs(w) <= tol)))


def schur_complement(blocks: HessianBlocks):
    S = blocks.A - blocks.B.T @ solve_inner_hessian(blocks.D, blocks.B)
    return 0.5 * (S + S.T)


def haynsworth_check(blocks: HessianBlocks, tol=None):
    """Verify ``In(H) = (q, 0, 0) + In(A - B.T D^{-1} B)`` for ``D`` positive definite.

    Returns ``(inertia_full, inertia_schur, holds)``.
    """
    H = blocks.full()
    tol = default_tol(H) if tol is None else check_positive(tol, "tol")
    in_d = inertia(blocks.D, tol)
    if in_d.n_minus or in_d.n_zero:
        raise HypothesisError(f"inner Hessian D is not positive definite (inertia {tuple(in_d)})")
    in_full = inertia(H, tol)
    in_schur = inertia(schur_complement(blocks), tol)
    expected = Inertia(blocks.q + in_schur.n_plus, in_schur.n_minus, in_schur.n_zero)
    return in_full, in_schur, in_full == expected


def classify_inertia(inn: Inertia):
    """Second-order classification from inertia alone."""
    if inn.n_minus == 0 and inn.n_zero == 0:
        return PointClass.MINIMUM
    if inn.n_plus == 0 and inn.n_zero == 0:
        return PointClass.MAXIMUM
    if inn.n_zero > 0:
        return PointClass.DEGENERATE
    return PointClass.SADDLE


def _resolve_degenerate(fun, v0, H, inn, tol, seed=0):
    # Mixed-sign curvature already certifies a saddle; otherwise probe the
    # objective along the null space of the Hessian.
    if inn.n_zero == 0:
        return classify_inertia(inn)
    if inn.n_plus and inn.n_minus:
        return PointClass.SADDLE
    w, V = np.linalg.eigh(H)
    null = V[:, np.abs(w) <= tol]
    rng = np.random.default_rng(seed)
    dirs = list(null.T)
    if null.shape[1] > 1:
        mix = null @ rng.standard_normal((null.shape[1], 8))
        dirs.extend((mix / np.linalg.norm(mix, axis=0)).T)
    f0 = fun(v0)
    radius = 1e-2 * max(1.0, float(np.linalg.norm(v0)))
    ftol = 1e-12 * max(1.0, abs(f0))
    diffs = np.array([fun(v0 + s * radius * d) - f0 for d in dirs for s in (1.0, -1.0)])
    up, down = bool(np.any(diffs > ftol)), bool(np.any(diffs < -ftol))
    if up and down:
        return PointClass.SADDLE
    if inn.n_minus == 0 and inn.n_plus > 0:
        return PointClass.SADDLE if down else PointClass.MINIMUM
    if inn.n_plus == 0 and inn.n_minus > 0:
        return PointClass.SADDLE if up else PointClass.MAXIMUM
    if up:
        return PointClass.MINIMUM
    if down:
        return PointClass.MAXIMUM
    return PointClass.DEGENERATE


@dataclass(frozen=True)
class StationaryPointReport:
    x: np.ndarray
    y_star: np.ndarray
    grad_norm_full: float
    grad_norm_reduced: float
    inertia_full: Inertia
    inertia_reduced: Inertia
    class_full: PointClass
    class_reduced: PointClass
    haynsworth_ok: bool

    @property
    def verdict_holds(self):
        """Whether the minimum/saddle correspondence holds at this point.

        Reduced minima must be full minima and reduced maxima full saddles;
        degenerate points carry no verdict and count as holding.
        """
        cr, cf = self.class_reduced, self.class_full
        if PointClass.DEGENERATE in (cr, cf):
            return True
        if cr is PointClass.MINIMUM:
            return cf is PointClass.MINIMUM
        if cr is PointClass.MAXIMUM:
            return cf is PointClass.SADDLE
        return cf is PointClass.SADDLE

    def to_dict(self):
        return {
            "x": self.x.tolist(),
            "y_star": self.y_star.tolist(),
            "grad_norm_full": self.grad_norm_full,
            "grad_norm_reduced": self.grad_norm_reduced,
            "inertia_full": self.inertia_full.as_dict(),
            "inertia_reduced": self.inertia_reduced.as_dict(),
            "class_full": self.class_full.value,
            "class_reduced": self.class_reduced.value,
            "haynsworth_ok": self.haynsworth_ok,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def classify_stationary_point(problem, x, tol=None, stationarity_tol=STATIONARITY_TOL,
                              resolve_degenerate=True):
    """Classify ``x`` in the reduced landscape and ``(x, y*(x))`` in the full one.

    Parameters
    ----------
    problem : SeparableProblem
        Must provide Hessian blocks.
    x : array_like
        Candidate stationary point of the reduced objective.
    tol : float, optional
        Eigenvalue zero threshold; defaults to ``1e-8 * max(1, ||H||_2)`` of
        the full Hessian and is shared by both inertia computations.
    stationarity_tol : float
        Maximum reduced gradient norm accepted as stationary.
    resolve_degenerate : bool
        When a Hessian has zero eigenvalues, settle the class by probing the
        objective along its null space instead of reporting ``Degenerate``.

    Raises
    ------
    NotStationaryError
        If the reduced gradient norm exceeds ``stationarity_tol``.
    """
    x = as_vector(x, problem.p, "x")
    g_red = reduced_gradient(problem, x)
    g_red_norm = float(np.linalg.norm(g_red))
    if g_red_norm > stationarity_tol:
        raise NotStationaryError(f"x={x.tolist()} is not stationary", g_red_norm)
    y = inner_solve(problem, x)
    gx, gy = problem.grad_x(x, y), problem.grad_y(x, y)
    g_full_norm = float(np.linalg.norm(np.concatenate([np.atleast_1d(gx), np.atleast_1d(gy)])))

    blocks = problem.hessian_blocks(x, y)
    H = blocks.full()
    tol = default_tol(H) if tol is None else tol
    in_full = inertia(H, tol)
    S = schur_complement(blocks)
    in_red = inertia(S, tol)
    try:
        _, _, h_ok = haynsworth_check(blocks, tol)
    except HypothesisError:
        h_ok = False

    if resolve_degenerate:
        p = problem.p
        theta0 = np.concatenate([x, y])
        cls_full = _resolve_degenerate(lambda t: problem.value(t[:p], t[p:]), theta0, H, in_full, tol)
        cls_red = _resolve_degenerate(lambda v: reduced_value(problem, v), x, S, in_red, tol)
    else:
        cls_full, cls_red = classify_inertia(in_full), classify_inertia(in_red)

    return StationaryPointReport(
        x=x, y_star=y, grad_norm_full=g_full_norm, grad_norm_reduced=g_red_norm,
        inertia_full=in_full, inertia_reduced=in_red,
        class_full=cls_full, class_reduced=cls_red, haynsworth_ok=bool(h_ok),
    )


def random_block_quadratic(p, q, rng):
    """Random Hessian blocks with ``D`` positive definite.

    ``A`` and ``B`` are i.i.d. uniform(-1, 1) with ``A`` symmetrized, and
    ``D = M.T M + 0.1 I`` for a uniform random ``M``.
    """
    A = rng.uniform(-1.0, 1.0, size=(p, p))
    A = 0.5 * (A + A.T)
    B = rng.uniform(-1.0, 1.0, size=(q, p))
    M = rng.uniform(-1.0, 1.0, size=(q, q))
    D = M.T @ M + 0.1 * np.eye(q)
    return HessianBlocks(A, B, 0.5 * (D + D.T))
