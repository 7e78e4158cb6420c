"""Optimization drivers: gradient descent, Levenberg-Marquardt, Adam and LSGD."""

import csv
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from ._validation import as_vector
from .exceptions import DivergenceError, ValidationError

LR_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
LAMBDA_MAX = 1e12
MAX_CSV_PARAMS = 16


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 1e-2
    max_iters: int = 200
    grad_tol: float = 1e-10
    lm_lambda0: float = 1e-3
    lm_up: float = 10.0
    lm_down: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValidationError(f"step_size must be positive, got {self.step_size}")
        if self.max_iters < 0:
            raise ValidationError(f"max_iters must be non-negative, got {self.max_iters}")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValidationError("Adam betas must lie in (0, 1)")
        if not self.lm_up > 1 > self.lm_down > 0:
            raise ValidationError("need lm_up > 1 > lm_down > 0")

    def replace(self, **changes):
        return replace(self, **changes)


class Iterate(NamedTuple):
    iter: int
    params: np.ndarray
    objective: float
    grad_norm: float
    step: float


@dataclass
class Trace:
    """Per-iteration optimizer history."""

    iterates: list = field(default_factory=list)
    stalled: bool = False
    converged: bool = False

    def record(self, i, params, objective, grad_norm, step):
        if self.iterates and i <= self.iterates[-1].iter:
            raise ValidationError("iteration indices must strictly increase")
        self.iterates.append(Iterate(int(i), np.array(params, dtype=np.float64, copy=True),
                                     float(objective), float(grad_norm), float(step)))

    def __len__(self):
        return len(self.iterates)

    def __getitem__(self, i):
        return self.iterates[i]

    @property
    def objectives(self):
        return np.array([it.objective for it in self.iterates])

    @property
    def params(self):
        return np.array([it.params for it in self.iterates])

    @property
    def final(self):
        return self.iterates[-1]

    def identical_to(self, other):
        """Bit-for-bit equality of every recorded iterate."""
        if len(self) != len(other) or (self.stalled, self.converged) != (other.stalled, other.converged):
            return False
        return all(
            a.iter == b.iter and a.objective == b.objective and a.grad_norm == b.grad_norm
            and a.step == b.step and np.array_equal(a.params, b.params)
            for a, b in zip(self.iterates, other.iterates)
        )

    def rows(self):
        n = self.iterates[0].params.shape[0] if self.iterates else 0
        header = ["iter", "objective", "grad_norm", "step"]
        with_params = n <= MAX_CSV_PARAMS
        if with_params:
            header += [f"param_{k}" for k in range(n)]
        yield header
        for it in self.iterates:
            row = [it.iter, repr(it.objective), repr(it.grad_norm), repr(it.step)]
            if with_params:
                row += [repr(float(v)) for v in it.params]
            yield row

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(self.rows())
        return path


def _finite(*vals):
    return all(np.all(np.isfinite(v)) for v in vals)


def gradient_descent(value_fn, grad_fn, x0, cfg=OptimizerConfig()):
    """Fixed-step gradient descent ``x <- x - step_size * grad f(x)``.

    Row ``k`` of the trace is the iterate after ``k`` steps. Stops when the
    gradient norm drops to ``grad_tol`` or after ``max_iters`` steps.

    Raises
    ------
    DivergenceError
        When the objective or gradient becomes non-finite; the partial trace
        is attached.
    """
    x = as_vector(x0).copy()
    trace = Trace()
    alpha = cfg.step_size
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(cfg.max_iters + 1):
            f = value_fn(x)
            g = as_vector(grad_fn(x))
            gn = float(np.linalg.norm(g))
            trace.record(k, x, f, gn, alpha)
            if not _finite(f, g):
                raise DivergenceError(f"gradient descent diverged at iteration {k}", trace)
            if gn <= cfg.grad_tol:
                trace.converged = True
                break
            if k == cfg.max_iters:
                break
            x = x - alpha * g
    return trace


def levenberg_marquardt(residual_fn, jacobian_fn, x0, cfg=OptimizerConfig()):
    """Levenberg-Marquardt on ``1/2 ||r(x)||^2``.

    Solves ``(J^T J + lambda I) delta = -J^T r``. A step is accepted when it
    lowers the objective (``lambda *= lm_down``); otherwise ``lambda *= lm_up``
    and the step is retried. One recorded iteration is one accepted step; its
    ``step`` column holds the damping after the update. The run stops when
    ``||J^T r|| <= grad_tol``, after ``max_iters`` accepted steps, or when
    ``lambda`` exceeds ``1e12``, in which case the trace is marked stalled.
    """
    x = as_vector(x0).copy()
    r = as_vector(residual_fn(x))
    J = np.atleast_2d(jacobian_fn(x))
    if J.shape != (r.shape[0], x.shape[0]):
        raise ValidationError(f"Jacobian shape {J.shape} does not match ({r.shape[0]}, {x.shape[0]})")
    f = 0.5 * float(r @ r)
    lam = cfg.lm_lambda0
    g = J.T @ r
    trace = Trace()
    trace.record(0, x, f, np.linalg.norm(g), lam)
    eye = np.eye(x.shape[0])
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, cfg.max_iters + 1):
            if np.linalg.norm(g) <= cfg.grad_tol:
                trace.converged = True
                break
            JTJ = J.T @ J
            while True:
                try:
                    delta = np.linalg.solve(JTJ + lam * eye, -g)
                except np.linalg.LinAlgError:
                    delta = None
                if delta is not None:
                    x_new = x + delta
                    r_new = as_vector(residual_fn(x_new))
                    f_new = 0.5 * float(r_new @ r_new)
                    if np.isfinite(f_new) and f_new < f:
                        break
                lam *= cfg.lm_up
                if lam > LAMBDA_MAX:
                    trace.stalled = True
                    return trace
            lam *= cfg.lm_down
            x, r, f = x_new, r_new, f_new
            J = np.atleast_2d(jacobian_fn(x))
            g = J.T @ r
            trace.record(k, x, f, np.linalg.norm(g), lam)
        else:
            trace.converged = bool(np.linalg.norm(g) <= cfg.grad_tol)
    return trace


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_update(x, g, state, cfg):
    """One bias-corrected Adam step; returns ``(x_new, state_new)``."""
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    t = state.t + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1**t)
    v_hat = v / (1.0 - b2**t)
    return x - cfg.step_size * m_hat / (np.sqrt(v_hat) + cfg.adam_eps), AdamState(m, v, t)


def adam(grad_fn, x0, cfg=OptimizerConfig(), value_fn=None):
    """Full-batch Adam for ``max_iters`` steps.

    The objective column holds ``value_fn(x)`` when given, else NaN.
    """
    x = as_vector(x0).copy()
    state = AdamState.zeros(x.shape[0])
    trace = Trace()
    for k in range(cfg.max_iters + 1):
        g = as_vector(grad_fn(x))
        f = value_fn(x) if value_fn is not None else np.nan
        gn = float(np.linalg.norm(g))
        trace.record(k, x, f, gn, cfg.step_size)
        if not _finite(g):
            raise DivergenceError(f"Adam produced a non-finite gradient at iteration {k}", trace)
        if gn <= cfg.grad_tol:
            trace.converged = True
            break
        if k == cfg.max_iters:
            break
        x, state = adam_update(x, g, state, cfg)
    return trace


def lsgd_step(network, params, cfg, state, ridge=None, return_loss=False):
    """One least-squares gradient descent step.

    First the final linear layer is replaced by its ridge least squares
    optimum for the current hidden parameters, then the hidden parameters take
    one Adam step with that final layer held fixed.

    Returns ``(params_new, state_new)``; ``state`` is the hidden-parameter
    :class:`AdamState`. With ``return_loss`` the loss after the least squares
    phase is appended.
    """
    params = network.solve_final_layer(params, ridge)
    loss, grad = network.loss_and_grad(params)
    hidden, final = network.split(params)
    g_hidden = grad[: network.p]
    if not _finite(g_hidden):
        raise DivergenceError("LSGD produced a non-finite gradient", Trace())
    hidden, state = adam_update(hidden, g_hidden, state, cfg)
    out = network.join(hidden, final)
    return (out, state, loss) if return_loss else (out, state)
