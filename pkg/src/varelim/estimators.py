"""Training drivers and scikit-learn style regressors for the network problems.

The functional drivers (:func:`fit_varpro_lm`, :func:`fit_joint_lm`,
:func:`train_adam`, :func:`train_lsgd`) are what the experiments use; the
estimator classes wrap them behind ``fit``/``predict``.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import DivergenceError, ValidationError
from .optimizers import AdamState, OptimizerConfig, Trace, adam_update, levenberg_marquardt, lsgd_step
from .problems.networks import SigmoidNetworkProblem
from .problems.resnet import ResNetProblem, ResNetSpec
from .snlls import JACOBIAN_MODES, reduced_residual, varpro_jacobian


def lg_rss(objective):
    """``log10`` of the residual sum of squares ``2 * objective``, floored at 1e-300."""
    return float(np.log10(max(2.0 * objective, 1e-300)))


def fit_varpro_lm(problem, x0, cfg=OptimizerConfig(), jacobian="kaufman"):
    """Levenberg-Marquardt on the reduced residual ``r(x) = (G G^+ - I) z``."""
    return levenberg_marquardt(
        lambda x: reduced_residual(problem, x),
        lambda x: varpro_jacobian(problem, x, jacobian, strict=False),
        x0, cfg)


def fit_joint_lm(problem, x0, y0, cfg=OptimizerConfig()):
    """Levenberg-Marquardt on ``G(x) y - z`` over the stacked vector ``(x, y)``."""
    p = problem.p
    return levenberg_marquardt(
        lambda t: problem.residual(t[:p], t[p:]),
        lambda t: problem.full_jacobian(t[:p], t[p:]),
        np.concatenate([x0, y0]), cfg)


def train_adam(network, params0, cfg):
    """Plain Adam on all parameters for ``cfg.max_iters`` steps.

    Returns ``(params, losses)`` where ``losses[k]`` is the loss of the
    forward pass whose gradient drives update ``k + 1``.
    """
    params = np.array(params0, dtype=np.float64)
    state = AdamState.zeros(params.shape[0])
    losses = np.empty(cfg.max_iters)
    for k in range(cfg.max_iters):
        losses[k], grad = network.loss_and_grad(params)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"Adam produced a non-finite gradient at step {k + 1}", Trace())
        params, state = adam_update(params, grad, state, cfg)
    return params, losses


def train_lsgd(network, params0, cfg, ridge=None):
    """LSGD on a network for ``cfg.max_iters`` steps.

    Same loss convention as :func:`train_adam`; for LSGD the forward pass
    follows the least squares solve of the final layer.
    """
    params = np.array(params0, dtype=np.float64)
    state = AdamState.zeros(network.p)
    losses = np.empty(cfg.max_iters)
    for k in range(cfg.max_iters):
        params, state, losses[k] = lsgd_step(network, params, cfg, state, ridge, return_loss=True)
    return params, losses


class SigmoidNetworkRegressor(RegressorMixin, BaseEstimator):
    """One hidden layer sigmoid network fit by Levenberg-Marquardt.

    Parameters
    ----------
    hidden_units : int
        Number of sigmoid units.
    method : {"varpro", "joint"}
        ``"varpro"`` optimizes the hidden weights on the reduced residual with
        the output layer eliminated; ``"joint"`` optimizes all weights together.
    jacobian : {"kaufman", "full", "finite_diff"}
        Reduced Jacobian used by ``"varpro"``.
    max_iter : int
        Accepted LM steps.
    hidden_bias : bool
        Whether hidden units carry a bias.
    random_state : int
        Seed of the initial weights.
    """

    def __init__(self, hidden_units=5, method="varpro", jacobian="kaufman", max_iter=200,
                 hidden_bias=True, random_state=0):
        self.hidden_units = hidden_units
        self.method = method
        self.jacobian = jacobian
        self.max_iter = max_iter
        self.hidden_bias = hidden_bias
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.method not in ("varpro", "joint"):
            raise ValidationError(f"method must be 'varpro' or 'joint', got {self.method!r}")
        if self.jacobian not in JACOBIAN_MODES:
            raise ValidationError(f"jacobian must be one of {JACOBIAN_MODES}, got {self.jacobian!r}")
        problem = SigmoidNetworkProblem(X, y, self.hidden_units, hidden_bias=self.hidden_bias)
        x0, y0 = problem.init_params(np.random.default_rng(self.random_state))
        cfg = OptimizerConfig(max_iters=self.max_iter)
        if self.method == "varpro":
            trace = fit_varpro_lm(problem, x0, cfg, self.jacobian)
            self.hidden_weights_ = trace.final.params
            self.output_weights_ = problem.inner_solve(self.hidden_weights_)
        else:
            trace = fit_joint_lm(problem, x0, y0, cfg)
            self.hidden_weights_, self.output_weights_ = np.split(trace.final.params, [problem.p])
        self.trace_ = trace
        self.n_iter_ = trace.final.iter
        self.stalled_ = trace.stalled
        self.n_features_in_ = X.shape[1]
        self._problem = problem
        return self

    def predict(self, X):
        check_is_fitted(self, "hidden_weights_")
        X = check_array(X, dtype=np.float64)
        return self._problem.predict(self.hidden_weights_, self.output_weights_, X)


class ResNetRegressor(RegressorMixin, BaseEstimator):
    """Residual tanh network trained by Adam or LSGD on full batches.

    ``loss_curve_[k]`` is the training loss seen by step ``k + 1``.
    """

    def __init__(self, blocks=4, width=16, solver="lsgd", learning_rate=1e-3, max_iter=2000,
                 random_state=0):
        self.blocks = blocks
        self.width = width
        self.solver = solver
        self.learning_rate = learning_rate
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True)
        if self.solver not in ("adam", "lsgd"):
            raise ValidationError(f"solver must be 'adam' or 'lsgd', got {self.solver!r}")
        spec = ResNetSpec(blocks=self.blocks, width=self.width, epochs=self.max_iter)
        network = ResNetProblem(spec, X, y)
        params0 = network.init_params(np.random.default_rng(self.random_state))
        cfg = OptimizerConfig(step_size=self.learning_rate, max_iters=self.max_iter)
        train = train_adam if self.solver == "adam" else train_lsgd
        self.params_, self.loss_curve_ = train(network, params0, cfg)
        self.n_features_in_ = X.shape[1]
        self._network = network
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=np.float64)
        return self._network.predict(self.params_, X)
