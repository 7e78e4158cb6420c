"""Residual tanh network regression on a 2-D grid, with manual backpropagation.

Parameters live in one flat vector laid out as: input embedding ``(W_in, b_in)``,
then ``(W1, b1, W2, b2)`` per residual block, then the final linear layer
``(w_out, b_out)``. The final layer is the block of linear parameters; all
others are hidden (nonlinear) parameters.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..core import SeparableProblem
from ..exceptions import CapabilityError, RankError, ValidationError
from ..snlls import pinv_solve


@dataclass(frozen=True)
class ResNetSpec:
    blocks: int = 4
    width: int = 16
    grid: int = 32
    epochs: int = 2000
    trials: int = 8
    embed: bool = True

    def __post_init__(self):
        if self.blocks < 0 or self.width < 1 or self.grid < 2 or self.epochs < 1 or self.trials < 1:
            raise ValidationError(f"invalid ResNet spec {self}")
        if not self.embed and self.width != 2:
            raise ValidationError("without an input embedding the width must equal the input dim (2)")

    @classmethod
    def paper_scale(cls):
        return cls(blocks=8, width=64, epochs=10000, trials=16)

    def scaled(self, **changes):
        return replace(self, **changes)


def target_function(inputs):
    return np.sin(2.0 * np.pi * inputs[:, 0]) * np.cos(2.0 * np.pi * inputs[:, 1])


def grid_inputs(n):
    g = np.linspace(0.0, 1.0, n)
    a, b = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([a.ravel(), b.ravel()])


class ResNetProblem(SeparableProblem):
    """Mean squared error ``mean(1/2 (f(u) - t)^2)`` of a residual tanh network.

    Each block maps ``h -> h + W2 tanh(W1 h + b1) + b2``.
    """

    name = "resnet"
    inner_tol = 1e-8

    def __init__(self, spec: ResNetSpec, inputs=None, targets=None):
        self.spec = spec
        self.inputs = grid_inputs(spec.grid) if inputs is None else np.asarray(inputs, float)
        self.targets = target_function(self.inputs) if targets is None else np.asarray(targets, float)
        self.inputs.setflags(write=False)
        self.targets.setflags(write=False)
        self.m, self.input_dim = self.inputs.shape
        w, d = spec.width, self.input_dim
        shapes = []
        if spec.embed:
            shapes += [("W_in", (w, d), d), ("b_in", (w,), d)]
        for i in range(spec.blocks):
            shapes += [(f"W1_{i}", (w, w), w), (f"b1_{i}", (w,), w),
                       (f"W2_{i}", (w, w), w), (f"b2_{i}", (w,), w)]
        shapes += [("w_out", (w,), w), ("b_out", (1,), w)]
        self._layout = []
        offset = 0
        for name, shape, fan_in in shapes:
            size = int(np.prod(shape))
            self._layout.append((name, shape, slice(offset, offset + size), fan_in))
            offset += size
        self.n_params = offset
        self.q = w + 1
        self.p = offset - self.q

    # --- parameter handling -------------------------------------------------
    def unpack(self, params):
        params = np.asarray(params, dtype=np.float64)
        if params.shape != (self.n_params,):
            raise ValidationError(f"expected {self.n_params} parameters, got {params.shape}")
        return {name: params[sl].reshape(shape) for name, shape, sl, _ in self._layout}

    def split(self, params):
        return params[: self.p], params[self.p:]

    def join(self, hidden, final):
        return np.concatenate([hidden, final])

    def init_params(self, rng, zero_final=False):
        """Uniform(-r, r) initialization with ``r = 1/sqrt(fan_in)``."""
        out = np.empty(self.n_params)
        for _, _, sl, fan_in in self._layout:
            r = 1.0 / np.sqrt(fan_in)
            out[sl] = rng.uniform(-r, r, size=sl.stop - sl.start)
        if zero_final:
            out[self.p:] = 0.0
        return out

    # --- forward / backward -------------------------------------------------
    def _forward(self, P):
        H = self.inputs @ P["W_in"].T + P["b_in"] if self.spec.embed else self.inputs
        cache = []
        for i in range(self.spec.blocks):
            T = np.tanh(H @ P[f"W1_{i}"].T + P[f"b1_{i}"])
            cache.append((H, T))
            H = H + T @ P[f"W2_{i}"].T + P[f"b2_{i}"]
        return H, cache

    def features(self, params):
        """Last hidden layer activations, shape ``(m, width)``."""
        return self._forward(self.unpack(params))[0]

    def predict(self, params, inputs=None):
        if inputs is not None:
            return ResNetProblem(self.spec, inputs, np.zeros(len(inputs))).predict(params)
        P = self.unpack(params)
        return self._forward(P)[0] @ P["w_out"] + P["b_out"][0]

    def loss(self, params):
        r = self.predict(params) - self.targets
        return 0.5 * float(r @ r) / self.m

    def loss_and_grad(self, params):
        """Loss and its gradient by reverse-mode differentiation."""
        P = self.unpack(params)
        H, cache = self._forward(P)
        r = H @ P["w_out"] + P["b_out"][0] - self.targets
        loss = 0.5 * float(r @ r) / self.m
        dpred = r / self.m
        G = {"w_out": H.T @ dpred, "b_out": np.array([dpred.sum()])}
        dH = np.outer(dpred, P["w_out"])
        for i in reversed(range(self.spec.blocks)):
            H_prev, T = cache[i]
            G[f"W2_{i}"] = dH.T @ T
            G[f"b2_{i}"] = dH.sum(axis=0)
            dZ = (dH @ P[f"W2_{i}"]) * (1.0 - T * T)
            G[f"W1_{i}"] = dZ.T @ H_prev
            G[f"b1_{i}"] = dZ.sum(axis=0)
            dH = dH + dZ @ P[f"W1_{i}"]
        if self.spec.embed:
            G["W_in"] = dH.T @ self.inputs
            G["b_in"] = dH.sum(axis=0)
        grad = np.empty(self.n_params)
        for name, _, sl, _ in self._layout:
            grad[sl] = G[name].ravel()
        return loss, grad

    # --- linear layer -------------------------------------------------------
    def design(self, params):
        H = self.features(params)
        return np.hstack([H, np.ones((self.m, 1))])

    def ridge_coefficient(self):
        return 1e-8 * self.m

    def solve_final_layer(self, params, ridge=None):
        """Replace the final layer by the ridge least squares optimum.

        Minimizes ``1/2 ||Phi w - t||^2 + ridge/2 ||w||^2`` with ``Phi`` the
        hidden design matrix; ``ridge=None`` means ``1e-8 * m``.
        """
        ridge = self.ridge_coefficient() if ridge is None else ridge
        Phi = self.design(params)
        lhs = Phi.T @ Phi + ridge * np.eye(self.q)
        rhs = Phi.T @ self.targets
        try:
            factor = cho_factor(lhs)
        except np.linalg.LinAlgError:
            raise RankError("design matrix is singular; use a positive ridge") from None
        return self.join(params[: self.p], cho_solve(factor, rhs))

    def final_layer_gradient(self, params, ridge=None):
        """Gradient of ``loss + ridge/(2m) ||w||^2`` in the final-layer weights."""
        ridge = self.ridge_coefficient() if ridge is None else ridge
        _, g = self.loss_and_grad(params)
        return g[self.p:] + ridge * params[self.p:] / self.m

    # --- SeparableProblem view (x = hidden, y = final layer) ----------------
    def value(self, x, y):
        return self.loss(self.join(x, y))

    def grad_x(self, x, y):
        return self.loss_and_grad(self.join(x, y))[1][: self.p]

    def grad_y(self, x, y):
        return self.loss_and_grad(self.join(x, y))[1][self.p:]

    def hessian_blocks(self, x, y):
        raise CapabilityError("the ResNet problem provides gradients only, not Hessian blocks")

    def inner_solve(self, x):
        Phi = self.design(self.join(x, np.zeros(self.q)))
        return pinv_solve(Phi, self.targets)


def make_resnet(spec=ResNetSpec()):
    return ResNetProblem(spec)
