"""Small sigmoid/RBF networks posed as SNLLS problems."""

import csv
import os
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..snlls import SnllsProblem


@dataclass(frozen=True)
class TwoParamDataset:
    inputs: np.ndarray
    targets: np.ndarray


MLP_DATA = TwoParamDataset(
    inputs=np.array([-0.5, -0.2, 0.0, 0.3, 0.8, 0.5, -0.11]),
    targets=np.array([-0.02, -0.03, -0.01, -0.03, 0.02, 0.02, 0.05]),
)
RBF_DATA = TwoParamDataset(
    inputs=np.array([1.4, -2.1, 0.7, 0.5, 1.2, -1.5, 1.0, 2.1, -0.3, -0.6, -1.0, 2.12]),
    targets=np.array([-0.2, -0.6, 0.2, 0.2, -1.5, 0.1, -0.5, -1.0, 1.0, 2.0, 3.0, -2.1]),
)
for _d in (MLP_DATA, RBF_DATA):
    _d.inputs.setflags(write=False)
    _d.targets.setflags(write=False)


def _sigmoid_derivs(a):
    s = expit(a)
    d1 = s * (1.0 - s)
    return s, d1, d1 * (1.0 - 2.0 * s)


def make_two_param(model="mlp"):
    """One nonlinear weight ``w_N`` and one linear weight ``w_L``.

    ``mlp``: ``w_L * sigmoid(w_N * x)``; ``rbf``: ``w_L * exp(-(x - w_N)^2)``.
    """
    if model == "mlp":
        X = MLP_DATA.inputs

        def G(w):
            return expit(w[0] * X)[:, None]

        def dG(w):
            return (X * _sigmoid_derivs(w[0] * X)[1])[None, :, None]

        def d2G(w):
            return (X * X * _sigmoid_derivs(w[0] * X)[2])[None, None, :, None]

        data = MLP_DATA
    elif model == "rbf":
        X = RBF_DATA.inputs

        def G(w):
            return np.exp(-((X - w[0]) ** 2))[:, None]

        def dG(w):
            d = X - w[0]
            return (2.0 * d * np.exp(-d * d))[None, :, None]

        def d2G(w):
            d = X - w[0]
            return ((4.0 * d * d - 2.0) * np.exp(-d * d))[None, None, :, None]

        data = RBF_DATA
    else:
        raise ValueError(f"model must be 'mlp' or 'rbf', got {model!r}")
    prob = SnllsProblem(G, data.targets, p=1, model_matrix_derivs=dG,
                        model_matrix_second_derivs=d2G, name=model)
    prob.dataset = data
    return prob


@dataclass(frozen=True)
class TeacherSpec:
    hidden_units: int = 5
    samples: int = 300
    input_dim: int = 2
    weight_scale: float = 1.5
    seed: int = 0
    hidden_bias: bool = True


def sigmoid_design(inputs, hidden, hidden_bias=True):
    """Design matrix ``[sigmoid(U w_j + b_j) ..., 1]`` and pre-activations.

    ``hidden`` is the flat vector of per-unit ``(w_j, b_j)`` blocks, or of
    ``w_j`` alone when ``hidden_bias`` is false.
    """
    n, d = inputs.shape
    k = d + 1 if hidden_bias else d
    W = np.asarray(hidden).reshape(-1, k)
    A = inputs @ W[:, :d].T
    if hidden_bias:
        A = A + W[:, d]
    return np.hstack([expit(A), np.ones((n, 1))]), A


class SigmoidNetworkProblem(SnllsProblem):
    """Single hidden layer sigmoid network with linear output, as SNLLS.

    Nonlinear parameters are the hidden weights and biases, one ``(w_j, b_j)``
    block of length ``input_dim + 1`` per unit; the linear parameters are the
    output weights followed by the output bias.
    """

    def __init__(self, inputs, targets, hidden_units, hidden_bias=True, name="sigmoid-network"):
        self.inputs = np.array(inputs, dtype=np.float64)
        self.inputs.setflags(write=False)
        self.hidden_units = hidden_units
        self.hidden_bias = hidden_bias
        self.input_dim = self.inputs.shape[1]
        self._aug = (np.hstack([self.inputs, np.ones((len(self.inputs), 1))])
                     if hidden_bias else self.inputs)
        self.unit_size = self._aug.shape[1]
        super().__init__(self._design, targets, p=hidden_units * self.unit_size,
                         model_matrix_derivs=self._design_derivs,
                         model_matrix_second_derivs=self._design_second_derivs, name=name)

    def _design(self, x):
        return sigmoid_design(self.inputs, x, self.hidden_bias)[0]

    def _unit_terms(self, x, order):
        _, A = sigmoid_design(self.inputs, x, self.hidden_bias)
        return _sigmoid_derivs(A)[order]

    def _design_derivs(self, x):
        h, k = self.hidden_units, self.unit_size
        s1 = self._unit_terms(x, 1)
        out = np.zeros((h * k, len(self.inputs), h + 1))
        for j in range(h):
            out[j * k:(j + 1) * k, :, j] = (s1[:, j:j + 1] * self._aug).T
        return out

    def _design_second_derivs(self, x):
        h, k = self.hidden_units, self.unit_size
        s2 = self._unit_terms(x, 2)
        n = len(self.inputs)
        out = np.zeros((h * k, h * k, n, h + 1))
        outer = self._aug[:, :, None] * self._aug[:, None, :]
        for j in range(h):
            blk = np.moveaxis(s2[:, j, None, None] * outer, 0, -1)
            out[j * k:(j + 1) * k, j * k:(j + 1) * k, :, j] = blk
        return out

    def init_params(self, rng):
        """Student initialization, uniform(-r, r) with ``r = 1/sqrt(fan_in)``."""
        r_hidden = 1.0 / np.sqrt(self.input_dim)
        r_out = 1.0 / np.sqrt(self.hidden_units)
        return (rng.uniform(-r_hidden, r_hidden, size=self.p),
                rng.uniform(-r_out, r_out, size=self.q))

    def predict(self, x, y, inputs=None):
        inputs = self.inputs if inputs is None else np.asarray(inputs, dtype=np.float64)
        return sigmoid_design(inputs, x, self.hidden_bias)[0] @ y


class TeacherStudentProblem(SigmoidNetworkProblem):
    """Student fit to noise-free outputs of a random teacher of the same shape."""

    def __init__(self, spec: TeacherSpec):
        rng = np.random.default_rng(spec.seed)
        h, d, c = spec.hidden_units, spec.input_dim, spec.weight_scale
        k = d + 1 if spec.hidden_bias else d
        teacher_x = rng.uniform(-c, c, size=h * k)
        teacher_y = rng.uniform(-c, c, size=h + 1)
        inputs = rng.uniform(-1.0, 1.0, size=(spec.samples, d))
        targets = sigmoid_design(inputs, teacher_x, spec.hidden_bias)[0] @ teacher_y
        super().__init__(inputs, targets, h, hidden_bias=spec.hidden_bias, name="teacher-student")
        self.spec = spec
        self.teacher_x, self.teacher_y = teacher_x, teacher_y

    def export_csv(self, out_dir):
        """Write ``inputs.csv``, ``targets.csv`` and ``teacher_weights.csv``."""
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        d = self.input_dim
        rows = {
            "inputs.csv": ([f"u{i}" for i in range(d)], self.inputs.tolist()),
            "targets.csv": (["z"], [[v] for v in self.z.tolist()]),
            "teacher_weights.csv": (
                ["kind", "unit", "index", "value"],
                [["hidden", j, i, float(w)]
                 for j, blk in enumerate(self.teacher_x.reshape(-1, self.unit_size))
                 for i, w in enumerate(blk)]
                + [["output", j, 0, float(w)] for j, w in enumerate(self.teacher_y)],
            ),
        }
        for fname, (header, body) in rows.items():
            path = os.path.join(out_dir, fname)
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(body)
            paths.append(path)
        return paths


def make_teacher_student(spec=TeacherSpec()):
    return TeacherStudentProblem(spec)
