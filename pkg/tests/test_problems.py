import numpy as np
import pytest

from varelim.core import fd_derivative
from varelim.exceptions import ValidationError
from varelim.problems import (
    MLP_DATA,
    RBF_DATA,
    Cubic,
    MatFacRank1,
    ResNetSpec,
    TeacherSpec,
    example_reduced_value,
    get_problem,
    grassmann_reduced_value,
    make_appendix_b,
    make_cubic,
    make_matfac_rank1,
    make_resnet,
    make_rosenbrock,
    make_teacher_student,
    make_two_param,
    orthogonal_complement_basis,
    random_low_rank,
    random_orthonormal_basis,
)
from varelim.problems.resnet import target_function
from varelim.reduction import inner_solve, reduced_gradient, reduced_value


def test_rosenbrock_examples():
    prob = make_rosenbrock()
    assert prob.value(np.array([1.0]), np.array([1.0])) == 0.0
    assert reduced_value(prob, [0.0]) == 1.0
    assert inner_solve(prob, [-1.5])[0] == 2.25


def test_cubic_reduced_closed_form():
    prob = make_cubic()
    for x in range(-2, 5):
        assert abs(reduced_value(prob, [x]) - (x**3 / 3 - x**2 - 3 * x + 7 / 4)) <= 1e-12
        assert Cubic.reduced_closed_form(x) == pytest.approx(x**3 / 3 - x**2 - 3 * x + 7 / 4, abs=1e-12)


def test_matfac_examples():
    prob = make_matfac_rank1()
    for c in (0.1, -1.0, 7.0):
        assert reduced_value(prob, [0.0, c]) == 0.5
        assert reduced_value(prob, [c, 0.0]) == pytest.approx(0.0, abs=1e-15)
    g = np.linspace(-1, 1, 21)
    for a in g:
        for b in g:
            if a == 0 and b == 0:
                continue
            assert abs(reduced_value(prob, [a, b]) - example_reduced_value(a, b)) <= 1e-12


def test_matfac_requires_rank_one_unit_matrix():
    with pytest.raises(ValidationError):
        MatFacRank1(np.eye(2))
    general = MatFacRank1(np.outer([1.0, 2.0, 2.0], [0.6, 0.8]) / 3.0)
    assert general.p == 3 and general.q == 2


def test_grassmann_values():
    rng = np.random.default_rng(0)
    M, svd = random_low_rank(6, 5, 2, rng)
    U, s, Vt = svd
    np.testing.assert_allclose((U * s) @ Vt, M, atol=1e-12)
    assert abs(grassmann_reduced_value(svd, U)) <= 1e-12
    assert grassmann_reduced_value(svd, orthogonal_complement_basis(U, 2)) == pytest.approx(
        0.5 * np.sum(s**2), abs=1e-10)
    for _ in range(20):
        Q = random_orthonormal_basis(6, 2, rng)
        P = Q @ Q.T
        dense = 0.5 * np.linalg.norm(M - P @ M) ** 2
        val = grassmann_reduced_value(svd, Q)
        assert abs(val - dense) <= 1e-12
        assert -1e-12 <= val <= 0.5 * np.sum(s**2) + 1e-12


def test_orthogonal_complement_dimension_check():
    U = np.linalg.qr(np.random.default_rng(0).standard_normal((4, 3)))[0]
    with pytest.raises(ValidationError):
        orthogonal_complement_basis(U, 2)


def test_two_param_datasets_embedded():
    assert MLP_DATA.inputs.shape == (7,) and RBF_DATA.inputs.shape == (12,)
    assert MLP_DATA.targets[-1] == 0.05 and RBF_DATA.inputs[-1] == 2.12
    with pytest.raises(ValueError):
        make_two_param("cnn")


def test_mlp_reduced_curve_has_interior_maximum_between_minima():
    prob = make_two_param("mlp").as_separable()
    w = np.linspace(-8, 8, 321)
    f = np.array([reduced_value(prob, [v]) for v in w])
    i_max = int(np.argmax(f[100:221])) + 100
    assert f[i_max] > f[i_max - 1] and f[i_max] > f[i_max + 1]
    assert f[:i_max].min() < f[i_max] and f[i_max + 1:].min() < f[i_max]


def test_teacher_student_construction():
    prob = make_teacher_student()
    assert prob.model_matrix(prob.teacher_x).shape == (300, 6)
    assert (prob.p, prob.q) == (15, 6)
    np.testing.assert_allclose(prob.predict(prob.teacher_x, prob.teacher_y), prob.z, atol=0)
    other = make_teacher_student(TeacherSpec(seed=1))
    assert not np.allclose(other.teacher_x, prob.teacher_x)


def test_teacher_export(tmp_path):
    prob = make_teacher_student(TeacherSpec(samples=8))
    paths = prob.export_csv(tmp_path)
    assert sorted(p.split("/")[-1] for p in paths) == ["inputs.csv", "targets.csv", "teacher_weights.csv"]
    lines = open(tmp_path / "teacher_weights.csv").read().splitlines()
    assert lines[0] == "kind,unit,index,value" and len(lines) == 1 + 15 + 6


def test_sigmoid_network_derivatives_match_fd():
    prob = make_teacher_student(TeacherSpec(samples=20, hidden_bias=False))
    x = np.random.default_rng(0).uniform(-1, 1, prob.p)
    fd = np.moveaxis(fd_derivative(prob.model_matrix, x), -1, 0)
    np.testing.assert_allclose(prob.model_matrix_derivs(x), fd, atol=1e-8)
    fd2 = np.moveaxis(fd_derivative(prob.model_matrix_derivs, x), -1, 1)
    np.testing.assert_allclose(prob.model_matrix_second_derivs(x), fd2, atol=1e-7)


def test_appendix_b_filtering():
    prob = make_appendix_b()
    assert inner_solve(prob, [0.0])[0] == pytest.approx(3.0, abs=1e-10)
    assert reduced_gradient(prob, [0.0])[0] == pytest.approx(3.0, abs=1e-10)
    z = np.zeros(1)
    assert np.all(prob.grad_x(z, z) == 0) and np.all(prob.grad_y(z, z) == 0)


def test_resnet_gradient_matches_fd():
    net = make_resnet(ResNetSpec(blocks=2, width=4, grid=5))
    rng = np.random.default_rng(0)
    params = net.init_params(rng)
    _, grad = net.loss_and_grad(params)
    h = 1e-6
    for k in rng.choice(net.n_params, size=20, replace=False):
        e = np.zeros(net.n_params)
        e[k] = h
        fd = (net.loss(params + e) - net.loss(params - e)) / (2 * h)
        assert abs(grad[k] - fd) <= 1e-4 * max(abs(fd), 1e-3 * np.abs(grad).max())


def test_resnet_zero_final_layer_and_determinism():
    spec = ResNetSpec()
    net = make_resnet(spec)
    p0 = net.init_params(np.random.default_rng(3), zero_final=True)
    assert net.loss(p0) == pytest.approx(np.mean(0.5 * target_function(net.inputs) ** 2), rel=1e-14)
    a = make_resnet(spec).loss(make_resnet(spec).init_params(np.random.default_rng(5)))
    b = make_resnet(spec).loss(make_resnet(spec).init_params(np.random.default_rng(5)))
    assert a == b


def test_resnet_spec_validation_and_scales():
    with pytest.raises(ValidationError):
        ResNetSpec(width=0)
    with pytest.raises(ValidationError):
        ResNetSpec(embed=False, width=5)
    big = ResNetSpec.paper_scale()
    assert (big.blocks, big.width, big.epochs, big.trials) == (8, 64, 10000, 16)
    assert ResNetSpec().scaled(trials=2).trials == 2


def test_registry():
    assert get_problem("cubic").name == "cubic"
    with pytest.raises(ValueError):
        get_problem("nope")
