"""Builtin problem suite."""

from .analytic import AppendixB, Cubic, Quadratic, Rosenbrock, make_appendix_b, make_cubic, make_rosenbrock
from .matfac import (
    EXAMPLE_M,
    MatFacRank1,
    example_reduced_value,
    grassmann_reduced_value,
    make_matfac_rank1,
    orthogonal_complement_basis,
    random_low_rank,
    random_orthonormal_basis,
)
from .networks import (
    MLP_DATA,
    RBF_DATA,
    SigmoidNetworkProblem,
    TeacherSpec,
    TeacherStudentProblem,
    TwoParamDataset,
    make_teacher_student,
    make_two_param,
)
from .resnet import ResNetProblem, ResNetSpec, make_resnet

SEPARABLE_PROBLEMS = {
    "rosenbrock": make_rosenbrock,
    "cubic": make_cubic,
    "matfac": make_matfac_rank1,
    "appendix-b": make_appendix_b,
    "mlp": lambda: make_two_param("mlp").as_separable(),
    "rbf": lambda: make_two_param("rbf").as_separable(),
    "teacher-student": lambda: make_teacher_student().as_separable(),
}


def get_problem(name):
    try:
        return SEPARABLE_PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(SEPARABLE_PROBLEMS)}") from None


__all__ = [
    "AppendixB", "Cubic", "EXAMPLE_M", "MLP_DATA", "MatFacRank1", "Quadratic", "RBF_DATA",
    "ResNetProblem", "ResNetSpec", "Rosenbrock", "SEPARABLE_PROBLEMS", "SigmoidNetworkProblem",
    "TeacherSpec", "TeacherStudentProblem", "TwoParamDataset", "example_reduced_value",
    "get_problem", "grassmann_reduced_value", "make_appendix_b", "make_cubic",
    "make_matfac_rank1", "make_resnet", "make_rosenbrock", "make_teacher_student",
    "make_two_param", "orthogonal_complement_basis", "random_low_rank",
    "random_orthonormal_basis",
]
