import csv
import json
import os

import numpy as np
import pytest

from varelim import experiments
from varelim.cli import main
from varelim.problems import ResNetSpec, TeacherSpec


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def files_equal(a, b):
    with open(a, "rb") as fa, open(b, "rb") as fb:
        return fa.read() == fb.read()


def test_rosenbrock_cli(tmp_path):
    assert main(["rosenbrock", "--out-dir", str(tmp_path), "--max-iters", "20000"]) == 0
    red = read_csv(tmp_path / "reduced_trace.csv")
    assert red[0][:2] == ["iter", "objective"]
    assert float(red[2][4]) == pytest.approx(0.5, abs=1e-12)
    xs = [float(r[4]) for r in red[1:42]]
    assert min(abs(x - 1) for x in xs) < 1e-6
    full = read_csv(tmp_path / "full_trace.csv")
    first = next(i for i, r in enumerate(full[1:]) if float(r[1]) < 1e-6)
    assert first > 1000
    manifest = json.load(open(tmp_path / "manifest.json"))
    assert manifest["experiment"] == "rosenbrock"
    assert set(manifest["outputs"]) == {"full_trace.csv", "reduced_trace.csv"}
    assert manifest["config"]["max_iters"] == 20000


def test_rosenbrock_divergent_step_is_reported(tmp_path):
    m = experiments.run_rosenbrock(str(tmp_path), step_full=0.1, max_iters=100)
    assert m["results"]["full_diverged"]


def test_classify_cli_reports(tmp_path):
    assert main(["classify", "--out-dir", str(tmp_path)]) == 0
    reps = json.load(open(tmp_path / "report.json"))["reports"]
    assert [(r["class_reduced"], r["class_full"]) for r in reps] == [("Maximum", "Saddle"), ("Minimum", "Minimum")]
    assert all(r["haynsworth_ok"] for r in reps)

    assert main(["classify", "--problem", "matfac", "--candidate", "0,1", "--out-dir", str(tmp_path / "m")]) == 0
    rep = json.load(open(tmp_path / "m" / "report.json"))["reports"][0]
    assert (rep["class_reduced"], rep["class_full"]) == ("Maximum", "Saddle")

    assert main(["classify", "--problem", "appendix-b", "--candidate", "0", "--out-dir", str(tmp_path / "b")]) == 0
    rep = json.load(open(tmp_path / "b" / "report.json"))["reports"][0]
    assert rep["stationary"] is False and rep["grad_norm_reduced"] == pytest.approx(3.0)


def test_exit_codes(tmp_path, capsys):
    assert main(["classify", "--problem", "cubic", "--candidate", "1,2", "--out-dir", str(tmp_path)]) == 1
    assert main(["matfac", "--resolution", "1", "--out-dir", str(tmp_path)]) == 1
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["cubic", "--out-dir", str(blocker / "sub")]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["not-a-command"])


def test_landscape_outputs(tmp_path):
    assert main(["landscape", "--model", "mlp", "--wn-res", "41", "--wl-res", "21",
                 "--out-dir", str(tmp_path)]) == 0
    grid = read_csv(tmp_path / "full_grid.csv")
    curve = read_csv(tmp_path / "reduced_curve.csv")
    man = read_csv(tmp_path / "manifold.csv")
    assert grid[0] == ["w_N", "w_L", "cost"] and len(grid) == 1 + 41 * 21
    assert curve[0] == ["w_N", "cost"] and man[0] == ["w_N", "w_L"]
    assert len(curve) == len(man) == 42


@pytest.mark.parametrize("model", ["mlp", "rbf"])
def test_reduced_curve_is_column_minimum(model):
    wn, wl, cost, reduced, wl_star = experiments.landscape_grids(model, resolution=(61, 401))
    prob = experiments.make_two_param(model)
    h = wl[1] - wl[0]
    for i, w in enumerate(wn):
        phi = prob.model_matrix(np.array([w]))[:, 0]
        assert reduced[i] <= cost[i].min() + 1e-15
        inside = wl[0] <= wl_star[i] <= wl[-1]
        if inside:
            assert cost[i].min() - reduced[i] <= 0.5 * (phi @ phi) * (h / 2) ** 2 + 1e-15


def test_landscape_validation(tmp_path):
    assert main(["landscape", "--wn-res", "1", "--out-dir", str(tmp_path)]) == 1
    with pytest.raises(SystemExit):
        main(["landscape", "--wn-range", "1;2"])


@pytest.mark.parametrize("argv", [
    ["cubic", "--resolution", "11"],
    ["matfac", "--resolution", "11"],
    ["grassmann", "--bases", "20"],
    ["landscape", "--model", "rbf", "--wn-res", "9", "--wl-res", "7"],
    ["appendix-a", "--instances", "5"],
    ["appendix-b"],
    ["classify", "--problem", "matfac", "--candidate", "0,1", "--candidate", "1,0"],
])
def test_replay_is_bit_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out-dir", str(a)]) == 0
    assert main(["replay", str(a / "manifest.json"), "--out-dir", str(b)]) == 0
    manifest = json.load(open(a / "manifest.json"))
    for rel in manifest["outputs"] + ["manifest.json"]:
        assert files_equal(a / rel, b / rel), rel


def test_teacher_student_small_run(tmp_path):
    spec = TeacherSpec(samples=40, hidden_units=2)
    m1 = experiments.run_teacher_student(str(tmp_path / "a"), trials=2, max_iters=10, spec=spec)
    m2 = experiments.run_teacher_student(str(tmp_path / "b"), trials=2, max_iters=10, spec=spec, workers=2)
    rows = read_csv(tmp_path / "a" / "summary.csv")
    assert rows[0] == ["trial", "method", "final_lg_rss", "iters", "stalled"]
    assert [r[:2] for r in rows[1:]] == [["0", "varpro"], ["0", "joint"], ["1", "varpro"], ["1", "joint"]]
    assert files_equal(tmp_path / "a" / "summary.csv", tmp_path / "b" / "summary.csv")
    assert m1["results"] == m2["results"]
    # Shared initialization: the joint trace starts from the VarPro start plus y0.
    v = read_csv(tmp_path / "a" / "traces" / "trial_000_varpro.csv")
    j = read_csv(tmp_path / "a" / "traces" / "trial_000_joint.csv")
    p = 2 * 3
    assert v[1][4:4 + p] == j[1][4:4 + p]
    assert os.path.exists(tmp_path / "a" / "data" / "teacher_weights.csv")
    r = experiments.replay(str(tmp_path / "a" / "manifest.json"), str(tmp_path / "c"))
    assert files_equal(tmp_path / "a" / "summary.csv", tmp_path / "c" / "summary.csv")
    assert r["results"] == m1["results"]


def test_teacher_student_rejects_zero_trials(tmp_path):
    assert main(["teacher-student", "--trials", "0", "--out-dir", str(tmp_path)]) == 1


def test_resnet_small_run(tmp_path):
    spec = ResNetSpec(blocks=1, width=4, grid=6, epochs=5, trials=2)
    m = experiments.run_resnet(str(tmp_path / "a"), spec, learning_rates=(1e-2, 1e-3))
    rows = read_csv(tmp_path / "a" / "dynamics.csv")
    assert rows[0] == ["step", "gd_mean", "gd_std", "lsgd_mean", "lsgd_std"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3", "4", "5"]
    assert len(read_csv(tmp_path / "a" / "tuning.csv")) == 1 + 4
    experiments.replay(str(tmp_path / "a" / "manifest.json"), str(tmp_path / "b"))
    assert files_equal(tmp_path / "a" / "dynamics.csv", tmp_path / "b" / "dynamics.csv")
    assert m["results"]["lsgd_learning_rate"] in (1e-2, 1e-3)


def test_grassmann_and_appendix_outputs(tmp_path):
    m = experiments.run_grassmann(str(tmp_path / "g"), n_bases=50)
    assert m["results"]["max_random_value"] <= m["results"]["orthogonal_basis_value"]
    m = experiments.run_appendix_a(str(tmp_path / "a"), n_instances=10)
    assert read_csv(tmp_path / "a" / "residuals.csv")[0] == ["instance", "approx_residual", "exact_residual"]
    assert m["results"]["exact_max"] <= 1e-8
    m = experiments.run_appendix_b(str(tmp_path / "b"))
    assert m["results"]["reduced_gradient_at_0"] == pytest.approx(3.0)
