"""Experiment runners that write CSV/JSON data files plus a manifest.

Every ``run_*`` function takes an output directory and keyword parameters,
writes its files, writes ``manifest.json`` describing the run, and returns the
manifest as a dict. :func:`replay` reruns an experiment from a manifest.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .estimators import fit_joint_lm, fit_varpro_lm, lg_rss, train_adam, train_lsgd
from .exceptions import DivergenceError, NotStationaryError, ValidationError
from .optimizers import LR_GRID, OptimizerConfig, gradient_descent
from .problems import (
    Cubic,
    ResNetSpec,
    SigmoidNetworkProblem,
    TeacherSpec,
    example_reduced_value,
    get_problem,
    grassmann_reduced_value,
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
from .reduction import inner_solve, reduced_gradient, reduced_value
from .snlls import delta_y_approx, delta_y_exact, inner_residual_norm
from .spectral import classify_stationary_point

LANDSCAPE_DEFAULTS = {
    "mlp": {"wn_range": (-8.0, 8.0), "wl_range": (-0.02, 0.02)},
    "rbf": {"wn_range": (-3.0, 3.0), "wl_range": (-4.0, 4.0)},
}


# --- file helpers -------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return str(v)


def write_csv(path, header, rows):
    """Write one header row then ``rows``; floats use ``repr`` and ``\\n`` line ends."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _prepare(out_dir):
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir!r}: {exc}") from exc
    return out_dir


def _finish(out_dir, experiment, config, outputs, extra=None):
    manifest = {
        "experiment": experiment,
        "config": config,
        "version": __version__,
        "outputs": sorted(os.path.relpath(p, out_dir) for p in outputs),
    }
    if extra:
        manifest["results"] = extra
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def _json_ready(v):
    if isinstance(v, tuple):
        return [_json_ready(u) for u in v]
    if isinstance(v, list):
        return [_json_ready(u) for u in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def _trial_rng(seed, trial):
    return np.random.default_rng(seed + trial)


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


# --- Rosenbrock ------------------------------------------------------------------

def _gd_safe(value_fn, grad_fn, x0, cfg):
    try:
        return gradient_descent(value_fn, grad_fn, x0, cfg), False
    except DivergenceError as exc:
        return exc.trace, True


def run_rosenbrock(out_dir, step_full=1e-3, step_reduced=0.4, max_iters=100_000):
    """Gradient descent on the full and reduced Rosenbrock function from x = -1.5.

    Writes ``full_trace.csv`` (from ``(-1.5, 2.25)``) and ``reduced_trace.csv``.
    """
    _prepare(out_dir)
    prob = make_rosenbrock()
    full, full_div = _gd_safe(
        lambda t: prob.value(t[:1], t[1:]),
        lambda t: np.concatenate([prob.grad_x(t[:1], t[1:]), prob.grad_y(t[:1], t[1:])]),
        np.array([-1.5, 2.25]), OptimizerConfig(step_size=step_full, max_iters=max_iters))
    red, red_div = _gd_safe(
        lambda x: reduced_value(prob, x), lambda x: reduced_gradient(prob, x),
        np.array([-1.5]), OptimizerConfig(step_size=step_reduced, max_iters=max_iters))
    paths = [full.to_csv(os.path.join(out_dir, "full_trace.csv")),
             red.to_csv(os.path.join(out_dir, "reduced_trace.csv"))]

    def first_below(trace, thresh):
        hits = np.flatnonzero(trace.objectives < thresh)
        return int(trace[hits[0]].iter) if hits.size else None

    results = {
        "full_diverged": full_div, "reduced_diverged": red_div,
        "full_iters_to_1e-6": first_below(full, 1e-6),
        "reduced_iters_to_1e-6": first_below(red, 1e-6),
    }
    config = {"step_full": step_full, "step_reduced": step_reduced, "max_iters": max_iters}
    return _finish(out_dir, "rosenbrock", config, paths, results)


# --- cubic and rank-1 factorization ---------------------------------------------

def _classify_many(problem, candidates, stationarity_tol=1e-6):
    out = []
    for c in candidates:
        c = np.atleast_1d(np.asarray(c, dtype=np.float64))
        try:
            rep = classify_stationary_point(problem, c, stationarity_tol=stationarity_tol)
            out.append({"stationary": True, "verdict_holds": rep.verdict_holds, **rep.to_dict()})
        except NotStationaryError as exc:
            out.append({"stationary": False, "x": c.tolist(), "grad_norm_reduced": exc.grad_norm,
                        "reduced_gradient": np.atleast_1d(reduced_gradient(problem, c)).tolist()})
    return out


def run_cubic(out_dir, x_range=(-3.0, 5.0), y_range=(-4.0, 6.0), resolution=161):
    """Full surface, reduced curve and the classification of ``x = -1`` and ``x = 3``."""
    _check_resolution(resolution)
    _prepare(out_dir)
    prob = make_cubic()
    xs = np.linspace(*x_range, resolution)
    ys = np.linspace(*y_range, resolution)
    grid = write_csv(os.path.join(out_dir, "full_grid.csv"), ["x", "y", "cost"],
                     ([x, y, prob.value(np.array([x]), np.array([y]))] for x in xs for y in ys))
    curve = write_csv(os.path.join(out_dir, "reduced_curve.csv"), ["x", "reduced", "closed_form", "y_star"],
                      ([x, reduced_value(prob, np.array([x])), Cubic.reduced_closed_form(x),
                        inner_solve(prob, np.array([x]))[0]] for x in xs))
    reports = _classify_many(prob, [-1.0, 3.0])
    rep = write_json(os.path.join(out_dir, "classification.json"), {"problem": "cubic", "reports": reports})
    config = {"x_range": list(x_range), "y_range": list(y_range), "resolution": resolution}
    return _finish(out_dir, "cubic", config, [grid, curve, rep])


def run_matfac(out_dir, extent=1.0, resolution=101):
    """Reduced rank-1 factorization landscape on ``[-extent, extent]^2``.

    The origin, where the inner problem is undefined, is written as ``nan``.
    """
    _check_resolution(resolution)
    _prepare(out_dir)
    prob = make_matfac_rank1()
    g = np.linspace(-extent, extent, resolution)
    rows = []
    for a in g:
        for b in g:
            if a == 0.0 and b == 0.0:
                rows.append([a, b, np.nan, np.nan])
            else:
                rows.append([a, b, reduced_value(prob, np.array([a, b])), example_reduced_value(a, b)])
    grid = write_csv(os.path.join(out_dir, "reduced_grid.csv"), ["x1", "x2", "reduced", "closed_form"], rows)
    reports = _classify_many(prob, [[0.0, 1.0], [1.0, 0.0]])
    rep = write_json(os.path.join(out_dir, "classification.json"), {"problem": "matfac", "reports": reports})
    return _finish(out_dir, "matfac", {"extent": extent, "resolution": resolution}, [grid, rep])


def run_grassmann(out_dir, d1=6, d2=5, rank=2, n_bases=1000, seed=0):
    """Reduced rank-r factorization value over random subspaces versus the orthogonal one."""
    _prepare(out_dir)
    rng = np.random.default_rng(seed)
    M, svd = random_low_rank(d1, d2, rank, rng)
    U, s, _ = svd
    f_orth = grassmann_reduced_value(svd, orthogonal_complement_basis(U, rank))
    f_opt = grassmann_reduced_value(svd, U)
    vals = [grassmann_reduced_value(svd, random_orthonormal_basis(d1, rank, rng)) for _ in range(n_bases)]
    bases = write_csv(os.path.join(out_dir, "random_bases.csv"), ["basis", "reduced"], enumerate(vals))
    results = {
        "half_sum_sq_sigma": 0.5 * float(np.sum(s**2)),
        "orthogonal_basis_value": f_orth,
        "optimal_basis_value": f_opt,
        "max_random_value": float(max(vals)),
        "min_random_value": float(min(vals)),
        "singular_values": s.tolist(),
    }
    summ = write_json(os.path.join(out_dir, "summary.json"), results)
    config = {"d1": d1, "d2": d2, "rank": rank, "n_bases": n_bases, "seed": seed}
    return _finish(out_dir, "grassmann", config, [bases, summ], results)


# --- two-parameter landscapes ------------------------------------------------------

def _check_resolution(*res):
    for r in res:
        if int(r) < 2:
            raise ValidationError(f"grid resolution must be at least 2, got {r}")


def landscape_grids(model, wn_range=None, wl_range=None, resolution=(201, 201)):
    """Full cost grid, reduced curve and optimal ``w_L`` curve for a two-parameter model.

    Returns ``(wn, wl, cost, reduced, wl_star)`` with ``cost[i, j]`` at
    ``(wn[i], wl[j])``.
    """
    defaults = LANDSCAPE_DEFAULTS[model]
    wn_range = defaults["wn_range"] if wn_range is None else wn_range
    wl_range = defaults["wl_range"] if wl_range is None else wl_range
    n_wn, n_wl = resolution
    _check_resolution(n_wn, n_wl)
    prob = make_two_param(model)
    wn = np.linspace(*wn_range, n_wn)
    wl = np.linspace(*wl_range, n_wl)
    z = prob.z
    cost = np.empty((n_wn, n_wl))
    reduced = np.empty(n_wn)
    wl_star = np.empty(n_wn)
    for i, w in enumerate(wn):
        phi = prob.model_matrix(np.array([w]))[:, 0]
        res = wl[:, None] * phi[None, :] - z[None, :]
        cost[i] = 0.5 * np.sum(res * res, axis=1)
        wl_star[i] = prob.inner_solve(np.array([w]))[0]
        r = wl_star[i] * phi - z
        reduced[i] = 0.5 * float(r @ r)
    return wn, wl, cost, reduced, wl_star


def run_landscape(out_dir, model="mlp", wn_range=None, wl_range=None, resolution=(201, 201)):
    """Write ``full_grid.csv`` (``w_N,w_L,cost``), ``reduced_curve.csv`` (``w_N,cost``)
    and ``manifold.csv`` (``w_N,w_L``)."""
    if model not in LANDSCAPE_DEFAULTS:
        raise ValidationError(f"model must be one of {sorted(LANDSCAPE_DEFAULTS)}, got {model!r}")
    _prepare(out_dir)
    wn, wl, cost, reduced, wl_star = landscape_grids(model, wn_range, wl_range, resolution)
    grid = write_csv(os.path.join(out_dir, "full_grid.csv"), ["w_N", "w_L", "cost"],
                     ([a, b, cost[i, j]] for i, a in enumerate(wn) for j, b in enumerate(wl)))
    curve = write_csv(os.path.join(out_dir, "reduced_curve.csv"), ["w_N", "cost"], zip(wn, reduced))
    man = write_csv(os.path.join(out_dir, "manifold.csv"), ["w_N", "w_L"], zip(wn, wl_star))
    config = {"model": model, "wn_range": [float(wn[0]), float(wn[-1])],
              "wl_range": [float(wl[0]), float(wl[-1])], "resolution": list(resolution)}
    return _finish(out_dir, "landscape", config, [grid, curve, man])


# --- teacher-student --------------------------------------------------------------

def _teacher_trial(args):
    spec, seed, trial, max_iters, jacobian = args
    prob = make_teacher_student(spec)
    x0, y0 = prob.init_params(_trial_rng(seed, trial))
    cfg = OptimizerConfig(max_iters=max_iters)
    return {"varpro": fit_varpro_lm(prob, x0, cfg, jacobian),
            "joint": fit_joint_lm(prob, x0, y0, cfg)}


def run_teacher_student(out_dir, trials=20, seed=0, max_iters=200, jacobian="kaufman",
                        spec=None, workers=1):
    """VarPro-LM versus joint-LM from shared initializations.

    The teacher data is drawn from ``spec.seed`` (``seed`` when no spec is
    given); trial ``k`` draws its initial weights from ``default_rng(seed + k)``.
    Writes ``summary.csv``, per-trial traces under ``traces/`` and the teacher data.
    """
    if trials < 1:
        raise ValidationError(f"trials must be at least 1, got {trials}")
    spec = TeacherSpec(seed=seed) if spec is None else spec
    _prepare(out_dir)
    os.makedirs(os.path.join(out_dir, "traces"), exist_ok=True)
    runs = _map(_teacher_trial, [(spec, seed, k, max_iters, jacobian) for k in range(trials)], workers)
    rows, paths = [], []
    for k, res in enumerate(runs):
        for method in ("varpro", "joint"):
            tr = res[method]
            rows.append([k, method, lg_rss(tr.final.objective), tr.final.iter, tr.stalled])
            paths.append(tr.to_csv(os.path.join(out_dir, "traces", f"trial_{k:03d}_{method}.csv")))
    paths.append(write_csv(os.path.join(out_dir, "summary.csv"),
                           ["trial", "method", "final_lg_rss", "iters", "stalled"], rows))
    paths += make_teacher_student(spec).export_csv(os.path.join(out_dir, "data"))
    results = teacher_student_stats(rows)
    config = {"trials": trials, "seed": seed, "max_iters": max_iters, "jacobian": jacobian,
              "spec": {k: _json_ready(v) for k, v in vars(spec).items()}, "workers": workers}
    return _finish(out_dir, "teacher-student", config, paths, results)


def teacher_student_stats(rows):
    """Medians and the fraction of VarPro trials at ``lg RSS <= -10`` from summary rows."""
    lg = {m: np.array([r[2] for r in rows if r[1] == m]) for m in ("varpro", "joint")}
    return {
        "varpro_median_lg_rss": float(np.median(lg["varpro"])),
        "joint_median_lg_rss": float(np.median(lg["joint"])),
        "varpro_fraction_le_minus10": float(np.mean(lg["varpro"] <= -10.0)),
        "joint_fraction_gt_minus2": float(np.mean(lg["joint"] > -2.0)),
    }


# --- ResNet ---------------------------------------------------------------------

def _resnet_trial(args):
    spec, seed, trial, method, lr = args
    net = make_resnet(spec)
    params0 = net.init_params(_trial_rng(seed, trial))
    cfg = OptimizerConfig(step_size=lr, max_iters=spec.epochs)
    train = train_adam if method == "gd" else train_lsgd
    try:
        _, losses = train(net, params0, cfg)
    except (DivergenceError, ArithmeticError):
        losses = np.full(spec.epochs, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log10(losses)
    return np.where(np.isfinite(out), out, np.inf)


def run_resnet(out_dir, spec=None, seed=0, learning_rates=LR_GRID, workers=1):
    """Adam (``gd``) versus LSGD on the residual network, learning rates tuned per method.

    For each method the learning rate with the lowest across-trial mean of the
    final log10 loss is kept; ``dynamics.csv`` holds the per-step mean and std
    of log10 loss for the kept rates, ``tuning.csv`` every candidate's score.
    """
    spec = ResNetSpec() if spec is None else spec
    _prepare(out_dir)
    curves, tuning = {}, []
    for method in ("gd", "lsgd"):
        best = None
        for lr in learning_rates:
            logs = np.array(_map(_resnet_trial, [(spec, seed, k, method, lr) for k in range(spec.trials)],
                                 workers))
            score = float(np.mean(logs[:, -1]))
            tuning.append([method, lr, score])
            if best is None or score < best[0]:
                best = (score, lr, logs)
        curves[method] = best
    gd, ls = curves["gd"][2], curves["lsgd"][2]
    rows = ([k + 1, gd[:, k].mean(), gd[:, k].std(), ls[:, k].mean(), ls[:, k].std()]
            for k in range(spec.epochs))
    dyn = write_csv(os.path.join(out_dir, "dynamics.csv"),
                    ["step", "gd_mean", "gd_std", "lsgd_mean", "lsgd_std"], rows)
    tun = write_csv(os.path.join(out_dir, "tuning.csv"), ["method", "learning_rate", "final_mean_log10_loss"],
                    tuning)
    results = {"gd_learning_rate": curves["gd"][1], "lsgd_learning_rate": curves["lsgd"][1],
               **resnet_stats(gd, ls)}
    config = {"spec": {k: _json_ready(v) for k, v in vars(spec).items()}, "seed": seed,
              "learning_rates": list(learning_rates), "workers": workers}
    return _finish(out_dir, "resnet", config, [dyn, tun], results)


def resnet_stats(gd_logs, lsgd_logs):
    """Final/step-1 means and step-averaged std of two ``(trials, steps)`` log-loss arrays."""
    return {
        "gd_final_mean": float(gd_logs[:, -1].mean()), "lsgd_final_mean": float(lsgd_logs[:, -1].mean()),
        "gd_step1_mean": float(gd_logs[:, 0].mean()), "lsgd_step1_mean": float(lsgd_logs[:, 0].mean()),
        "gd_mean_std": float(gd_logs.std(axis=0).mean()), "lsgd_mean_std": float(lsgd_logs.std(axis=0).mean()),
    }


# --- classification and the appendices -----------------------------------------

def run_classify(out_dir, problem="cubic", candidates=((-1.0,), (3.0,)), stationarity_tol=1e-6):
    """Classify candidate points of a builtin problem in both landscapes; writes ``report.json``.

    Candidates that are not stationary in the reduced landscape are reported
    with their reduced gradient norm.
    """
    _prepare(out_dir)
    prob = get_problem(problem)
    cands = [np.atleast_1d(np.asarray(c, dtype=np.float64)) for c in candidates]
    for c in cands:
        if c.shape != (prob.p,):
            raise ValidationError(f"candidate {c.tolist()} must have {prob.p} entries for {problem!r}")
    reports = _classify_many(prob, cands, stationarity_tol)
    rep = write_json(os.path.join(out_dir, "report.json"), {"problem": problem, "reports": reports})
    config = {"problem": problem, "candidates": [c.tolist() for c in cands],
              "stationarity_tol": stationarity_tol}
    return _finish(out_dir, "classify", config, [rep])


def random_snlls_instance(rng, samples=40, hidden=3, input_dim=2):
    """Sigmoid network SNLLS problem with random, non-realizable targets.

    Returns ``(problem, x_k, y_k, dx)``.
    """
    inputs = rng.uniform(-1.0, 1.0, size=(samples, input_dim))
    targets = rng.standard_normal(samples)
    prob = SigmoidNetworkProblem(inputs, targets, hidden)
    x_k = rng.standard_normal(prob.p)
    y_k = rng.standard_normal(prob.q)
    dx = 0.1 * rng.standard_normal(prob.p)
    return prob, x_k, y_k, dx


def appendix_a_residuals(n_instances=100, seed=0):
    """Post-update inner optimality residuals of the approximate and exact updates."""
    rows = []
    for k in range(n_instances):
        prob, x_k, y_k, dx = random_snlls_instance(_trial_rng(seed, k))
        x_next = x_k + dx
        approx = inner_residual_norm(prob, x_next, y_k + delta_y_approx(prob, x_k, y_k, dx))
        exact = inner_residual_norm(prob, x_next, y_k + delta_y_exact(prob, x_next, y_k))
        rows.append([k, approx, exact])
    return rows


def run_appendix_a(out_dir, n_instances=100, seed=0):
    """Write ``residuals.csv`` with ``instance,approx_residual,exact_residual``."""
    _prepare(out_dir)
    rows = appendix_a_residuals(n_instances, seed)
    path = write_csv(os.path.join(out_dir, "residuals.csv"),
                     ["instance", "approx_residual", "exact_residual"], rows)
    results = {"exact_max": max(r[2] for r in rows),
               "approx_count_above_1e-6": sum(r[1] > 1e-6 for r in rows)}
    return _finish(out_dir, "appendix-a", {"n_instances": n_instances, "seed": seed}, [path], results)


def run_appendix_b(out_dir, x_range=(-4.0, -0.05), resolution=80):
    """Filtered critical point: the full gradient vanishes at ``(0, 0)`` but the
    reduced gradient at ``x = 0`` does not."""
    _check_resolution(resolution)
    _prepare(out_dir)
    prob = get_problem("appendix-b")
    zero = np.zeros(1)
    full_grad = np.concatenate([prob.grad_x(zero, zero), prob.grad_y(zero, zero)])
    results = {
        "inner_solve_at_0": float(inner_solve(prob, zero)[0]),
        "reduced_gradient_at_0": float(reduced_gradient(prob, zero)[0]),
        "full_value_at_origin": float(prob.value(zero, zero)),
        "full_gradient_at_origin": full_grad.tolist(),
        "classification_at_0": _classify_many(prob, [zero])[0],
    }
    xs = np.linspace(*x_range, resolution)
    curve = write_csv(os.path.join(out_dir, "reduced_curve.csv"), ["x", "reduced", "reduced_gradient"],
                      ([x, reduced_value(prob, np.array([x])), reduced_gradient(prob, np.array([x]))[0]]
                       for x in xs))
    rep = write_json(os.path.join(out_dir, "report.json"), results)
    config = {"x_range": list(x_range), "resolution": resolution}
    return _finish(out_dir, "appendix-b", config, [rep, curve], results)


# --- manifest replay --------------------------------------------------------------

EXPERIMENTS = {
    "rosenbrock": run_rosenbrock,
    "cubic": run_cubic,
    "matfac": run_matfac,
    "grassmann": run_grassmann,
    "landscape": run_landscape,
    "teacher-student": run_teacher_student,
    "resnet": run_resnet,
    "classify": run_classify,
    "appendix-a": run_appendix_a,
    "appendix-b": run_appendix_b,
}


def config_to_kwargs(experiment, config):
    """Turn a manifest config back into keyword arguments."""
    kw = dict(config)
    if experiment == "teacher-student":
        kw["spec"] = TeacherSpec(**kw["spec"])
    elif experiment == "resnet":
        kw["spec"] = ResNetSpec(**kw["spec"])
        kw["learning_rates"] = tuple(kw["learning_rates"])
    for key in ("x_range", "y_range", "wn_range", "wl_range", "resolution"):
        if isinstance(kw.get(key), list):
            kw[key] = tuple(kw[key])
    return kw


def replay(manifest_path, out_dir):
    """Rerun the experiment recorded in ``manifest_path`` into ``out_dir``."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    name = manifest.get("experiment")
    if name not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {name!r} in {manifest_path}")
    return EXPERIMENTS[name](out_dir, **config_to_kwargs(name, manifest["config"]))
