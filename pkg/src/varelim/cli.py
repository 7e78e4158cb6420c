"""Command line entry point: ``varelim <experiment> [options]``.

Exit status is 0 on success, 1 on invalid input and 2 on file system errors.
"""

import argparse
import json
import logging
import os
import sys

from . import __version__, experiments
from .exceptions import VarElimError
from .problems import SEPARABLE_PROBLEMS, ResNetSpec, TeacherSpec

log = logging.getLogger("varelim")


def _pair(text):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    return lo, hi


def _point(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed (default 0)")
    common.add_argument("--out-dir", default=None, help="output directory (default results/<experiment>)")
    common.add_argument("--trials", type=int, default=None, help="number of trials for batch studies")
    common.add_argument("--max-iters", type=int, default=None, help="iteration / epoch budget")
    common.add_argument("--paper-scale", action="store_true",
                        help="full-size teacher-student and ResNet configurations")
    common.add_argument("--workers", type=int, default=1, help="worker processes for trials")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="varelim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rosenbrock", parents=[common], help="full vs reduced gradient descent")
    p.add_argument("--step-full", type=float, default=1e-3)
    p.add_argument("--step-reduced", type=float, default=0.4)

    p = sub.add_parser("cubic", parents=[common], help="cubic example surface and classification")
    p.add_argument("--resolution", type=int, default=161)

    p = sub.add_parser("matfac", parents=[common], help="rank-1 factorization reduced landscape")
    p.add_argument("--resolution", type=int, default=101)
    p.add_argument("--extent", type=float, default=1.0)

    p = sub.add_parser("grassmann", parents=[common], help="rank-r reduced value over subspaces")
    p.add_argument("--rows", type=int, default=6)
    p.add_argument("--cols", type=int, default=5)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--bases", type=int, default=1000)

    p = sub.add_parser("landscape", parents=[common], help="two-parameter MLP/RBF cost landscapes")
    p.add_argument("--model", choices=sorted(experiments.LANDSCAPE_DEFAULTS), default="mlp")
    p.add_argument("--wn-range", type=_pair, default=None, metavar="LO,HI")
    p.add_argument("--wl-range", type=_pair, default=None, metavar="LO,HI")
    p.add_argument("--wn-res", type=int, default=201)
    p.add_argument("--wl-res", type=int, default=201)

    p = sub.add_parser("teacher-student", parents=[common], help="VarPro-LM vs joint-LM study")
    p.add_argument("--jacobian", choices=("kaufman", "full", "finite_diff"), default="kaufman")

    sub.add_parser("resnet", parents=[common], help="Adam vs LSGD training dynamics")

    p = sub.add_parser("classify", parents=[common], help="classify candidate stationary points")
    p.add_argument("--problem", choices=sorted(SEPARABLE_PROBLEMS), default="cubic")
    p.add_argument("--candidate", type=_point, action="append", default=None, metavar="X1[,X2...]",
                   help="candidate point (repeatable)")

    p = sub.add_parser("appendix-a", parents=[common], help="exact vs approximate linear updates")
    p.add_argument("--instances", type=int, default=100)

    sub.add_parser("appendix-b", parents=[common], help="critical point filtered by elimination")

    p = sub.add_parser("replay", parents=[common], help="rerun an experiment from its manifest.json")
    p.add_argument("manifest")
    return parser


def _dispatch(args):
    out = args.out_dir or os.path.join("results", args.command)
    cmd = args.command
    if cmd == "replay":
        return experiments.replay(args.manifest, out)
    if cmd == "rosenbrock":
        max_iters = args.max_iters if args.max_iters is not None else 100_000
        return experiments.run_rosenbrock(out, args.step_full, args.step_reduced, max_iters)
    if cmd == "cubic":
        return experiments.run_cubic(out, resolution=args.resolution)
    if cmd == "matfac":
        return experiments.run_matfac(out, args.extent, args.resolution)
    if cmd == "grassmann":
        return experiments.run_grassmann(out, args.rows, args.cols, args.rank, args.bases, args.seed)
    if cmd == "landscape":
        return experiments.run_landscape(out, args.model, args.wn_range, args.wl_range,
                                         (args.wn_res, args.wl_res))
    if cmd == "teacher-student":
        trials = args.trials if args.trials is not None else (100 if args.paper_scale else 20)
        max_iters = args.max_iters if args.max_iters is not None else 200
        return experiments.run_teacher_student(out, trials, args.seed, max_iters,
                                               args.jacobian, TeacherSpec(seed=args.seed), args.workers)
    if cmd == "resnet":
        spec = ResNetSpec.paper_scale() if args.paper_scale else ResNetSpec()
        changes = {}
        if args.trials is not None:
            changes["trials"] = args.trials
        if args.max_iters is not None:
            changes["epochs"] = args.max_iters
        return experiments.run_resnet(out, spec.scaled(**changes), args.seed, workers=args.workers)
    if cmd == "classify":
        cands = args.candidate or ([[-1.0], [3.0]] if args.problem == "cubic" else None)
        if cands is None:
            raise VarElimError("at least one --candidate is required for this problem")
        return experiments.run_classify(out, args.problem, cands)
    if cmd == "appendix-a":
        return experiments.run_appendix_a(out, args.instances, args.seed)
    if cmd == "appendix-b":
        return experiments.run_appendix_b(out)
    raise AssertionError(cmd)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        manifest = _dispatch(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (VarElimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    summary = {"experiment": manifest["experiment"], "files": len(manifest["outputs"]) + 1}
    if "results" in manifest:
        summary["results"] = manifest["results"]
    log.info("outputs: %s", ", ".join(manifest["outputs"]))
    print(json.dumps(summary, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
