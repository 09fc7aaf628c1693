"""Command-line driver: place, train, eval, predict, gradcheck, losssurface, blobs.

Every subcommand accepts ``--config FILE`` pointing at a flat JSON object whose
keys are flag names (``"lr": 0.05``); flags given on the command line win.
"""

import argparse
import json
import sys

import numpy as np

from . import data as data_mod
from .gradcheck import run_all
from .learner import (
    LinearLearner,
    ModelFileError,
    MlpLearner,
    TrainConfig,
    TrainingDivergedError,
    evaluate,
    load_model,
    predict_with_confidence,
    save_model,
    train,
)
from .prototypes import (
    PrototypeFileError,
    load_polar_points,
    load_prototypes,
    max_pairwise_cosine,
    place_line,
    place_separated,
    place_uniform_circle,
    save_prototypes,
)
from .surface import format_surface, loss_surface

EXIT_FAILURE = 1
EXIT_DIVERGED = 3


class CommandError(Exception):
    pass


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_place(args, parser):
    method = args.method
    if method in ("uniform-circle", "separated") and args.k is None:
        parser.error(f"{method} placement needs --k")
    if method == "uniform-circle":
        if args.d not in (None, 2):
            parser.error(f"uniform-circle placement needs --d 2, got --d {args.d}")
        protos = place_uniform_circle(args.k)
    elif method == "line":
        if args.d not in (None, 1) or args.k not in (None, 2):
            parser.error("line placement is fixed to --d 1 --k 2")
        protos = place_line()
    elif method == "separated":
        if args.d is None or args.d < 2:
            parser.error("separated placement needs --d >= 2")
        protos = place_separated(args.k, args.d, args.iterations, args.step, args.decay, args.seed)
    else:
        if not args.input:
            parser.error("project placement needs --input with label,r,u1,...,ud rows")
        protos = load_polar_points(args.input)
        if args.k is not None and args.k != protos.n_classes:
            raise CommandError(f"--k {args.k} but the input has {protos.n_classes} points")
    if args.k is not None and args.k != protos.n_classes:
        raise CommandError(f"--k {args.k} disagrees with {protos.n_classes} placed prototypes")
    if args.out:
        save_prototypes(protos, args.out)
    print(f"K={protos.n_classes} d={protos.dim} max_pairwise_cosine={max_pairwise_cosine(protos):.12f}")
    return 0


def _load_task(args, check_dim=True):
    protos = load_prototypes(args.prototypes)
    if check_dim and args.d is not None and args.d != protos.dim:
        raise CommandError(f"--d {args.d} disagrees with prototype dimension d={protos.dim}")
    if args.k is not None and args.k != protos.n_classes:
        raise CommandError(f"--k {args.k} disagrees with K={protos.n_classes} prototypes")
    return protos


def cmd_train(args, parser):
    # A --d that disagrees with the prototypes is reported by train() with all dimensions.
    protos = _load_task(args, check_dim=False)
    dataset = data_mod.load_csv(args.data, has_header=args.header)
    hidden = _parse_ints(args.hidden) if args.hidden else []
    out_dim = protos.dim if args.d is None else args.d
    if hidden:
        learner = MlpLearner.initialize([dataset.n_features, *hidden, out_dim], seed=args.seed)
    else:
        learner = LinearLearner.initialize(dataset.n_features, out_dim, seed=args.seed)
    config = TrainConfig(args.lr, args.epochs, args.batch, args.seed, not args.no_shuffle)
    try:
        report = train(learner, dataset, protos, config)
    except TrainingDivergedError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    if args.model:
        save_model(report.learner, args.model)
    _write_text(args.out, report.to_csv())
    print(f"epochs={len(report.losses)} final_loss={report.losses[-1]:.12f} "
          f"final_accuracy={report.accuracies[-1]:.12f}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def _load_model_for(args, protos, n_features):
    learner = load_model(args.model)
    if learner.n_inputs != n_features or learner.n_outputs != protos.dim:
        raise CommandError(
            f"model maps n={learner.n_inputs} -> d={learner.n_outputs}, but data has n={n_features} "
            f"and prototypes have d={protos.dim}"
        )
    return learner


def cmd_eval(args, parser):
    protos = _load_task(args)
    dataset = data_mod.load_csv(args.data, has_header=args.header)
    learner = _load_model_for(args, protos, dataset.n_features)
    if dataset.labels.max() >= protos.n_classes:
        raise CommandError(f"dataset label {int(dataset.labels.max())} has no prototype (K={protos.n_classes})")
    result = evaluate(learner, dataset, protos)
    print(f"accuracy={result.accuracy:.12f} mean_loss={result.loss:.12f}")
    return 0


def cmd_predict(args, parser):
    protos = _load_task(args)
    dataset = data_mod.load_csv(args.data, has_header=args.header, label_column=None if args.unlabeled else "last")
    learner = _load_model_for(args, protos, dataset.n_features)
    labels, radii = predict_with_confidence(learner, dataset.features, protos)
    text = "".join(f"{int(label)},{format(r, '.17g')}\n" for label, r in zip(labels, radii))
    _write_text(args.out, text)
    return 0


def cmd_gradcheck(args, parser):
    results = run_all(seed=args.seed, count=args.count, dims=tuple(_parse_ints(args.dims)))
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else EXIT_FAILURE


def cmd_losssurface(args, parser):
    if args.d not in (None, 2):
        parser.error(f"the loss surface is only defined for --d 2, got --d {args.d}")
    proto = _parse_floats(args.prototype)
    if len(proto) != 2:
        parser.error("--prototype needs two comma-separated coordinates")
    _write_text(args.out, format_surface(loss_surface(np.array(proto), args.resolution)))
    return 0


def cmd_blobs(args, parser):
    if args.n is None or args.k is None:
        parser.error("blobs needs --k and --n")
    dataset = data_mod.gen_blobs(args.k, args.n, args.per_class, args.spread, args.seed)
    if args.test_fraction:
        train_part, test_part = data_mod.split(dataset, args.test_fraction, args.split_seed)
        data_mod.save_csv(train_part, args.out)
        data_mod.save_csv(test_part, args.test_out)
    else:
        data_mod.save_csv(dataset, args.out)
    return 0


def _common(p, *names):
    if "seed" in names:
        p.add_argument("--seed", type=int, default=0)
    if "d" in names:
        p.add_argument("--d", type=int, default=None, help="output (hyperbolic) dimension")
    if "k" in names:
        p.add_argument("--k", type=int, default=None, help="number of classes / prototypes")
    if "task" in names:
        p.add_argument("--data", required=True)
        p.add_argument("--prototypes", required=True)
        p.add_argument("--header", action="store_true", help="the data file has a header row")
    p.add_argument("--out", default=None, help="output file (stdout when omitted)")
    p.add_argument("--config", default=None, help="JSON file of flag defaults")


def build_parser():
    parser = argparse.ArgumentParser(prog="hyperproto", description="Hyperbolic prototype learning.")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.subcommands = sub.choices

    p = sub.add_parser("place", help="place prototypes on the ideal boundary")
    _common(p, "seed", "d", "k")
    p.add_argument("--method", choices=["uniform-circle", "separated", "project", "line"], default="uniform-circle")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--decay", type=float, default=0.99)
    p.add_argument("--input", default=None, help="label,r,u1,...,ud rows to project")
    p.set_defaults(func=cmd_place)

    p = sub.add_parser("train", help="train a base learner on the peBu loss")
    _common(p, "seed", "d", "k", "task")
    p.add_argument("--model", default=None, help="where to write the trained model")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--hidden", default="", help="comma-separated hidden layer sizes (MLP)")
    p.add_argument("--no-shuffle", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="accuracy and mean peBu loss of a trained model")
    _common(p, "d", "k", "task")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="write label,confidence_r per input row")
    _common(p, "d", "k", "task")
    p.add_argument("--model", required=True)
    p.add_argument("--unlabeled", action="store_true", help="rows carry features only")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="finite-difference checks of all analytic gradients")
    _common(p, "seed")
    p.add_argument("--count", type=int, default=100, help="random cases per dimension")
    p.add_argument("--dims", default="1,2,3,8")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("losssurface", help="grid of loss and radial derivative over the disc")
    _common(p, "d")
    p.add_argument("--prototype", default="1,0")
    p.add_argument("--resolution", type=int, default=100, help="grid points per unit length")
    p.set_defaults(func=cmd_losssurface)

    p = sub.add_parser("blobs", help="write a synthetic Gaussian-blob dataset")
    _common(p, "seed", "k")
    p.add_argument("--n", type=int, default=None, help="feature dimension")
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--spread", type=float, default=0.5)
    p.add_argument("--test-fraction", type=float, default=None)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--test-out", default=None)
    p.set_defaults(func=cmd_blobs)
    return parser


def _apply_config(parser, argv):
    """Install ``--config`` values as subcommand defaults so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    command = next((tok for tok in rest if not tok.startswith("-")), None)
    if not known.config or command not in parser.subcommands:
        return parser.parse_args(argv)
    with open(known.config) as fh:
        values = json.load(fh)
    if not isinstance(values, dict):
        parser.error("--config must hold a flat JSON object")
    sub = parser.subcommands[command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in values.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in actions:
            parser.error(f"unknown config key {key!r} for {command}")
        defaults[dest] = value
        # A required flag supplied by the config file is no longer required.
        actions[dest].required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    args = _apply_config(parser, argv)
    if args.command == "blobs" and args.out in (None, "-"):
        parser.error("blobs needs --out")
    if args.command == "blobs" and args.test_fraction and not args.test_out:
        parser.error("--test-fraction needs --test-out")
    try:
        return args.func(args, parser)
    except BrokenPipeError:
        sys.stderr.close()
        return 0
    except (CommandError, ModelFileError, PrototypeFileError, data_mod.DataFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
