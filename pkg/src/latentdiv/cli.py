"""
Command-line entry point.

Subcommands::

    latentdiv train     --data u.data --out model.bin
    latentdiv evaluate  --data u.data --model model.bin --k 10 --out baseline.csv
    latentdiv diversify --data u.data --model model.bin --k 10 --alpha 0.5 --out outcomes.csv
    latentdiv sweep     --data u.data --model model.bin --k 10 --alphas 0.1,0.5,0.9 --out sweep.csv

Every subcommand accepts ``--config FILE``: ``key = value`` lines whose keys
are flag names without the leading dashes.  Flags given on the command line
win over the file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path
from typing import Sequence

from .dataset import DatasetError, load_ratings, split_holdout
from .diversity import DistanceMetric, max_illd
from .factorization import FactorModel, TrainConfig, load_model, save_model, train
from .harness import DEFAULT_ALPHAS, emit_exposure, emit_report, run_baseline, sweep
from .postprocess import DiversifyConfig, diversify_all, write_outcomes_csv
from .ranking import top_k_all

_logger = logging.getLogger("latentdiv")


class CliError(Exception):
    """A user-facing error; the message names the offending flag or file."""


def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def open_unit(text: str) -> float:
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return value


def closed_unit(text: str) -> float:
    value = float(text)
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def alpha_list(text: str) -> list[float]:
    try:
        values = [closed_unit(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty alpha list")
    return values


def read_config(path: str) -> dict[str, str]:
    """Parse a ``key = value`` config file (``#`` starts a comment)."""
    values: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CliError(f"--config: cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _data_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value file with defaults for these flags")
    p.add_argument("--data", help="rating file")
    p.add_argument(
        "--format", choices=["movielens_tab", "csv_header"], default="movielens_tab"
    )
    p.add_argument("--test-fraction", type=open_unit, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")


def _list_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="model artifact written by 'train'")
    p.add_argument("--k", type=positive_int, default=10)
    p.add_argument("--metric", choices=[m.value for m in DistanceMetric], default="euclidean")
    p.add_argument(
        "--include-observed",
        action="store_true",
        help="allow items the user rated in training to be recommended",
    )
    p.add_argument("--relevance-threshold", type=float, default=4.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentdiv", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the factor model by alternating least squares")
    _data_flags(p)
    p.add_argument("--d", type=positive_int, default=16, help="latent dimension")
    p.add_argument("--lambda", dest="lambda_", type=non_negative_float, default=0.05,
                   help="regularization weight for both factor matrices")
    p.add_argument("--lambda-q", type=non_negative_float, help="user-factor weight (overrides --lambda)")
    p.add_argument("--lambda-p", type=non_negative_float, help="item-factor weight (overrides --lambda)")
    p.add_argument("--max-iters", type=positive_int, default=50)
    p.add_argument("--tolerance", type=positive_float, default=1e-5)
    p.add_argument("--init-scale", type=positive_float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="model artifact path")
    p.add_argument("--log", help="training CSV (default: <out>.train.csv)")

    p = sub.add_parser("evaluate", help="baseline relevance and nILLD of the top-k lists")
    _data_flags(p)
    _list_flags(p)
    p.add_argument("--out", help="CSV destination (default: stdout)")

    p = sub.add_parser("diversify", help="post-process every user's list to reach --alpha")
    _data_flags(p)
    _list_flags(p)
    p.add_argument("--alpha", type=closed_unit, default=0.5)
    p.add_argument("--discount", type=open_unit, default=0.9)
    p.add_argument("--max-iters", type=positive_int, help="swap-loop cap per user (default 50*k)")
    p.add_argument("--out", help="CSV destination (default: stdout)")

    p = sub.add_parser("sweep", help="post-process at several alphas and tabulate the trade-off")
    _data_flags(p)
    _list_flags(p)
    p.add_argument("--alphas", type=alpha_list, default=list(DEFAULT_ALPHAS),
                   help="comma-separated thresholds (default 0.1,...,0.9)")
    p.add_argument("--discount", type=open_unit, default=0.9)
    p.add_argument("--max-iters", type=positive_int, help="swap-loop cap per user (default 50*k)")
    p.add_argument("--out", help="sweep CSV destination (default: stdout)")
    p.add_argument("--exposure-out", help="item exposure CSV (largest alpha vs baseline)")
    return parser


def _parse(argv: Sequence[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        config = read_config(known.config)
        config.pop("config", None)
        if "lambda" in config:
            config["lambda_"] = config.pop("lambda")
        command = next((a for a in argv if not a.startswith("-")), None)
        subparsers = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
        if command in subparsers:
            subparser = subparsers[command]
            dests = {a.dest: a for a in subparser._actions}
            for key, value in config.items():
                action = dests.get(key)
                if action is None:
                    raise CliError(f"{known.config}: unknown key {key!r} for '{command}'")
                if action.type is not None or isinstance(action, argparse._StoreAction):
                    try:
                        converted = action.type(value) if action.type else value
                    except (argparse.ArgumentTypeError, ValueError) as exc:
                        raise CliError(f"{known.config}: {key}: {exc}") from None
                    if action.choices is not None and converted not in action.choices:
                        raise CliError(f"{known.config}: {key}: invalid choice {value!r}")
                else:
                    converted = value.lower() in ("1", "true", "yes", "on")
                subparser.set_defaults(**{key: converted})
    return parser.parse_args(argv)


def _require(args, *names: str) -> None:
    for name in names:
        if getattr(args, name.replace("-", "_")) is None:
            raise CliError(f"missing required flag --{name}")


def _load_split(args):
    _require(args, "data")
    try:
        ds = load_ratings(args.data, args.format)
    except OSError as exc:
        raise CliError(f"--data: cannot read {args.data}: {exc.strerror}") from None
    except DatasetError as exc:
        raise CliError(f"{args.data}: {exc}") from None
    return split_holdout(ds, args.test_fraction, args.split_seed)


def _load_model(args, split) -> FactorModel:
    _require(args, "model")
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise CliError(f"--model: cannot read {args.model}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError(f"--model: {exc}") from None
    try:
        model.check_covers(split.train)
    except ValueError as exc:
        raise CliError(f"--model {args.model} does not match --data {args.data}: {exc}") from None
    eligible = split.train.n_items - (0 if args.include_observed else int(split.train.user_counts().max()))
    if args.k > eligible:
        raise CliError(f"--k {args.k} exceeds the {eligible} items eligible for some user")
    return model


class _Output:
    def __init__(self, path: str | None):
        self.path = path

    def __enter__(self):
        if self.path is None:
            self.f = None
            return sys.stdout
        Path(self.path).parent.mkdir(parents=True, exist_ok=True)
        self.f = open(self.path, "w", encoding="utf-8", newline="")
        return self.f

    def __exit__(self, *exc):
        if self.f is not None:
            self.f.close()


def cmd_train(args) -> None:
    _require(args, "out")
    split = _load_split(args)
    config = TrainConfig(
        d=args.d,
        lambda_q=args.lambda_ if args.lambda_q is None else args.lambda_q,
        lambda_p=args.lambda_ if args.lambda_p is None else args.lambda_p,
        max_iters=args.max_iters,
        tolerance=args.tolerance,
        init_scale=args.init_scale,
        seed=args.seed,
    )
    model = train(split.train, config)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_model(model, args.out)
    log = args.log or str(Path(args.out).with_suffix(".train.csv"))
    with _Output(log) as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iter", "loss", "train_rmse"])
        for it, (l, r) in enumerate(zip(model.meta.loss_history, model.meta.rmse_history), 1):
            writer.writerow([it, repr(l), repr(r)])
    _logger.info("wrote %s and %s", args.out, log)


def cmd_evaluate(args) -> None:
    split = _load_split(args)
    model = _load_model(args, split)
    row = run_baseline(
        model,
        split,
        args.k,
        args.metric,
        exclude_observed=not args.include_observed,
        relevance_threshold=args.relevance_threshold,
    )
    with _Output(args.out) as f:
        emit_report([row], f)


def cmd_diversify(args) -> None:
    split = _load_split(args)
    model = _load_model(args, split)
    cfg = DiversifyConfig(args.alpha, args.k, args.metric, args.discount, args.max_iters)
    recs = top_k_all(model, split.train, args.k, not args.include_observed)
    normalizer = max_illd(model.P, args.k, args.metric)
    outcomes = diversify_all(model, split.train, recs, cfg, normalizer)
    with _Output(args.out) as f:
        write_outcomes_csv(outcomes, f)


def cmd_sweep(args) -> None:
    split = _load_split(args)
    model = _load_model(args, split)
    alphas = list(args.alphas)
    if alphas != sorted(alphas):
        alphas.sort()
        print(f"note: --alphas sorted to {','.join(map(str, alphas))}", file=sys.stderr)
    result = sweep(
        model,
        split,
        args.k,
        args.metric,
        alphas,
        args.discount,
        args.max_iters,
        exclude_observed=not args.include_observed,
        relevance_threshold=args.relevance_threshold,
    )
    with _Output(args.out) as f:
        emit_report(result.rows, f)
    if args.exposure_out:
        emit_exposure(
            result.baseline, result.lists[alphas[-1]], model.n_items, args.exposure_out
        )


COMMANDS = {
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "diversify": cmd_diversify,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _parse(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except CliError as exc:
        print(f"latentdiv: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        print(f"latentdiv {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"latentdiv {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
