# main.py
import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

import templates
from config import AppConfig, RunConfig, parse_config, parse_overrides
from evalmetrics import format_ratio
from experiments import EXPERIMENT_IDS, ExperimentSpec, default_spec, run_experiment
from experiments.nodes import TRAIN_DATASET_FILE, checkpoint_path, training_dataset
from gnn import PolicyKind, load_checkpoint, parameter_report, save_checkpoint
from netgen import generate_dataset, load_dataset, save_dataset
from proptests import format_report, run_all, write_report_csv
from train import evaluate, train, write_layout_results, write_learning_curve
from utils.exceptions import AirGnnError, ConfigurationError, UsageError
from utils.utils import generate_unique_name

logger = logging.getLogger(__name__)

TEST_DATASET_FILE = "test.agds"
SCHEMES = ["epa", "wmmse", "air-wmmse", "mpnn", "air-mpnn", "air-mprnn"]


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="sectioned key = value file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE", help="override a config value"
    )


def _run_config(args) -> RunConfig:
    return parse_config(args.config, parse_overrides(args.overrides))


def cmd_gen_data(args, app: AppConfig) -> int:
    cfg = _run_config(args)
    out_dir = args.out_dir or app.data_dir
    splits = {"train": (cfg.channel.train_layouts, cfg.channel.seed, TRAIN_DATASET_FILE),
              "test": (cfg.channel.test_layouts, cfg.channel.test_seed, TEST_DATASET_FILE)}
    for split in (["train", "test"] if args.split == "both" else [args.split]):
        layouts, seed, filename = splits[split]
        dataset = generate_dataset(cfg.channel, args.layouts or layouts, seed if args.seed is None else args.seed)
        save_dataset(Path(out_dir) / filename, dataset)
    return 0


def cmd_train(args, app: AppConfig) -> int:
    cfg = _run_config(args)
    dataset = load_dataset(args.data) if args.data else training_dataset(app, cfg)
    out = args.out or checkpoint_path(app, args.kind)
    result = train(args.kind, dataset, cfg, checkpoint_dir=Path(out).parent)
    save_checkpoint(out, result.model)
    curve_path = args.curve or Path(app.results_dir) / f"{args.kind}-curve.csv"
    write_learning_curve(curve_path, result.curve)
    print(
        templates.TRAINING_SUMMARY.format(
            kind=args.kind,
            parameters=result.model.parameter_count,
            iterations=cfg.train.iterations,
            rate=result.curve[-1].validation_sum_rate if result.curve else float("nan"),
            elapsed=result.elapsed_seconds,
            path=out,
        )
    )
    return 0


def cmd_eval(args, app: AppConfig) -> int:
    cfg = _run_config(args)
    if args.data:
        dataset = load_dataset(args.data)
    elif (Path(app.data_dir) / TEST_DATASET_FILE).exists():
        dataset = load_dataset(Path(app.data_dir) / TEST_DATASET_FILE)
    else:
        dataset = generate_dataset(cfg.channel, cfg.channel.test_layouts, cfg.channel.test_seed)

    policy = args.scheme
    if args.scheme in {k.value for k in PolicyKind}:
        policy = load_checkpoint(args.checkpoint or checkpoint_path(app, args.scheme))
        if policy.kind.value != args.scheme:
            raise UsageError(f"checkpoint holds a {policy.kind.value} model, not {args.scheme}")
    warm_start = load_checkpoint(args.warm_start) if args.warm_start else None

    result = evaluate(policy, dataset, cfg, mode=args.mode, warm_start=warm_start, seed=args.seed, trace_path=args.trace)
    out = args.out or Path(app.results_dir) / f"{generate_unique_name('eval ' + args.scheme)}.csv"
    write_layout_results(out, result)
    print(
        templates.EVALUATION_SUMMARY.format(
            scheme=result.scheme,
            rate=result.mean_sum_rate,
            layouts=len(result.layouts),
            n_links=result.n_links,
            symbols=result.overhead_symbols,
            ratio=format_ratio(result.overhead_ratio),
        )
    )
    return 0


def cmd_experiment(args, app: AppConfig) -> int:
    cfg = _run_config(args)
    spec = default_spec(args.id, cfg, app.results_dir)
    update = {"train_if_missing": args.train_missing, "mode": args.mode, "warm_start": args.warm_start}
    if args.out:
        update["output"] = args.out
    spec = ExperimentSpec.model_validate({**spec.model_dump(), **update})
    path = run_experiment(spec, cfg, app)
    print(path)
    return 0


def cmd_inspect_checkpoint(args, app: AppConfig) -> int:
    if args.path is None and not args.parameter_report:
        raise UsageError("give a checkpoint path or --parameter-report")
    if args.path is not None:
        model = load_checkpoint(args.path)
        stats = model.norm_stats
        print(
            templates.CHECKPOINT_SUMMARY.format(
                kind=model.kind.value,
                layers=model.layers,
                embed_dim=model.embed_dim,
                aggregation=model.aggregation,
                max_power=model.max_power,
                parameters=model.parameter_count,
                **stats.model_dump(),
            )
        )
    if args.parameter_report:
        for row in parameter_report():
            print(templates.PARAMETER_REPORT_LINE.format(**row.model_dump()))
    return 0


def cmd_proptest(args, app: AppConfig) -> int:
    reports = run_all(seed=args.seed, scale=args.scale)
    print(format_report(reports))
    if args.out:
        write_report_csv(args.out, reports)
    return 0 if all(r.passed for r in reports) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="airgnn", description="Over-the-air GNN power control: data, training, evaluation, experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate and save layout/channel datasets")
    _add_config_args(gen)
    gen.add_argument("--split", choices=["train", "test", "both"], default="both")
    gen.add_argument("--layouts", type=int, help="number of layouts (default from config)")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out-dir", type=Path)
    gen.set_defaults(handler=cmd_gen_data)

    tr = sub.add_parser("train", help="train one policy kind")
    _add_config_args(tr)
    tr.add_argument("--kind", required=True, choices=[k.value for k in PolicyKind])
    tr.add_argument("--data", type=Path, help="training dataset file")
    tr.add_argument("--out", type=Path, help="checkpoint path")
    tr.add_argument("--curve", type=Path, help="learning-curve CSV path")
    tr.set_defaults(handler=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a policy or baseline on a test dataset")
    _add_config_args(ev)
    ev.add_argument("--scheme", required=True, choices=SCHEMES)
    ev.add_argument("--checkpoint", type=Path)
    ev.add_argument("--data", type=Path, help="test dataset file")
    ev.add_argument("--mode", choices=["ideal", "physical"], default="ideal")
    ev.add_argument("--warm-start", type=Path, help="air-mpnn checkpoint driving frame 0 of air-mprnn")
    ev.add_argument("--seed", type=int, default=0, help="pilot noise seed")
    ev.add_argument("--trace", type=Path, help="dump physical-mode pilot trace CSV")
    ev.add_argument("--out", type=Path, help="per-layout CSV path")
    ev.set_defaults(handler=cmd_eval)

    ex = sub.add_parser("experiment", help="run one experiment grid and write its CSV")
    _add_config_args(ex)
    ex.add_argument("--id", required=True, choices=list(EXPERIMENT_IDS))
    ex.add_argument("--train-missing", action="store_true", help="train models without a checkpoint")
    ex.add_argument("--mode", choices=["ideal", "physical"], default="ideal")
    ex.add_argument("--warm-start", action="store_true", help="drive frame 0 of air-mprnn with air-mpnn")
    ex.add_argument("--out", type=Path)
    ex.set_defaults(handler=cmd_experiment)

    ins = sub.add_parser("inspect-checkpoint", help="describe a checkpoint or report parameter counts")
    ins.add_argument("path", type=Path, nargs="?")
    ins.add_argument("--parameter-report", action="store_true")
    ins.set_defaults(handler=cmd_inspect_checkpoint)

    pt = sub.add_parser("proptest", help="run the property and oracle suite")
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--scale", choices=["small", "full"], default="small")
    pt.add_argument("--out", type=Path, help="CSV report path")
    pt.set_defaults(handler=cmd_proptest)
    return parser


def main(argv: list[str] | None = None) -> int:
    app = AppConfig()
    # Настройка логгирования
    logging.basicConfig(level=app.log_level.upper(), format="%(asctime)s - %(levelname)s - %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args, app)
    except (UsageError, ConfigurationError, ValidationError) as e:
        logger.error("%s", e)
        return 1
    except (AirGnnError, OSError) as e:
        logger.error("%s", e)
        return 2


if __name__ == "__main__":
    sys.exit(main())
