"""Command-line front end.

Subcommands cover the single pipeline stages (generate, label, warm, online,
metrics) and the batch experiments (eval, evolve, sweep). Batch output goes to
--out, falling back to the FAIRSIM_OUT_DIR environment variable. Nothing is
ever seeded from the clock; every seed is a config value or flag.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .datagen import default_config, gen_config_from_dict, generate_pool, load_pool, save_pool
from .errors import ConfigError, FairsimError
from .experiments import (
    ExperimentConfig,
    experiment_config_from_dict,
    run_evolution,
    run_final_eval,
    run_reg_sweep,
    write_results,
)
from .fairreg import fit_auxiliary, load_regularizer
from .learner import load_model, run_online, save_model, save_trace, warm_start
from .metrics import load_baseline, ndcs, precision_at_k, skew_at_k
from .usermodel import (
    DEFAULT_USER_WEIGHTS,
    UserConfig,
    label_pool,
    load_labeled,
    save_labeled,
)

_EXPERIMENTS = {
    "eval": ("final_eval", run_final_eval),
    "evolve": ("evolution", run_evolution),
    "sweep": ("reg_sweep", run_reg_sweep),
}


def _parse_weights(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse weights {text!r}: expected comma-separated floats") from exc


def _cmd_generate(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = gen_config_from_dict(json.load(fh))
    else:
        cfg = default_config()
    overrides = {}
    if args.n is not None:
        overrides["n"] = args.n
    if args.p_group is not None:
        overrides["p_group"] = args.p_group
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = replace(cfg, **overrides)
    save_pool(generate_pool(cfg), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_label(args) -> int:
    pool = load_pool(args.pool)
    user = UserConfig(p_bias=args.p_bias, weights=_parse_weights(args.weights), seed=args.seed)
    save_labeled(label_pool(pool, user), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_warm(args) -> int:
    pool = load_labeled(args.pool)
    model = warm_start(
        pool, sample_size=args.sample_size, rounds=args.rounds, eta=args.eta, seed=args.seed
    )
    save_model(model, args.out, 0)
    print(f"wrote {args.out}")
    return 0


def _cmd_online(args) -> int:
    model, _ = load_model(args.model)
    pool = load_labeled(args.pool)
    regularizer = None
    if args.regularizer:
        regularizer = load_regularizer(args.regularizer)
        if args.lam is not None:
            regularizer = regularizer.with_strength(args.lam)
    elif args.lam is not None:
        regularizer = fit_auxiliary(pool.points).with_strength(args.lam)
    final, trace = run_online(
        model,
        pool,
        rounds=args.rounds,
        eta=args.eta,
        regularizer=regularizer,
        snapshot_interval=args.snapshot_interval,
    )
    save_model(final, args.out, args.rounds)
    print(f"wrote {args.out}")
    if args.trace:
        save_trace(trace, pool, args.trace)
        print(f"wrote {args.trace}")
    return 0


def _cmd_metrics(args) -> int:
    try:
        ranking = load_labeled(args.ranking)
        labels = ranking.labels
    except ConfigError:
        ranking = None
    if ranking is None:
        points = load_pool(args.ranking)
        labels = None
    else:
        points = ranking.points
    baseline = load_baseline(args.baseline)
    for k in args.k or []:
        value = skew_at_k(points, k, baseline, group=args.group)
        print(f"skew@{k} = {value!r}")
        if labels is not None:
            print(f"precision@{k} = {precision_at_k(labels, k)!r}")
    if args.ndcs_k is not None:
        print(f"ndcs@{args.ndcs_k} = {ndcs(points, args.ndcs_k, baseline, group=args.group)!r}")
    return 0


def _load_experiment_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = experiment_config_from_dict(json.load(fh))
    else:
        cfg = ExperimentConfig()
    if args.seed:
        cfg.seeds = tuple(args.seed)
    if args.p_bias:
        cfg.p_bias_grid = tuple(args.p_bias)
    if args.eta:
        cfg.eta_grid = tuple(args.eta)
    if args.lam:
        cfg.lambda_grid = tuple(args.lam)
    cfg.validate()
    return cfg


def _run_one_seed(kind: str, cfg: ExperimentConfig, seed: int):
    _, runner = _EXPERIMENTS[kind]
    return runner(replace(cfg, seeds=(seed,)))


def _cmd_experiment(args) -> int:
    kind = args.command
    experiment, runner = _EXPERIMENTS[kind]
    cfg = _load_experiment_config(args)
    out_dir = args.out or os.environ.get("FAIRSIM_OUT_DIR")
    if not out_dir:
        raise ConfigError("no output directory: pass --out or set FAIRSIM_OUT_DIR")
    if args.jobs > 1 and len(cfg.seeds) > 1:
        results = []
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one_seed, kind, cfg, seed) for seed in cfg.seeds]
            for future in futures:
                results.extend(future.result())
    else:
        results = runner(cfg, verbose=args.verbose)
    exp_dir = write_results(results, out_dir, experiment, cfg)
    print(f"wrote {exp_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic pool and write it as CSV")
    p.add_argument("--config", help="pool config JSON")
    p.add_argument("--n", type=int)
    p.add_argument("--p-group", type=float, dest="p_group")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("label", help="materialize user labels for a pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--p-bias", type=float, required=True, dest="p_bias")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", default=",".join(str(w) for w in DEFAULT_USER_WEIGHTS))
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("warm", help="train a warm-start model on a labeled pool")
    p.add_argument("--pool", required=True)
    p.add_argument("--sample-size", type=int, default=1000, dest="sample_size")
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_warm)

    p = sub.add_parser("online", help="run greedy online personalization rounds")
    p.add_argument("--model", required=True)
    p.add_argument("--pool", required=True)
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--eta", type=float, default=0.01)
    p.add_argument("--regularizer", help="fitted regularizer JSON")
    p.add_argument("--lambda", type=float, dest="lam",
                   help="penalty strength; fits on the pool when no --regularizer is given")
    p.add_argument("--snapshot-interval", type=int, default=0, dest="snapshot_interval")
    p.add_argument("--out", required=True)
    p.add_argument("--trace")
    p.set_defaults(func=_cmd_online)

    p = sub.add_parser("metrics", help="score a stored ranking against a baseline")
    p.add_argument("--ranking", required=True, help="pool or labeled-pool CSV in rank order")
    p.add_argument("--baseline", required=True, help="baseline JSON")
    p.add_argument("--k", type=int, action="append")
    p.add_argument("--ndcs-k", type=int, dest="ndcs_k")
    p.add_argument("--group", type=int, default=1)
    p.set_defaults(func=_cmd_metrics)

    for kind, (experiment, _) in _EXPERIMENTS.items():
        p = sub.add_parser(kind, help=f"run the {experiment} experiment grid")
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--out", help="output directory (default: FAIRSIM_OUT_DIR)")
        p.add_argument("--seed", type=int, action="append",
                       help="replace the seed list (repeatable)")
        p.add_argument("--p-bias", type=float, action="append", dest="p_bias",
                       help="replace the p_bias grid (repeatable)")
        p.add_argument("--eta", type=float, action="append",
                       help="replace the eta grid (repeatable)")
        p.add_argument("--lambda", type=float, action="append", dest="lam",
                       help="replace the lambda grid (repeatable)")
        p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
        p.add_argument("--verbose", action="store_true")
        p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FairsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
