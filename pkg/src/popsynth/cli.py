"""Command-line surface: benchmark emission, structure learning, corpus export,
generation, evaluation, full experiments, and sensitivity sweeps.

Exit codes: 0 success, 2 configuration error, 3 stage failure, 4 attempt
budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bayesnet import BayesNet, Dag, fit_cpts, hill_climb
from .dataset import AttributeSchema, coverage_analysis, load_dataset
from .experiment import ExperimentConfig, StageError, run_experiment, sweep
from .genmodels import ChainModel, PrototypicalAgent, prototypical_generate
from .metrics import build_report
from .sampler import AttemptBudgetExceeded, GenerationConfig, generate_population, generate_via_external
from .textcodec import build_corpus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_BUDGET = 4


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_schema(args) -> AttributeSchema:
    return AttributeSchema.load(args.schema)


def cmd_benchmark(args) -> int:
    from .benchmark import default_benchmark_spec, make_benchmark

    out = _out_dir(args)
    spec = default_benchmark_spec(args.population_size, args.sample_rate, args.seed)
    population, sample, truth = make_benchmark(spec)
    spec.schema.save(out / "schema.json")
    spec.save(out / "benchmark_spec.json")
    truth.save(out / "truth_bn.json")
    population.to_csv(out / "population.csv")
    sample.to_csv(out / "sample.csv")
    print(f"benchmark written to {out} (N={population.n}, sample={sample.n})")
    return EXIT_OK


def cmd_coverage(args) -> int:
    schema = _load_schema(args)
    population = load_dataset(args.population, schema, "h-population")
    rates = [float(r) for r in args.rates.split(",")]
    curve = coverage_analysis(population, rates, args.replications, args.seed)
    out = _out_dir(args)
    curve.to_csv(out / "coverage.csv")
    for rate, (combo, inst) in sorted(curve.mean_by_rate().items()):
        print(f"rate={rate:g} combo_coverage={combo:.4f} instance_coverage={inst:.4f}")
    return EXIT_OK


def cmd_learn_structure(args) -> int:
    schema = _load_schema(args)
    data = load_dataset(args.population, schema)
    dag = hill_climb(data, args.max_in_degree, args.restarts, args.seed)
    out = _out_dir(args)
    dag.save(out / "dag.json", schema.names)
    print(f"learned DAG with {len(dag.edges)} edges -> {out / 'dag.json'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    schema = _load_schema(args)
    data = load_dataset(args.population, schema)
    dag, _ = Dag.load(args.dag)
    bn = fit_cpts(data, dag, args.alpha)
    out = _out_dir(args)
    bn.save(out / "bn.json")
    print(f"fitted BayesNet (alpha={args.alpha}) -> {out / 'bn.json'}")
    return EXIT_OK


def cmd_corpus(args) -> int:
    schema = _load_schema(args)
    data = load_dataset(args.population, schema)
    dag, _ = Dag.load(args.dag)
    out = _out_dir(args)
    path = out / "corpus.txt"
    with open(path, "w", encoding="utf-8") as fh:
        for encoded in build_corpus(data, dag, args.ordering, args.seed):
            fh.write(encoded.text + "\n")
    print(f"{data.n} lines -> {path}")
    return EXIT_OK


def cmd_generate(args) -> int:
    schema = _load_schema(args)
    out = _out_dir(args)
    if args.model == "prototypical":
        sample = load_dataset(args.sample, schema, "h-sample")
        generated = prototypical_generate(PrototypicalAgent(sample), args.target_count, args.seed)
        stats = {"attempts": args.target_count, "accepted": args.target_count,
                 "rejected_by_reason": {}, "wall_time": 0.0}
    else:
        config = GenerationConfig(
            target_count=args.target_count,
            temperature=args.tau,
            ordering_policy=args.ordering,
            seed=args.seed,
            max_attempts_factor=args.max_attempts_factor,
        )
        if args.model == "bn-chain":
            bn = BayesNet.load(args.bn, schema)
            generated, gstats = generate_population(
                ChainModel(bn, args.depth_lambda), config, schema, bn.dag
            )
        else:
            from .experiment import _open_endpoint

            dag, _ = Dag.load(args.dag) if args.dag else (None, None)
            endpoint = _open_endpoint(args.endpoint)
            try:
                generated, gstats = generate_via_external(
                    endpoint, config, schema, dag, raw_path=out / "raw.jsonl"
                )
            finally:
                endpoint.close()
        stats = gstats.to_json()
    generated.to_csv(out / "generated.csv")
    (out / "stats.json").write_text(json.dumps(stats, indent=2), encoding="utf-8")
    print(f"{generated.n} records -> {out / 'generated.csv'}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    schema = _load_schema(args)
    generated = load_dataset(args.generated, schema, "generated")
    sample = load_dataset(args.sample, schema, "h-sample")
    population = load_dataset(args.population, schema, "h-population")
    echo = {k: v for k, v in vars(args).items() if k != "func"}
    report = build_report(generated, sample, population, echo | {"command": "evaluate"})
    out = _out_dir(args)
    report.save(out / "report.json")
    print(
        f"precision={report.precision:.4f} recall={report.recall:.4f} "
        f"f1={report.f1:.4f} unique={report.unique_combinations_generated}"
    )
    return EXIT_OK


def _experiment_config(args) -> ExperimentConfig:
    return ExperimentConfig(
        schema_path=args.schema,
        population_path=args.population,
        sample_path=args.sample,
        sample_rate=args.sample_rate,
        model=args.model,
        depth_lambda=args.depth_lambda,
        alpha=args.alpha,
        tau=args.tau,
        ordering_policy=args.ordering,
        target_count=args.target_count,
        seed=args.seed,
        max_in_degree=args.max_in_degree,
        restarts=args.restarts,
        endpoint=args.endpoint,
        out_dir=args.out_dir,
        max_attempts_factor=args.max_attempts_factor,
    )


def cmd_experiment(args) -> int:
    report = run_experiment(_experiment_config(args))
    print(
        f"precision={report.precision:.4f} recall={report.recall:.4f} "
        f"f1={report.f1:.4f} unique={report.unique_combinations_generated}"
    )
    return EXIT_OK


def cmd_sweep(args) -> int:
    taus = [float(x) for x in args.tau_grid.split(",")]
    depths = [float(x) for x in args.lambda_grid.split(",")]
    seeds = [int(x) for x in args.seeds.split(",")]
    result = sweep(_experiment_config(args), taus, depths, seeds, workers=args.workers)
    if not result.rows:
        print("all sweep cells failed", file=sys.stderr)
        return EXIT_STAGE
    (tau, depth), best = result.best_cell()
    print(f"best cell: tau={tau:g} depth={depth:g} f1={best['f1']:.4f}")
    for failure in result.failures:
        print(f"failed cell: {failure}", file=sys.stderr)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, *flags: str) -> None:
    known = {
        "schema": lambda: p.add_argument("--schema", required=True, help="schema JSON path"),
        "population": lambda: p.add_argument("--population", required=True, help="population CSV"),
        "sample": lambda: p.add_argument("--sample", default=None, help="sample CSV"),
        "sample-rate": lambda: p.add_argument("--sample-rate", type=float, default=0.05),
        "seed": lambda: p.add_argument("--seed", type=int, default=0),
        "out-dir": lambda: p.add_argument("--out-dir", required=True),
        "ordering": lambda: p.add_argument(
            "--ordering", choices=["dag-det", "dag-rand", "random-perm"], default="dag-det"
        ),
        "tau": lambda: p.add_argument("--tau", type=float, default=1.0),
        "lambda": lambda: p.add_argument(
            "--lambda", dest="depth_lambda", type=float, default=1.0
        ),
        "alpha": lambda: p.add_argument("--alpha", type=float, default=0.1),
        "target-count": lambda: p.add_argument("--target-count", type=int, default=None),
        "endpoint": lambda: p.add_argument(
            "--endpoint", default=None, help="adapter: a command line, or tcp:HOST:PORT"
        ),
        "model": lambda: p.add_argument(
            "--model", choices=["prototypical", "bn-chain", "external"], default="bn-chain"
        ),
        "budget": lambda: p.add_argument("--max-attempts-factor", type=float, default=20.0),
        "structure": lambda: (
            p.add_argument("--max-in-degree", type=int, default=1),
            p.add_argument("--restarts", type=int, default=4),
        ),
    }
    for f in flags:
        known[f]()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="popsynth", description="Synthetic population toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("benchmark", help="emit the semi-synthetic benchmark datasets")
    p.add_argument("--population-size", type=int, default=200_000)
    _add_common(p, "sample-rate", "seed", "out-dir")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("coverage", help="combo/instance coverage across sampling rates")
    _add_common(p, "schema", "population", "seed", "out-dir")
    p.add_argument("--rates", default="0.01,0.05,0.1,0.25,0.5,1.0")
    p.add_argument("--replications", type=int, default=5)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("learn-structure", help="hill-climb a DAG with the K2 score")
    _add_common(p, "schema", "population", "seed", "out-dir", "structure")
    p.set_defaults(func=cmd_learn_structure)

    p = sub.add_parser("fit", help="fit CPTs for a DAG")
    _add_common(p, "schema", "population", "alpha", "out-dir")
    p.add_argument("--dag", required=True, help="DAG JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("corpus", help="export the encoded text corpus for the adapter")
    _add_common(p, "schema", "population", "ordering", "seed", "out-dir")
    p.add_argument("--dag", required=True, help="DAG JSON path")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("generate", help="generate records with a chosen model")
    _add_common(
        p, "schema", "model", "sample", "tau", "lambda", "ordering", "target-count",
        "endpoint", "seed", "out-dir", "budget",
    )
    p.add_argument("--bn", default=None, help="fitted BayesNet JSON (bn-chain)")
    p.add_argument("--dag", default=None, help="DAG JSON for the external prompt")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="evaluate generated records against a population")
    _add_common(p, "schema", "population", "out-dir")
    p.add_argument("--generated", required=True)
    p.add_argument("--sample", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("experiment", help="split, fit, generate, and evaluate in one run")
    _add_common(
        p, "schema", "population", "sample", "sample-rate", "model", "tau", "lambda",
        "alpha", "ordering", "target-count", "endpoint", "seed", "out-dir", "budget",
        "structure",
    )
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="temperature-by-depth sensitivity sweep")
    _add_common(
        p, "schema", "population", "sample", "sample-rate", "model", "alpha", "ordering",
        "target-count", "endpoint", "seed", "out-dir", "budget", "structure",
    )
    p.add_argument("--tau-grid", default="0.5,1.0,1.5")
    p.add_argument("--lambda-grid", default="0.3,0.6,0.9,1.0")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(
        func=cmd_sweep, tau=1.0, depth_lambda=1.0
    )

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AttemptBudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, AttemptBudgetExceeded):
            return EXIT_BUDGET
        if isinstance(exc.cause, (FileNotFoundError, ValueError, KeyError)):
            return EXIT_CONFIG
        return EXIT_STAGE
    except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
