"""End-to-end experiment pipeline and the temperature-by-depth sensitivity sweep.

An experiment is split -> fit -> generate -> evaluate with every artifact
persisted under one output directory; a sweep repeats the experiment over a
grid of decoding temperatures and fit depths with several seeds per cell and
reports the best-F1 cell.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .bayesnet import BayesNet, Dag, fit_cpts, hill_climb
from .dataset import AttributeSchema, load_dataset, split_h_sample
from .genmodels import ChainModel, PrototypicalAgent, prototypical_generate
from .metrics import EvalReport, build_report
from .sampler import (
    AttemptBudgetExceeded,
    GenerationConfig,
    GenerationStats,
    StdioEndpoint,
    TcpEndpoint,
    generate_population,
    generate_via_external,
)

__all__ = ["ExperimentConfig", "StageError", "SweepResult", "run_experiment", "sweep"]

MODELS = ("prototypical", "bn-chain", "external")


class StageError(RuntimeError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ExperimentConfig:
    schema_path: str
    population_path: str
    sample_path: str | None = None
    sample_rate: float = 0.05
    model: str = "bn-chain"
    depth_lambda: float = 1.0
    alpha: float = 0.1
    tau: float = 1.0
    ordering_policy: str = "dag-det"
    target_count: int | None = None  # None: match the population size
    seed: int = 0
    max_in_degree: int = 1
    restarts: int = 4
    endpoint: str | None = None
    out_dir: str | None = None
    max_attempts_factor: float = 20.0

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}")
        if self.model == "external" and not self.endpoint:
            raise ValueError("external model needs an endpoint")

    def to_json(self) -> dict:
        return asdict(self)


def _open_endpoint(endpoint: str):
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[4:].rpartition(":")
        return TcpEndpoint(host or "127.0.0.1", int(port))
    import shlex

    return StdioEndpoint(shlex.split(endpoint))


def run_experiment(config: ExperimentConfig) -> EvalReport:
    """Run one full pipeline; returns (and optionally persists) the report."""

    def stage(name):
        class _Ctx:
            def __enter__(self):
                return None

            def __exit__(self, exc_type, exc, tb):
                if exc is not None and not isinstance(exc, (StageError, AttemptBudgetExceeded)):
                    raise StageError(name, exc) from exc
                return False

        return _Ctx()

    with stage("load"):
        schema = AttributeSchema.load(config.schema_path)
        population = load_dataset(config.population_path, schema, "h-population")

    with stage("split"):
        if config.sample_path:
            sample = load_dataset(config.sample_path, schema, "h-sample")
        else:
            sample = split_h_sample(population, config.sample_rate, config.seed)

    target = config.target_count or population.n
    dag: Dag | None = None
    bn: BayesNet | None = None

    with stage("fit"):
        if config.model in ("bn-chain", "external"):
            dag = hill_climb(sample, config.max_in_degree, config.restarts, config.seed)
        if config.model == "bn-chain":
            bn = fit_cpts(sample, dag, config.alpha)

    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    with stage("generate"):
        if config.model == "prototypical":
            generated = prototypical_generate(PrototypicalAgent(sample), target, config.seed)
            stats = GenerationStats(attempts=target, accepted=target)
        elif config.model == "bn-chain":
            gen_config = GenerationConfig(
                target_count=target,
                temperature=config.tau,
                ordering_policy=config.ordering_policy,
                seed=config.seed,
                max_attempts_factor=config.max_attempts_factor,
            )
            generated, stats = generate_population(
                ChainModel(bn, config.depth_lambda), gen_config, schema, dag
            )
        else:
            gen_config = GenerationConfig(
                target_count=target,
                temperature=config.tau,
                ordering_policy=config.ordering_policy,
                seed=config.seed,
                max_attempts_factor=config.max_attempts_factor,
            )
            endpoint = _open_endpoint(config.endpoint)
            try:
                generated, stats = generate_via_external(
                    endpoint,
                    gen_config,
                    schema,
                    dag,
                    raw_path=out_dir / "raw.jsonl" if out_dir else None,
                )
            finally:
                endpoint.close()

    with stage("evaluate"):
        report = build_report(generated, sample, population, config.to_json())

    if out_dir:
        with stage("persist"):
            report.save(out_dir / "report.json")
            generated.to_csv(out_dir / "generated.csv")
            (out_dir / "stats.json").write_text(
                json.dumps(stats.to_json(), indent=2), encoding="utf-8"
            )
    return report


@dataclass
class SweepResult:
    """Long-format grid results plus per-cell means and the best-F1 cell."""

    rows: list[dict] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    def cell_means(self) -> dict[tuple[float, float], dict[str, float]]:
        cells: dict[tuple[float, float], list[dict]] = {}
        for row in self.rows:
            cells.setdefault((row["tau"], row["depth"]), []).append(row)
        means = {}
        for key, group in cells.items():
            means[key] = {
                metric: float(np.mean([g[metric] for g in group]))
                for metric in ("precision", "recall", "f1", "unique_count")
            }
        return means

    def best_cell(self) -> tuple[tuple[float, float], dict[str, float]]:
        """Highest mean F1; ties resolved toward lower tau, then higher depth."""
        means = self.cell_means()
        if not means:
            raise ValueError("sweep produced no successful cells")
        best = max(means.items(), key=lambda kv: (kv[1]["f1"], -kv[0][0], kv[0][1]))
        return best

    def to_csv(self, destination) -> None:
        own = isinstance(destination, (str, Path))
        stream = open(destination, "w", encoding="utf-8", newline="") if own else destination
        try:
            writer = csv.writer(stream)
            writer.writerow(
                ["tau", "depth", "seed", "precision", "recall", "f1", "unique_count"]
            )
            for r in self.rows:
                writer.writerow(
                    [
                        r["tau"],
                        r["depth"],
                        r["seed"],
                        r["precision"],
                        r["recall"],
                        r["f1"],
                        r["unique_count"],
                    ]
                )
        finally:
            if own:
                stream.close()

    def summary(self) -> dict:
        (tau, depth), metrics = self.best_cell()
        return {
            "best_cell": {"tau": tau, "depth": depth, **metrics},
            "cells": [
                {"tau": k[0], "depth": k[1], **v} for k, v in sorted(self.cell_means().items())
            ],
            "failures": self.failures,
        }


def _run_cell(config_json: dict, tau: float, depth: float, seed: int) -> dict:
    cell = ExperimentConfig(
        **{
            **config_json,
            "tau": float(tau),
            "depth_lambda": float(depth),
            "seed": int(seed),
            "out_dir": None,
        }
    )
    started = time.perf_counter()
    report = run_experiment(cell)
    return {
        "tau": float(tau),
        "depth": float(depth),
        "seed": int(seed),
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "unique_count": report.unique_combinations_generated,
        "runtime": time.perf_counter() - started,
    }


def sweep(
    config: ExperimentConfig,
    taus: Sequence[float],
    depths: Sequence[float],
    seeds: Sequence[int],
    workers: int = 1,
) -> SweepResult:
    """Run the experiment per (tau, depth, seed) cell; failures are recorded, not fatal.

    Each cell is exactly one :func:`run_experiment` with the same seed, so a
    1x1 grid reproduces a standalone run bit for bit. Cells are independent
    and may run on up to ``workers`` threads; results are gathered back in
    grid order, so parallelism never changes the output.
    """
    if not taus or not depths or not seeds:
        raise ValueError("tau, depth, and seed grids must be non-empty")
    grid = [
        (float(tau), float(depth), int(seed))
        for tau in taus
        for depth in depths
        for seed in seeds
    ]
    result = SweepResult()
    outcomes: dict[tuple, dict] = {}
    config_json = config.to_json()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                key: pool.submit(_run_cell, config_json, *key) for key in grid
            }
        for key, future in futures.items():
            exc = future.exception()
            outcomes[key] = {"error": str(exc)} if exc else future.result()
    else:
        for key in grid:
            try:
                outcomes[key] = _run_cell(config_json, *key)
            except Exception as exc:  # record and continue with the rest of the grid
                outcomes[key] = {"error": str(exc)}
    for tau, depth, seed in grid:
        outcome = outcomes[(tau, depth, seed)]
        if "error" in outcome:
            result.failures.append(
                {"tau": tau, "depth": depth, "seed": seed, "error": outcome["error"]}
            )
        else:
            result.rows.append(outcome)
    if config.out_dir:
        out_dir = Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.to_csv(out_dir / "sweep.csv")
        (out_dir / "sweep_summary.json").write_text(
            json.dumps(result.summary(), indent=2), encoding="utf-8"
        )
    return result
