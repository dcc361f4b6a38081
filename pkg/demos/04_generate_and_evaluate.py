"""Generate synthetic populations and score feasibility against diversity.

Compares the resampling baseline with the chain model at a few depth
settings. Precision counts generated records whose combination exists in the
population; recall counts population records whose combination was generated.
"""

import popsynth as ps

spec = ps.default_benchmark_spec(population_size=100_000)
population, sample, truth = ps.make_benchmark(spec)

dag = ps.hill_climb(sample, max_in_degree=1, restarts=4, seed=0)
bn = ps.fit_cpts(sample, dag, alpha=0.1)

runs = {}
runs["prototypical"] = ps.prototypical_generate(
    ps.PrototypicalAgent(sample), population.n, seed=0
)
for lam in (0.6, 1.0):
    config = ps.GenerationConfig(
        target_count=population.n, temperature=1.0, ordering_policy="dag-rand", seed=0
    )
    generated, _ = ps.generate_population(ps.ChainModel(bn, lam), config, spec.schema, dag)
    runs[f"chain lambda={lam}"] = generated

print(f"{'model':<20} {'precision':>9} {'recall':>7} {'f1':>6} {'unique':>8} "
      f"{'sampling0':>9} {'structural0':>11}")
for name, generated in runs.items():
    report = ps.build_report(generated, sample, population)
    print(
        f"{name:<20} {report.precision:>9.3f} {report.recall:>7.3f} "
        f"{report.f1:>6.3f} {report.unique_combinations_generated:>8} "
        f"{report.zero_classes.sampling_zero:>9} {report.zero_classes.structural_zero:>11}"
    )

print("\nThe resampler is perfectly feasible but recovers nothing beyond the "
      "sample; the chain model trades a little feasibility for the sampling "
      "zeros that make the synthetic population diverse.")
