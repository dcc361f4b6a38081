import numpy as np
import pytest

from helpers import make_schema
from popsynth.bayesnet import fit_cpts, hill_climb
from popsynth.benchmark import default_benchmark_spec, make_benchmark
from popsynth.dataset import Dataset


@pytest.fixture(scope="session")
def footnote_env():
    """The worked precision/recall example: 9 population combos over a 3x4 grid.

    Population of 100 records over combos AC1..AC9 with frequencies
    {30, 20, 10, 10, 10, 5, 5, 5, 5}; cells (2,1).. stay infeasible.
    """
    schema = make_schema([3, 4])
    combos = [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0), (1, 1), (1, 2), (1, 3), (2, 0)]
    freqs = [30, 20, 10, 10, 10, 5, 5, 5, 5]
    pop_rows = [c for c, f in zip(combos, freqs) for _ in range(f)]
    population = Dataset(schema, np.asarray(pop_rows), "h-population")

    infeasible = (2, 1)
    a_feasible = [40, 30, 10, 10, 0, 0, 0, 0, 0]
    b_feasible = [0, 20, 20, 10, 10, 10, 10, 5, 5]
    model_a_rows = [c for c, f in zip(combos, a_feasible) for _ in range(f)] + [infeasible] * 10
    model_b_rows = [c for c, f in zip(combos, b_feasible) for _ in range(f)] + [infeasible] * 10
    model_a = Dataset(schema, np.asarray(model_a_rows), "generated")
    model_b = Dataset(schema, np.asarray(model_b_rows), "generated")
    return {
        "schema": schema,
        "population": population,
        "combos": combos,
        "freqs": freqs,
        "model_a": model_a,
        "model_b": model_b,
    }


@pytest.fixture(scope="session")
def benchmark_env():
    """Default benchmark realized once per session, with a fitted model."""
    spec = default_benchmark_spec()
    population, sample, truth = make_benchmark(spec)
    dag = hill_climb(sample, max_in_degree=1, restarts=4, seed=0)
    bn = fit_cpts(sample, dag, alpha=0.1)
    return {
        "spec": spec,
        "population": population,
        "sample": sample,
        "truth": truth,
        "dag": dag,
        "bn": bn,
    }


@pytest.fixture(scope="session")
def small_benchmark_env():
    """Reduced-size benchmark for pipeline tests that do not need 200k records."""
    spec = default_benchmark_spec(population_size=20_000, seed=3)
    population, sample, truth = make_benchmark(spec)
    return {"spec": spec, "population": population, "sample": sample, "truth": truth}
