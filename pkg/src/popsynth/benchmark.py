"""Semi-synthetic ground-truth benchmark with a knowable joint distribution.

A hand-specified Bayesian network plays the role of the unobservable real
population: ancestral sampling from it yields the h-population, a small split
of which becomes the h-sample used for model fitting. Because the truth is a
closed-form network, every metric can be cross-checked against the exact
joint distribution.

The default network mixes hard structural zeros (disallowed child categories
per parent value, which generated data can violate detectably) with mild
concentration inside the allowed sets, plus near-deterministic rows on the
binary nodes.
"""

from __future__ import annotations

import itertools
import json
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .bayesnet import BayesNet, Cpt, Dag, bn_ancestral_sample, sample_topological_order
from .dataset import Attribute, AttributeSchema, Category, Dataset, derive_seed, split_h_sample

__all__ = [
    "BenchmarkSpec",
    "ExactJoint",
    "SpaceTooLarge",
    "default_benchmark_spec",
    "exact_joint",
    "make_benchmark",
]

MAX_ENUMERABLE_CELLS = 10_000_000


class SpaceTooLarge(ValueError):
    """Combination space exceeds the exact-enumeration budget."""


@dataclass(frozen=True)
class BenchmarkSpec:
    """A true network plus the population size and sampling rate to realize."""

    schema: AttributeSchema
    true_dag: Dag
    true_cpts: tuple[Cpt, ...]
    population_size: int
    sample_rate: float
    seed: int

    def __post_init__(self) -> None:
        if self.population_size < 10_000:
            raise ValueError("population_size must be at least 10,000")
        if not (0.0 < self.sample_rate <= 1.0):
            raise ValueError("sample_rate must be in (0, 1]")
        # constructing the network validates DAG/CPT consistency
        BayesNet(self.true_dag, self.true_cpts, self.schema)

    @property
    def truth(self) -> BayesNet:
        return BayesNet(self.true_dag, self.true_cpts, self.schema)

    def to_json(self) -> dict:
        return {
            "schema": self.schema.to_json(),
            "truth": self.truth.to_json(),
            "population_size": self.population_size,
            "sample_rate": self.sample_rate,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BenchmarkSpec":
        schema = AttributeSchema.from_json(obj["schema"])
        truth = BayesNet.from_json(obj["truth"], schema)
        return cls(
            schema=schema,
            true_dag=truth.dag,
            true_cpts=truth.cpts,
            population_size=int(obj["population_size"]),
            sample_rate=float(obj["sample_rate"]),
            seed=int(obj["seed"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BenchmarkSpec":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def _cats(*labels: str) -> tuple[Category, ...]:
    return tuple(Category(lab, lab) for lab in labels)


def _default_schema() -> AttributeSchema:
    return AttributeSchema(
        (
            Attribute("gender", "Gender", _cats("Male", "Female")),
            Attribute("car", "Car Ownership", _cats("Yes", "No")),
            Attribute("kid", "Kid in Household", _cats("Yes", "No")),
            Attribute(
                "edu",
                "Education Status",
                _cats("Not student", "School", "University"),
            ),
            Attribute("workdays", "Work Days", _cats("None", "Part week", "Full week")),
            Attribute(
                "income",
                "Income Level",
                _cats("Low", "Lower-middle", "Upper-middle", "High"),
            ),
            Attribute(
                "depart",
                "Departure Time",
                _cats("Peak", "Off-peak", "Varied", "None"),
            ),
            Attribute(
                "household",
                "Household Size",
                _cats("1 person", "2 people", "3 people", "4 people", "5 or more"),
            ),
            Attribute(
                "age",
                "Age Group",
                _cats("Child", "Teen", "Young adult", "Adult", "Senior", "Elder"),
            ),
            Attribute(
                "mode",
                "Travel Mode",
                _cats("Car", "Public transit", "Walking", "Bicycle", "Taxi", "None"),
            ),
        )
    )


# node indices in the default schema
_GENDER, _CAR, _KID, _EDU, _WORKDAYS, _INCOME, _DEPART, _HOUSEHOLD, _AGE, _MODE = range(10)

_DEFAULT_EDGES = frozenset(
    {
        (_AGE, _EDU),
        (_EDU, _WORKDAYS),
        (_WORKDAYS, _MODE),
        (_MODE, _DEPART),
        (_AGE, _HOUSEHOLD),
        (_HOUSEHOLD, _INCOME),
        (_INCOME, _CAR),
        (_AGE, _KID),
    }
)

# Rows with exact zeros define the structural-zero surface of the benchmark;
# the binary child nodes carry the near-deterministic 0.95/0.05-style rows.
_DEFAULT_TABLES: dict[int, list[list[float]]] = {
    _GENDER: [[0.51, 0.49]],
    _AGE: [[0.08, 0.10, 0.22, 0.35, 0.15, 0.10]],
    _EDU: [  # by age
        [0.00, 1.00, 0.00],
        [0.00, 1.00, 0.00],
        [0.45, 0.10, 0.45],
        [0.95, 0.00, 0.05],
        [1.00, 0.00, 0.00],
        [1.00, 0.00, 0.00],
    ],
    _WORKDAYS: [  # by education
        [0.15, 0.25, 0.60],
        [0.85, 0.15, 0.00],
        [0.45, 0.40, 0.15],
    ],
    _MODE: [  # by work days
        [0.10, 0.15, 0.30, 0.05, 0.02, 0.38],
        [0.25, 0.30, 0.25, 0.10, 0.10, 0.00],
        [0.40, 0.35, 0.15, 0.05, 0.05, 0.00],
    ],
    _DEPART: [  # by travel mode
        [0.60, 0.25, 0.15, 0.00],
        [0.70, 0.20, 0.10, 0.00],
        [0.45, 0.35, 0.20, 0.00],
        [0.50, 0.30, 0.20, 0.00],
        [0.30, 0.40, 0.30, 0.00],
        [0.00, 0.00, 0.00, 1.00],
    ],
    _HOUSEHOLD: [  # by age
        [0.01, 0.09, 0.30, 0.40, 0.20],
        [0.01, 0.09, 0.25, 0.40, 0.25],
        [0.20, 0.30, 0.25, 0.15, 0.10],
        [0.10, 0.25, 0.25, 0.25, 0.15],
        [0.20, 0.40, 0.20, 0.12, 0.08],
        [0.30, 0.45, 0.15, 0.06, 0.04],
    ],
    _INCOME: [  # by household size
        [0.30, 0.40, 0.22, 0.08],
        [0.18, 0.40, 0.30, 0.12],
        [0.10, 0.35, 0.40, 0.15],
        [0.08, 0.30, 0.42, 0.20],
        [0.12, 0.33, 0.38, 0.17],
    ],
    _CAR: [  # by income
        [0.35, 0.65],
        [0.80, 0.20],
        [0.95, 0.05],
        [0.97, 0.03],
    ],
    _KID: [  # by age
        [0.95, 0.05],
        [0.60, 0.40],
        [0.25, 0.75],
        [0.45, 0.55],
        [0.10, 0.90],
        [0.05, 0.95],
    ],
}


def default_benchmark_spec(
    population_size: int = 200_000, sample_rate: float = 0.05, seed: int = 7
) -> BenchmarkSpec:
    """The standard 10-attribute chain-plus-branches benchmark."""
    schema = _default_schema()
    dag = Dag(schema.d, _DEFAULT_EDGES, max_in_degree=1)
    cpts = []
    for i in range(schema.d):
        parents = dag.parents(i)
        parent_dims = tuple(schema.dims[p] for p in parents)
        table = np.asarray(_DEFAULT_TABLES[i], dtype=np.float64)
        cpts.append(Cpt(i, parents, parent_dims, table, alpha=0.0))
    return BenchmarkSpec(
        schema=schema,
        true_dag=dag,
        true_cpts=tuple(cpts),
        population_size=population_size,
        sample_rate=sample_rate,
        seed=seed,
    )


def make_benchmark(spec: BenchmarkSpec) -> tuple[Dataset, Dataset, BayesNet]:
    """Realize the benchmark: draw the h-population, split the h-sample."""
    truth = spec.truth
    population = bn_ancestral_sample(
        truth, spec.population_size, derive_seed(spec.seed, 0)
    ).retagged("h-population")
    sample = split_h_sample(population, spec.sample_rate, derive_seed(spec.seed, 1))
    return population, sample, truth


class ExactJoint(Mapping):
    """Dense exact joint distribution, readable as a combo -> probability map."""

    def __init__(self, array: np.ndarray, dims: tuple[int, ...]):
        self._array = array
        self._dims = dims

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def dims(self) -> tuple[int, ...]:
        return self._dims

    def __getitem__(self, combo) -> float:
        return float(self._array[tuple(int(v) for v in combo)])

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*(range(r) for r in self._dims))

    def __len__(self) -> int:
        return int(np.prod(self._dims))

    def total(self) -> float:
        return float(self._array.sum())


def exact_joint(truth: BayesNet, max_cells: int = MAX_ENUMERABLE_CELLS) -> ExactJoint:
    """Enumerate the full joint as the product of CPT factors.

    Each node's table is broadcast into the full combination space along its
    own and its parents' axes; the product over nodes is the joint.
    """
    dims = truth.schema.dims
    n_cells = int(np.prod(dims))
    if n_cells > max_cells:
        raise SpaceTooLarge(f"{n_cells} cells exceed the budget of {max_cells}")
    joint = np.ones(dims, dtype=np.float64)
    for node in sample_topological_order(truth.dag, "deterministic").permutation:
        cpt = truth.cpts[node]
        axes = list(cpt.parents) + [node]
        factor = cpt.table.reshape([dims[a] for a in axes])
        # transpose so the factor's axes appear in ascending absolute order
        order = sorted(range(len(axes)), key=lambda k: axes[k])
        factor = np.transpose(factor, order)
        shape = [dims[a] if a in set(axes) else 1 for a in range(len(dims))]
        joint = joint * factor.reshape(shape)
    return ExactJoint(joint, dims)
