"""Shared test-data builders."""

import numpy as np

from popsynth.bayesnet import BayesNet, Cpt, Dag
from popsynth.dataset import Attribute, AttributeSchema, Category, Dataset


def make_schema(dims, name_prefix="x"):
    """Plain schema with the given category counts per attribute."""
    attrs = []
    for i, r in enumerate(dims):
        cats = tuple(
            Category(f"{name_prefix}{i}c{j}", f"{name_prefix}{i} value {j}") for j in range(r)
        )
        attrs.append(Attribute(f"{name_prefix}{i}", f"{name_prefix.upper()} {i}", cats))
    return AttributeSchema(tuple(attrs))


def random_dataset(dims, n, seed=0, tag="dataset"):
    rng = np.random.default_rng(seed)
    schema = make_schema(dims)
    values = np.column_stack([rng.integers(0, r, size=n) for r in dims])
    return Dataset(schema, values, tag)


def chain_bn(d=3, dims_each=2, strong=0.9, seed=None):
    """Chain 0 -> 1 -> ... -> d-1; strong rows for binary, Dirichlet otherwise."""
    schema = make_schema([dims_each] * d)
    dag = Dag(d, frozenset((i, i + 1) for i in range(d - 1)), 1)
    rng = np.random.default_rng(0 if seed is None else seed)
    cpts = []
    for i in range(d):
        parents = dag.parents(i)
        n_cfg = dims_each ** len(parents)
        if dims_each == 2 and seed is None:
            table = (
                np.array([[0.5, 0.5]])
                if not parents
                else np.array([[strong, 1 - strong], [1 - strong, strong]])
            )
        else:
            table = rng.dirichlet(np.full(dims_each, 2.0), size=n_cfg)
        cpts.append(Cpt(i, parents, tuple(dims_each for _ in parents), table, 0.0))
    return BayesNet(dag, tuple(cpts), schema)


def random_dag(rng, d=None, dense=False):
    """Random DAG by orienting random edges along a hidden permutation."""
    d = d or int(rng.integers(2, 9))
    perm = rng.permutation(d)
    edges = set()
    p = 0.5 if dense else 0.3
    for i in range(d):
        for j in range(i + 1, d):
            if rng.random() < p:
                edges.add((int(perm[i]), int(perm[j])))
    return Dag(d, frozenset(edges), max_in_degree=d)
