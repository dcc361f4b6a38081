import itertools
import math

import numpy as np
import pytest

from helpers import chain_bn, make_schema, random_dag, random_dataset
from oracles import brute_k2
from popsynth.bayesnet import (
    BayesNet,
    Cpt,
    CyclicGraph,
    Dag,
    Ordering,
    bn_ancestral_sample,
    fit_cpts,
    hill_climb,
    k2_log_score,
    sample_topological_order,
)
from popsynth.dataset import Dataset


class TestDag:
    def test_rejects_cycles_and_self_loops(self):
        with pytest.raises(CyclicGraph):
            Dag(2, frozenset({(0, 1), (1, 0)}), 1)
        with pytest.raises(CyclicGraph):
            Dag(3, frozenset({(0, 0)}), 1)
        with pytest.raises(CyclicGraph):
            Dag(3, frozenset({(0, 1), (1, 2), (2, 0)}), 1)

    def test_rejects_cap_violation(self):
        with pytest.raises(ValueError):
            Dag(3, frozenset({(0, 2), (1, 2)}), 1)
        Dag(3, frozenset({(0, 2), (1, 2)}), 2)  # fine with cap 2

    def test_json_round_trip(self):
        dag = Dag(3, frozenset({(0, 1), (1, 2)}), 1)
        obj = dag.to_json(["a", "b", "c"])
        again, names = Dag.from_json(obj)
        assert names == ("a", "b", "c")
        assert again.edges == dag.edges
        assert again.max_in_degree == 1


class TestK2Score:
    def test_two_category_balanced_counts(self):
        schema = make_schema([2, 2])
        ds = Dataset(schema, np.asarray([[0, 0], [1, 0]]))
        assert k2_log_score(ds, 0, []) == pytest.approx(-math.log(6), abs=1e-12)

    def test_two_category_skewed_counts(self):
        schema = make_schema([2, 2])
        ds = Dataset(schema, np.asarray([[0, 0]] * 3))
        assert k2_log_score(ds, 0, []) == pytest.approx(-math.log(4), abs=1e-12)

    def test_matches_factorial_oracle_all_small_parent_sets(self):
        dims = [2, 3, 2, 3, 2]
        ds = random_dataset(dims, 60, seed=21)
        rows = ds.values.tolist()
        for node in range(5):
            others = [i for i in range(5) if i != node]
            parent_sets = [()] + [(a,) for a in others] + list(itertools.combinations(others, 2))
            for parents in parent_sets:
                fast = k2_log_score(ds, node, parents)
                slow = brute_k2(rows, node, parents, dims)
                assert fast == pytest.approx(slow, abs=1e-8)

    def test_node_in_parents_rejected(self):
        ds = random_dataset([2, 2], 10)
        with pytest.raises(ValueError):
            k2_log_score(ds, 0, [0])


class TestHillClimb:
    def test_independent_noise_yields_empty_graph(self):
        ds = random_dataset([2, 3, 2, 4], 10_000, seed=2)
        # oracle: no single-edge addition improves the K2 score
        for v in range(4):
            base = k2_log_score(ds, v, [])
            for u in range(4):
                if u != v:
                    assert k2_log_score(ds, v, [u]) <= base
        dag = hill_climb(ds, max_in_degree=1, restarts=4, seed=0)
        assert dag.edges == frozenset()

    def test_recovers_strong_chain_skeleton(self):
        truth = chain_bn(d=5, strong=0.9)
        for seed in range(3):
            data = bn_ancestral_sample(truth, 50_000, seed=seed)
            learned = hill_climb(data, max_in_degree=1, restarts=4, seed=seed)
            assert learned.skeleton() == truth.dag.skeleton()

    def test_in_degree_cap_enforced(self):
        ds = random_dataset([2, 2, 3, 2, 3], 2_000, seed=9)
        for cap in (1, 2):
            dag = hill_climb(ds, max_in_degree=cap, restarts=2, seed=0)
            for node in range(5):
                assert len(dag.parents(node)) <= cap

    def test_never_worse_than_empty_graph(self):
        truth = chain_bn(d=4, strong=0.8)
        data = bn_ancestral_sample(truth, 5_000, seed=3)
        dag = hill_climb(data, max_in_degree=1, restarts=3, seed=1)
        empty = sum(k2_log_score(data, i, []) for i in range(4))
        learned = sum(k2_log_score(data, i, dag.parents(i)) for i in range(4))
        assert learned >= empty

    def test_deterministic_per_seed(self):
        truth = chain_bn(d=5, strong=0.7)
        data = bn_ancestral_sample(truth, 3_000, seed=4)
        a = hill_climb(data, 1, 4, seed=12)
        b = hill_climb(data, 1, 4, seed=12)
        assert a.edges == b.edges


class TestFitCpts:
    def test_empirical_fraction(self):
        schema = make_schema([2, 2])
        ds = Dataset(schema, np.asarray([[0, 0]] * 3 + [[1, 0]]))
        bn = fit_cpts(ds, Dag(2, frozenset(), 1), alpha=0.0)
        assert np.allclose(bn.cpts[0].table[0], [0.75, 0.25])

    def test_unseen_configuration_uniform(self):
        schema = make_schema([2, 2])
        # parent value 1 never observed
        ds = Dataset(schema, np.asarray([[0, 0], [0, 1], [0, 1]]))
        bn = fit_cpts(ds, Dag(2, frozenset({(0, 1)}), 1), alpha=0.0)
        assert np.allclose(bn.cpts[1].table[1], [0.5, 0.5])

    def test_additive_smoothing(self):
        schema = make_schema([2, 2])
        ds = Dataset(schema, np.asarray([[0, 0]] * 3 + [[1, 0]]))
        bn = fit_cpts(ds, Dag(2, frozenset(), 1), alpha=1.0)
        assert np.allclose(bn.cpts[0].table[0], [4 / 6, 2 / 6])

    def test_rows_sum_to_one_and_positive_when_smoothed(self):
        ds = random_dataset([2, 3, 4], 50, seed=5)
        dag = Dag(3, frozenset({(0, 1), (1, 2)}), 1)
        for alpha in (0.0, 0.1, 1.0):
            bn = fit_cpts(ds, dag, alpha)
            for cpt in bn.cpts:
                assert np.allclose(cpt.table.sum(axis=1), 1.0, atol=1e-9)
                if alpha > 0:
                    assert (cpt.table > 0).all()

    def test_json_round_trip(self):
        ds = random_dataset([2, 3, 2], 200, seed=6)
        dag = Dag(3, frozenset({(0, 1), (1, 2)}), 1)
        bn = fit_cpts(ds, dag, alpha=0.5)
        again = BayesNet.from_json(bn.to_json(), ds.schema)
        for a, b in zip(bn.cpts, again.cpts):
            assert a.parents == b.parents
            assert np.allclose(a.table, b.table)


class TestTopologicalOrdering:
    def test_chain_is_forced(self):
        dag = Dag(3, frozenset({(0, 1), (1, 2)}), 1)
        for policy in ("randomized", "deterministic"):
            for seed in range(5):
                assert sample_topological_order(dag, policy, seed).permutation == (0, 1, 2)

    def test_star_randomized_hits_both_orders(self):
        dag = Dag(3, frozenset({(0, 1), (0, 2)}), 1)
        seen = {(0, 1, 2): 0, (0, 2, 1): 0}
        rng = np.random.default_rng(0)
        for _ in range(1000):
            seen[sample_topological_order(dag, "randomized", rng).permutation] += 1
        assert seen[(0, 1, 2)] >= 400
        assert seen[(0, 2, 1)] >= 400

    def test_disconnected_chains_processed_whole(self):
        dag = Dag(4, frozenset({(0, 1), (2, 3)}), 1)
        rng = np.random.default_rng(1)
        seen = set()
        for _ in range(200):
            seen.add(sample_topological_order(dag, "randomized", rng).permutation)
        assert seen == {(0, 1, 2, 3), (2, 3, 0, 1)}

    def test_deterministic_root_heads_longest_chain(self):
        # roots 0 (no children) and 1 (chain of length 2): traversal starts at 1
        dag = Dag(4, frozenset({(1, 2), (2, 3)}), 1)
        ordering = sample_topological_order(dag, "deterministic")
        assert ordering.permutation == (1, 2, 3, 0)

    def test_respects_edges_on_random_dags(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            dag = random_dag(rng)
            for policy in ("randomized", "deterministic"):
                ordering = sample_topological_order(dag, policy, int(rng.integers(1 << 31)))
                assert ordering.respects(dag)

    def test_unknown_policy(self):
        dag = Dag(2, frozenset(), 1)
        with pytest.raises(ValueError):
            sample_topological_order(dag, "alphabetical", 0)


class TestAncestralSampling:
    def test_degenerate_table_single_value(self):
        schema = make_schema([2, 2])
        cpts = (
            Cpt(0, (), (), np.asarray([[1.0, 0.0]]), 0.0),
            Cpt(1, (), (), np.asarray([[0.0, 1.0]]), 0.0),
        )
        bn = BayesNet(Dag(2, frozenset(), 1), cpts, schema)
        ds = bn_ancestral_sample(bn, 500, seed=0)
        assert (ds.values[:, 0] == 0).all()
        assert (ds.values[:, 1] == 1).all()

    def test_chain_conditional_frequencies(self):
        truth = chain_bn(d=2, strong=0.85)
        ds = bn_ancestral_sample(truth, 100_000, seed=42)
        for a in (0, 1):
            rows = ds.values[ds.values[:, 0] == a]
            freq = np.bincount(rows[:, 1], minlength=2) / len(rows)
            assert np.abs(freq - truth.cpts[1].table[a]).max() < 0.01

    def test_unsmoothed_fit_stays_inside_observed_support(self, footnote_env):
        # 9 of 12 grid cells observed; a zero-count conditional cell must never
        # be generated when alpha = 0
        population = footnote_env["population"]
        dag = Dag(2, frozenset({(0, 1)}), 1)
        bn = fit_cpts(population, dag, alpha=0.0)
        generated = bn_ancestral_sample(bn, 10_000, seed=1)
        support = {
            (a, b)
            for a in range(3)
            for b in range(4)
            if bn.cpts[0].table[0][a] > 0 and bn.cpts[1].table[a][b] > 0
        }
        seen = {tuple(r) for r in generated.values.tolist()}
        assert seen <= support

    def test_deterministic_per_seed(self):
        truth = chain_bn(d=4, strong=0.7)
        a = bn_ancestral_sample(truth, 1_000, seed=9)
        b = bn_ancestral_sample(truth, 1_000, seed=9)
        assert np.array_equal(a.values, b.values)
