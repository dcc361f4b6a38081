"""Conditional models driving autoregressive generation, and the resampling baseline.

A conditional model maps (ordering, assigned prefix, target attribute) to a
probability vector over the target's categories. The chain model wraps a
fitted Bayesian network and exposes a depth knob interpolating between an
uninformed uniform prior and the fully fitted conditionals, the built-in
analog of fine-tuning depth.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Mapping

import numpy as np

from .bayesnet import BayesNet, Ordering
from .dataset import AttributeSchema, Dataset

__all__ = [
    "ChainModel",
    "ConditionalModel",
    "NonPositiveTemperature",
    "PrototypicalAgent",
    "apply_temperature",
    "prototypical_generate",
]


class NonPositiveTemperature(ValueError):
    """Temperature must be strictly positive."""


def apply_temperature(dist, tau: float) -> np.ndarray:
    """Rescale a probability vector by temperature: out_i proportional to dist_i^(1/tau).

    Entries that are exactly zero stay zero (a category with no mass must stay
    impossible); tau < 1 sharpens the distribution, tau > 1 flattens it toward
    uniform over the support.
    """
    if tau <= 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {tau}")
    p = np.asarray(dist, dtype=np.float64)
    if tau == 1.0:
        return p.copy()
    out = np.zeros_like(p)
    pos = p > 0
    logp = np.log(p[pos]) / tau
    logp -= logp.max()
    w = np.exp(logp)
    out[pos] = w / w.sum()
    return out


class ConditionalModel(ABC):
    """Contract: a normalized distribution over the target given assigned values."""

    schema: AttributeSchema

    @abstractmethod
    def conditional(
        self, ordering: Ordering, prefix: Mapping[int, int], target: int
    ) -> np.ndarray:
        """Probability vector over the target attribute's categories."""


class ChainModel(ConditionalModel):
    """Fitted-BN conditionals blended with a uniform prior by ``depth_lambda``.

    ``depth_lambda = 1`` reproduces the fitted conditionals, ``0`` the uniform
    prior; values in between trade alignment with the training sample against
    exploration, mirroring shallow-vs-deep fine-tuning.
    """

    def __init__(self, bayesnet: BayesNet, depth_lambda: float = 1.0):
        if not (0.0 <= depth_lambda <= 1.0):
            raise ValueError("depth_lambda must be in [0, 1]")
        self.bayesnet = bayesnet
        self.depth_lambda = float(depth_lambda)
        self.schema = bayesnet.schema
        self._marginals = self._node_marginals()

    def _node_marginals(self) -> list[np.ndarray]:
        """Per-node marginals by a topological forward pass.

        For multi-parent nodes the parents' joint is approximated by the
        product of their marginals; exact under the default in-degree cap of 1.
        """
        from .bayesnet import sample_topological_order

        d = self.schema.d
        marginals: list[np.ndarray | None] = [None] * d
        for node in sample_topological_order(self.bayesnet.dag, "deterministic").permutation:
            cpt = self.bayesnet.cpts[node]
            if not cpt.parents:
                marginals[node] = cpt.table[0].copy()
                continue
            weight = np.ones(1)
            for p in cpt.parents:
                weight = np.multiply.outer(weight, marginals[p]).ravel()
            marginals[node] = weight @ cpt.table
        return [m for m in marginals]

    def fitted_row(self, prefix: Mapping[int, int], target: int) -> np.ndarray:
        """CPT row when every DAG parent is assigned, marginal fallback otherwise."""
        cpt = self.bayesnet.cpts[target]
        if all(p in prefix for p in cpt.parents):
            return cpt.row([prefix[p] for p in cpt.parents])
        return self._marginals[target]

    def conditional(
        self, ordering: Ordering, prefix: Mapping[int, int], target: int
    ) -> np.ndarray:
        r = self.schema.dims[target]
        lam = self.depth_lambda
        return (1.0 - lam) / r + lam * self.fitted_row(prefix, target)


class PrototypicalAgent:
    """Baseline that resamples whole records from the training sample."""

    def __init__(self, source: Dataset):
        self.source = source


def prototypical_generate(agent: PrototypicalAgent, count: int, seed: int = 0) -> Dataset:
    """I.i.d. draws with replacement of whole records from the source dataset."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, agent.source.n, size=count)
    return Dataset(agent.source.schema, agent.source.values[idx], "generated")
