"""Evaluation metrics: SRMSE, precision/recall/F1, and combination classification.

Precision is the fraction of generated records whose full attribute
combination exists in the reference population (feasibility); recall is the
fraction of population records whose combination was generated (diversity).
Recall therefore depends only on the *set* of generated combinations, while
precision weights each generated record.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from itertools import combinations
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .dataset import CombinationIndex, Dataset, build_combination_index

__all__ = [
    "EvalReport",
    "ZeroClassCounts",
    "build_report",
    "classify_combinations",
    "precision_recall_f1",
    "srmse",
    "unique_combination_count",
]


def _codes(dataset: Dataset) -> np.ndarray:
    dims = dataset.schema.dims
    return np.ravel_multi_index(tuple(dataset.values.T), dims).astype(np.int64)


def unique_combination_count(dataset: Dataset) -> int:
    """Number of distinct full attribute combinations in the dataset."""
    return int(np.unique(_codes(dataset)).size)


def precision_recall_f1(generated: Dataset, population: Dataset) -> tuple[float, float, float]:
    """Instance-weighted feasibility and diversity per the set-membership indicators."""
    gen_codes = _codes(generated)
    pop_codes = _codes(population)
    gen_unique = np.unique(gen_codes)
    pop_unique = np.unique(pop_codes)
    precision = float(np.isin(gen_codes, pop_unique, assume_unique=False).mean())
    recall = float(np.isin(pop_codes, gen_unique, assume_unique=False).mean())
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


@dataclass(frozen=True)
class ZeroClassCounts:
    """Partition of unique combinations by presence in (sample, population, generated).

    ``uncovered`` collects the remaining membership patterns, e.g. population
    combinations that neither the sample nor the generator ever produced.
    """

    general: int
    missing: int
    sampling_zero: int
    structural_zero: int
    uncovered: int

    @property
    def total(self) -> int:
        return (
            self.general + self.missing + self.sampling_zero + self.structural_zero + self.uncovered
        )


def classify_combinations(
    generated: Dataset, sample: Dataset, population: Dataset
) -> ZeroClassCounts:
    """Classify every unique combination seen anywhere into the four-way taxonomy."""
    s = np.unique(_codes(sample))
    p = np.unique(_codes(population))
    g = np.unique(_codes(generated))
    in_s_p = np.intersect1d(s, p, assume_unique=True)
    general = int(np.isin(in_s_p, g, assume_unique=False).sum())
    missing = in_s_p.size - general
    p_not_s = np.setdiff1d(p, s, assume_unique=True)
    sampling_zero = int(np.isin(p_not_s, g).sum())
    structural_zero = int(np.setdiff1d(np.setdiff1d(g, s, assume_unique=True), p).size)
    union = np.union1d(np.union1d(s, p), g)
    uncovered = int(union.size - (general + missing + sampling_zero + structural_zero))
    return ZeroClassCounts(general, missing, sampling_zero, structural_zero, uncovered)


def _as_index(data: Union[Dataset, CombinationIndex]) -> CombinationIndex:
    return data if isinstance(data, CombinationIndex) else build_combination_index(data)


def _projection_srmse(ref: CombinationIndex, gen: CombinationIndex) -> float:
    """Root mean of squared relative cell errors over the reference's non-zero cells."""
    terms = []
    for key, cnt in ref.counts.items():
        p = cnt / ref.total
        p_hat = gen.counts.get(key, 0) / gen.total
        terms.append(((p - p_hat) / p) ** 2)
    return float(np.sqrt(np.mean(terms)))


def _projection_srmse_conventional(
    ref: CombinationIndex, gen: CombinationIndex, cells: int
) -> float:
    """RMSE over the full cell grid divided by the mean cell probability (1 / cells)."""
    sq = 0.0
    for key in set(ref.counts) | set(gen.counts):
        p = ref.counts.get(key, 0) / ref.total
        p_hat = gen.counts.get(key, 0) / gen.total
        sq += (p - p_hat) ** 2
    rmse = np.sqrt(sq / cells)
    return float(rmse * cells)


def srmse(
    reference: Union[Dataset, CombinationIndex],
    generated: Union[Dataset, CombinationIndex],
    k: int = 2,
    variant: str = "paper",
    dims: Sequence[int] | None = None,
) -> float:
    """Standardized RMSE between k-way (k in {1, 2}) projected distributions.

    Every size-k attribute subset is projected and scored, and the per-subset
    values are averaged. The ``paper`` variant is the relative per-cell form
    restricted to the reference's non-zero cells; ``conventional`` divides the
    plain RMSE over the full grid by the mean cell probability and needs
    ``dims`` when the inputs are bare indexes.
    """
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    if variant not in ("paper", "conventional"):
        raise ValueError(f"unknown variant {variant!r}")
    if dims is None and isinstance(reference, Dataset):
        dims = reference.schema.dims
    ref = _as_index(reference)
    gen = _as_index(generated)
    d = len(next(iter(ref.counts)))
    values = []
    for subset in combinations(range(d), k):
        ref_p = ref.project(subset)
        gen_p = gen.project(subset)
        if variant == "paper":
            values.append(_projection_srmse(ref_p, gen_p))
        else:
            if dims is None:
                raise ValueError("conventional variant needs dims for the full cell grid")
            cells = int(np.prod([dims[a] for a in subset]))
            values.append(_projection_srmse_conventional(ref_p, gen_p, cells))
    return float(np.mean(values))


@dataclass
class EvalReport:
    """All evaluation quantities for one generated dataset, plus provenance."""

    marginal_srmse: float
    bivariate_srmse: float
    precision: float
    recall: float
    f1: float
    unique_combinations_generated: int
    zero_classes: ZeroClassCounts
    M: int
    N: int
    config: dict

    def to_json(self) -> dict:
        out = asdict(self)
        out["zero_classes"] = asdict(self.zero_classes)
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        zc = ZeroClassCounts(**obj["zero_classes"])
        fields = {k: v for k, v in obj.items() if k != "zero_classes"}
        return cls(zero_classes=zc, **fields)

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def build_report(
    generated: Dataset,
    sample: Dataset,
    population: Dataset,
    config: dict | None = None,
) -> EvalReport:
    """Evaluate generated data against the population (sample used for zero classes)."""
    precision, recall, f1 = precision_recall_f1(generated, population)
    return EvalReport(
        marginal_srmse=srmse(population, generated, k=1),
        bivariate_srmse=srmse(population, generated, k=2),
        precision=precision,
        recall=recall,
        f1=f1,
        unique_combinations_generated=unique_combination_count(generated),
        zero_classes=classify_combinations(generated, sample, population),
        M=generated.n,
        N=population.n,
        config=dict(config or {}),
    )
