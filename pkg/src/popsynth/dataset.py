"""Categorical attribute spaces, datasets, sample splits, and combination counts.

The attribute space is a finite product of small category sets. Records are
dense integer vectors positionally aligned with the schema; labels and phrases
are presentation-level lookups kept out of the hot paths, which operate on a
read-only ``(N, d)`` integer array.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Attribute",
    "AttributeSchema",
    "Category",
    "CombinationIndex",
    "CoverageCurve",
    "CoverageRow",
    "Dataset",
    "EmptyDataset",
    "InvalidRate",
    "Record",
    "SchemaError",
    "UnknownCategoryLabel",
    "UnknownColumn",
    "build_combination_index",
    "combo_and_instance_coverage",
    "coverage_analysis",
    "derive_seed",
    "load_dataset",
    "split_h_sample",
]

# The text codec splits clauses on ", The respondent's ". A phrase containing
# that substring would make parsing ambiguous, so schemas reject it up front.
PHRASE_CLAUSE_BREAKER = ", The respondent's"


class SchemaError(ValueError):
    """Schema definition violates a structural invariant."""


class UnknownColumn(ValueError):
    """CSV header does not match the schema's attribute names."""


class UnknownCategoryLabel(ValueError):
    """A CSV cell holds a label outside the attribute's category set."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyDataset(ValueError):
    """Dataset construction would produce zero records."""


class InvalidRate(ValueError):
    """Sampling rate outside (0, 1]."""


def derive_seed(master: int, *key: int) -> int:
    """Derive an independent child seed from a master seed and an index path."""
    ss = np.random.SeedSequence([int(master), *[int(k) for k in key]])
    return int(ss.generate_state(1)[0])


@dataclass(frozen=True)
class Category:
    label: str
    phrase: str


@dataclass(frozen=True)
class Attribute:
    """One categorical variable: a short name, a display noun phrase, and its categories.

    Category ids are dense 0-based integers assigned by position in
    ``categories``; they never appear in files, which carry labels instead.
    """

    name: str
    display_name: str
    categories: tuple[Category, ...]

    def __post_init__(self) -> None:
        if len(self.categories) < 2:
            raise SchemaError(f"attribute {self.name!r} needs at least 2 categories")
        labels = [c.label for c in self.categories]
        phrases = [c.phrase for c in self.categories]
        if len(set(labels)) != len(labels):
            raise SchemaError(f"attribute {self.name!r} has duplicate category labels")
        if len(set(phrases)) != len(phrases):
            raise SchemaError(f"attribute {self.name!r} has duplicate category phrases")
        for label in labels:
            if "," in label:
                raise SchemaError(
                    f"attribute {self.name!r}: label {label!r} contains a comma, "
                    "which the CSV format does not quote"
                )
        for phrase in phrases:
            if PHRASE_CLAUSE_BREAKER in phrase:
                raise SchemaError(
                    f"attribute {self.name!r}: phrase {phrase!r} contains the "
                    "clause separator and cannot be parsed back unambiguously"
                )

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @cached_property
    def label_to_id(self) -> Mapping[str, int]:
        return {c.label: i for i, c in enumerate(self.categories)}

    @cached_property
    def phrase_to_id(self) -> Mapping[str, int]:
        return {c.phrase: i for i, c in enumerate(self.categories)}


@dataclass(frozen=True)
class AttributeSchema:
    """Ordered collection of attributes defining the full combination space."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self) -> None:
        if len(self.attributes) < 2:
            raise SchemaError("schema needs at least 2 attributes")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise SchemaError("attribute names must be unique")
        displays = [a.display_name for a in self.attributes]
        if len(set(displays)) != len(displays):
            raise SchemaError("attribute display names must be unique")

    @property
    def d(self) -> int:
        return len(self.attributes)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    @cached_property
    def dims(self) -> tuple[int, ...]:
        return tuple(a.n_categories for a in self.attributes)

    @cached_property
    def name_to_index(self) -> Mapping[str, int]:
        return {a.name: i for i, a in enumerate(self.attributes)}

    def attribute(self, name: str) -> Attribute:
        return self.attributes[self.name_to_index[name]]

    def labels_for(self, values: Sequence[int]) -> tuple[str, ...]:
        return tuple(a.categories[v].label for a, v in zip(self.attributes, values))

    def to_json(self) -> dict:
        return {
            "attributes": [
                {
                    "name": a.name,
                    "display_name": a.display_name,
                    "categories": [{"label": c.label, "phrase": c.phrase} for c in a.categories],
                }
                for a in self.attributes
            ]
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AttributeSchema":
        attrs = []
        for a in obj["attributes"]:
            cats = tuple(Category(c["label"], c.get("phrase", c["label"])) for c in a["categories"])
            attrs.append(Attribute(a["name"], a.get("display_name", a["name"]), cats))
        return cls(tuple(attrs))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "AttributeSchema":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Record:
    """One individual: a fixed-length vector of category ids in schema order."""

    values: tuple[int, ...]


class Dataset:
    """Immutable collection of records over one schema.

    Canonical storage is a read-only ``(N, d)`` integer array; ``records``
    materializes :class:`Record` objects on demand and is meant for small data.
    """

    def __init__(self, schema: AttributeSchema, values: np.ndarray, source_tag: str = "dataset"):
        values = np.ascontiguousarray(values, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] != schema.d:
            raise ValueError(f"values must have shape (N, {schema.d})")
        if values.shape[0] < 1:
            raise EmptyDataset("dataset needs at least one record")
        dims = np.asarray(schema.dims)
        if values.min(initial=0) < 0 or (values >= dims).any():
            raise ValueError("record values outside the schema's category ranges")
        values.setflags(write=False)
        self._schema = schema
        self._values = values
        self._source_tag = source_tag

    @classmethod
    def from_records(
        cls, schema: AttributeSchema, records: Iterable[Record | Sequence[int]], source_tag: str = "dataset"
    ) -> "Dataset":
        rows = [r.values if isinstance(r, Record) else tuple(r) for r in records]
        if not rows:
            raise EmptyDataset("dataset needs at least one record")
        return cls(schema, np.asarray(rows, dtype=np.int64), source_tag)

    @property
    def schema(self) -> AttributeSchema:
        return self._schema

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def source_tag(self) -> str:
        return self._source_tag

    @property
    def n(self) -> int:
        return self._values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Record]:
        for row in self._values:
            yield Record(tuple(int(v) for v in row))

    @property
    def records(self) -> list[Record]:
        return list(self)

    def retagged(self, source_tag: str) -> "Dataset":
        return Dataset(self._schema, self._values, source_tag)

    def to_csv(self, destination: str | Path | io.TextIOBase) -> None:
        """Write the CSV form: header of attribute names, cells of category labels."""
        own = isinstance(destination, (str, Path))
        stream = open(destination, "w", encoding="utf-8", newline="") if own else destination
        try:
            writer = csv.writer(stream)
            writer.writerow(self._schema.names)
            label_tables = [
                [c.label for c in a.categories] for a in self._schema.attributes
            ]
            for row in self._values.tolist():
                writer.writerow([label_tables[j][v] for j, v in enumerate(row)])
        finally:
            if own:
                stream.close()


def _open_text(csv_source) -> io.TextIOBase:
    if isinstance(csv_source, (str, Path)):
        return open(csv_source, "r", encoding="utf-8", newline="")
    if isinstance(csv_source, (bytes, bytearray)):
        return io.StringIO(csv_source.decode("utf-8"))
    if isinstance(csv_source, io.RawIOBase) or isinstance(csv_source, io.BufferedIOBase):
        return io.TextIOWrapper(csv_source, encoding="utf-8")
    return csv_source  # already a text stream


def load_dataset(csv_source, schema: AttributeSchema, source_tag: str = "dataset") -> Dataset:
    """Load a label-valued CSV, remapping columns to schema order.

    The header must contain exactly the schema's attribute names in any order;
    every cell must be a known category label for its column.
    """
    stream = _open_text(csv_source)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("CSV has no header row") from None
    header = [h.strip() for h in header]
    expected = set(schema.names)
    seen = set()
    for col in header:
        if col not in expected:
            raise UnknownColumn(f"column {col!r} is not a schema attribute")
        if col in seen:
            raise UnknownColumn(f"column {col!r} appears more than once")
        seen.add(col)
    missing = expected - seen
    if missing:
        raise UnknownColumn(f"missing column(s): {sorted(missing)}")

    # position of each schema attribute inside the file's column order
    file_pos = {name: header.index(name) for name in schema.names}
    lookups = [schema.attributes[j].label_to_id for j in range(schema.d)]
    positions = [file_pos[name] for name in schema.names]

    rows: list[list[int]] = []
    for line_no, cells in enumerate(reader, start=2):
        if not cells:
            continue
        if len(cells) != len(header):
            raise UnknownColumn(f"row {line_no} has {len(cells)} cells, expected {len(header)}")
        row = []
        for j, pos in enumerate(positions):
            label = cells[pos]
            cat = lookups[j].get(label)
            if cat is None:
                name = schema.names[j]
                raise UnknownCategoryLabel(
                    f"row {line_no}, column {name!r}: unknown label {label!r}",
                    row=line_no,
                    column=name,
                )
            row.append(cat)
        rows.append(row)
    if not rows:
        raise EmptyDataset("CSV has a header but no data rows")
    return Dataset(schema, np.asarray(rows, dtype=np.int64), source_tag)


def _sample_size(rate: float, n: int) -> int:
    # round(rate * N) with ties rounded up, so sample sizes are reproducible
    return int(np.floor(rate * n + 0.5))


def split_h_sample(population: Dataset, rate: float, seed: int) -> Dataset:
    """Draw a uniform random subset without replacement, tagged ``h-sample``.

    Size is round(rate * N) with ties up; record order follows the population.
    """
    if not (0.0 < rate <= 1.0):
        raise InvalidRate(f"rate must be in (0, 1], got {rate}")
    n = population.n
    size = _sample_size(rate, n)
    if size < 1:
        raise EmptyDataset(f"rate {rate} rounds to an empty sample for N={n}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(n, size=size, replace=False))
    return Dataset(population.schema, population.values[idx], "h-sample")


@dataclass(frozen=True)
class CombinationIndex:
    """Multiset of full attribute combinations: d-tuple key -> occurrence count."""

    counts: Mapping[tuple[int, ...], int]
    total: int

    @property
    def unique_count(self) -> int:
        return len(self.counts)

    def project(self, positions: Sequence[int]) -> "CombinationIndex":
        """Marginalize onto the given attribute positions (counts summed)."""
        out: dict[tuple[int, ...], int] = {}
        for key, cnt in self.counts.items():
            sub = tuple(key[p] for p in positions)
            out[sub] = out.get(sub, 0) + cnt
        return CombinationIndex(out, self.total)


def build_combination_index(dataset: Dataset) -> CombinationIndex:
    uniq, cnts = np.unique(dataset.values, axis=0, return_counts=True)
    counts = {tuple(row): int(c) for row, c in zip(uniq.tolist(), cnts.tolist())}
    return CombinationIndex(counts, dataset.n)


def _combo_codes(values: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Mixed-radix encoding of full combinations into int64 scalars."""
    return np.ravel_multi_index(tuple(values.T), tuple(dims)).astype(np.int64)


def combo_and_instance_coverage(sample: Dataset, population: Dataset) -> tuple[float, float]:
    """Fraction of the population's unique combos, and of its records, covered by the sample."""
    dims = population.schema.dims
    pop_codes = _combo_codes(population.values, dims)
    sample_unique = np.unique(_combo_codes(sample.values, dims))
    pop_unique = np.unique(pop_codes)
    covered = np.intersect1d(sample_unique, pop_unique, assume_unique=True)
    combo_cov = covered.size / pop_unique.size
    instance_cov = float(np.isin(pop_codes, sample_unique).mean())
    return float(combo_cov), instance_cov


@dataclass(frozen=True)
class CoverageRow:
    rate: float
    replication: int
    combo_coverage: float
    instance_coverage: float
    seed: int


@dataclass(frozen=True)
class CoverageCurve:
    rows: tuple[CoverageRow, ...]

    def mean_by_rate(self) -> dict[float, tuple[float, float]]:
        acc: dict[float, list[tuple[float, float]]] = {}
        for r in self.rows:
            acc.setdefault(r.rate, []).append((r.combo_coverage, r.instance_coverage))
        return {
            rate: (
                float(np.mean([v[0] for v in vals])),
                float(np.mean([v[1] for v in vals])),
            )
            for rate, vals in acc.items()
        }

    def to_csv(self, destination: str | Path | io.TextIOBase) -> None:
        own = isinstance(destination, (str, Path))
        stream = open(destination, "w", encoding="utf-8", newline="") if own else destination
        try:
            writer = csv.writer(stream)
            writer.writerow(["rate", "replication", "combo_coverage", "instance_coverage"])
            for r in self.rows:
                writer.writerow([r.rate, r.replication, r.combo_coverage, r.instance_coverage])
        finally:
            if own:
                stream.close()


def coverage_analysis(
    population: Dataset, rates: Sequence[float], replications: int, seed: int
) -> CoverageCurve:
    """Measure combo and instance coverage of repeated h-sample splits.

    Each (rate, replication) cell draws its own sample with a seed derived from
    the master seed; the derived seed is recorded in the row so any individual
    sample can be reproduced with :func:`split_h_sample`.
    """
    if not rates:
        raise InvalidRate("rates must be non-empty")
    for rate in rates:
        if not (0.0 < rate <= 1.0):
            raise InvalidRate(f"rate must be in (0, 1], got {rate}")
    rows = []
    for i, rate in enumerate(rates):
        for rep in range(replications):
            child = derive_seed(seed, i, rep)
            sample = split_h_sample(population, rate, child)
            combo_cov, inst_cov = combo_and_instance_coverage(sample, population)
            rows.append(CoverageRow(float(rate), rep, combo_cov, inst_cov, child))
    return CoverageCurve(tuple(rows))
