"""Serialization of records to template sentences and strict parsing back.

The surface form is fixed bit-exactly: clauses ``The respondent's {display}
is {phrase}`` joined by ``", "`` and terminated by ``"."``. Parsing accepts
arbitrary text and never raises; anything outside the schema's attribute
space comes back as a reason-coded :class:`InvalidOutput` value.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .bayesnet import Dag, Ordering, sample_topological_order
from .dataset import PHRASE_CLAUSE_BREAKER, AttributeSchema, Dataset, Record

__all__ = [
    "CLAUSE_PREFIX",
    "CLAUSE_SEPARATOR",
    "TERMINATOR",
    "EncodedText",
    "InvalidOutput",
    "InvalidReason",
    "build_corpus",
    "decode_text",
    "encode_record",
    "generation_prompt",
]

CLAUSE_PREFIX = "The respondent's "
CLAUSE_INFIX = " is "
CLAUSE_SEPARATOR = ", "
TERMINATOR = "."

# schema validation bans this substring inside phrases; keep the two in sync
assert PHRASE_CLAUSE_BREAKER == CLAUSE_SEPARATOR + CLAUSE_PREFIX.rstrip(" ") + ""


class InvalidReason(enum.Enum):
    MALFORMED_CLAUSE = "MalformedClause"
    UNKNOWN_ATTRIBUTE = "UnknownAttribute"
    UNKNOWN_PHRASE = "UnknownPhrase"
    MISSING_ATTRIBUTE = "MissingAttribute"
    DUPLICATE_ATTRIBUTE = "DuplicateAttribute"


@dataclass(frozen=True)
class InvalidOutput:
    """Parse rejection carried as a value, never an exception."""

    reason: InvalidReason
    detail: str = ""


@dataclass(frozen=True)
class EncodedText:
    text: str
    ordering: Ordering


def encode_record(record: Record, ordering: Ordering, schema: AttributeSchema) -> EncodedText:
    """Render a record as clauses in ordering order, ``", "``-joined, ``"."``-terminated."""
    if len(ordering.permutation) != schema.d:
        raise ValueError("ordering length does not match the schema")
    clauses = []
    for idx in ordering.permutation:
        attr = schema.attributes[idx]
        phrase = attr.categories[record.values[idx]].phrase
        clauses.append(f"{CLAUSE_PREFIX}{attr.display_name}{CLAUSE_INFIX}{phrase}")
    return EncodedText(CLAUSE_SEPARATOR.join(clauses) + TERMINATOR, ordering)


def generation_prompt(schema: AttributeSchema, attribute_index: int) -> str:
    """Prompt stub naming the first attribute: ``The respondent's X is``."""
    display = schema.attributes[attribute_index].display_name
    return f"{CLAUSE_PREFIX}{display}{CLAUSE_INFIX}".rstrip(" ")


def decode_text(text: Union[str, bytes], schema: AttributeSchema) -> Union[Record, InvalidOutput]:
    """Parse one encoded line back into a Record, in schema order.

    Total over arbitrary input: any deviation from the template grammar or the
    schema's vocabulary yields an :class:`InvalidOutput` with a reason code.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8", errors="replace")
    text = text.rstrip("\r\n")
    if not text.endswith(TERMINATOR):
        return InvalidOutput(InvalidReason.MALFORMED_CLAUSE, "missing terminator")
    body = text[: -len(TERMINATOR)]
    parts = body.split(CLAUSE_SEPARATOR + CLAUSE_PREFIX)
    first = parts[0]
    if not first.startswith(CLAUSE_PREFIX):
        return InvalidOutput(InvalidReason.MALFORMED_CLAUSE, "missing clause prefix")
    clauses = [first[len(CLAUSE_PREFIX) :]] + parts[1:]

    # longest display-name match first, so names that prefix each other parse safely
    displays = sorted(
        ((a.display_name, i) for i, a in enumerate(schema.attributes)),
        key=lambda t: -len(t[0]),
    )
    values: dict[int, int] = {}
    for clause in clauses:
        matched = None
        for display, idx in displays:
            if clause.startswith(display + CLAUSE_INFIX):
                matched = (idx, clause[len(display) + len(CLAUSE_INFIX) :])
                break
        if matched is None:
            if CLAUSE_INFIX in clause:
                name = clause.split(CLAUSE_INFIX, 1)[0]
                return InvalidOutput(InvalidReason.UNKNOWN_ATTRIBUTE, name)
            return InvalidOutput(InvalidReason.MALFORMED_CLAUSE, clause[:80])
        idx, phrase = matched
        cat = schema.attributes[idx].phrase_to_id.get(phrase)
        if cat is None:
            return InvalidOutput(
                InvalidReason.UNKNOWN_PHRASE,
                f"{schema.attributes[idx].display_name}: {phrase[:80]}",
            )
        if idx in values:
            return InvalidOutput(
                InvalidReason.DUPLICATE_ATTRIBUTE, schema.attributes[idx].display_name
            )
        values[idx] = cat
    if len(values) != schema.d:
        missing = [a.display_name for i, a in enumerate(schema.attributes) if i not in values]
        return InvalidOutput(InvalidReason.MISSING_ATTRIBUTE, ", ".join(missing))
    return Record(tuple(values[i] for i in range(schema.d)))


def build_corpus(
    dataset: Dataset, dag: Dag, policy: str = "dag-randomized", seed: int = 0
) -> Iterator[EncodedText]:
    """Encode every record, one line each, under the requested ordering policy.

    ``dag-deterministic`` reuses one ordering; ``dag-randomized`` draws a fresh
    topological order per record; ``random-permutation`` ignores the DAG and
    permutes attributes uniformly (the unconstrained-ordering baseline).
    """
    aliases = {
        "dag-det": "dag-deterministic",
        "dag-rand": "dag-randomized",
        "random-perm": "random-permutation",
    }
    policy = aliases.get(policy, policy)
    if policy not in ("dag-deterministic", "dag-randomized", "random-permutation"):
        raise ValueError(f"unknown corpus policy {policy!r}")
    rng = np.random.default_rng(seed)
    schema = dataset.schema
    fixed = (
        sample_topological_order(dag, "deterministic")
        if policy == "dag-deterministic"
        else None
    )
    for record in dataset:
        if policy == "dag-deterministic":
            ordering = fixed
        elif policy == "dag-randomized":
            ordering = sample_topological_order(dag, "randomized", rng)
        else:
            ordering = Ordering(tuple(int(i) for i in rng.permutation(schema.d)))
        yield encode_record(record, ordering, schema)
