"""Serialize records to template sentences and parse generated text back.

Each record becomes one sentence of clauses ordered by a topological
ordering. The parser is strict: anything outside the schema's vocabulary is
rejected with a reason code instead of being silently coerced.
"""

import popsynth as ps

spec = ps.default_benchmark_spec(population_size=100_000)
population, sample, truth = ps.make_benchmark(spec)
schema = spec.schema

dag = ps.hill_climb(sample, max_in_degree=1, restarts=4, seed=0)

print("three corpus lines under randomized topological orderings:")
for encoded in list(ps.build_corpus(sample, dag, "dag-rand", seed=1))[:3]:
    print(f"  {encoded.text}")

record = sample.records[0]
ordering = ps.sample_topological_order(dag, "deterministic")
line = ps.encode_record(record, ordering, schema)
print(f"\nencoded:  {line.text}")
print(f"decoded back to the same record: {ps.decode_text(line.text, schema) == record}")

print("\nrejections:")
bad = [
    "The respondent's Age Group is Ageless, The respondent's Gender is Male.",
    "The respondent's Gender is Male.",
    "free-form text the model hallucinated",
]
for text in bad:
    out = ps.decode_text(text, schema)
    print(f"  {out.reason.value:<18} <- {text[:60]}")

print(f"\ngeneration prompt for the DAG root: "
      f"{ps.generation_prompt(schema, ordering.permutation[0])!r}")
