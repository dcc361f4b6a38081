"""Autoregressive generation loop, temperature control, and the adapter wire protocol.

Built-in models are driven attribute by attribute and always produce valid
records; the external path requests whole text lines over newline-delimited
JSON frames, filters them through the codec, and resamples until the target
count is met or the attempt budget is exhausted.
"""

from __future__ import annotations

import json
import socket
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bayesnet import Dag, Ordering, sample_topological_order
from .dataset import AttributeSchema, Dataset, derive_seed
from .genmodels import ChainModel, ConditionalModel, apply_temperature
from .textcodec import Record, decode_text

__all__ = [
    "AttemptBudgetExceeded",
    "EndpointUnavailable",
    "GenerationConfig",
    "GenerationStats",
    "ProtocolViolation",
    "StdioEndpoint",
    "TcpEndpoint",
    "generate_population",
    "generate_via_external",
]

_POLICY_ALIASES = {
    "dag-deterministic": "dag-det",
    "dag-randomized": "dag-rand",
    "random-permutation": "random-perm",
    "fixed-permutation": "fixed",
}
_POLICIES = ("dag-det", "dag-rand", "random-perm", "fixed")


class AttemptBudgetExceeded(RuntimeError):
    """The endpoint kept producing invalid lines past factor * target attempts."""


class EndpointUnavailable(RuntimeError):
    """Transport failure or an adapter-reported error frame."""


class ProtocolViolation(RuntimeError):
    """Malformed frame or frame accounting that contradicts the request."""


@dataclass(frozen=True)
class GenerationConfig:
    """Target size, decoding temperature, ordering policy, and safety limits."""

    target_count: int
    temperature: float = 1.0
    ordering_policy: str = "dag-det"
    fixed_permutation: tuple[int, ...] | None = None
    seed: int = 0
    max_attempts_factor: float = 20.0
    batch_size: int = 256

    def __post_init__(self) -> None:
        policy = _POLICY_ALIASES.get(self.ordering_policy, self.ordering_policy)
        object.__setattr__(self, "ordering_policy", policy)
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if policy not in _POLICIES:
            raise ValueError(f"unknown ordering policy {policy!r}")
        if policy == "fixed" and self.fixed_permutation is None:
            raise ValueError("fixed policy requires fixed_permutation")
        if self.max_attempts_factor < 1:
            raise ValueError("max_attempts_factor must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class GenerationStats:
    attempts: int = 0
    accepted: int = 0
    rejected_by_reason: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0

    def reject(self, reason: str) -> None:
        self.rejected_by_reason[reason] = self.rejected_by_reason.get(reason, 0) + 1

    def to_json(self) -> dict:
        return {
            "attempts": self.attempts,
            "accepted": self.accepted,
            "rejected_by_reason": dict(self.rejected_by_reason),
            "wall_time": self.wall_time,
        }


def _tempered_cpt_tables(model: ChainModel, tau: float) -> list[np.ndarray]:
    """Per-node tables of temperature-scaled, depth-blended conditional rows."""
    tables = []
    lam = model.depth_lambda
    for cpt in model.bayesnet.cpts:
        r = cpt.table.shape[1]
        mixed = (1.0 - lam) / r + lam * cpt.table
        tables.append(np.vstack([apply_temperature(row, tau) for row in mixed]))
    return tables


def _inverse_cdf_draw(rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(rows, axis=1)
    return np.minimum((u[:, None] > cdf).sum(axis=1), rows.shape[1] - 1)


def _generate_chain_vectorized(
    model: ChainModel, config: GenerationConfig, rng: np.random.Generator
) -> np.ndarray:
    """Ancestral sampling with tempered rows.

    Valid whenever every record's ordering puts parents before children
    (dag-det and dag-rand): each step's conditional then depends only on the
    sampled parent values, so the joint factorizes identically for all such
    orderings and can be drawn in one fixed topological pass.
    """
    bn = model.bayesnet
    tables = _tempered_cpt_tables(model, config.temperature)
    order = sample_topological_order(bn.dag, "deterministic").permutation
    m = config.target_count
    out = np.zeros((m, bn.schema.d), dtype=np.int64)
    for node in order:
        cpt = bn.cpts[node]
        if cpt.parents:
            cfg = np.ravel_multi_index(tuple(out[:, p] for p in cpt.parents), cpt.parent_dims)
            rows = tables[node][cfg]
        else:
            rows = np.broadcast_to(tables[node][0], (m, tables[node].shape[1]))
        out[:, node] = _inverse_cdf_draw(rows, rng.random(m))
    return out


def _resolve_ordering(
    config: GenerationConfig, dag: Dag | None, d: int, rng: np.random.Generator
) -> Ordering:
    policy = config.ordering_policy
    if policy in ("dag-det", "dag-rand"):
        if dag is None:
            raise ValueError(f"ordering policy {policy!r} needs a DAG")
        if policy == "dag-det":
            return sample_topological_order(dag, "deterministic")
        return sample_topological_order(dag, "randomized", rng)
    if policy == "random-perm":
        return Ordering(tuple(int(i) for i in rng.permutation(d)))
    return Ordering(config.fixed_permutation)


def generate_population(
    model: ConditionalModel,
    config: GenerationConfig,
    schema: AttributeSchema | None = None,
    dag: Dag | None = None,
) -> tuple[Dataset, GenerationStats]:
    """Drive a conditional model attribute by attribute to the target count.

    Built-in models cannot emit out-of-space values, so every attempt is
    accepted and the output is deterministic for a fixed (model, config, seed).
    """
    schema = schema or model.schema
    if dag is None and isinstance(model, ChainModel):
        dag = model.bayesnet.dag
    start = time.perf_counter()
    rng = np.random.default_rng(config.seed)
    m = config.target_count

    fast = isinstance(model, ChainModel) and config.ordering_policy in ("dag-det", "dag-rand")
    if fast:
        values = _generate_chain_vectorized(model, config, rng)
    else:
        d = schema.d
        fixed = (
            _resolve_ordering(config, dag, d, rng)
            if config.ordering_policy in ("dag-det", "fixed")
            else None
        )
        values = np.zeros((m, d), dtype=np.int64)
        for i in range(m):
            ordering = fixed if fixed is not None else _resolve_ordering(config, dag, d, rng)
            prefix: dict[int, int] = {}
            for target in ordering.permutation:
                probs = apply_temperature(
                    model.conditional(ordering, prefix, target), config.temperature
                )
                cdf = np.cumsum(probs)
                pick = min(int(np.searchsorted(cdf, rng.random(), side="right")), len(cdf) - 1)
                prefix[target] = pick
            values[i] = [prefix[j] for j in range(d)]

    stats = GenerationStats(attempts=m, accepted=m, wall_time=time.perf_counter() - start)
    return Dataset(schema, values, "generated"), stats


class _FrameReader:
    """Shared response-frame parsing for both transports."""

    @staticmethod
    def read_batch(readline: Callable[[], str], expected: int) -> list[str]:
        texts: list[str] = []
        while True:
            line = readline()
            if line == "":
                raise EndpointUnavailable("endpoint closed the stream mid-batch")
            line = line.strip()
            if not line:
                continue
            try:
                frame = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ProtocolViolation(f"frame is not valid JSON: {line[:120]!r}") from exc
            if not isinstance(frame, dict):
                raise ProtocolViolation(f"frame is not an object: {line[:120]!r}")
            op = frame.get("op")
            if op is None and "text" in frame:
                texts.append(str(frame["text"]))
                continue
            if op == "done":
                generated = frame.get("generated")
                if generated != len(texts) or len(texts) != expected:
                    raise ProtocolViolation(
                        f"done frame reports {generated} of {expected} requested, "
                        f"received {len(texts)} text frames"
                    )
                return texts
            if op == "error":
                raise EndpointUnavailable(
                    f"endpoint error: {frame.get('message', '(no message)')}"
                )
            raise ProtocolViolation(f"unexpected frame: {line[:120]!r}")


class StdioEndpoint:
    """Adapter spawned as a child process, framed over its standard streams."""

    def __init__(self, command: Sequence[str]):
        try:
            self._proc = subprocess.Popen(
                list(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise EndpointUnavailable(f"cannot spawn adapter: {exc}") from exc

    def generate(self, count: int, temperature: float, prompt: str, seed: int) -> list[str]:
        request = {
            "op": "generate",
            "count": count,
            "temperature": temperature,
            "prompt": prompt,
            "seed": seed,
        }
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EndpointUnavailable(f"adapter process is gone: {exc}") from exc
        return _FrameReader.read_batch(self._proc.stdout.readline, count)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class TcpEndpoint:
    """Adapter reached over a TCP address, same frame discipline as stdio."""

    def __init__(self, host: str, port: int, timeout: float = 300.0):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise EndpointUnavailable(f"cannot connect to {host}:{port}: {exc}") from exc
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")

    def generate(self, count: int, temperature: float, prompt: str, seed: int) -> list[str]:
        request = {
            "op": "generate",
            "count": count,
            "temperature": temperature,
            "prompt": prompt,
            "seed": seed,
        }
        try:
            self._file.write(json.dumps(request) + "\n")
            self._file.flush()
        except OSError as exc:
            raise EndpointUnavailable(f"connection lost: {exc}") from exc
        return _FrameReader.read_batch(self._file.readline, count)

    def close(self) -> None:
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def generate_via_external(
    endpoint,
    config: GenerationConfig,
    schema: AttributeSchema,
    dag: Dag | None = None,
    prompt: str | None = None,
    raw_path: str | Path | None = None,
) -> tuple[Dataset, GenerationStats]:
    """Request text lines from an adapter, filter them, and resample to the target.

    The prompt names the first attribute of the DAG's deterministic ordering
    unless given explicitly. Every received line counts as one attempt; invalid
    lines are tallied by reason and replaced by further requests until exactly
    ``target_count`` records are accepted or the attempt budget runs out.
    """
    from .textcodec import generation_prompt

    if prompt is None:
        first = (
            sample_topological_order(dag, "deterministic").permutation[0]
            if dag is not None
            else 0
        )
        prompt = generation_prompt(schema, first)

    start = time.perf_counter()
    m = config.target_count
    budget = int(config.max_attempts_factor * m)
    stats = GenerationStats()
    accepted_rows: list[tuple[int, ...]] = []
    raw_stream = open(raw_path, "w", encoding="utf-8") if raw_path is not None else None
    batch_index = 0
    try:
        while len(accepted_rows) < m:
            room = budget - stats.attempts
            if room <= 0:
                raise AttemptBudgetExceeded(
                    f"{stats.attempts} attempts produced only {len(accepted_rows)} "
                    f"of {m} valid records (budget {budget})"
                )
            count = min(config.batch_size, m - len(accepted_rows), room)
            lines = endpoint.generate(
                count, config.temperature, prompt, derive_seed(config.seed, batch_index)
            )
            batch_index += 1
            for line in lines:
                stats.attempts += 1
                parsed = decode_text(line, schema)
                ok = isinstance(parsed, Record)
                if ok:
                    accepted_rows.append(parsed.values)
                    stats.accepted += 1
                else:
                    stats.reject(parsed.reason.value)
                if raw_stream is not None:
                    entry = {"text": line, "accepted": ok}
                    if not ok:
                        entry["reason"] = parsed.reason.value
                    raw_stream.write(json.dumps(entry) + "\n")
    finally:
        if raw_stream is not None:
            raw_stream.close()
    stats.wall_time = time.perf_counter() - start
    values = np.asarray(accepted_rows, dtype=np.int64)
    return Dataset(schema, values, "generated"), stats
