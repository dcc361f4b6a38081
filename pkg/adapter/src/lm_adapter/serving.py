"""Wire protocol service: newline-delimited JSON frames over stdio or TCP.

Request:  {"op":"generate","count":N,"temperature":T,"prompt":"...","seed":S}
Response: exactly N lines {"text": "..."} followed by
          {"op":"done","generated":N}; malformed or unserviceable requests
          get a single {"op":"error","message":"..."} frame. A request never
          ends without a done or error frame.
"""

from __future__ import annotations

import json
import socketserver
import sys
from pathlib import Path
from typing import Iterator

from .training import generate_batch, load_artifact

__all__ = ["handle_request_line", "serve_stdio", "serve_tcp"]


class _Service:
    def __init__(self, artifact_dir: str | Path, default_temperature: float = 1.0):
        self.model, self.tokenizer, self.meta = load_artifact(artifact_dir)
        self.default_temperature = default_temperature
        self.max_new_tokens = int(self.meta["max_new_tokens"])

    def respond(self, line: str) -> Iterator[str]:
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            yield json.dumps({"op": "error", "message": "request is not valid JSON"})
            return
        if not isinstance(request, dict) or request.get("op") != "generate":
            yield json.dumps({"op": "error", "message": "expected op 'generate'"})
            return
        try:
            count = int(request["count"])
            temperature = float(request.get("temperature", self.default_temperature))
            prompt = str(request.get("prompt", ""))
            seed = int(request.get("seed", 0))
        except (KeyError, TypeError, ValueError) as exc:
            yield json.dumps({"op": "error", "message": f"bad request field: {exc}"})
            return
        if count < 0:
            yield json.dumps({"op": "error", "message": "count must be >= 0"})
            return
        if temperature <= 0:
            yield json.dumps({"op": "error", "message": "temperature must be > 0"})
            return
        try:
            texts = generate_batch(
                self.model,
                self.tokenizer,
                prompt,
                count,
                temperature,
                seed,
                self.max_new_tokens,
            )
        except Exception as exc:  # a failed batch must still end with one frame
            yield json.dumps({"op": "error", "message": f"generation failed: {exc}"})
            return
        for text in texts:
            yield json.dumps({"text": text})
        yield json.dumps({"op": "done", "generated": len(texts)})


def handle_request_line(service: _Service, line: str) -> list[str]:
    return list(service.respond(line))


def serve_stdio(artifact_dir: str | Path, default_temperature: float = 1.0) -> None:
    service = _Service(artifact_dir, default_temperature)
    for line in sys.stdin:
        if not line.strip():
            continue
        for frame in service.respond(line):
            sys.stdout.write(frame + "\n")
        sys.stdout.flush()


def serve_tcp(
    artifact_dir: str | Path, host: str, port: int, default_temperature: float = 1.0
) -> None:
    service = _Service(artifact_dir, default_temperature)

    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            for raw in self.rfile:
                line = raw.decode("utf-8").strip()
                if not line:
                    continue
                for frame in service.respond(line):
                    self.wfile.write((frame + "\n").encode("utf-8"))
                self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    with Server((host, port), Handler) as server:
        print(f"listening on {server.server_address[0]}:{server.server_address[1]}", file=sys.stderr)
        server.serve_forever()
