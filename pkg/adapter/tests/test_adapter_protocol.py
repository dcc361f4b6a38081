"""Wire-protocol conformance: every request yields N text frames plus one done
frame, or exactly one error frame; count=0 is a legal empty batch."""

import json
import re
import socket
import subprocess
import sys
import time

from lm_adapter.serving import _Service, handle_request_line


def frame_kinds(frames):
    kinds = []
    for raw in frames:
        frame = json.loads(raw)
        if "op" not in frame and "text" in frame:
            kinds.append("text")
        else:
            kinds.append(frame["op"])
    return kinds


def generate_request(count, temperature=1.0, seed=0, prompt="The respondent's Trait A is"):
    return json.dumps(
        {"op": "generate", "count": count, "temperature": temperature,
         "prompt": prompt, "seed": seed}
    )


# golden transcripts: request line -> exact expected frame-kind sequence
GOLDEN = [
    (generate_request(3), ["text", "text", "text", "done"]),
    (generate_request(1), ["text", "done"]),
    (generate_request(0), ["done"]),
    ("{broken json", ["error"]),
    (json.dumps({"op": "train", "count": 1}), ["error"]),
    (json.dumps({"op": "generate", "count": -2}), ["error"]),
    (generate_request(2, temperature=0.0), ["error"]),
    (json.dumps({"op": "generate", "count": "many"}), ["error"]),
]


class TestGoldenTranscripts:
    def test_frame_discipline(self, tiny_artifact):
        service = _Service(tiny_artifact)
        for request, expected in GOLDEN:
            frames = handle_request_line(service, request)
            assert frame_kinds(frames) == expected, request

    def test_done_frame_accounting(self, tiny_artifact):
        service = _Service(tiny_artifact)
        for count in (0, 1, 5, 17):
            frames = handle_request_line(service, generate_request(count))
            done = json.loads(frames[-1])
            assert done == {"op": "done", "generated": count}
            assert len(frames) == count + 1

    def test_seeded_requests_reproduce(self, tiny_artifact):
        service = _Service(tiny_artifact)
        a = handle_request_line(service, generate_request(4, seed=11))
        b = handle_request_line(service, generate_request(4, seed=11))
        assert a == b
        c = handle_request_line(service, generate_request(4, seed=12))
        assert c != a


class TestStdioServer:
    def run_session(self, artifact, requests):
        proc = subprocess.Popen(
            [sys.executable, "-m", "lm_adapter.cli", "serve", "--artifact", str(artifact)],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            collected = []
            for request, expected_kinds in requests:
                proc.stdin.write(request + "\n")
                proc.stdin.flush()
                frames = []
                while True:
                    line = proc.stdout.readline()
                    assert line != "", "server closed the stream mid-batch"
                    frames.append(line.strip())
                    op = json.loads(line).get("op")
                    if op in ("done", "error"):
                        break
                collected.append(frames)
            return collected
        finally:
            proc.stdin.close()
            proc.wait(timeout=10)

    def test_full_session(self, tiny_artifact):
        transcripts = self.run_session(tiny_artifact, GOLDEN)
        for (request, expected), frames in zip(GOLDEN, transcripts):
            assert frame_kinds(frames) == expected, request

    def test_server_survives_errors(self, tiny_artifact):
        # an error frame must not poison the next request
        session = [
            ("{broken", ["error"]),
            (generate_request(2), ["text", "text", "done"]),
        ]
        transcripts = self.run_session(tiny_artifact, session)
        assert frame_kinds(transcripts[0]) == ["error"]
        assert frame_kinds(transcripts[1]) == ["text", "text", "done"]


class TestTcpServer:
    def test_round_trip(self, tiny_artifact):
        proc = subprocess.Popen(
            [sys.executable, "-m", "lm_adapter.cli", "serve", "--artifact",
             str(tiny_artifact), "--listen", "127.0.0.1:0"],
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            banner = proc.stderr.readline()
            match = re.search(r"listening on ([\d.]+):(\d+)", banner)
            assert match, banner
            host, port = match.group(1), int(match.group(2))
            with socket.create_connection((host, port), timeout=30) as sock:
                stream = sock.makefile("rw", encoding="utf-8", newline="\n")
                stream.write(generate_request(3) + "\n")
                stream.flush()
                frames = []
                while True:
                    line = stream.readline()
                    frames.append(line.strip())
                    if json.loads(line).get("op") in ("done", "error"):
                        break
            assert frame_kinds(frames) == ["text", "text", "text", "done"]
        finally:
            proc.terminate()
            proc.wait(timeout=10)
