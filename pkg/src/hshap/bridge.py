"""Oracle over a child process speaking newline-delimited JSON.

The server is any executable that prints a handshake line and then answers
score requests on its standard output:

    handshake  {"protocol": "hshap/1", "outputs": N, "pipelining": bool?}
    request    {"id": u64, "shape": [c, h, w], "batch": [[f64, ...], ...]}
    response   {"id": u64, "scores": [f64 | [f64, ...], ...]}
    error      {"id": u64, "error": "message"}

Responses carry one score entry per batch row: a plain number for
single-output models, or a per-head list that the client reduces with the
configured score head. Requests larger than the batch cap are chunked; with
pipelining advertised, chunk requests are sent eagerly and matched by id,
otherwise exactly one request is in flight. Setting HSHAP_BRIDGE_LOG traces
every frame to stderr.
"""

from __future__ import annotations

import json
import os
import queue
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import BridgeTimeout, ProtocolError, ServerCrashed
from .masking import MaskedBatch

PROTOCOL = "hshap/1"


@dataclass
class BridgeConfig:
    command: list[str] | str
    shape: tuple[int, int, int]
    score_head: int = 0
    timeout: float = 30.0
    max_batch: int = 64
    env: dict[str, str] = field(default_factory=dict)

    def argv(self) -> list[str]:
        if isinstance(self.command, str):
            return shlex.split(self.command)
        return list(self.command)


class BridgeOracle:
    """Characteristic oracle backed by an external model server.

    Access to the child process is serialized, so the oracle reports itself
    as not safe for concurrent batches; callers that want parallelism run
    one bridge per worker.
    """

    concurrency_safe = False

    def __init__(self, config: BridgeConfig) -> None:
        if config.timeout <= 0:
            raise ProtocolError("timeout must be positive")
        if config.max_batch < 1:
            raise ProtocolError("max_batch must be >= 1")
        self.config = config
        self._trace = bool(os.environ.get("HSHAP_BRIDGE_LOG"))
        self._next_id = 1
        self._pending: dict[int, list] = {}
        self._inflight: set[int] = set()
        env = dict(os.environ, **config.env)
        try:
            self._proc = subprocess.Popen(
                config.argv(),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,
                text=True,
                env=env,
            )
        except OSError as exc:
            raise ServerCrashed(f"could not start model server: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

        hello = self._read_frame()
        if hello.get("protocol") != PROTOCOL:
            self.close()
            raise ProtocolError(f"unexpected handshake: {hello!r}")
        self.outputs = int(hello.get("outputs", 1))
        self.pipelining = bool(hello.get("pipelining", False))
        if not 0 <= config.score_head < max(self.outputs, 1):
            self.close()
            raise ProtocolError(
                f"score head {config.score_head} out of range for "
                f"{self.outputs} outputs"
            )

    def _pump(self) -> None:
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_frame(self) -> dict:
        try:
            line = self._lines.get(timeout=self.config.timeout)
        except queue.Empty:
            raise BridgeTimeout(
                f"no reply within {self.config.timeout:.1f}s"
            ) from None
        if line is None:
            code = self._proc.poll()
            raise ServerCrashed(f"model server exited (status {code})")
        if self._trace:
            print(f"[bridge] <- {line.rstrip()}", file=sys.stderr)
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"malformed frame: {line!r}") from exc
        if not isinstance(frame, dict):
            raise ProtocolError(f"frame is not an object: {frame!r}")
        return frame

    def _send(self, payload: dict) -> None:
        line = json.dumps(payload)
        if self._trace:
            print(f"[bridge] -> {line}", file=sys.stderr)
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            code = self._proc.poll()
            raise ServerCrashed(f"model server closed stdin (status {code})") from exc

    def _collect(self, request_id: int) -> list:
        while request_id not in self._pending:
            frame = self._read_frame()
            if "error" in frame:
                raise ProtocolError(
                    f"server error for request {frame.get('id')}: {frame['error']}"
                )
            rid = frame.get("id")
            if not isinstance(rid, int):
                raise ProtocolError(f"response without integer id: {frame!r}")
            scores = frame.get("scores")
            if not isinstance(scores, list):
                raise ProtocolError(f"response without scores: {frame!r}")
            if rid not in self._inflight:
                raise ProtocolError(f"unexpected response id {rid}")
            self._inflight.discard(rid)
            self._pending[rid] = scores
        return self._pending.pop(request_id)

    def _score_entry(self, entry) -> float:
        if isinstance(entry, list):
            if len(entry) != self.outputs:
                raise ProtocolError(
                    f"expected {self.outputs} heads per entry, got {len(entry)}"
                )
            return float(entry[self.config.score_head])
        return float(entry)

    def evaluate_batch(self, batch: MaskedBatch) -> np.ndarray:
        data = batch.data
        if data.shape[1:] != tuple(self.config.shape):
            raise ProtocolError(
                f"batch shape {data.shape[1:]} != configured {self.config.shape}"
            )
        chunks = [
            data[i : i + self.config.max_batch]
            for i in range(0, len(data), self.config.max_batch)
        ]
        ids: list[tuple[int, int]] = []
        if self.pipelining:
            for chunk in chunks:
                ids.append((self._send_chunk(chunk), len(chunk)))
            raw = [self._collect(rid) for rid, _ in ids]
        else:
            raw = []
            for chunk in chunks:
                rid = self._send_chunk(chunk)
                ids.append((rid, len(chunk)))
                raw.append(self._collect(rid))
        scores: list[float] = []
        for (rid, size), entries in zip(ids, raw):
            if len(entries) != size:
                raise ProtocolError(
                    f"request {rid}: {len(entries)} scores for {size} inputs"
                )
            scores.extend(self._score_entry(entry) for entry in entries)
        return np.array(scores)

    def _send_chunk(self, chunk: np.ndarray) -> int:
        rid = self._next_id
        self._next_id += 1
        self._inflight.add(rid)
        self._send(
            {
                "id": rid,
                "shape": list(self.config.shape),
                "batch": chunk.reshape(len(chunk), -1).tolist(),
            }
        )
        return rid

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin is not None:
                    self._proc.stdin.close()
                self._proc.wait(timeout=2.0)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
                self._proc.wait()

    def __enter__(self) -> "BridgeOracle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
