"""The request loop: newline-delimited JSON frames over stdio.

Frames:

    out  {"protocol": "hshap/1", "outputs": N, "deterministic": bool}
    in   {"id": u64, "shape": [c, h, w], "batch": [[f64, ...], ...]}
    out  {"id": u64, "scores": [f64 | [f64, ...], ...]}
    out  {"id": u64, "error": "message"}

Single-output models answer with plain numbers, multi-output models with a
per-head list per sample. Recoverable problems (bad JSON, wrong shapes,
oversized batches, model exceptions) become error frames with the request
id when one could be parsed and id 0 otherwise; the loop keeps serving.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

PROTOCOL = "hshap/1"


@dataclass
class AdapterConfig:
    model: Callable[[np.ndarray], np.ndarray]
    outputs: int = 1
    max_batch: int = 1024
    deterministic: bool = True


def _frame(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"))


def _emit(out, payload: dict) -> None:
    out.write(_frame(payload) + "\n")
    out.flush()


def _parse_request(line: str, max_batch: int):
    """Returns (id, array) or (id, error message)."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError:
        return 0, "invalid json"
    if not isinstance(request, dict):
        return 0, "invalid request"
    rid = request.get("id")
    if not isinstance(rid, int):
        return 0, "invalid request"
    shape = request.get("shape")
    batch = request.get("batch")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(d, int) and d > 0 for d in shape)
        or not isinstance(batch, list)
    ):
        return rid, "invalid request"
    if len(batch) > max_batch:
        return rid, "batch too large"
    size = shape[0] * shape[1] * shape[2]
    if any(not isinstance(row, list) or len(row) != size for row in batch):
        return rid, "shape mismatch"
    try:
        array = np.asarray(batch, dtype=np.float64).reshape(len(batch), *shape)
    except (TypeError, ValueError):
        return rid, "shape mismatch"
    return rid, array


def _scores_payload(raw: np.ndarray, count: int, outputs: int):
    scores = np.asarray(raw, dtype=np.float64)
    if outputs == 1:
        scores = scores.reshape(-1)
        if scores.shape != (count,):
            raise ValueError(f"model returned {scores.shape}, wanted ({count},)")
        return [float(s) for s in scores]
    if scores.shape != (count, outputs):
        raise ValueError(
            f"model returned {scores.shape}, wanted ({count}, {outputs})"
        )
    return [[float(v) for v in row] for row in scores]


def serve(config: AdapterConfig, stdin=None, stdout=None) -> int:
    """Run the request loop until end of input."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    _emit(
        stdout,
        {
            "protocol": PROTOCOL,
            "outputs": config.outputs,
            "deterministic": config.deterministic,
        },
    )
    for line in stdin:
        if not line.strip():
            continue
        rid, parsed = _parse_request(line, config.max_batch)
        if isinstance(parsed, str):
            _emit(stdout, {"id": rid, "error": parsed})
            continue
        if len(parsed) == 0:
            _emit(stdout, {"id": rid, "scores": []})
            continue
        try:
            scores = _scores_payload(config.model(parsed), len(parsed), config.outputs)
        except Exception as exc:  # model bugs must not kill the server
            print(f"model error on request {rid}: {exc}", file=sys.stderr)
            _emit(stdout, {"id": rid, "error": f"model failure: {exc}"})
            continue
        _emit(stdout, {"id": rid, "scores": scores})
    return 0
