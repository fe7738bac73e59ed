"""Scriptable stdio model server for bridge client tests.

Speaks the newline-delimited JSON protocol with handshake
{"protocol": "hshap/1", ...}. The single positional argument selects a
behavior:

    mean      one output: the mean of each sample's values
    mean2     two outputs per sample: [mean, -mean]
    shuffle   advertises pipelining and answers buffered pairs in reverse
    badjson   emits one garbage line instead of the first response
    wrongid   answers with id + 1000
    crash     exits after the handshake
    silent    reads requests but never answers

Only the standard library is used so the fixture runs anywhere.
"""

import json
import sys
import time


def _mean(values):
    return sum(values) / len(values) if values else 0.0


def _respond(payload):
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def main() -> int:
    mode = sys.argv[1] if len(sys.argv) > 1 else "mean"
    hello = {"protocol": "hshap/1", "outputs": 2 if mode == "mean2" else 1}
    if mode == "shuffle":
        hello["pipelining"] = True
    _respond(hello)
    if mode == "crash":
        return 1

    buffered = []
    for line in sys.stdin:
        if mode == "silent":
            time.sleep(0.05)
            continue
        if mode == "badjson":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        request = json.loads(line)
        rid = request["id"]
        scores = [_mean(sample) for sample in request["batch"]]
        if mode == "mean2":
            frame = {"id": rid, "scores": [[s, -s] for s in scores]}
        elif mode == "wrongid":
            frame = {"id": rid + 1000, "scores": scores}
        else:
            frame = {"id": rid, "scores": scores}
        if mode == "shuffle":
            buffered.append(frame)
            if len(buffered) == 2:
                for held in reversed(buffered):
                    _respond(held)
                buffered = []
            continue
        _respond(frame)
    for held in buffered:
        _respond(held)
    return 0


if __name__ == "__main__":
    sys.exit(main())
