#!/usr/bin/env python3
"""Line-protocol test backend.

Predicts the class-1 frequency of the conditioning window for every query.
The optional mode argument injects faults for client conformance tests.
"""
import json
import os
import sys
import time

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x):
    x = (x + GOLDEN) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def context_hash(ids, labels):
    total = 0
    for i, y in zip(ids, labels):
        total = (total + mix64(i ^ ((y * GOLDEN) & MASK))) & MASK
    return "%016x" % total


def send(msg):
    sys.stdout.write(json.dumps(msg) + "\n")
    sys.stdout.flush()


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "echo"
    freq = None
    for line in sys.stdin:
        try:
            msg = json.loads(line)
        except ValueError:
            send({"type": "error", "message": "protocol error: malformed message"})
            continue
        kind = msg.get("type")
        if kind == "hello":
            send({"type": "hello_ack", "protocol": 2 if mode == "bad_protocol" else 1,
                  "name": "echo-frequency", "version": "1.0"})
        elif kind == "condition":
            labels = msg["labels"]
            freq = sum(labels) / len(labels) if labels else 0.0
            h = context_hash(msg["ids"], labels)
            if mode == "bad_hash":
                h = "0" * 16
            send({"type": "conditioned", "context_hash": h})
        elif kind == "predict":
            if freq is None:
                send({"type": "error", "message": "protocol error: predict before condition"})
                continue
            n = len(msg["rows"])
            if mode == "die":
                os._exit(3)
            if mode == "malformed":
                sys.stdout.write("{not json\n")
                sys.stdout.flush()
                continue
            if mode == "slow":
                time.sleep(5)
            if mode == "short":
                n -= 1
            if mode == "order":
                # Row order check: echo the first feature of each row.
                send({"type": "proba", "values": [row[0] for row in msg["rows"]]})
                continue
            if mode == "out_of_range":
                send({"type": "proba", "values": [1.5] * n})
                continue
            send({"type": "proba", "values": [freq] * n})
        elif kind == "shutdown":
            return 0
        else:
            send({"type": "error", "message": "protocol error: unknown message type"})
    return 0


if __name__ == "__main__":
    sys.exit(main())
