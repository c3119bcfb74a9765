"""Per-candidate worker process.

Reads exactly one JSON request on stdin, writes one JSON response on
stdout, and exits. The serving process spawns one of these per candidate
so a misbehaving candidate can never poison later requests.

Before touching candidate code the worker applies its sandbox policy:
CPU-time and file-size rlimits, an optional address-space cap, a socket
block, and a chdir into the scratch directory.
"""

from __future__ import annotations

import argparse
import json
import os
import resource
import socket
import sys
import time

from .candidate import train_one_epoch, validate

DEFAULT_CPU_SECONDS = 240
DEFAULT_FSIZE_BYTES = 64 * 1024 * 1024


def _block_network():
    def refused(*args, **kwargs):
        raise PermissionError("network access is disabled for candidates")

    socket.socket = refused  # type: ignore[assignment]
    socket.create_connection = refused  # type: ignore[assignment]


def apply_sandbox(cpu_seconds: int, memory_bytes: int, scratch: str):
    resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds + 10))
    resource.setrlimit(
        resource.RLIMIT_FSIZE, (DEFAULT_FSIZE_BYTES, DEFAULT_FSIZE_BYTES)
    )
    if memory_bytes > 0:
        resource.setrlimit(resource.RLIMIT_AS, (memory_bytes, memory_bytes))
    _block_network()
    os.makedirs(scratch, exist_ok=True)
    os.chdir(scratch)


def handle(request: dict, args) -> dict:
    op = request.get("op")
    request_id = request.get("id")
    source = request.get("source", "")
    if op == "validate":
        return validate(source, seed=args.seed).as_response(request_id)
    if op == "train_epoch":
        started = time.monotonic()
        try:
            accuracy = train_one_epoch(
                source,
                lr=float(request.get("lr", 0.01)),
                momentum=float(request.get("momentum", 0.9)),
                dataset=args.dataset,
                scratch=args.scratch,
                seed=args.seed,
            )
            error = None
        except Exception as exc:
            accuracy, error = None, f"{type(exc).__name__}: {exc}"
        return {
            "id": request_id,
            "accuracy": accuracy,
            "wall_time_s": time.monotonic() - started,
            "error": error,
        }
    return {"id": request_id, "error": f"unknown op {op!r}"}


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--dataset", default="synthetic",
                        choices=["synthetic", "real"])
    parser.add_argument("--scratch", default=".")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cpu-seconds", type=int, default=DEFAULT_CPU_SECONDS)
    parser.add_argument("--memory-bytes", type=int, default=0)
    args = parser.parse_args(argv)

    apply_sandbox(args.cpu_seconds, args.memory_bytes, args.scratch)
    request = json.loads(sys.stdin.read())
    response = handle(request, args)
    sys.stdout.write(json.dumps(response) + "\n")
    sys.stdout.flush()


if __name__ == "__main__":
    main()
