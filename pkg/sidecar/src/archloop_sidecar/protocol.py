"""Serving loop: line-delimited JSON requests on stdin, responses on stdout.

One request in flight at a time. `hello` is answered in-process; every
`validate`/`train_epoch` request runs in a fresh worker subprocess so a
crashing or resource-exhausting candidate only takes its own request down.
"""

from __future__ import annotations

import json
import subprocess
import sys

from . import EVALUATOR_ID, PROTOCOL_VERSION
from .dataset import BATCH_SIZE, TRAIN_SIZE, VAL_PER_CLASS

WORKER_TIMEOUT = 300.0


def _hello_response(config) -> dict:
    return {
        "protocol": PROTOCOL_VERSION,
        "evaluator_id": EVALUATOR_ID,
        "dataset": config.dataset,
        "training": {
            "epochs": 1,
            "batch_size": BATCH_SIZE,
            "train_size": TRAIN_SIZE,
            "val_per_class": VAL_PER_CLASS,
            "seed": config.seed,
        },
    }


def _failure_response(request: dict, message: str) -> dict:
    base = {"id": request.get("id"), "error": message}
    if request.get("op") == "validate":
        base.update(
            parse_ok=False, instantiate_ok=False, forward_ok=False,
            contract_ok=False, param_count=0,
        )
    else:
        base.update(accuracy=None, wall_time_s=0.0)
    return base


def _run_worker(request: dict, config) -> dict:
    command = [
        sys.executable, "-m", "archloop_sidecar.worker",
        "--dataset", config.dataset,
        "--scratch", config.scratch,
        "--seed", str(config.seed),
        "--cpu-seconds", str(config.cpu_seconds),
        "--memory-bytes", str(config.memory_bytes),
    ]
    try:
        proc = subprocess.run(
            command,
            input=json.dumps(request),
            capture_output=True,
            text=True,
            timeout=config.timeout,
        )
    except subprocess.TimeoutExpired:
        return _failure_response(request, "worker timed out")
    if proc.returncode != 0:
        detail = (proc.stderr or "").strip().splitlines()
        tail = detail[-1] if detail else f"exit code {proc.returncode}"
        return _failure_response(request, f"worker died: {tail}")
    try:
        return json.loads(proc.stdout.strip().splitlines()[-1])
    except (IndexError, json.JSONDecodeError):
        return _failure_response(request, "worker produced no response")


def serve(config, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            request = {}
        op = request.get("op")
        if op == "hello":
            response = _hello_response(config)
        elif op in ("validate", "train_epoch"):
            response = _run_worker(request, config)
        else:
            response = {"id": request.get("id"), "error": f"unknown op {op!r}"}
        stdout.write(json.dumps(response) + "\n")
        stdout.flush()
