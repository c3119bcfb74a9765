"""Recorded-response fake evaluator speaking the sidecar wire protocol.

Used by the gateway contract tests. Behavior is keyed on markers in the
candidate source so tests can exercise every response shape.
"""

import json
import sys


def main():
    bad_protocol = "--bad-protocol" in sys.argv
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        req = json.loads(line)
        op = req.get("op")
        if op == "hello":
            resp = {
                "protocol": 99 if bad_protocol else 1,
                "evaluator_id": "fake-sidecar",
            }
        elif op == "validate":
            source = req.get("source", "")
            if "SYNTAX_FAULT" in source:
                resp = {
                    "id": req["id"],
                    "parse_ok": False,
                    "instantiate_ok": False,
                    "forward_ok": False,
                    "contract_ok": False,
                    "param_count": 0,
                    "error": "invalid syntax",
                }
            else:
                resp = {
                    "id": req["id"],
                    "parse_ok": True,
                    "instantiate_ok": True,
                    "forward_ok": True,
                    "contract_ok": "CONTRACT_FAULT" not in source,
                    "param_count": 12345,
                    "error": None,
                }
        elif op == "train_epoch":
            source = req.get("source", "")
            if "TRAIN_FAULT" in source:
                resp = {
                    "id": req["id"],
                    "accuracy": None,
                    "wall_time_s": 0.0,
                    "error": "boom during training",
                }
            else:
                resp = {
                    "id": req["id"],
                    "accuracy": 0.4321,
                    "wall_time_s": 1.5,
                    "error": None,
                }
        else:
            resp = {"id": req.get("id"), "error": f"unknown op {op!r}"}
        sys.stdout.write(json.dumps(resp) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
