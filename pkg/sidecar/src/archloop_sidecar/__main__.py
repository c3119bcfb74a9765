"""Entry point: `python -m archloop_sidecar [--dataset ...] [--scratch ...]`."""

from __future__ import annotations

import argparse
import tempfile

from .protocol import WORKER_TIMEOUT, serve
from .worker import DEFAULT_CPU_SECONDS


def main(argv=None):
    parser = argparse.ArgumentParser(prog="archloop-sidecar")
    parser.add_argument("--dataset", default="synthetic",
                        choices=["synthetic", "real"])
    parser.add_argument("--scratch", default=None,
                        help="Scratch directory for candidate execution")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--cpu-seconds", type=int, default=DEFAULT_CPU_SECONDS)
    parser.add_argument("--memory-bytes", type=int, default=0,
                        help="Address-space cap per candidate; 0 disables")
    parser.add_argument("--timeout", type=float, default=WORKER_TIMEOUT,
                        help="Wall-clock timeout per candidate, seconds")
    config = parser.parse_args(argv)
    if config.scratch is None:
        config.scratch = tempfile.mkdtemp(prefix="archloop-sidecar-")
    serve(config)


if __name__ == "__main__":
    main()
