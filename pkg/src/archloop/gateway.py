"""Pluggable generation and evaluation backends.

The simulated generator/evaluator pair gives deterministic desk-scale
runs: candidates come from a seeded template pool with optional injected
faults, and accuracy is a bounded deterministic function of the content
hash and a cycle-progress parameter. The sidecar client speaks
line-delimited JSON to a child process for real candidate execution.
"""

from __future__ import annotations

import ast
import hashlib
import json
import random
import select
import shlex
import subprocess
import threading
from dataclasses import dataclass, field

from .errors import EvaluatorUnavailableError
from .stats import normal_quantile

PROTOCOL_VERSION = 1

VALIDITY_STAGES = ("parse", "instantiate", "forward", "contract")
REQUIRED_HYPERPARAMETERS = {"lr", "momentum"}
PARAMETER_BUDGET = 500_000


class TrainingFailure(Exception):
    """Candidate raised during the one-epoch training proxy."""


@dataclass(frozen=True)
class ValidityReport:
    parse_ok: bool
    instantiate_ok: bool
    forward_ok: bool
    contract_ok: bool
    message: str = ""

    def __post_init__(self):
        flags = (self.parse_ok, self.instantiate_ok, self.forward_ok, self.contract_ok)
        seen_failure = False
        for ok in flags:
            if seen_failure and ok:
                raise ValueError(f"stage flags out of order: {flags}")
            if not ok:
                seen_failure = True

    @property
    def valid(self) -> bool:
        return self.parse_ok and self.instantiate_ok and self.forward_ok and self.contract_ok

    @property
    def failure_stage(self) -> str | None:
        for stage, ok in zip(
            VALIDITY_STAGES,
            (self.parse_ok, self.instantiate_ok, self.forward_ok, self.contract_ok),
        ):
            if not ok:
                return stage
        return None

    @classmethod
    def failed_at(cls, stage: str, message: str = "") -> "ValidityReport":
        idx = VALIDITY_STAGES.index(stage)
        flags = [i < idx for i in range(4)]
        return cls(*flags, message=message)

    @classmethod
    def all_ok(cls) -> "ValidityReport":
        return cls(True, True, True, True)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    wall_time: float
    evaluator_id: str

    def __post_init__(self):
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValueError(f"accuracy out of range: {self.accuracy}")


# -- simulated generator -----------------------------------------------------

_ACTIVATIONS = ("nn.ReLU", "nn.GELU", "nn.SiLU", "nn.LeakyReLU")
_WIDTHS = (16, 24, 32, 48, 64, 96)
_KERNELS = (3, 5)


@dataclass
class SimulatedGeneratorConfig:
    fault_rate: float = 0.0  # deliberate syntax faults
    contract_fault_rate: float = 0.0  # drop/maim supported_hyperparameters
    shape_fault_rate: float = 0.0  # classifier emits the wrong logit count
    max_blocks: int = 4


class SimulatedGenerator:
    """Seeded template-pool generator of PyTorch-style candidates."""

    def __init__(self, config: SimulatedGeneratorConfig | None = None):
        self.config = config or SimulatedGeneratorConfig()

    def generate(
        self, n: int, cycle: int, seed: int, generator_state: int = 0
    ) -> list[str]:
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        rng = random.Random(seed * 1_000_003 + cycle * 7919 + generator_state)
        return [self._render(rng) for _ in range(n)]

    def _render(self, rng: random.Random) -> str:
        cfg = self.config
        blocks = rng.randint(1, cfg.max_blocks)
        widths = [rng.choice(_WIDTHS) for _ in range(blocks)]
        act = rng.choice(_ACTIVATIONS)
        kernel = rng.choice(_KERNELS)
        drop = rng.choice((0.0, 0.1, 0.2))
        out_features = 12 if rng.random() < cfg.shape_fault_rate else 10
        contract_fault = rng.random() < cfg.contract_fault_rate
        syntax_fault = rng.random() < cfg.fault_rate

        lines = ["import torch", "import torch.nn as nn", ""]
        if not contract_fault:
            lines += [
                "def supported_hyperparameters():",
                '    return {"lr", "momentum"}',
                "",
            ]
        lines += [
            "class Net(nn.Module):",
            "    def __init__(self):",
            "        super().__init__()",
        ]
        in_ch = 3
        for i, width in enumerate(widths):
            pad = kernel // 2
            lines.append(
                f"        self.conv{i} = nn.Conv2d({in_ch}, {width}, "
                f"kernel_size={kernel}, padding={pad})"
            )
            lines.append(f"        self.bn{i} = nn.BatchNorm2d({width})")
            lines.append(f"        self.act{i} = {act}()")
            in_ch = width
        if drop:
            lines.append(f"        self.drop = nn.Dropout({drop})")
        lines.append("        self.pool = nn.AdaptiveAvgPool2d(1)")
        lines.append(f"        self.classifier = nn.Linear({in_ch}, {out_features})")
        lines += ["", "    def forward(self, x):"]
        for i in range(blocks):
            lines.append(f"        x = self.act{i}(self.bn{i}(self.conv{i}(x)))")
        if drop:
            lines.append("        x = self.drop(x)")
        lines.append("        x = self.pool(x).flatten(1)")
        lines.append("        return self.classifier(x)")
        lines += [
            "",
            "    def train_setup(self, prm):",
            "        self.criterion = nn.CrossEntropyLoss()",
            "        self.optimizer = torch.optim.SGD(",
            '            self.parameters(), lr=prm["lr"], momentum=prm["momentum"])',
            "",
            "    def learn(self, data):",
            "        for x, y in data:",
            "            self.optimizer.zero_grad()",
            "            loss = self.criterion(self(x), y)",
            "            loss.backward()",
            "            self.optimizer.step()",
        ]
        source = "\n".join(lines) + "\n"
        if syntax_fault:
            source = source.replace("def forward(self, x):", "def forward(self, x:", 1)
        return source


class CommandGenerator:
    """Shells out once per candidate slot; stdout is the candidate source.

    A timed-out or failing invocation yields None for that slot so the
    orchestrator can still count the attempt (keeps the valid rate
    conservative).
    """

    def __init__(self, command: str, timeout: float = 60.0):
        self.command = command
        self.timeout = timeout

    def generate(
        self, n: int, cycle: int, seed: int, generator_state: int = 0
    ) -> list[str | None]:
        sources: list[str | None] = []
        for _ in range(n):
            try:
                proc = subprocess.run(
                    shlex.split(self.command),
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except (subprocess.TimeoutExpired, OSError):
                sources.append(None)
                continue
            sources.append(proc.stdout if proc.returncode == 0 else None)
        return sources


# -- simulated evaluator -----------------------------------------------------


def _content_hash(source: str, salt: int) -> int:
    digest = hashlib.blake2b(
        source.encode("utf-8"), digest_size=8, salt=salt.to_bytes(8, "little")
    )
    return int.from_bytes(digest.digest(), "little")


@dataclass
class SimulatedEvaluatorConfig:
    base_mean: float = 0.28  # mean accuracy at zero progress
    progress_gain: float = 0.25  # added mean at full progress
    accuracy_std: float = 0.08
    seed: int = 0


class SimulatedEvaluator:
    """Marker-grammar validity checks and deterministic proxy accuracy."""

    evaluator_id = "simulated"

    def __init__(self, config: SimulatedEvaluatorConfig | None = None):
        self.config = config or SimulatedEvaluatorConfig()

    def validate(self, source: str) -> ValidityReport:
        try:
            tree = ast.parse(source)
        except (SyntaxError, ValueError) as exc:
            return ValidityReport.failed_at("parse", str(exc))

        net = next(
            (
                node
                for node in tree.body
                if isinstance(node, ast.ClassDef) and node.name == "Net"
            ),
            None,
        )
        if net is None:
            return ValidityReport.failed_at("instantiate", "no Net class")
        methods = {
            node.name for node in net.body if isinstance(node, ast.FunctionDef)
        }
        if not {"__init__", "forward"} <= methods:
            return ValidityReport.failed_at(
                "instantiate", "Net missing __init__ or forward"
            )

        logits = self._last_linear_out(net)
        if logits is not None and logits != 10:
            return ValidityReport.failed_at(
                "forward", f"classifier emits {logits} logits, expected 10"
            )

        if not {"train_setup", "learn"} <= methods:
            return ValidityReport.failed_at(
                "contract", "Net missing train_setup or learn"
            )
        if not self._hyperparameter_contract_ok(tree):
            return ValidityReport.failed_at(
                "contract", "supported_hyperparameters contract not met"
            )
        return ValidityReport.all_ok()

    @staticmethod
    def _last_linear_out(net: ast.ClassDef) -> int | None:
        out = None
        for node in ast.walk(net):
            if (
                isinstance(node, ast.Call)
                and isinstance(node.func, ast.Attribute)
                and node.func.attr == "Linear"
                and len(node.args) >= 2
                and isinstance(node.args[1], ast.Constant)
            ):
                out = node.args[1].value
        return out

    @staticmethod
    def _hyperparameter_contract_ok(tree: ast.Module) -> bool:
        for node in tree.body:
            if isinstance(node, ast.FunctionDef) and node.name == "supported_hyperparameters":
                for ret in ast.walk(node):
                    if isinstance(ret, ast.Return) and isinstance(ret.value, ast.Set):
                        names = {
                            elt.value
                            for elt in ret.value.elts
                            if isinstance(elt, ast.Constant)
                        }
                        return names == REQUIRED_HYPERPARAMETERS
                return False
        return False

    def train_one_epoch(self, source: str, progress: float = 0.0) -> EvalResult:
        """Deterministic bounded accuracy from (content hash, progress)."""
        cfg = self.config
        h = _content_hash(source, cfg.seed)
        u = (h % (1 << 53)) / float(1 << 53)
        u = min(max(u, 1e-12), 1 - 1e-12)
        z = normal_quantile(u)
        mean = cfg.base_mean + cfg.progress_gain * min(max(progress, 0.0), 1.0)
        accuracy = min(1.0, max(0.0, mean + cfg.accuracy_std * z))
        wall = round(1.0 + 4.0 * ((h >> 53) % 997) / 997.0, 3)
        return EvalResult(accuracy=accuracy, wall_time=wall, evaluator_id=self.evaluator_id)


# -- sidecar client ----------------------------------------------------------


class SidecarClient:
    """One child process speaking line-delimited JSON over std streams."""

    def __init__(self, command: str, timeout: float = 300.0):
        self.command = command
        self.timeout = timeout
        self._proc: subprocess.Popen | None = None
        self.evaluator_id = "sidecar"
        self._next_id = 0
        self._lock = threading.RLock()  # one request in flight per process

    def start(self) -> None:
        with self._lock:
            self._start_locked()

    def _start_locked(self) -> None:
        self._proc = subprocess.Popen(
            shlex.split(self.command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )
        try:
            hello = self._request({"op": "hello"})
        except EvaluatorUnavailableError:
            self.close()
            raise
        if hello.get("protocol") != PROTOCOL_VERSION:
            self.close()
            raise EvaluatorUnavailableError(
                f"unknown sidecar protocol: {hello.get('protocol')!r}"
            )
        self.evaluator_id = hello.get("evaluator_id", "sidecar")

    def close(self) -> None:
        if self._proc is None:
            return
        proc, self._proc = self._proc, None
        try:
            proc.stdin.close()
        except OSError:
            pass  # child already gone; flushing its pipe can fail
        proc.terminate()
        try:
            proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait(timeout=10)

    def _request(self, payload: dict) -> dict:
        with self._lock:
            return self._request_locked(payload)

    def _request_locked(self, payload: dict) -> dict:
        if self._proc is None:
            self.start()
        proc = self._proc
        try:
            proc.stdin.write(json.dumps(payload) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise EvaluatorUnavailableError(f"sidecar pipe broken: {exc}") from exc
        ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
        if not ready:
            raise EvaluatorUnavailableError(
                f"sidecar response timed out after {self.timeout}s"
            )
        line = proc.stdout.readline()
        if not line:
            raise EvaluatorUnavailableError("sidecar closed its output stream")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvaluatorUnavailableError(
                f"sidecar sent malformed response: {exc}"
            ) from exc

    def _fresh_id(self) -> str:
        self._next_id += 1
        return f"req-{self._next_id}"

    def validate(self, source: str) -> ValidityReport:
        resp = self._request(
            {"op": "validate", "id": self._fresh_id(), "source": source}
        )
        flags = (
            bool(resp["parse_ok"]),
            bool(resp["instantiate_ok"]),
            bool(resp["forward_ok"]),
            bool(resp["contract_ok"]),
        )
        return ValidityReport(*flags, message=resp.get("error") or "")

    def train_one_epoch(
        self, source: str, progress: float = 0.0, lr: float = 0.01, momentum: float = 0.9
    ) -> EvalResult:
        resp = self._request(
            {
                "op": "train_epoch",
                "id": self._fresh_id(),
                "source": source,
                "lr": lr,
                "momentum": momentum,
            }
        )
        if resp.get("error"):
            raise TrainingFailure(resp["error"])
        return EvalResult(
            accuracy=float(resp["accuracy"]),
            wall_time=float(resp["wall_time_s"]),
            evaluator_id=self.evaluator_id,
        )

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.close()
