"""Candidate loading, stagewise validation, and one-epoch training.

Stage order is fixed: parse -> instantiate -> forward -> contract. A later
flag is never true when an earlier one is false.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .dataset import NUM_CLASSES, real_split, synthetic_split

PARAMETER_BUDGET = 500_000
REQUIRED_HYPERPARAMETERS = {"lr", "momentum"}
FORWARD_INPUT_SHAPE = (1, 3, 32, 32)


@dataclass
class ValidationOutcome:
    parse_ok: bool = False
    instantiate_ok: bool = False
    forward_ok: bool = False
    contract_ok: bool = False
    param_count: int = 0
    error: str | None = None

    def as_response(self, request_id):
        return {
            "id": request_id,
            "parse_ok": self.parse_ok,
            "instantiate_ok": self.instantiate_ok,
            "forward_ok": self.forward_ok,
            "contract_ok": self.contract_ok,
            "param_count": self.param_count,
            "error": self.error,
        }


def _load_net(source: str):
    """compile + exec in a fresh namespace; returns (namespace, net)."""
    code = compile(source, "<candidate>", "exec")
    namespace: dict = {}
    exec(code, namespace)
    net_cls = namespace.get("Net")
    if net_cls is None:
        raise RuntimeError("no Net class defined")
    return namespace, net_cls()


def validate(source: str, seed: int = 0) -> ValidationOutcome:
    outcome = ValidationOutcome()
    try:
        compile(source, "<candidate>", "exec")
    except SyntaxError as exc:
        outcome.error = f"parse: {exc}"
        return outcome
    outcome.parse_ok = True

    torch.manual_seed(seed)
    try:
        namespace, net = _load_net(source)
    except Exception as exc:
        outcome.error = f"instantiate: {exc}"
        return outcome
    outcome.instantiate_ok = True
    outcome.param_count = sum(p.numel() for p in net.parameters())

    try:
        net.eval()
        with torch.no_grad():
            logits = net(torch.randn(*FORWARD_INPUT_SHAPE))
        if tuple(logits.shape) != (1, NUM_CLASSES):
            raise RuntimeError(
                f"expected (1, {NUM_CLASSES}) logits, got {tuple(logits.shape)}"
            )
    except Exception as exc:
        outcome.error = f"forward: {exc}"
        return outcome
    outcome.forward_ok = True

    try:
        supported = namespace.get("supported_hyperparameters")
        if not callable(supported):
            raise RuntimeError("supported_hyperparameters missing")
        declared = set(supported())
        if declared != REQUIRED_HYPERPARAMETERS:
            raise RuntimeError(
                f"supported_hyperparameters returned {sorted(declared)}"
            )
        for method in ("train_setup", "learn"):
            if not callable(getattr(net, method, None)):
                raise RuntimeError(f"Net.{method} missing")
        if outcome.param_count > PARAMETER_BUDGET:
            raise RuntimeError(
                f"{outcome.param_count} parameters exceeds the "
                f"{PARAMETER_BUDGET} budget"
            )
    except Exception as exc:
        outcome.error = f"contract: {exc}"
        return outcome
    outcome.contract_ok = True
    return outcome


def train_one_epoch(
    source: str,
    lr: float,
    momentum: float,
    dataset: str = "synthetic",
    scratch: str = ".",
    seed: int = 0,
) -> float:
    """Exactly one epoch with the candidate's own optimizer; top-1 accuracy."""
    if dataset == "synthetic":
        batches, val_images, val_labels = synthetic_split(seed)
    elif dataset == "real":
        batches, val_images, val_labels = real_split(scratch)
    else:
        raise RuntimeError(f"unknown dataset {dataset!r}")

    torch.manual_seed(seed)
    _, net = _load_net(source)
    net.train()
    net.train_setup({"lr": lr, "momentum": momentum})
    net.learn(batches)

    net.eval()
    with torch.no_grad():
        predictions = net(val_images).argmax(dim=1)
    return (predictions == val_labels).float().mean().item()
