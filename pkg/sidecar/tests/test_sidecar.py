"""Sidecar contract tests, driven over the wire protocol only.

The client here is a minimal line-delimited JSON speaker; it deliberately
does not import the consumer library so these tests pin the protocol
itself.
"""

import functools
import json
import subprocess
import sys
import time

import pytest

GOOD_NET = '''\
import torch
import torch.nn as nn

def supported_hyperparameters():
    return {"lr", "momentum"}

class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv0 = nn.Conv2d(3, 32, kernel_size=3, padding=1)
        self.bn0 = nn.BatchNorm2d(32)
        self.act0 = nn.ReLU()
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.classifier = nn.Linear(32, 10)

    def forward(self, x):
        x = self.act0(self.bn0(self.conv0(x)))
        x = self.pool(x).flatten(1)
        return self.classifier(x)

    def train_setup(self, prm):
        self.criterion = nn.CrossEntropyLoss()
        self.optimizer = torch.optim.SGD(
            self.parameters(), lr=prm["lr"], momentum=prm["momentum"])

    def learn(self, data):
        for x, y in data:
            self.optimizer.zero_grad()
            loss = self.criterion(self(x), y)
            loss.backward()
            self.optimizer.step()
'''

MISSING_CONTRACT_NET = GOOD_NET.replace('{"lr", "momentum"}', '{"lr"}')
TWELVE_LOGIT_NET = GOOD_NET.replace(
    "nn.Linear(32, 10)", "nn.Linear(32, 12)"
)
# 3072*200 weights + 200 biases = 614,600 parameters, over the 500k budget
OVERSIZED_NET = GOOD_NET.replace(
    "self.classifier = nn.Linear(32, 10)",
    "self.big = nn.Linear(3072, 200)\n"
    "        self.classifier = nn.Linear(32, 10)",
)

CRASHING_NET = "import os\nos._exit(3)\n"
NETWORK_NET = (
    "import socket\n"
    "socket.socket(socket.AF_INET, socket.SOCK_STREAM)\n" + GOOD_NET
)
TRAIN_RAISES_NET = GOOD_NET.replace(
    "def learn(self, data):",
    'def learn(self, data):\n        raise RuntimeError("boom")\n'
    "    def _unused(self, data):",
)


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE FAIL: {name}")
                raise
            print(f"\nACCEPTANCE PASS: {name}")

        return wrapper

    return decorate


class WireClient:
    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "archloop_sidecar",
             "--seed", "7", "--timeout", "120"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        self._counter = 0

    def request(self, payload):
        self.proc.stdin.write(json.dumps(payload) + "\n")
        self.proc.stdin.flush()
        line = self.proc.stdout.readline()
        assert line, "sidecar closed its stdout"
        return json.loads(line)

    def validate(self, source):
        self._counter += 1
        rid = f"v{self._counter}"
        response = self.request({"op": "validate", "id": rid, "source": source})
        assert response["id"] == rid
        return response

    def train_epoch(self, source, lr, momentum):
        self._counter += 1
        rid = f"t{self._counter}"
        response = self.request(
            {"op": "train_epoch", "id": rid, "source": source,
             "lr": lr, "momentum": momentum}
        )
        assert response["id"] == rid
        return response

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=30)


@pytest.fixture(scope="module")
def client():
    wire = WireClient()
    hello = wire.request({"op": "hello"})
    assert hello["protocol"] == 1
    yield wire
    wire.close()


def test_hello_records_training_configuration(client):
    hello = client.request({"op": "hello"})
    assert hello["evaluator_id"] == "archloop-sidecar"
    assert hello["training"]["epochs"] == 1
    assert hello["training"]["val_per_class"] == 50


@criterion("sidecar validity triage")
def test_validity_triage(client):
    started = time.monotonic()

    good = client.validate(GOOD_NET)
    assert good["parse_ok"] and good["instantiate_ok"]
    assert good["forward_ok"] and good["contract_ok"]
    assert 0 < good["param_count"] <= 500_000

    missing = client.validate(MISSING_CONTRACT_NET)
    assert missing["forward_ok"]
    assert not missing["contract_ok"]

    twelve = client.validate(TWELVE_LOGIT_NET)
    assert twelve["instantiate_ok"]
    assert not twelve["forward_ok"]
    assert not twelve["contract_ok"]

    oversized = client.validate(OVERSIZED_NET)
    assert oversized["forward_ok"]
    assert not oversized["contract_ok"]
    assert oversized["param_count"] > 500_000

    assert time.monotonic() - started < 60


@criterion("sidecar training sanity")
def test_training_sanity(client):
    started = time.monotonic()

    first = client.train_epoch(GOOD_NET, lr=0.1, momentum=0.9)
    second = client.train_epoch(GOOD_NET, lr=0.1, momentum=0.9)
    assert first["error"] is None
    assert abs(first["accuracy"] - second["accuracy"]) <= 0.005

    chance = client.train_epoch(GOOD_NET, lr=0.0, momentum=0.0)
    assert chance["error"] is None
    assert abs(chance["accuracy"] - 0.10) <= 0.03

    assert time.monotonic() - started < 180


def test_stage_ordering_never_violated(client):
    response = client.validate("def broken(:\n")
    flags = [response["parse_ok"], response["instantiate_ok"],
             response["forward_ok"], response["contract_ok"]]
    assert flags == [False, False, False, False]
    response = client.validate("x = 1\n")
    assert response["parse_ok"] and not response["instantiate_ok"]


def test_crashing_candidate_does_not_poison_next_request(client):
    dead = client.validate(CRASHING_NET)
    assert dead["error"] is not None
    assert not dead["parse_ok"] or not dead["instantiate_ok"]
    good = client.validate(GOOD_NET)
    assert good["contract_ok"]


def test_candidate_network_access_refused(client):
    response = client.validate(NETWORK_NET)
    assert response["parse_ok"]
    assert not response["instantiate_ok"]
    assert "network" in response["error"]


def test_training_exception_maps_to_error_response(client):
    response = client.train_epoch(TRAIN_RAISES_NET, lr=0.1, momentum=0.9)
    assert response["accuracy"] is None
    assert "boom" in response["error"]


def test_learning_beats_chance_on_synthetic_data(client):
    trained = client.train_epoch(GOOD_NET, lr=0.1, momentum=0.9)
    assert trained["accuracy"] > 0.15


def test_unknown_op_gets_error_with_matching_id(client):
    response = client.request({"op": "frobnicate", "id": "z1"})
    assert response["id"] == "z1"
    assert "unknown op" in response["error"]
