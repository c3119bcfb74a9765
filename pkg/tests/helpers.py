"""Shared test fixtures and oracle helpers."""

from __future__ import annotations

import random

from archloop.lexshingle import ShingleSet


def synthetic_shingles(elements) -> ShingleSet:
    """Wrap raw 64-bit element sets so invariants hold regardless of size."""
    elems = frozenset(int(e) & 0xFFFFFFFFFFFFFFFF for e in elements)
    return ShingleSet(elems, k=10, source_token_count=len(elems) + 9)


def pair_with_exact_jaccard(
    rng: random.Random, intersection: int, union: int
) -> tuple[ShingleSet, ShingleSet, float]:
    """Two synthetic sets with exact Jaccard = intersection/union.

    Built by set arithmetic: |A ∩ B| = intersection, |A ∪ B| = union, and
    the leftover elements split evenly between the two sides.
    """
    assert 0 <= intersection <= union
    elements = set()
    while len(elements) < union:
        elements.add(rng.getrandbits(64))
    elements = list(elements)
    shared = elements[:intersection]
    rest = elements[intersection:]
    half = len(rest) // 2
    a = synthetic_shingles(shared + rest[:half])
    b = synthetic_shingles(shared + rest[half:])
    exact = len(a.shingles & b.shingles) / len(a.shingles | b.shingles)
    assert abs(exact - intersection / union) < 1e-12
    return a, b, exact


GOOD_CANDIDATE = '''\
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
