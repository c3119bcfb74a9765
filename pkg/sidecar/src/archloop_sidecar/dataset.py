"""Built-in synthetic image set: seeded random 32x32 RGB images, 10 classes.

Each class has a fixed prototype pattern; samples are the prototype plus
noise, so a small net can actually learn something in one epoch. The
validation split is exactly class-balanced (VAL_PER_CLASS each) so an
untrained model's top-1 accuracy sits at chance = 0.10.
"""

from __future__ import annotations

import torch

NUM_CLASSES = 10
TRAIN_SIZE = 1000
VAL_PER_CLASS = 50
BATCH_SIZE = 32
IMAGE_SHAPE = (3, 32, 32)


def _prototypes(generator: torch.Generator) -> torch.Tensor:
    return torch.randn(NUM_CLASSES, *IMAGE_SHAPE, generator=generator)


def synthetic_split(seed: int):
    """Return (train_batches, val_images, val_labels), all deterministic."""
    gen = torch.Generator().manual_seed(seed)
    protos = _prototypes(gen)

    train_labels = torch.randint(0, NUM_CLASSES, (TRAIN_SIZE,), generator=gen)
    train_images = protos[train_labels] * 0.8 + torch.randn(
        TRAIN_SIZE, *IMAGE_SHAPE, generator=gen
    ) * 0.5

    val_labels = torch.arange(NUM_CLASSES).repeat_interleave(VAL_PER_CLASS)
    val_images = protos[val_labels] * 0.8 + torch.randn(
        len(val_labels), *IMAGE_SHAPE, generator=gen
    ) * 0.5

    batches = [
        (train_images[i : i + BATCH_SIZE], train_labels[i : i + BATCH_SIZE])
        for i in range(0, TRAIN_SIZE, BATCH_SIZE)
    ]
    return batches, val_images, val_labels


def real_split(scratch: str):
    """CIFAR-10 from a local torchvision cache; never downloads."""
    try:
        from torchvision import datasets, transforms
    except ImportError as exc:  # pragma: no cover - environment dependent
        raise RuntimeError("real dataset mode requires torchvision") from exc

    to_tensor = transforms.ToTensor()
    train = datasets.CIFAR10(scratch, train=True, download=False,
                             transform=to_tensor)
    val = datasets.CIFAR10(scratch, train=False, download=False,
                           transform=to_tensor)
    train_images = torch.stack([x for x, _ in train])
    train_labels = torch.tensor([y for _, y in train])
    batches = [
        (train_images[i : i + BATCH_SIZE], train_labels[i : i + BATCH_SIZE])
        for i in range(0, len(train_labels), BATCH_SIZE)
    ]
    val_images = torch.stack([x for x, _ in val])
    val_labels = torch.tensor([y for _, y in val])
    return batches, val_images, val_labels
