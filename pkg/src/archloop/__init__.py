"""archloop: closed-loop architecture-synthesis harness with novelty filtering."""

__version__ = "0.1.0"
