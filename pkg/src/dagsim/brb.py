"""Bracha-style reliable broadcast, one instance per (author row, column).

INIT carries the full vertex; ECHO and READY carry the digest only, so a
vertex can only be delivered once its INIT arrived. Sender sets are bitmasks
over node ids (at most one ECHO and one READY count per sender).
"""

from __future__ import annotations

from .dag import Vertex

INIT = 0
ECHO = 1
READY = 2

KIND_NAMES = ("INIT", "ECHO", "READY")


class EquivocationError(Exception):
    """Two different digests observed inside one broadcast instance."""


def thresholds(n: int, f: int) -> tuple[int, int, int]:
    """(echo quorum, ready amplification, delivery quorum)."""
    return ((n + f) // 2 + 1, f + 1, 2 * f + 1)


class BrbInstance:
    """Per-node state for one broadcast id."""

    __slots__ = ("payload", "digest", "echo_mask", "ready_mask",
                 "sent_echo", "sent_ready", "delivered")

    def __init__(self) -> None:
        self.payload: Vertex | None = None
        self.digest: int | None = None
        self.echo_mask = 0
        self.ready_mask = 0
        self.sent_echo = False
        self.sent_ready = False
        self.delivered = False

    def _bind_digest(self, digest: int) -> None:
        if self.digest is None:
            self.digest = digest
        elif self.digest != digest:
            raise EquivocationError(f"digest conflict {self.digest:x} vs {digest:x}")

    def on_init(self, vertex: Vertex) -> bool:
        """Record the payload; returns True the first time (ECHO is due)."""
        self._bind_digest(vertex.digest)
        if self.payload is not None:
            return False
        self.payload = vertex
        return True

    def on_echo(self, sender: int, digest: int) -> None:
        self._bind_digest(digest)
        self.echo_mask |= 1 << sender

    def on_ready(self, sender: int, digest: int) -> None:
        self._bind_digest(digest)
        self.ready_mask |= 1 << sender

    def echo_count(self) -> int:
        return self.echo_mask.bit_count()

    def ready_count(self) -> int:
        return self.ready_mask.bit_count()
