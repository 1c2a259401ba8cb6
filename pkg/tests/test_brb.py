"""Reliable-broadcast thresholds and per-instance state."""

import pytest

from dagsim.brb import BrbInstance, EquivocationError, thresholds
from dagsim.dag import Vertex


def test_threshold_table():
    assert thresholds(4, 1) == (3, 2, 3)
    assert thresholds(13, 4) == (9, 5, 9)
    assert thresholds(25, 8) == (17, 9, 17)


def test_threshold_inequalities():
    # Echo quorum must exceed (n + f) / 2 and delivery quorum must clear
    # the honest majority for every valid system size.
    for f in range(1, 12):
        n = 3 * f + 1
        e, r, d = thresholds(n, f)
        assert e > (n + f) / 2
        assert r == f + 1
        assert d == 2 * f + 1
        assert e + r <= n + 1


def _vertex(row: int = 0, column: int = 1) -> Vertex:
    return Vertex(row, column, ((row, column - 1),), (), (2,))


def test_init_binds_payload_once():
    inst = BrbInstance()
    v = _vertex()
    assert inst.on_init(v) is True
    assert inst.on_init(v) is False
    assert inst.payload is v
    assert inst.digest == v.digest


def test_echo_ready_masks_idempotent():
    inst = BrbInstance()
    d = _vertex().digest
    for _ in range(3):
        inst.on_echo(2, d)
        inst.on_ready(5, d)
    inst.on_echo(7, d)
    assert inst.echo_count() == 2
    assert inst.ready_count() == 1


def test_equivocation_detected_across_message_kinds():
    a, b = _vertex(0, 1), _vertex(0, 2)
    assert a.digest != b.digest
    inst = BrbInstance()
    inst.on_init(a)
    with pytest.raises(EquivocationError):
        inst.on_echo(1, b.digest)
    inst2 = BrbInstance()
    inst2.on_ready(1, a.digest)
    with pytest.raises(EquivocationError):
        inst2.on_init(b)
