"""Executable worked examples stay true."""

import pytest

from dagsim.probes import (probe_bracha_sabotage, probe_fig5_fig7_fixtures,
                           probe_weak_edge_scenario)


def test_fixture_probe():
    assert probe_fig5_fig7_fixtures() is True


def test_weak_edge_probe():
    assert probe_weak_edge_scenario() is True


def test_bracha_probe_tracks_analytic_model():
    rows = probe_bracha_sabotage(25, 8, [0, 4, 8], [0.2, 0.5, 0.8],
                                 trials=20_000)
    assert len(rows) == 9
    for b, x, emp, ana in rows:
        assert 0.0 <= emp <= 1.0
        assert abs(emp - ana) <= 0.02, (b, x)


def test_bracha_probe_rejects_small_samples():
    with pytest.raises(ValueError):
        probe_bracha_sabotage(25, 8, [0], [0.5], trials=100)
