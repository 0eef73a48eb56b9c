"""Shared oracles: extended-precision disk arithmetic done from scratch."""

import mpmath as mp
import pytest

mp.mp.dps = 60


def mp_point(delta, angle):
    """``z = (1 - delta) e^{i angle}`` at 60 digits."""
    return (1 - mp.mpf(delta)) * mp.expjpi(mp.mpf(angle) / mp.pi)


def mp_pseudo(z, w):
    return abs(z - w) / abs(1 - mp.conj(z) * w)


def mp_pseudo_dp(d1, a1, d2, a2):
    return float(mp_pseudo(mp_point(d1, a1), mp_point(d2, a2)))


@pytest.fixture(autouse=True)
def _small_budget(monkeypatch):
    monkeypatch.setenv("THINLAB_POINT_BUDGET", "2000000")
