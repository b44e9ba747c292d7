import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twophoton.params import (
    EPS_REGIME, BathSpec, InputState, Regime, SystemParams, VACUUM, classify_regime,
)


def test_threshold_and_growth_root():
    p = SystemParams(1.0, 2.0, 0.5)
    assert p.threshold_sq == pytest.approx(1.25)
    assert p.s == pytest.approx(math.sqrt(3))
    q = SystemParams(2.0, 1.0, 0.5)
    assert q.s == pytest.approx(1j * math.sqrt(3))


@pytest.mark.parametrize("kwargs", [
    dict(omega=1.0, lam=-0.1, gamma=1.0),
    dict(omega=1.0, lam=0.5, gamma=-1.0),
    dict(omega=math.nan, lam=0.5, gamma=1.0),
    dict(omega=1.0, lam=math.inf, gamma=1.0),
    dict(omega=1.0, lam=0.5, gamma=0.0),
])
def test_invalid_params_rejected(kwargs):
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_lossless_needs_flag():
    p = SystemParams(0.0, 1.0, 0.0, lossless=True)
    assert p.gamma == 0


@pytest.mark.parametrize("lam, kind", [
    (0.5, Regime.SMALL), (math.sqrt(2), Regime.CRITICAL), (1.5, Regime.LARGE), (0.0, Regime.SMALL),
])
def test_regime_classification(lam, kind):
    assert classify_regime(SystemParams(1.0, lam, 1.0)).kind is kind


def test_regime_band_edges():
    thr = math.sqrt(2)
    inside = SystemParams(1.0, thr * (1 + 0.4 * EPS_REGIME), 1.0)
    outside = SystemParams(1.0, thr * (1 + 2 * EPS_REGIME), 1.0)
    assert classify_regime(inside).kind is Regime.CRITICAL
    assert classify_regime(outside).kind is Regime.LARGE


def test_exceptional_point_flag():
    assert classify_regime(SystemParams(1.0, 1.0, 1.0)).exceptional_point
    assert not classify_regime(SystemParams(1.0, 1.1, 1.0)).exceptional_point


@given(st.floats(0.01, 10), st.floats(0, 10), st.floats(0.01, 10))
def test_regime_matches_threshold(omega, lam, gamma):
    r = classify_regime(SystemParams(omega, lam, gamma))
    thr = omega**2 + gamma**2
    if lam**2 < thr * (1 - 1e-6):
        assert r.kind is Regime.SMALL
    elif lam**2 > thr * (1 + 1e-6):
        assert r.kind is Regime.LARGE


def test_input_state():
    assert VACUUM.is_vacuum and VACUUM.photon_number == 0
    s = InputState.from_photon_number(100)
    assert s.alpha == pytest.approx(10.0)
    assert s.photon_number == pytest.approx(100)
    with pytest.raises(ValueError):
        InputState.from_photon_number(-1)


def test_bath_grid_density():
    p = SystemParams(1.0, 1.0, 1.0)
    bath = BathSpec.around(p)
    assert bath.width == pytest.approx(80.0)
    assert bath.band == pytest.approx((-39.0, 41.0))
    w = bath.frequencies
    assert len(w) == 4000
    assert np.allclose(np.diff(w), bath.spacing)
    # flat density gamma/pi recovers the decay rate
    assert bath.gamma == pytest.approx(1.0)
    assert np.sum(bath.couplings**2) / bath.width == pytest.approx(1 / math.pi)


def test_bath_refined_and_widened():
    bath = BathSpec.around(SystemParams(1.0, 0.5, 1.0), mode_count=100)
    fine = bath.refined(2)
    assert fine.mode_count == 200 and fine.spacing == pytest.approx(bath.spacing / 2)
    wide = bath.widened(2)
    assert wide.width == pytest.approx(2 * bath.width)
    assert wide.spacing == pytest.approx(bath.spacing)
    assert bath.contains(1.0)
