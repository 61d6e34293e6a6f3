import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from casimir_polder.analysis import (
    InsufficientDataError,
    SweepRecord,
    anomalous_dimension,
    drop_off_exponent,
    log_spaced,
    peak,
    rise_exponent,
    sweep,
    universal_tail,
    with_local_eta,
)
from casimir_polder.energy import PLANAR_COEFFICIENT, NumericalSettings


def synthetic(H, ratio):
    return [SweepRecord(h, 1.0, 0.0, c_E=r * PLANAR_COEFFICIENT, c_E_planar=PLANAR_COEFFICIENT, ratio=r)
            for h, r in zip(H, ratio)]


H_GRID = log_spaced(0.5, 20.0, 0.15)


def test_log_spaced():
    H = log_spaced(0.05, 20.0, 0.15)
    assert len(H) == 41
    assert H[0] == pytest.approx(0.05) and H[-1] == pytest.approx(20.0)
    assert np.max(np.diff(np.log(H))) <= 0.15


def test_flat_data_give_zero_eta():
    est = anomalous_dimension(synthetic(H_GRID, [1.0] * len(H_GRID)))
    assert len(est) == len(H_GRID) - 2
    assert all(abs(e.eta) < 1e-12 and abs(e.eta_direct) < 1e-12 for e in est)


def test_linear_ratio_gives_eta_minus_one():
    est = anomalous_dimension(synthetic(H_GRID, [0.3 * h for h in H_GRID]))
    assert all(abs(e.eta + 1) < 1e-10 for e in est)


@given(st.floats(-3.0, 3.0), st.floats(0.01, 100.0), st.floats(0.15, 1.0))
def test_power_law_recovery(eta, c, window):
    est = anomalous_dimension(synthetic(H_GRID, [c * h**-eta for h in H_GRID]), window)
    for e in est:
        assert abs(e.eta - eta) <= 1e-10
        assert abs(e.eta_direct - eta) <= 1e-10
        assert e.residual <= 1e-10 and e.n_points >= 3


def test_residual_reported_for_curved_data():
    H = np.array(H_GRID)
    est = anomalous_dimension(synthetic(H, 1 + np.exp(-H)))
    assert all(np.isfinite(e.eta) and e.residual >= 0 for e in est)
    assert max(e.residual for e in est) > 0


def test_window_too_narrow():
    with pytest.raises(InsufficientDataError):
        anomalous_dimension(synthetic(H_GRID, [1.0] * len(H_GRID)), window=0.05)
    with pytest.raises(InsufficientDataError):
        anomalous_dimension(synthetic(H_GRID[:2], [1.0, 1.0]))


def test_peak_and_drop_off_on_synthetic_curve():
    # ratio = 1 + x / (1 + x^2)^(3/4) with x = H: rises linearly, decays like H^-1/2
    H = np.array(log_spaced(0.01, 1e4, 0.15))
    r = 1 + H / (1 + H**2) ** 0.75
    recs = synthetic(H, r)
    top = peak(recs)
    assert 1.0 < top.H_over_A < 2.0
    rise = rise_exponent(recs)
    assert rise.eta == pytest.approx(-1.0, abs=1e-3)
    assert rise.coefficient == pytest.approx(1.0, abs=2e-2)
    drop = drop_off_exponent(recs)
    assert drop.H_over_A > top.H_over_A
    assert drop.eta > 0


def test_universal_tail():
    H = H_GRID
    curves = {w: synthetic(H, [1 + h**-0.2 for h in H]) for w in (1.0, 2.0, 3.0)}
    tail = universal_tail(curves, 10.0)
    assert tail.spread == pytest.approx(0.0, abs=1e-12)
    assert set(tail.estimates) == {1.0, 2.0, 3.0}
    assert universal_tail({1.0: curves[1.0]}, 10.0).spread == 0.0
    with pytest.raises(InsufficientDataError):
        universal_tail(curves, 1e6)


def test_failed_records_excluded_from_fits():
    recs = synthetic(H_GRID, [2.0 * h for h in H_GRID])
    recs[5] = SweepRecord(recs[5].H_over_A, 1.0, 0.0, status="failed", error="SolverError: x")
    est = with_local_eta(recs)
    assert math.isnan(est[5].eta_local)
    assert all(abs(r.eta_local + 1) < 1e-10 for r in est if r.ok and not math.isnan(r.eta_local))


def test_single_point_sweep():
    recs = sweep(1.0, -math.pi / 2, [1.0], kind="flat")
    assert len(recs) == 1 and recs[0].ratio == 1.0
    with pytest.raises(InsufficientDataError):
        anomalous_dimension(recs)


def test_flat_sweep_ratio_exactly_one():
    recs = sweep(1.0, 0.0, [0.5, 1.0, 2.0], kind="flat")
    assert [r.ratio for r in recs] == [1.0, 1.0, 1.0]
    assert all(r.ok and r.settings["half_width"] == NumericalSettings().half_width for r in recs)


def test_sweep_ratios_above_one():
    recs = sweep(2.0, -math.pi / 2, [0.5, 1.0, 2.0, 5.0, 10.0])
    assert len(recs) == 5
    assert all(r.ok and r.ratio > 1.0 for r in recs)
    assert all(r.ratio == pytest.approx(r.c_E / r.c_E_planar, rel=1e-15) for r in recs)
    # node counts follow the resolution floor
    assert recs[-1].n_nodes > recs[0].n_nodes


def test_out_of_range_points_are_marked():
    recs = sweep(1.0, -math.pi / 2, [0.01, 1.0])
    assert recs[0].status == "out_of_range" and "exceeds" in recs[0].error
    assert recs[1].ok


@pytest.mark.parametrize("hs", [[], [1.0, 0.5], [0.0, 1.0], [1.0, math.inf]])
def test_sweep_rejects_bad_separations(hs):
    with pytest.raises(ValueError):
        sweep(1.0, 0.0, hs)
