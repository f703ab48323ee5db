"""Pickup network solver, reduced two-term model, bias-curve predictions."""
import numpy as np
import pytest
from dataclasses import replace

from ionreadout import (
    BiasCountCurve,
    NanowireNetwork,
    PickupModel,
    decompose_currents,
    fit_pickup,
    max_induced,
    pickup_from_solution,
    predict_counts,
    reduced_current,
    solve_network,
)

TWO_PI = 2.0 * np.pi


def _phase_from_inphase_deg(z: complex) -> float:
    """Angular distance of a phasor from the drive axis (0 or 180 deg)."""
    ph = np.degrees(np.angle(z))
    return abs((ph + 90.0) % 180.0 - 90.0)


def test_zero_drive_means_zero_current():
    sol = solve_network(NanowireNetwork(v_rf=0.0))
    assert np.all(sol.currents == 0)


def test_solver_residual_is_tiny():
    sol = solve_network(NanowireNetwork())
    assert sol.residual < 1e-10


def test_symmetric_terminations_give_antisymmetric_profile():
    net = NanowireNetwork(z_term_left=50.0, z_term_right=50.0)
    sol = solve_network(net)
    cur = sol.currents
    scale = np.abs(cur).max()
    assert np.abs(cur + cur[::-1]).max() < 1e-6 * scale
    mid = net.k_segments // 2  # odd number of segments: exact middle one
    assert abs(cur[mid]) < 1e-6 * scale


def test_drive_capacitance_off_leaves_uniform_inphase_current():
    sol = solve_network(NanowireNetwork(c_drive=0.0))
    mag = np.abs(sol.currents)
    assert (mag.max() - mag.min()) / mag.mean() < 0.15
    for z in sol.currents:
        assert _phase_from_inphase_deg(z) < 10.0


def test_linearity_in_drive_voltage():
    base = solve_network(NanowireNetwork())
    scaled = solve_network(NanowireNetwork(v_rf=8.8 * 3.7))
    ratio = scaled.currents / base.currents
    assert np.abs(ratio - 3.7).max() < 1e-12 * 3.7


def test_default_network_matches_two_term_decomposition():
    sol = solve_network(NanowireNetwork())
    dec = decompose_currents(sol)
    assert dec.r_squared > 0.999
    assert abs(abs(dec.uniform) * 1e6 - 0.9) < 0.01
    assert abs(abs(dec.linear) * 1e6 - 3.5) < 0.01
    # uniform part rides with the drive, linear part in quadrature
    assert _phase_from_inphase_deg(dec.uniform) < 5.0
    assert abs(_phase_from_inphase_deg(dec.linear) - 90.0) < 1.0

    model = pickup_from_solution(sol)
    assert model.i0_ua == pytest.approx(0.9, abs=0.01)
    assert model.i1_ua == pytest.approx(3.5, abs=0.01)


def test_network_validation():
    with pytest.raises(ValueError):
        NanowireNetwork(k_segments=5)  # odd
    with pytest.raises(ValueError):
        NanowireNetwork(c_ground=-1e-15)
    with pytest.raises(ValueError):
        NanowireNetwork(l_wire_total=0.0)


def test_reduced_current_closed_forms():
    m = PickupModel(0.9, 3.5)
    t_quarter = (TWO_PI / 4) / m.omega_rf
    assert reduced_current(m, 20, t_quarter) == pytest.approx(0.9, rel=1e-12)
    assert reduced_current(m, 0, 0.0) == pytest.approx(-3.5, rel=1e-12)
    for t in np.linspace(0, TWO_PI / m.omega_rf, 7):
        k_mid = m.k_segments // 2
        assert reduced_current(m, k_mid, t) == pytest.approx(
            0.9 * np.sin(m.omega_rf * t), abs=1e-12
        )


def test_max_induced_values_and_grid_consistency():
    assert max_induced(PickupModel(0.0, 2.7)) == pytest.approx(2.7, rel=1e-12)
    assert max_induced(PickupModel(2.7, 0.0)) == pytest.approx(2.7, rel=1e-12)
    m = PickupModel(0.9, 3.5)
    closed = max_induced(m)
    assert closed == pytest.approx(3.614, abs=0.001)
    t = np.linspace(0.0, TWO_PI / m.omega_rf, 1_000_001)
    numeric = max(
        np.abs(m.i0_ua * np.sin(m.omega_rf * t) + m.i1_ua * u * np.cos(m.omega_rf * t)).max()
        for u in (-1.0, 1.0)
    )
    assert numeric == pytest.approx(closed, rel=1e-9)


def test_pickup_model_validation():
    with pytest.raises(ValueError):
        PickupModel(-0.1, 1.0)
    with pytest.raises(ValueError):
        PickupModel(1.0, 1.0, k_segments=3)
    with pytest.raises(ValueError):
        reduced_current(PickupModel(1.0, 1.0), 41, 0.0)


def test_bias_curve_validation_and_interp():
    with pytest.raises(ValueError):
        BiasCountCurve(np.array([1.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        BiasCountCurve(np.array([1.0, 2.0]), np.array([0.0, -1.0]))
    curve = BiasCountCurve(np.array([2.0, 4.0]), np.array([100.0, 300.0]))
    assert curve(3.0) == pytest.approx(200.0)
    assert curve(1.0) == 0.0  # below domain: no response
    assert curve(5.0) == 0.0  # above domain: driven normal


def test_predict_counts_without_pickup_is_rf_off(plateau_curve):
    m = PickupModel(0.0, 0.0)
    for bias in (3.0, 4.5, 7.0):
        assert predict_counts(m, plateau_curve, bias) == pytest.approx(
            float(plateau_curve(bias)), rel=1e-12
        )


def test_predict_counts_step_curve_fraction():
    # counts R for |I| >= 5, bias 6, uniform amplitude 2:
    # cos >= -1/2 over two thirds of the period
    step = BiasCountCurve(
        np.array([0.0, 5.0 - 1e-9, 5.0, 10.0]), np.array([0.0, 0.0, 300.0, 300.0])
    )
    got = predict_counts(PickupModel(2.0, 0.0), step, 6.0)
    assert got == pytest.approx(2.0 / 3.0 * 300.0, rel=0.01)


def test_predict_counts_below_onset_is_zero(plateau_curve):
    m = PickupModel(0.4, 0.5)
    assert predict_counts(m, plateau_curve, 1.0) == 0.0  # 1 + 0.9 < 2


def test_predict_counts_grid_doubling(plateau_curve):
    m = PickupModel(0.9, 3.5)
    for bias in (3.0, 5.0, 6.25, 8.0):
        a = predict_counts(m, plateau_curve, bias, n_phase=256)
        b = predict_counts(m, plateau_curve, bias, n_phase=512)
        assert b == pytest.approx(a, rel=1e-3)


def test_predict_counts_sign_reversal_symmetry(plateau_curve):
    """Averaging |bias + I| is blind to the signs of the two amplitudes."""
    i0, i1, k, bias, n_phase = 0.9, 3.5, 40, 5.5, 256
    phases = (np.arange(n_phase) + 0.5) * (TWO_PI / n_phase)
    u = (np.arange(k + 1) - k / 2) / (k / 2)

    def brute(s0, s1):
        inst = s0 * i0 * np.sin(phases)[None, :] + s1 * i1 * u[:, None] * np.cos(phases)[None, :]
        return float(np.mean(plateau_curve(np.abs(bias + inst))))

    reference = predict_counts(PickupModel(i0, i1, k), plateau_curve, bias, n_phase)
    for s0, s1 in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
        assert brute(s0, s1) == pytest.approx(reference, rel=1e-12)


@pytest.fixture()
def ramp_curve():
    """Response with a sloped onset so both pickup terms are identifiable."""
    return BiasCountCurve(
        np.array([0.0, 2.0, 5.0, 8.9]), np.array([0.0, 0.0, 1000.0, 1000.0])
    )


def test_fit_recovers_generating_amplitudes(ramp_curve):
    true = PickupModel(0.9, 3.5)
    bias = np.linspace(0.5, 8.5, 33)
    rf_on = BiasCountCurve(
        bias, np.array([predict_counts(true, ramp_curve, b) for b in bias])
    )
    fit = fit_pickup(rf_on, ramp_curve, delta_im_ua=float(np.hypot(0.9, 3.5)))
    assert fit.model.i0_ua == pytest.approx(0.9, rel=0.05)
    assert fit.model.i1_ua == pytest.approx(3.5, rel=0.05)
    assert fit.n_points == 33


def test_fit_zero_shift_returns_zero_model(ramp_curve):
    bias = np.linspace(0.5, 8.5, 9)
    rf_on = BiasCountCurve(bias, np.asarray(ramp_curve(bias)))
    fit = fit_pickup(rf_on, ramp_curve, delta_im_ua=0.0)
    assert fit.model.i0_ua == 0.0
    assert fit.model.i1_ua == 0.0
    for b in (3.0, 6.0):
        assert predict_counts(fit.model, ramp_curve, b) == pytest.approx(
            float(ramp_curve(b)), rel=1e-12
        )


def test_fit_rejects_flat_curves():
    flat = BiasCountCurve(np.array([0.0, 10.0]), np.array([5.0, 5.0]))
    with pytest.raises(ValueError):
        fit_pickup(flat, flat, delta_im_ua=1.0)


def test_rf_on_maximum_sits_below_plateau(plateau_curve):
    m = PickupModel(0.9, 3.5)
    grid = np.linspace(0.0, 8.9, 179)
    best = max(predict_counts(m, plateau_curve, b) for b in grid)
    deficit = 1.0 - best / 1000.0
    assert 0.10 <= deficit <= 0.25
