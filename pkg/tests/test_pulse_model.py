"""Tests for pulse specs, ACR closures, interval partitions and presets."""

import json
import math

import numpy as np
import pytest

from toathresh.pulse_model import (EstimationSetup, ModelError, PulseSpec, build_acr,
                                   equal_split_count, flat_spectrum_mqbw,
                                   gaussian_bandwidth, load_preset, local_maxima,
                                   sampled_acr)


def test_baseband_mqbw_and_bandwidth():
    a = build_acr(PulseSpec("baseband_gaussian", 1e-9))
    assert a.beta_e_sq == pytest.approx(2 * math.pi * 1e18, rel=1e-12)
    assert a.beta_s_sq == a.beta_e_sq
    assert abs(a.B / 1e9 - 1.71226) < 1e-4
    assert a.ifbw == 0.0


def test_acr_normalized_and_even():
    for p in (PulseSpec("baseband_gaussian", 1e-9), PulseSpec("passband_gaussian", 2e-9, 6.85e9)):
        a = build_acr(p)
        th = np.linspace(-5e-9, 5e-9, 1001)
        assert float(a.R(0.0)) == 1.0
        np.testing.assert_allclose(a.R(th), a.R(-th), atol=1e-15)
        assert np.all(np.abs(a.R(th)) <= 1.0 + 1e-15)
        assert np.all(a.e_R(th) >= np.abs(a.R(th)) - 1e-12)
        assert float(a.e_R(0.0)) == 1.0


def test_passband_mqbw_identity():
    a = build_acr(PulseSpec("passband_gaussian", 0.5e-9, 5e9))
    assert a.beta_s_sq == pytest.approx(a.beta_e_sq + 4 * math.pi ** 2 * 25e18, rel=1e-9)


def test_derivative_closures_match_finite_differences():
    a = build_acr(PulseSpec("passband_gaussian", 1e-9, 4e9))
    th = np.linspace(-2e-9, 2e-9, 37)
    h = 1e-14
    np.testing.assert_allclose(a.R_dot(th), (a.R(th + h) - a.R(th - h)) / (2 * h),
                               rtol=1e-5, atol=1e-6 * 2 * math.pi * 4e9)
    np.testing.assert_allclose(a.R_ddot(th), (a.R_dot(th + h) - a.R_dot(th - h)) / (2 * h),
                               rtol=1e-5, atol=1e-5 * a.beta_s_sq)
    assert float(-a.R_ddot(0.0)) == pytest.approx(a.beta_s_sq, rel=1e-12)


def test_flat_spectrum_fcc_ratio():
    bs, be = flat_spectrum_mqbw(7.5e9, 6.85e9)
    assert bs / be == pytest.approx(11.0, abs=0.1)


def test_scale_property_baseband():
    a1 = build_acr(PulseSpec("baseband_gaussian", 1e-9))
    ak = build_acr(PulseSpec("baseband_gaussian", 3e-9))
    th = np.linspace(-3e-9, 3e-9, 41)
    np.testing.assert_allclose(ak.R(3 * th), a1.R(th), rtol=0, atol=1e-12)
    assert ak.beta_s_sq / a1.beta_s_sq == pytest.approx((ak.B / a1.B) ** 2, rel=1e-9)


def test_passband_envelope_is_baseband_acr():
    p = PulseSpec("passband_gaussian", 2e-9, 6.85e9)
    a = build_acr(p)
    base = build_acr(PulseSpec("baseband_gaussian", 2e-9))
    th = np.linspace(-6e-9, 6e-9, 301)
    np.testing.assert_allclose(a.e_R(th), base.R(th), rtol=0, atol=1e-12)


@pytest.mark.parametrize("args", [("baseband_gaussian", -1e-9), ("passband_gaussian", 1e-9, 0.0),
                                  ("baseband_gaussian", 1e-9, 1e9), ("raised_cosine", 1e-9)])
def test_pulse_spec_invariants(args):
    with pytest.raises(ValueError):
        PulseSpec(*args)


def test_setup_invariants_and_gamma():
    s = EstimationSetup(0.0, -2e-9, 2e-9)
    assert s.T == pytest.approx(4e-9)
    assert s.gamma(1e9) == pytest.approx(4.0)
    with pytest.raises(ValueError):
        EstimationSetup(3e-9, -2e-9, 2e-9)
    with pytest.raises(ValueError):
        EstimationSetup(0.0, 1e-9, 1e-9)


def test_maxima_spacing_is_carrier_period():
    a = build_acr(PulseSpec("passband_gaussian", 1e-9, 5e9))
    s = EstimationSetup(0.0, -1e-9, 1e-9)
    iv = local_maxima(a, s)
    assert iv.mode == "oscillating"
    spacing = np.diff(iv.testpoints)
    assert np.all(np.abs(spacing - 0.2e-9) < 0.05 * 0.2e-9)
    assert iv.testpoints[iv.index0] == s.Theta
    # boundaries at the minima between maxima
    mids = iv.boundaries[1:-1]
    assert np.all(a.R_ddot(mids - s.Theta) > 0)


def test_equal_split_baseband():
    a = build_acr(PulseSpec("baseband_gaussian", 1e-9))
    s = EstimationSetup(0.0, -2e-9, 2e-9)
    iv = local_maxima(a, s, n_intervals=8)
    np.testing.assert_allclose(np.diff(iv.boundaries), 0.5e-9)
    assert iv.testpoints[iv.index0] == s.Theta
    assert iv.boundaries[0] == s.Theta1 and iv.boundaries[-1] == s.Theta2


def test_equal_split_count_is_odd_and_scales():
    s = EstimationSetup(0.0, -2e-9, 2e-9)
    counts = [equal_split_count(build_acr(PulseSpec("baseband_gaussian", tw)), s)
              for tw in (2e-9, 1e-9, 0.5e-9)]
    assert all(n % 2 == 1 for n in counts)
    assert counts == sorted(counts)
    assert counts[1] == 13


def test_offset_truth_testpoint():
    a = build_acr(PulseSpec("passband_gaussian", 2e-9, 6.85e9))
    s = EstimationSetup(0.37e-9, -4e-9, 3e-9)
    iv = local_maxima(a, s)
    assert iv.testpoints[iv.index0] == s.Theta
    assert np.all(np.diff(iv.boundaries) > 0)


def test_sampled_acr_reproduces_gaussian():
    a = build_acr(PulseSpec("baseband_gaussian", 1e-9))
    th = np.linspace(-5e-9, 5e-9, 2001)
    b = sampled_acr(th, a.R(th))
    assert b.B == pytest.approx(a.B, rel=1e-3)
    assert b.beta_s_sq == pytest.approx(a.beta_s_sq, rel=1e-3)
    x = np.linspace(-3e-9, 3e-9, 77)
    np.testing.assert_allclose(b.R(x), a.R(x), atol=1e-6)


def test_sampled_passband_needs_envelope():
    th = np.linspace(-5e-9, 5e-9, 2001)
    a = build_acr(PulseSpec("passband_gaussian", 2e-9, 3e9))
    with pytest.raises(ModelError):
        sampled_acr(th, a.R(th), f_c=3e9)
    b = sampled_acr(th, a.R(th), f_c=3e9, envelope_values=a.e_R(th))
    assert b.oscillating
    assert b.beta_e_sq == pytest.approx(a.beta_e_sq, rel=1e-3)
    assert b.beta_s_sq == pytest.approx(a.beta_s_sq, rel=1e-3)


def test_presets_and_config_file(tmp_path):
    pulse, setup = load_preset("passband")
    assert pulse.f_c == pytest.approx(6.85e9) and pulse.T_w == pytest.approx(2e-9)
    assert (setup.Theta1, setup.Theta2) == pytest.approx((-4e-9, 3e-9))
    cfg = {"kind": "baseband_gaussian", "T_w_ns": 0.5, "f_c_GHz": 0.0,
           "Theta_ns": 0.1, "Theta1_ns": -1.0, "Theta2_ns": 1.0}
    path = tmp_path / "p.json"
    path.write_text(json.dumps(cfg))
    pulse, setup = load_preset(path)
    assert pulse.T_w == pytest.approx(0.5e-9) and setup.Theta == pytest.approx(0.1e-9)
    with pytest.raises(KeyError):
        load_preset("nonexistent")
    assert gaussian_bandwidth(load_preset("fcc")[0].T_w) == pytest.approx(7.5e9, rel=1e-5)
