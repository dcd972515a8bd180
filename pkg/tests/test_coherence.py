import math

import numpy as np
import pytest
from oracles import direct_cwt

from wavecoh.coherence import (
    SmoothingSpec,
    coherency,
    cross_transform,
    phase_difference,
    pwc,
    smooth_tf,
    wtc,
    xwt_power,
)
from wavecoh.cwt import build_scale_grid, cwt_transform
from wavecoh.errors import GridMismatchError
from wavecoh.series import TimeSeries, quantile_transform


def W(x, grid=None, **kw):
    x = np.asarray(x, float)
    return cwt_transform(x, grid or build_scale_grid(x.size, **kw))


# --- smoothing --------------------------------------------------------------


def test_scale_width_is_odd():
    assert SmoothingSpec().scale_width(1 / 12) == 7
    assert SmoothingSpec().scale_width(1 / 4) == 3
    assert SmoothingSpec().scale_width(1.0) == 1


def test_smoothing_preserves_constants():
    g = build_scale_grid(300)
    out = smooth_tf(np.full((g.J, g.n), 2.5), g)
    np.testing.assert_allclose(out, 2.5, rtol=1e-6)


def test_smoothing_impulse_profile():
    g = build_scale_grid(400, dj=1.0)  # scale width 1: time kernel only
    j, t0 = 2, 200
    m = np.zeros((g.J, g.n))
    m[j, t0] = 1.0
    out = smooth_tf(m, g)
    assert out.sum() == pytest.approx(1.0, abs=1e-9)
    row = out[j]
    t = np.arange(g.n)
    s = g.scales[j]
    expected = np.exp(-0.5 * ((t - t0) / s) ** 2)
    np.testing.assert_allclose(row, expected / expected.sum(), atol=1e-12)
    mean = np.sum(t * row)
    std = math.sqrt(np.sum((t - mean) ** 2 * row))
    assert std == pytest.approx(s, rel=1e-3)


def test_smoothing_contracts_white_noise(rng):
    g = build_scale_grid(512)
    m = rng.standard_normal((g.J, g.n))
    out = smooth_tf(m, g)
    interior = slice(64, 448)
    for j in range(3, g.J - 3):
        assert out[j, interior].var() < m[j, interior].var()


def test_smoothing_nonnegative(rng):
    g = build_scale_grid(128)
    m = rng.exponential(size=(g.J, g.n)) * (rng.random((g.J, g.n)) < 0.02)
    assert smooth_tf(m, g).min() >= 0


def test_smoothing_complex_is_partwise(rng):
    g = build_scale_grid(128)
    a, b = rng.standard_normal((2, g.J, g.n))
    out = smooth_tf(a + 1j * b, g)
    np.testing.assert_allclose(out.real, smooth_tf(a, g), atol=1e-14)
    np.testing.assert_allclose(out.imag, smooth_tf(b, g), atol=1e-14)


def test_smoothing_shape_guard():
    g = build_scale_grid(64)
    with pytest.raises(GridMismatchError):
        smooth_tf(np.zeros((3, 3)), g)


# --- cross transform --------------------------------------------------------


def test_cross_transform_identities(rng):
    g = build_scale_grid(256)
    wx = W(rng.standard_normal(256), g)
    wy = W(rng.standard_normal(256), g)
    self_ = cross_transform(wx, wx).coefficients
    np.testing.assert_allclose(self_.real, wx.power, rtol=1e-13)
    np.testing.assert_array_equal(self_.imag, 0)
    np.testing.assert_allclose(cross_transform(wy, wx).coefficients, np.conj(cross_transform(wx, wy).coefficients), rtol=1e-14)
    zero = W(np.zeros(256), g)
    np.testing.assert_array_equal(cross_transform(wx, zero).coefficients, 0)


def test_grids_must_match(rng):
    x = rng.standard_normal(256)
    with pytest.raises(GridMismatchError):
        cross_transform(W(x), W(x, dj=1 / 4))


# --- coherency / wtc --------------------------------------------------------


def test_coherency_plus_minus_one(rng):
    x = rng.standard_normal(300)
    wx, wneg = W(x), W(-x)
    np.testing.assert_allclose(coherency(wx, wx), 1, atol=1e-8)
    np.testing.assert_allclose(coherency(wx, wneg), -1, atol=1e-8)


def test_white_noise_pair_is_incoherent(rng):
    x, y = rng.standard_normal((2, 1024))
    m = wtc(W(x), W(y))
    assert m.values[m.inside_coi()].mean() < 0.5


def test_self_coherence(rng):
    x = np.cumsum(rng.standard_normal(500))
    m = wtc(W(x), W(x))
    np.testing.assert_allclose(m.values, 1, atol=1e-8)
    np.testing.assert_allclose(m.phase, 0, atol=1e-8)
    assert not m.mask.any()


def test_anti_phase(rng):
    x = rng.standard_normal(400)
    m = wtc(W(x), W(-x))
    np.testing.assert_allclose(m.values, 1, atol=1e-8)
    np.testing.assert_allclose(np.abs(m.phase), math.pi, atol=1e-8)
    assert np.all(m.phase > 0)


def test_wtc_symmetric_and_scale_invariant(rng):
    x, y = rng.standard_normal((2, 400))
    g = build_scale_grid(400)
    a = wtc(W(x, g), W(y, g))
    b = wtc(W(y, g), W(x, g))
    c = wtc(W(7 * x, g), W(0.01 * y, g))
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)
    np.testing.assert_allclose(a.values, c.values, atol=1e-10)


def test_wtc_bounded(rng):
    for _ in range(10):
        x = rng.standard_t(2, 256)
        y = np.sin(np.arange(256) / rng.uniform(2, 40)) + rng.standard_normal(256)
        v = wtc(W(x), W(y)).values
        assert np.nanmax(v) <= 1 + 1e-9 and np.nanmin(v) >= 0


def test_quantile_noise_has_no_structural_band(rng):
    x = rng.standard_normal(1024)
    y = quantile_transform(TimeSeries("y", "2012-01-01", rng.standard_normal(1024))).values
    m = wtc(W(x), W(y))
    for j in range(m.grid.J):
        if m.periods[j] > 64:
            break  # long-period rows hold few independent samples
        high = m.values[j] > 0.9
        run = max((len(r) for r in "".join("1" if h else "0" for h in high).split("0")), default=0)
        assert run <= 1024 // 2


def test_coupled_cosines():
    t = np.arange(1024)
    rng = np.random.default_rng(5)
    x = np.cos(2 * np.pi * t / 64)
    y = np.cos(2 * np.pi * (t - 16) / 64) + 0.1 * rng.standard_normal(1024)
    m = wtc(W(x), W(y))
    j = int(np.argmin(np.abs(np.log(m.periods / 64))))
    inside = m.inside_coi()[j]
    assert np.min(m.values[j, inside]) > 0.95


# --- phase -----------------------------------------------------------------


def test_phase_difference_conventions():
    z = np.array([1 + 0j, -1 + 0j, -1 - 0j, 1j, 0j])
    np.testing.assert_allclose(phase_difference(z), [0, math.pi, math.pi, math.pi / 2, 0])
    _, zero = phase_difference(z, return_mask=True)
    np.testing.assert_array_equal(zero, [False, False, False, False, True])


@pytest.mark.parametrize("n", [512, 1024])
def test_quarter_period_lead(n):
    t = np.arange(n)
    x = np.cos(2 * np.pi * t / 64)
    y = np.cos(2 * np.pi * (t - 16) / 64)  # x leads y by a quarter period
    m = wtc(W(x), W(y))
    j = int(np.argmin(np.abs(np.log(m.periods / 64))))
    ridge = m.phase[j, m.inside_coi()[j]]
    assert np.all(np.abs(ridge - math.pi / 2) < 0.15)


def test_quarter_period_sign_matches_direct_oracle():
    # the direct time-domain transform, independent of the FFT path and of the
    # smoothing, must give the same sign for the lead
    n = 256
    t = np.arange(n)
    x = np.cos(2 * np.pi * t / 64)
    y = np.cos(2 * np.pi * (t - 16) / 64)
    s = 64 / build_scale_grid(n).fourier_factor
    wx, wy = direct_cwt(x, [s])[0], direct_cwt(y, [s])[0]
    phase = np.angle(wx[64:192] * np.conj(wy[64:192]))
    np.testing.assert_allclose(phase, math.pi / 2, atol=0.05)


def test_phase_masked_where_coherency_vanishes():
    g = build_scale_grid(64)
    m = wtc(W(np.arange(64) % 2, g), W(np.zeros(64), g))
    assert m.mask.all()
    assert np.isnan(m.phase).all()


# --- partial coherence ------------------------------------------------------


def test_pwc_zero_confounder_reduces_to_wtc(rng):
    y, x1 = rng.standard_normal((2, 512))
    g = build_scale_grid(512)
    a = pwc(W(y, g), W(x1, g), W(np.zeros(512), g))
    b = wtc(W(y, g), W(x1, g))
    np.testing.assert_allclose(a.values, b.values, atol=1e-10)
    assert a.meta["masked_cells"] == 0


def test_pwc_degenerate_when_x1_equals_x2(rng):
    y, x = rng.standard_normal((2, 256))
    g = build_scale_grid(256)
    m = pwc(W(y, g), W(x, g), W(x, g))
    assert m.mask.all() and np.isnan(m.values).all()


def test_pwc_bounded(rng):
    g = build_scale_grid(256)
    for _ in range(5):
        y, x1, x2 = rng.standard_normal((3, 256))
        x1 = x1 + 0.5 * x2
        m = pwc(W(y, g), W(x1, g), W(x2, g))
        v = m.values[~m.mask]
        assert v.min() >= 0 and v.max() <= 1
        assert m.meta["clip_count"] == 0


def test_pwc_removes_common_driver(rng):
    x2 = np.cumsum(rng.standard_normal(512)) * 0.3
    y = x2 + 0.3 * rng.standard_normal(512)
    x1 = x2 + 0.3 * rng.standard_normal(512)
    g = build_scale_grid(512)
    full = wtc(W(y, g), W(x1, g)).values
    part = pwc(W(y, g), W(x1, g), W(x2, g)).values
    inside = g.periods[:, None] <= cwt_transform(y, g).coi[None, :]
    assert np.nanmean(part[inside]) < np.nanmean(full[inside]) - 0.3


def test_xwt_power_self(rng):
    x = rng.standard_normal(128)
    w = W(x)
    m = xwt_power(w, w)
    np.testing.assert_allclose(m.values, w.power, rtol=1e-12)
    np.testing.assert_array_equal(m.phase, 0)
