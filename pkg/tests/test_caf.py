import numpy as np
import pytest

from mmsense.caf import (
    AmbiguitySurface,
    CafGrid,
    argmax_doppler,
    caf,
    default_grid,
    delayed_reference,
    spectrogram,
    spectrogram_fast,
)
from mmsense.errors import ConfigError, InputError
from mmsense.waveform import FrameSpec, IqTrace, make_burst

FS = 1e6


def _toy_grid(n_delays=3, f_span=100.0, f_step=10.0, cit=0.1, hop=0.05):
    delays = np.arange(n_delays) / FS
    n = int(round(f_span / f_step))
    return CafGrid(delays, np.arange(-n, n + 1) * f_step, cit=cit, hop=hop, frame_rate=FS / 216)


def _brute_caf(ys, yr_delayed, freqs, dt):
    # independent evaluation of the defining sum, one window, one delay
    t = np.arange(ys.size) * dt
    q = ys * np.conj(yr_delayed)
    return np.array([np.sum(q * np.exp(2j * np.pi * f * t)) * dt for f in freqs])


# ----------------------------------------------------------- delayed reference

def test_delayed_reference_integer_shift():
    x = np.arange(1, 6, dtype=complex)
    out = delayed_reference(x, 2.0)
    np.testing.assert_array_equal(out, [0, 0, 1, 2, 3])


def test_delayed_reference_zero_delay_identity():
    x = np.arange(5, dtype=complex)
    np.testing.assert_array_equal(delayed_reference(x, 0.0), x)


def test_delayed_reference_fractional_interpolates():
    x = np.array([0.0, 2.0, 4.0, 6.0], dtype=complex)
    out = delayed_reference(x, 0.5)
    # halfway between the 0- and 1-sample shifts
    np.testing.assert_allclose(out, [0.0, 1.0, 3.0, 5.0])


def test_delayed_reference_negative_rejected():
    with pytest.raises(InputError):
        delayed_reference(np.ones(4, dtype=complex), -1.0)


def test_delayed_reference_beyond_length():
    out = delayed_reference(np.ones(4, dtype=complex), 10.0)
    np.testing.assert_array_equal(out, np.zeros(4))


# -------------------------------------------------------------- grid validation

def test_grid_rejects_asymmetric_doppler():
    with pytest.raises(ConfigError):
        CafGrid(np.array([0.0]), np.array([-10.0, 0.0, 20.0]))


def test_grid_rejects_doppler_beyond_half_frame_rate():
    with pytest.raises(ConfigError):
        CafGrid(np.array([0.0]), np.array([-3000.0, 0.0, 3000.0]), frame_rate=1e6 / 216)


def test_grid_rejects_decreasing_delays():
    with pytest.raises(ConfigError):
        CafGrid(np.array([2e-6, 1e-6]), np.array([-10.0, 0.0, 10.0]))


def test_grid_rejects_negative_delay():
    with pytest.raises(ConfigError):
        CafGrid(np.array([-1e-6, 0.0]), np.array([0.0]))


def test_default_grid_shape():
    grid = default_grid()
    assert grid.delay_bins.size == 17
    assert grid.doppler_bins.size == 101
    assert grid.doppler_bins[0] == -500.0 and grid.doppler_bins[-1] == 500.0
    assert grid.max_delay == pytest.approx(16e-6)


# -------------------------------------------------------------------- caf oracle

def test_caf_matched_filter_peak():
    # surveillance = reference delayed by an exact number of samples:
    # R at the true (delay, 0 Hz) cell is window energy * dt, exactly
    spec = FrameSpec()
    tx = make_burst(spec, 500)  # 0.108 s
    d_true = 2
    ys = IqTrace(delayed_reference(tx.samples, d_true), FS)
    grid = _toy_grid(n_delays=5)
    surf = caf(ys, tx, grid)
    n_win = int(round(grid.cit * FS))
    k0 = int(round(grid.max_delay * FS))
    energy = np.sum(np.abs(ys.samples[k0:k0 + n_win]) ** 2) / FS
    zero_f = np.argmin(np.abs(grid.doppler_bins))
    assert surf.values[d_true, zero_f] == pytest.approx(energy, rel=1e-12)
    # the matched cell dominates the surface
    mags = np.abs(surf.values)
    assert mags[d_true, zero_f] == mags.max()


def test_caf_agrees_with_brute_force():
    rng = np.random.default_rng(5)
    n = 2000
    ys_arr = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    yr_arr = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    grid = CafGrid(np.array([0.0, 1e-6]), np.arange(-3, 4) * 500.0,
                   cit=1e-3, hop=1e-3, frame_rate=FS)
    surf = caf(IqTrace(ys_arr, FS), IqTrace(yr_arr, FS), grid)
    n_win = 1000
    k0 = 1
    for di, d in enumerate([0, 1]):
        zr = delayed_reference(yr_arr, d)[k0:k0 + n_win]
        want = _brute_caf(ys_arr[k0:k0 + n_win], zr, grid.doppler_bins, 1.0 / FS)
        np.testing.assert_allclose(surf.values[di], want, rtol=1e-10, atol=1e-12)


def test_caf_sign_convention():
    # surveillance carrying exp(-j*2*pi*f0*t) peaks at axis value +f0
    f0 = 100.0
    spec = FrameSpec()
    tx = make_burst(spec, 500)
    t = tx.times()
    ys = IqTrace(tx.samples * np.exp(-2j * np.pi * f0 * t), FS)
    grid = _toy_grid(n_delays=1, f_span=200.0)
    surf = caf(ys, tx, grid)
    peak_f = grid.doppler_bins[np.argmax(np.abs(surf.values[0]))]
    assert peak_f == f0


def test_caf_linearity_in_surveillance():
    rng = np.random.default_rng(9)
    n = 1500
    yr = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    grid = CafGrid(np.array([0.0]), np.arange(-2, 3) * 1000.0,
                   cit=1e-3, hop=1e-3, frame_rate=FS)
    r = IqTrace(yr, FS)
    sa = caf(IqTrace(a, FS), r, grid).values
    sb = caf(IqTrace(b, FS), r, grid).values
    sab = caf(IqTrace(2 * a + 3j * b, FS), r, grid).values
    np.testing.assert_allclose(sab, 2 * sa + 3j * sb, rtol=1e-10, atol=1e-12)


def test_caf_zero_surveillance_gives_zero():
    yr = IqTrace(np.ones(1000, dtype=complex), FS)
    ys = IqTrace(np.zeros(1000, dtype=complex), FS)
    grid = CafGrid(np.array([0.0]), np.array([-10.0, 0.0, 10.0]),
                   cit=5e-4, hop=5e-4, frame_rate=FS)
    np.testing.assert_array_equal(caf(ys, yr, grid).values, 0.0)


def test_caf_requires_coverage():
    tx = make_burst(FrameSpec(), 200)  # 43.2 ms < 0.1 s window
    grid = _toy_grid()
    with pytest.raises(InputError):
        caf(tx, tx, grid)


def test_caf_rejects_mismatched_rates():
    a = IqTrace(np.ones(1000, dtype=complex), 1e6)
    b = IqTrace(np.ones(1000, dtype=complex), 2e6)
    grid = CafGrid(np.array([0.0]), np.array([0.0]), cit=1e-4, hop=1e-4, frame_rate=1e6)
    with pytest.raises(InputError):
        caf(a, b, grid)


def test_caf_t_start_selects_window():
    # two disjoint tones in time; windows starting at each pick their own tone
    n = 4000
    t = np.arange(n) / FS
    f1, f2 = 2000.0, -3000.0
    ys_arr = np.ones(n, dtype=complex)
    ys_arr[:2000] = np.exp(-2j * np.pi * f1 * t[:2000])
    ys_arr[2000:] = np.exp(-2j * np.pi * f2 * (t[2000:] - t[2000]))
    yr = IqTrace(np.ones(n, dtype=complex), FS)
    grid = CafGrid(np.array([0.0]), np.arange(-6, 7) * 500.0,
                   cit=2e-3, hop=2e-3, frame_rate=FS)
    s1 = caf(IqTrace(ys_arr, FS), yr, grid, t_start=0.0)
    s2 = caf(IqTrace(ys_arr, FS), yr, grid, t_start=2e-3)
    assert grid.doppler_bins[np.argmax(np.abs(s1.values[0]))] == f1
    assert grid.doppler_bins[np.argmax(np.abs(s2.values[0]))] == f2


# ------------------------------------------------------------------ spectrogram

def test_window_count_integer_arithmetic():
    # 2.0 s at cit 0.1 / hop 0.05 -> exactly 39 windows
    grid = _toy_grid()
    n = 2_000_000
    ys = IqTrace(np.ones(n, dtype=complex), FS)
    spg = spectrogram_fast(ys, ys, grid)
    assert spg.values.shape[0] == 39
    # one hop less data -> 38
    ys2 = IqTrace(np.ones(n - 50_000, dtype=complex), FS)
    assert spectrogram_fast(ys2, ys2, grid).values.shape[0] == 38


def test_spectrogram_times_and_axes():
    grid = _toy_grid()
    ys = IqTrace(np.ones(250_000, dtype=complex), FS, t0=1.0)
    spg = spectrogram_fast(ys, ys, grid)
    assert spg.values.shape == (4, grid.doppler_bins.size)
    np.testing.assert_allclose(spg.time_axis, 1.0 + np.arange(4) * 0.05)
    np.testing.assert_array_equal(spg.freq_axis, grid.doppler_bins)
    assert spg.cit == pytest.approx(0.1)
    assert spg.hop == pytest.approx(0.05)


def test_fast_matches_direct():
    # structural equivalence of the two paths on a small noisy burst
    spec = FrameSpec()
    tx = make_burst(spec, 1200)  # 0.2592 s -> 4 windows
    rng = np.random.default_rng(3)
    t = tx.times()
    ys_arr = (tx.samples * np.exp(-2j * np.pi * 120.0 * t)
              + 0.1 * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size)))
    ys = IqTrace(ys_arr, FS)
    grid = _toy_grid(n_delays=4, f_span=200.0)
    a = spectrogram(ys, tx, grid)
    b = spectrogram_fast(ys, tx, grid)
    np.testing.assert_array_equal(a.time_axis, b.time_axis)
    rel = np.abs(a.values - b.values).max() / a.values.max()
    assert rel < 1e-6  # measured ~1e-13; pinned at the contract bound
    assert rel < 1e-10


def test_fast_rejects_off_lattice_doppler():
    # 10.5 Hz is not a multiple of fs/n_win = 10 Hz
    grid = CafGrid(np.array([0.0]), np.array([-10.5, 0.0, 10.5]),
                   cit=0.1, hop=0.05, frame_rate=1e6 / 216)
    ys = IqTrace(np.ones(200_000, dtype=complex), FS)
    with pytest.raises(InputError):
        spectrogram_fast(ys, ys, grid)


def test_direct_accepts_off_lattice_doppler():
    grid = CafGrid(np.array([0.0]), np.array([-10.5, 0.0, 10.5]),
                   cit=0.01, hop=0.01, frame_rate=1e6 / 216)
    ys = IqTrace(np.ones(20_000, dtype=complex), FS)
    spg = spectrogram(ys, ys, grid)
    assert spg.values.shape == (2, 3)


def test_spectrogram_too_short_trace():
    grid = _toy_grid()
    ys = IqTrace(np.ones(50_000, dtype=complex), FS)
    with pytest.raises(InputError):
        spectrogram_fast(ys, ys, grid)


def test_offset_invariance():
    # multiplying both channels by exp(-j*2*pi*delta*t) leaves magnitudes
    # unchanged (the conjugate product cancels the offset)
    spec = FrameSpec()
    tx = make_burst(spec, 1000)
    t = tx.times()
    traj = np.exp(-2j * np.pi * 150.0 * t)
    grid = _toy_grid(n_delays=3, f_span=200.0)
    for delta in (37.0, 10_000.0):
        off = np.exp(-2j * np.pi * delta * t)
        base = spectrogram_fast(IqTrace(tx.samples * traj, FS), tx, grid)
        shifted = spectrogram_fast(IqTrace(tx.samples * traj * off, FS),
                                   IqTrace(tx.samples * off, FS), grid)
        rel = np.abs(base.values - shifted.values).max() / base.values.max()
        assert rel < 1e-9


def test_argmax_doppler():
    from mmsense.caf import Spectrogram
    values = np.array([[0.1, 0.9, 0.2], [0.7, 0.1, 0.2]])
    spg = Spectrogram(values, np.array([0.0, 0.05]), np.array([-10.0, 0.0, 10.0]), 0.1, 0.05)
    np.testing.assert_array_equal(argmax_doppler(spg), [0.0, -10.0])
