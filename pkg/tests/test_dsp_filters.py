"""Filter design and application vs transfer-function / FFT oracles."""

import numpy as np
import pytest

from eegtgat import dsp
from eegtgat.errors import ParameterError, ShapeError

FS = 256.0


def sine(freq, fs=FS, seconds=20.0, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return np.sin(2 * np.pi * freq * t + phase)


def fft_amplitude(x, freq, fs=FS):
    """Amplitude of the bin nearest ``freq`` (rectangular window, exact bins)."""
    spec = np.fft.rfft(x) / len(x) * 2
    freqs = np.fft.rfftfreq(len(x), 1 / fs)
    return np.abs(spec[np.argmin(np.abs(freqs - freq))])


class TestNotchDesign:
    def test_unity_dc_gain(self):
        notch = dsp.design_notch(50.0, FS, q=30.0)
        assert abs(abs(notch.response([0.0], FS)[0]) - 1.0) < 1e-6

    def test_deep_null_at_50(self):
        notch = dsp.design_notch(50.0, FS, q=30.0)
        assert notch.gain_db([50.0], FS)[0] <= -30.0

    def test_stable(self):
        assert dsp.design_notch(50.0, FS, q=30.0).is_stable()

    def test_invalid_frequency(self):
        with pytest.raises(ParameterError):
            dsp.design_notch(FS / 2, FS)


class TestBandpassDesign:
    def test_midband_flat(self):
        band = dsp.design_bandpass(0.1, 40.0, FS, order=4)
        assert abs(band.gain_db([2.0], FS)[0]) < 1.0

    def test_dc_rejected(self):
        band = dsp.design_bandpass(0.1, 40.0, FS, order=4)
        assert band.gain_db([1e-4], FS)[0] <= -20.0

    def test_stable(self):
        assert dsp.design_bandpass(0.1, 40.0, FS, order=4).is_stable()

    def test_edges_are_3db_points(self):
        band = dsp.design_bandpass(0.1, 40.0, FS, order=4)
        for edge in (0.1, 40.0):
            assert abs(band.gain_db([edge], FS)[0] + 3.01) < 0.7

    def test_invalid_band(self):
        with pytest.raises(ParameterError):
            dsp.design_bandpass(40.0, 0.1, FS)
        with pytest.raises(ParameterError):
            dsp.design_bandpass(0.1, 40.0, FS, order=3)


class TestFiltfilt:
    def test_zero_in_zero_out(self):
        band = dsp.design_bandpass(0.1, 40.0, FS)
        out = dsp.filtfilt(band, np.zeros(4096))
        np.testing.assert_array_equal(out, 0.0)

    def test_passband_sine_amplitude_and_phase(self):
        band = dsp.design_bandpass(0.1, 40.0, FS)
        x = sine(10.0)
        y = dsp.filtfilt(band, x)
        assert abs(fft_amplitude(y, 10.0) - 1.0) < 0.12
        # zero phase: cross-correlation peak at lag 0
        corr = np.correlate(y, x, mode="full")
        assert np.argmax(corr) == len(x) - 1

    def test_notch_kills_50hz(self):
        notch = dsp.design_notch(50.0, FS, q=30.0)
        y = dsp.filtfilt(notch, sine(50.0))
        assert fft_amplitude(y, 50.0) <= 0.03

    def test_too_short_signal(self):
        band = dsp.design_bandpass(0.1, 40.0, FS)
        with pytest.raises(ShapeError):
            dsp.filtfilt(band, np.zeros(30))


class TestResample:
    def test_identity_rate(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((3, 1000))
        out = dsp.resample(x, FS, FS)
        assert out.shape == x.shape
        np.testing.assert_allclose(out, x, atol=1e-9)

    def test_halving_preserves_tone(self):
        x = sine(10.0, fs=512.0, seconds=8.0)
        y = dsp.resample(x, 512.0, 256.0)
        assert len(y) == len(x) // 2
        assert abs(fft_amplitude(y, 10.0, fs=256.0) - 1.0) < 0.05

    def test_dc_preserved(self):
        x = np.full(2000, 3.25)
        for target in (256.0, 200.0, 512.0):
            y = dsp.resample(x, 256.0, target)
            np.testing.assert_allclose(y, 3.25, atol=1e-6)

    def test_output_length_rounded(self):
        x = np.zeros(1001)
        # half-up rounding of N * target / fs
        assert len(dsp.resample(x, 512.0, 256.0)) == int(np.floor(1001 * 256 / 512 + 0.5))
        assert len(dsp.resample(np.zeros(1000), 512.0, 256.0)) == 500

    def test_band_edge_preserved(self):
        # content below 0.4 * min(rate) survives within 5%
        x = sine(102.0, fs=512.0, seconds=8.0)
        y = dsp.resample(x, 512.0, 256.0)
        assert abs(fft_amplitude(y, 102.0, fs=256.0) - 1.0) < 0.05

    def test_invalid_target(self):
        with pytest.raises(ParameterError):
            dsp.resample(np.zeros(100), 256.0, 0.0)
