import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.io import wavfile

from spadeclip.audio_io import Signal, as_float32, peak_normalize, read_wav, write_wav
from spadeclip.errors import AudioFormatError, DataError


def test_pcm16_is_scaled_to_unit_range(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 16000, np.array([16384, -32768], dtype=np.int16))
    s = read_wav(path)
    assert s.samples.tolist() == [0.5, -1.0]
    assert s.sample_rate == 16000


def test_float32_read_is_identity(tmp_path):
    path = tmp_path / "a.wav"
    wavfile.write(path, 8000, np.array([0.25, -0.75], dtype=np.float32))
    s = read_wav(path)
    assert s.samples.tolist() == [0.25, -0.75]
    assert s.sample_rate == 8000


@pytest.mark.parametrize("values", [[0.0], [1.0, -1.0], [0.1, 0.2, -0.3]])
def test_round_trip_small(tmp_path, values):
    sig = as_float32(Signal(np.array(values)))
    write_wav(tmp_path / "x.wav", sig)
    back = read_wav(tmp_path / "x.wav")
    np.testing.assert_array_equal(back.samples, sig.samples)


def test_round_trip_five_seconds(tmp_path, rng):
    sig = as_float32(Signal(rng.uniform(-1, 1, 80000)))
    write_wav(tmp_path / "x.wav", sig)
    np.testing.assert_array_equal(read_wav(tmp_path / "x.wav").samples, sig.samples)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float32, st.integers(1, 64), elements=st.floats(-4, 4, width=32)))
def test_round_trip_property(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("wav") / "x.wav"
    sig = Signal(data.astype(np.float64))
    write_wav(path, sig)
    np.testing.assert_array_equal(read_wav(path).samples, sig.samples)


def test_stereo_keeps_first_channel(tmp_path):
    path = tmp_path / "st.wav"
    wavfile.write(path, 16000, np.array([[0.5, 0.1], [-0.5, 0.2]], dtype=np.float32))
    with pytest.warns(UserWarning):
        s = read_wav(path)
    assert s.samples.tolist() == [0.5, -0.5]


def test_unsupported_encoding(tmp_path):
    path = tmp_path / "u8.wav"
    wavfile.write(path, 16000, np.array([1, 2, 3], dtype=np.uint8))
    with pytest.raises(AudioFormatError):
        read_wav(path)


def test_missing_file(tmp_path):
    with pytest.raises((AudioFormatError, OSError)):
        read_wav(tmp_path / "nope.wav")


@pytest.mark.parametrize(
    "values, expected",
    [([0.5, -0.25], [1.0, -0.5]), ([-2.0], [-1.0]), ([1.0, 0.3], [1.0, 0.3])],
)
def test_peak_normalize(values, expected):
    out = peak_normalize(Signal(np.array(values)))
    np.testing.assert_array_equal(out.samples, expected)


def test_peak_normalize_idempotent(rng):
    once = peak_normalize(Signal(rng.normal(size=100)))
    np.testing.assert_array_equal(peak_normalize(once).samples, once.samples)


def test_peak_normalize_rejects_silence():
    with pytest.raises(DataError):
        peak_normalize(Signal(np.zeros(4)))


@pytest.mark.parametrize("bad", [np.array([]), np.array([np.nan]), np.zeros((2, 2))])
def test_signal_validation(bad):
    with pytest.raises(DataError):
        Signal(bad)


def test_signal_is_read_only():
    s = Signal(np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        s.samples[0] = 1.0
    assert s.duration == pytest.approx(2 / 16000)
