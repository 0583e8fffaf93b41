import math
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geezpost.audio import (
    AugmentConfig,
    PcmBuffer,
    add_white_noise,
    augment_manifest,
    loop_to,
    mix_background,
    plan_copies,
    power,
    read_wav,
    snr_db,
    write_wav,
)
from geezpost.corpus_io import ManifestRecord
from geezpost.errors import ConfigError, EmptyBuffer, RateMismatch, TooManyBackgrounds, UnsupportedAudio

RATE = 16000


def tone(freq=440.0, seconds=1.0, amp=8000, rate=RATE):
    t = np.arange(int(seconds * rate)) / rate
    return PcmBuffer(np.rint(amp * np.sin(2 * np.pi * freq * t)).astype(np.int16), rate)


@pytest.mark.parametrize("target", [0.0, 5.0, 10.0, 20.0, 30.0])
def test_measured_snr(target):
    clean = tone()
    noisy = add_white_noise(clean, target, seed=3)
    noise = noisy.samples.astype(np.float64) - clean.samples
    assert abs(snr_db(clean.samples, noise) - target) <= 0.5


def test_infinite_snr_is_identity():
    clean = tone()
    assert add_white_noise(clean, math.inf, seed=1) == clean


def test_noise_is_seeded():
    clean = tone()
    assert add_white_noise(clean, 10, 5) == add_white_noise(clean, 10, 5)
    assert add_white_noise(clean, 10, 5) != add_white_noise(clean, 10, 6)


def test_noise_saturates_instead_of_wrapping():
    loud = PcmBuffer(np.full(1000, 32000, dtype=np.int16))
    out = add_white_noise(loud, -10, seed=0)
    assert out.samples.max() == 32767
    assert out.samples.min() >= -32768


def test_empty_buffer():
    with pytest.raises(EmptyBuffer):
        add_white_noise(PcmBuffer(np.zeros(0, dtype=np.int16)), 10, 0)


def test_zero_gains_return_input():
    fg, bg = tone(), tone(220)
    assert mix_background(fg, [bg], [0.0], seed=9) == fg


def test_silent_foreground_gives_offset_background():
    n = 5000
    bg = tone(300, 0.2)
    out = mix_background(PcmBuffer(np.zeros(n, dtype=np.int16)), [bg], [1.0], seed=4)
    offset = int(np.random.Generator(np.random.PCG64(4)).integers(len(bg)))
    assert np.array_equal(out.samples, loop_to(bg.samples, n, offset))


def test_loop_wraps_around():
    assert list(loop_to(np.array([1, 2, 3]), 7, 2)) == [3, 1, 2, 3, 1, 2, 3]


@settings(deadline=None, max_examples=60)
@given(
    st.integers(0, 2**32 - 1),
    st.lists(st.floats(0.0, 2.0), min_size=1, max_size=3),
    st.integers(10, 400),
)
def test_mix_energy_bound(seed, gains, n):
    rng = np.random.default_rng(seed)
    fg = PcmBuffer(rng.integers(-20000, 20000, n))
    bgs = [PcmBuffer(rng.integers(-20000, 20000, int(rng.integers(1, 600)))) for _ in gains]
    out = mix_background(fg, bgs, gains, seed)
    offsets = np.random.Generator(np.random.PCG64(seed))
    offsets = [int(offsets.integers(len(b))) for b in bgs]

    def norm(x):
        return math.sqrt(float(np.sum(np.asarray(x, dtype=np.float64) ** 2)))

    bound = norm(fg.samples) + sum(g * norm(loop_to(b.samples, n, o)) for g, b, o in zip(gains, bgs, offsets))
    assert norm(out.samples) <= bound + 0.5 * math.sqrt(n) + 1e-6


def test_mix_rejections():
    fg = tone()
    with pytest.raises(TooManyBackgrounds):
        mix_background(fg, [fg] * 4, [0.1] * 4, 0)
    with pytest.raises(TooManyBackgrounds):
        mix_background(fg, [], [], 0)
    with pytest.raises(RateMismatch):
        mix_background(fg, [tone(rate=8000)], [0.1], 0)
    with pytest.raises(ConfigError):
        mix_background(fg, [fg], [0.1, 0.2], 0)


def test_power_and_snr_helpers():
    assert power([3, -3]) == 9.0
    assert power([]) == 0.0
    assert snr_db([1, 1], [0, 0]) == math.inf
    assert snr_db([10, 10], [1, 1]) == pytest.approx(20.0)


def test_wav_round_trip(tmp_path):
    buf = tone()
    write_wav(buf, tmp_path / "a.wav")
    assert read_wav(tmp_path / "a.wav") == buf


@pytest.mark.parametrize("channels,width", [(2, 2), (1, 1)])
def test_unsupported_wav(tmp_path, channels, width):
    path = tmp_path / "x.wav"
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(RATE)
        w.writeframes(b"\x00" * 400)
    with pytest.raises(UnsupportedAudio):
        read_wav(path)


def test_stereo_buffer_rejected():
    with pytest.raises(UnsupportedAudio):
        PcmBuffer(np.zeros(4, dtype=np.int16), RATE, channels=2)


def _rows(n):
    return [ManifestRecord(f"u{i}", "ሰላም", f"u{i}.wav") for i in range(n)]


def test_exact_plan_totals():
    ids = [f"u{i}" for i in range(10875)]
    plan = plan_copies(ids, AugmentConfig(multiplier=14633 / 10875))
    assert sum(plan.values()) == 14633
    assert set(plan.values()) <= {1, 2}


def test_dry_run_row_accounting(tmp_path):
    m = [ManifestRecord(f"u{i}", "ሰላም") for i in range(10875)]
    res = augment_manifest(m, AugmentConfig(multiplier=14633 / 10875), tmp_path / "out", dry_run=True)
    assert len(res.manifest) == 25508 and res.added == 14633
    assert not (tmp_path / "out").exists()


def test_probabilistic_plan_is_seeded():
    ids = [f"r{i}" for i in range(2000)]
    cfg = AugmentConfig(multiplier=1.5, mode="probabilistic", seed=8)
    a = plan_copies(ids, cfg)
    assert a == plan_copies(ids, cfg)
    assert set(a.values()) <= {1, 2}
    assert abs(sum(a.values()) - 3000) < 4 * math.sqrt(2000 * 0.25)


def test_multiplier_zero(tmp_path):
    m = _rows(3)
    res = augment_manifest(m, AugmentConfig(multiplier=0), tmp_path)
    assert res.manifest == m and res.added == 0


def _write_rows(tmp_path, n):
    rows = _rows(n)
    for i, r in enumerate(rows):
        write_wav(tone(200 + 50 * i, 0.25), tmp_path / r.audio_path)
    return rows


def test_augment_writes_audio_deterministically(tmp_path):
    rows = _write_rows(tmp_path, 4)
    cfg = AugmentConfig(multiplier=1.0, seed=2)
    a = augment_manifest(rows, cfg, tmp_path / "a", base_dir=tmp_path)
    b = augment_manifest(rows, cfg, tmp_path / "b", base_dir=tmp_path)
    assert a.added == 4 and not a.errors
    assert [r.id for r in a.manifest[4:]] == ["u0-aug1", "u1-aug1", "u2-aug1", "u3-aug1"]
    for r in a.manifest[4:]:
        assert (tmp_path / "a" / f"{r.id}.wav").read_bytes() == (tmp_path / "b" / f"{r.id}.wav").read_bytes()


def test_augment_collects_row_errors(tmp_path):
    rows = _write_rows(tmp_path, 3)
    (tmp_path / rows[1].audio_path).write_bytes(b"not a wav")
    res = augment_manifest(rows, AugmentConfig(multiplier=1.0, max_backgrounds=0), tmp_path / "o", base_dir=tmp_path)
    assert [sid for sid, _ in res.errors] == ["u1"]
    assert res.added == 2


def test_text_only_rows_skipped(tmp_path):
    rows = _write_rows(tmp_path, 2) + [ManifestRecord("t", "ሰላም")]
    res = augment_manifest(rows, AugmentConfig(multiplier=1.0, max_backgrounds=0), tmp_path / "o", base_dir=tmp_path)
    assert res.skipped_text_only == 1 and res.added == 2
