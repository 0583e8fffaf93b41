"""White-noise and background-speech augmentation for 16-bit mono PCM."""

from __future__ import annotations

import hashlib
import logging
import math
import wave
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus_io import ManifestRecord
from .errors import ConfigError, EmptyBuffer, GeezError, RateMismatch, TooManyBackgrounds, UnsupportedAudio

log = logging.getLogger(__name__)

INT16_MIN, INT16_MAX = -32768, 32767
MAX_BACKGROUNDS = 3


@dataclass(frozen=True, eq=False)
class PcmBuffer:
    samples: np.ndarray
    sample_rate: int = 16000
    channels: int = 1

    def __post_init__(self):
        if self.channels != 1:
            raise UnsupportedAudio("only mono audio is supported")
        arr = np.asarray(self.samples)
        if arr.dtype != np.int16:
            if arr.size and (arr.min() < INT16_MIN or arr.max() > INT16_MAX):
                raise ValueError("samples outside the 16-bit range")
            arr = arr.astype(np.int16)
        object.__setattr__(self, "samples", arr)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def __eq__(self, other):
        return (
            isinstance(other, PcmBuffer)
            and self.sample_rate == other.sample_rate
            and np.array_equal(self.samples, other.samples)
        )


def read_wav(path) -> PcmBuffer:
    try:
        with wave.open(str(path), "rb") as w:
            if w.getnchannels() != 1 or w.getsampwidth() != 2 or w.getcomptype() != "NONE":
                raise UnsupportedAudio(f"{path}: need 16-bit mono PCM")
            data = w.readframes(w.getnframes())
            rate = w.getframerate()
    except wave.Error as exc:
        raise UnsupportedAudio(f"{path}: {exc}") from None
    return PcmBuffer(np.frombuffer(data, dtype="<i2").astype(np.int16), rate)


def write_wav(buf: PcmBuffer, path) -> None:
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(buf.sample_rate)
        w.writeframes(buf.samples.astype("<i2").tobytes())


def power(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x)) if x.size else 0.0


def snr_db(signal, noise) -> float:
    pn = power(noise)
    return math.inf if pn == 0 else 10 * math.log10(power(signal) / pn)


def _clip(x: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(x), INT16_MIN, INT16_MAX).astype(np.int16)


def add_white_noise(buf: PcmBuffer, snr: float, seed: int) -> PcmBuffer:
    """Add Gaussian noise at *snr* dB relative to the buffer's own power.

    The drawn noise is rescaled to the exact target power, so the only
    error left is rounding to integers. ``math.inf`` returns the input.
    """
    if len(buf) == 0:
        raise EmptyBuffer("cannot add noise to an empty buffer")
    if math.isinf(snr) and snr > 0:
        return buf
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal(len(buf))
    noise -= noise.mean()
    target = power(buf.samples) / 10 ** (snr / 10)
    current = power(noise)
    if current > 0:
        noise *= math.sqrt(target / current)
    return PcmBuffer(_clip(buf.samples.astype(np.float64) + noise), buf.sample_rate)


def loop_to(bg: np.ndarray, n: int, offset: int) -> np.ndarray:
    """*bg* started at *offset* and repeated or cut to *n* samples."""
    return bg[(offset + np.arange(n)) % len(bg)]


def mix_background(
    buf: PcmBuffer, backgrounds: Sequence[PcmBuffer], gains: Sequence[float], seed: int
) -> PcmBuffer:
    if not 1 <= len(backgrounds) <= MAX_BACKGROUNDS:
        raise TooManyBackgrounds(f"need 1 to {MAX_BACKGROUNDS} backgrounds, got {len(backgrounds)}")
    if len(gains) != len(backgrounds):
        raise ConfigError("one gain per background is required")
    for bg in backgrounds:
        if bg.sample_rate != buf.sample_rate:
            raise RateMismatch(f"background at {bg.sample_rate} Hz, speech at {buf.sample_rate} Hz")
        if len(bg) == 0:
            raise EmptyBuffer("empty background buffer")
    if len(buf) == 0:
        raise EmptyBuffer("empty foreground buffer")
    rng = np.random.Generator(np.random.PCG64(seed))
    offsets = [int(rng.integers(len(bg))) for bg in backgrounds]
    if all(g == 0 for g in gains):
        return buf
    mix = buf.samples.astype(np.float64)
    for bg, g, off in zip(backgrounds, gains, offsets):
        mix += g * loop_to(bg.samples.astype(np.float64), len(buf), off)
    return PcmBuffer(_clip(mix), buf.sample_rate)


# -- manifests -----------------------------------------------------------------


@dataclass(frozen=True)
class AugmentConfig:
    multiplier: float = 1.0
    mode: str = "exact"  # or "probabilistic"
    snr_db: float | None = None  # None draws per copy from snr_range
    snr_range: tuple[float, float] = (5.0, 20.0)
    white_noise: bool = True
    max_backgrounds: int = MAX_BACKGROUNDS
    background_gain: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.multiplier < 0:
            raise ConfigError("multiplier must be >= 0")
        if self.mode not in ("exact", "probabilistic"):
            raise ConfigError("mode must be 'exact' or 'probabilistic'")
        if not 0 <= self.max_backgrounds <= MAX_BACKGROUNDS:
            raise TooManyBackgrounds(f"max_backgrounds must be 0..{MAX_BACKGROUNDS}")


def _id_entropy(sid: str) -> int:
    return int.from_bytes(hashlib.sha256(sid.encode("utf-8")).digest()[:8], "little")


def row_rng(seed: int, sid: str, copy: int = 0, purpose: int = 0) -> np.random.Generator:
    """Stream keyed by (seed, row id, copy); *purpose* separates planning from mixing."""
    ss = np.random.SeedSequence(seed & ((1 << 64) - 1), spawn_key=(purpose, _id_entropy(sid), copy))
    return np.random.Generator(np.random.PCG64(ss))


def plan_copies(ids: Sequence[str], cfg: AugmentConfig) -> dict[str, int]:
    """How many augmented copies each row gets.

    ``exact`` produces ``round(multiplier * len(ids))`` copies in total:
    every row gets the integer part and the remainder goes to rows picked
    by a seeded draw. ``probabilistic`` gives each row the integer part
    plus one more with probability equal to the fractional part.
    """
    whole = int(math.floor(cfg.multiplier))
    frac = cfg.multiplier - whole
    if cfg.mode == "exact":
        total = round(cfg.multiplier * len(ids))
        plan = {sid: whole for sid in ids}
        extra = total - whole * len(ids)
        if extra:
            rng = np.random.Generator(np.random.PCG64(cfg.seed))
            for i in rng.choice(len(ids), size=extra, replace=False):
                plan[ids[int(i)]] += 1
        return plan
    return {sid: whole + int(row_rng(cfg.seed, sid, purpose=1).random() < frac) for sid in ids}


@dataclass
class AugmentResult:
    manifest: list[ManifestRecord]
    added: int = 0
    errors: list[tuple[str, str]] = field(default_factory=list)
    skipped_text_only: int = 0


def augment_manifest(
    manifest: Sequence[ManifestRecord],
    cfg: AugmentConfig,
    out_dir,
    base_dir=None,
    dry_run: bool = False,
) -> AugmentResult:
    """Write augmented copies of every audio row and return the grown manifest.

    Backgrounds are other rows' recordings. Per-row failures are collected
    in ``errors`` and the run carries on. With ``dry_run`` no audio is read
    or written and text-only rows are planned too, which is enough to check
    the row accounting.
    """
    out_dir = Path(out_dir)
    base = Path(base_dir) if base_dir is not None else Path(".")
    rows = list(manifest) if dry_run else [r for r in manifest if r.audio_path]
    result = AugmentResult(list(manifest), skipped_text_only=len(manifest) - len(rows))
    if cfg.multiplier == 0 or not rows:
        return result
    plan = plan_copies([r.id for r in rows], cfg)
    if not dry_run:
        out_dir.mkdir(parents=True, exist_ok=True)

    @lru_cache(maxsize=256)
    def load_path(path):
        return read_wav(base / path)

    def load(rec):
        return load_path(rec.audio_path)

    taken = {r.id for r in manifest}
    for rec in rows:
        for copy in range(plan[rec.id]):
            new_id = f"{rec.id}-aug{copy + 1}"
            path = out_dir / f"{new_id}.wav"
            try:
                if new_id in taken:
                    raise ConfigError(f"id {new_id!r} already exists")
                if not dry_run:
                    write_wav(_augment_one(rec, copy, cfg, rows, load), path)
            except (OSError, EOFError, ValueError, GeezError) as exc:
                result.errors.append((rec.id, f"{type(exc).__name__}: {exc}"))
                log.warning("augmentation of %s failed: %s", rec.id, exc)
                break
            audio = str(path) if rec.audio_path else None
            result.manifest.append(ManifestRecord(new_id, rec.text, audio, rec.split))
            taken.add(new_id)
            result.added += 1
    return result


def _augment_one(rec, copy, cfg, pool, load) -> PcmBuffer:
    rng = row_rng(cfg.seed, rec.id, copy)
    buf = load(rec)
    others = [r for r in pool if r.id != rec.id]
    n_bg = int(rng.integers(0, min(cfg.max_backgrounds, len(others)) + 1))
    if n_bg:
        picks = rng.choice(len(others), size=n_bg, replace=False)
        bgs = [load(others[int(i)]) for i in sorted(picks)]
        buf = mix_background(buf, bgs, [cfg.background_gain] * n_bg, int(rng.integers(1 << 63)))
    if cfg.white_noise:
        snr = cfg.snr_db if cfg.snr_db is not None else float(rng.uniform(*cfg.snr_range))
        buf = add_white_noise(buf, snr, int(rng.integers(1 << 63)))
    return buf
