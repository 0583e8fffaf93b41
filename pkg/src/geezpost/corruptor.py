"""Synthetic ASR-style corruption of clean sentences.

Randomness comes from numpy's PCG64 generator. Each sentence gets its own
stream, ``SeedSequence(seed, spawn_key=(stream_index,))``, so a line's
corruption depends only on the config, the seed and its index and the
same records come out whether lines are processed in parallel or not.

Per sentence the draws happen in a fixed order:

1. one uniform per gap between adjacent syllables: an existing space is
   deleted with ``p_space_delete``, a missing one inserted with
   ``p_space_insert``;
2. six uniforms per syllable: delete, substitute, substitution source,
   substitution pick, insert-after and the inserted syllable's identity.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Iterator

import numpy as np

from .codec import SPACE, Chart, Syllable, Unit, default_chart, detect_scheme, render_syllable, tokenize
from .corpus_io import PairRecord
from .errors import ConfigError, ScriptError
from .normalizer import HomophoneTable, default_table

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class CorruptionConfig:
    p_space_insert: float = 0.15
    p_space_delete: float = 0.3
    p_syll_delete: float = 0.03
    p_syll_insert: float = 0.03
    p_syll_substitute: float = 0.03
    homophone_bias: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for f in fields(self):
            if f.name == "seed":
                continue
            v = getattr(self, f.name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{f.name} must be in [0, 1], got {v}")

    @classmethod
    def from_dict(cls, data: dict) -> "CorruptionConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown corruption config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "CorruptionConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def only(self, **probs) -> "CorruptionConfig":
        """Copy with every probability zero except the ones given."""
        base = {f.name: 0.0 for f in fields(self) if f.name.startswith("p_")}
        base.update(probs)
        return CorruptionConfig(**base, homophone_bias=self.homophone_bias, seed=self.seed)


def stream_rng(seed: int, stream_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed & _MASK64, spawn_key=(stream_index,))
    return np.random.Generator(np.random.PCG64(ss))


class _Alternatives:
    """Substitution candidates, cached per chart and homophone table."""

    def __init__(self, chart: Chart, table: HomophoneTable):
        self.chart = chart
        self.table = table
        self.all = chart.syllables
        self._homophones = {}

    def homophones(self, syl: Syllable) -> list[Syllable]:
        got = self._homophones.get(syl)
        if got is None:
            group = self.table.group_of(syl.consonant) or ()
            got = [
                Syllable(m, syl.vowel, syl.derived)
                for m in group
                if m != syl.consonant and Syllable(m, syl.vowel, syl.derived) in self.chart
            ]
            self._homophones[syl] = got
        return got

    def uniform_other(self, syl: Syllable, u: float) -> Syllable:
        n = len(self.all)
        k = min(int(u * (n - 1)), n - 2)
        if self.chart.index(syl) <= k:
            k += 1
        return self.all[k]

    def uniform(self, u: float) -> Syllable:
        n = len(self.all)
        return self.all[min(int(u * n), n - 1)]


_ALT_CACHE: dict = {}


def _alternatives(chart, table):
    key = (id(chart), table)
    alt = _ALT_CACHE.get(key)
    if alt is None:
        alt = _ALT_CACHE[key] = _Alternatives(chart, table)
    return alt


def corrupt(
    sentence: str,
    cfg: CorruptionConfig,
    stream_index: int = 0,
    table: HomophoneTable | None = None,
    chart: Chart | None = None,
) -> str:
    chart = chart or default_chart()
    table = default_table() if table is None else table
    scheme = detect_scheme(sentence)
    units = tokenize(sentence, scheme, chart)
    syllables = [u for u in units if u.token is not SPACE]
    if not syllables:
        return ""
    rng = stream_rng(cfg.seed, stream_index)
    alt = _alternatives(chart, table)

    # 1. spaces
    spaced: list[Unit] = [syllables[0]]
    gaps = rng.random(len(syllables) - 1)
    it = iter(units[1:])
    k = 0
    for u in it:
        had_space = u.token is SPACE
        if had_space:
            u = next(it)
        draw = gaps[k]
        k += 1
        if had_space:
            if draw >= cfg.p_space_delete:
                spaced.append(Unit(SPACE, " "))
        elif draw < cfg.p_space_insert:
            spaced.append(Unit(SPACE, " "))
        spaced.append(u)

    # 2. syllables
    out: list[Unit] = []
    n_syl = sum(1 for u in spaced if u.token is not SPACE)
    draws = rng.random((n_syl, 6))
    row = 0
    for u in spaced:
        if u.token is SPACE:
            out.append(u)
            continue
        d_del, d_sub, d_src, d_pick, d_ins, d_ins_pick = draws[row]
        row += 1
        if d_del < cfg.p_syll_delete:
            continue
        if d_sub < cfg.p_syll_substitute:
            homs = alt.homophones(u.token)
            if homs and d_src < cfg.homophone_bias:
                new = homs[min(int(d_pick * len(homs)), len(homs) - 1)]
            else:
                new = alt.uniform_other(u.token, d_pick)
            u = Unit(new, render_syllable(new, scheme, chart))
        out.append(u)
        if d_ins < cfg.p_syll_insert:
            new = alt.uniform(d_ins_pick)
            out.append(Unit(new, render_syllable(new, scheme, chart)))

    # drop leading/trailing/doubled spaces left by deletions
    text: list[str] = []
    pending_space = False
    for u in out:
        if u.token is SPACE:
            pending_space = bool(text)
            continue
        if pending_space:
            text.append(" ")
            pending_space = False
        text.append(u.surface)
    return "".join(text)


def _corrupt_line(args):
    index, line, cfg, table = args
    clean = " ".join(line.split())
    if not clean:
        return index, None, "empty line"
    try:
        return index, PairRecord(str(index), corrupt(clean, cfg, index, table), clean), None
    except ScriptError as exc:
        return index, None, str(exc)


def generate_pairs(
    lines: Iterable[str],
    cfg: CorruptionConfig,
    table: HomophoneTable | None = None,
    jobs: int = 1,
    stats: dict | None = None,
) -> Iterator[PairRecord]:
    """Yield one (corrupted, clean) record per usable line, id = 1-based line number.

    Lines that are empty or fail to parse are skipped with a warning; the
    number skipped is stored in ``stats["skipped"]`` when a dict is passed.
    """
    table = default_table() if table is None else table
    if stats is None:
        stats = {}
    stats.setdefault("skipped", 0)
    stats.setdefault("written", 0)
    tasks = ((i, line, cfg, table) for i, line in enumerate(lines, 1))
    if jobs > 1:
        pool = ProcessPoolExecutor(max_workers=jobs)
        results = pool.map(_corrupt_line, tasks, chunksize=256)
    else:
        pool = None
        results = map(_corrupt_line, tasks)
    try:
        for index, rec, err in results:
            if rec is None:
                stats["skipped"] += 1
                log.warning("line %d skipped: %s", index, err)
                continue
            stats["written"] += 1
            yield rec
    finally:
        if pool is not None:
            pool.shutdown()
    if stats["skipped"]:
        log.warning("%d line(s) skipped", stats["skipped"])
