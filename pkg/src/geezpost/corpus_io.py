"""Manifests, pair files, hypothesis files and the corrected-test-set workflow.

File formats
------------
manifest (JSONL)
    ``{"id": ..., "text": ..., "audio_path": ... | null, "split": "train" | "test"}``
corrections (JSONL)
    ``{"id": ..., "corrected_text": ..., "note": ... | null}``
pair file (TSV)
    ``id<TAB>corrupted<TAB>clean``
hypothesis file (TSV)
    ``id<TAB>text``
"""

from __future__ import annotations

import csv
import json
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadRatios, DuplicateId, MalformedRow, UnknownId

log = logging.getLogger(__name__)

SPLITS = ("train", "test")
MANIFEST_FIELDS = ("id", "text", "audio_path", "split")
CORRECTION_FIELDS = ("id", "corrected_text", "note")


@dataclass(frozen=True)
class ManifestRecord:
    id: str
    text: str
    audio_path: str | None = None
    split: str = "train"


@dataclass(frozen=True)
class CorrectionRecord:
    id: str
    corrected_text: str
    note: str | None = None


@dataclass(frozen=True)
class PairRecord:
    id: str
    corrupted: str
    clean: str


@dataclass(frozen=True)
class AuditEntry:
    id: str
    before: str
    after: str
    cer: float


def id_sort_key(sid: str):
    """Natural order: ``2`` sorts before ``10``."""
    return [(0, int(p), "") if p.isdigit() else (1, 0, p) for p in re.split(r"(\d+)", sid) if p]


def _read_jsonl(path, fields, required):
    rows = []
    with open(path, encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRow(lineno, str(exc)) from None
            if not isinstance(obj, dict):
                raise MalformedRow(lineno, "expected an object")
            unknown = set(obj) - set(fields)
            if unknown:
                raise MalformedRow(lineno, f"unknown fields {sorted(unknown)}")
            for key in required:
                if not isinstance(obj.get(key), str):
                    raise MalformedRow(lineno, f"field {key!r} must be a string")
            rows.append((lineno, obj))
    return rows


def _check_unique(rows):
    first = {}
    for lineno, rec in rows:
        if rec.id in first:
            raise DuplicateId(f"duplicate id {rec.id!r} on lines {first[rec.id]} and {lineno}")
        first[rec.id] = lineno


def load_manifest(path) -> list[ManifestRecord]:
    rows = []
    for lineno, obj in _read_jsonl(path, MANIFEST_FIELDS, ("id", "text")):
        split = obj.get("split", "train")
        if split not in SPLITS:
            raise MalformedRow(lineno, f"split must be one of {SPLITS}")
        audio = obj.get("audio_path")
        if audio is not None and not isinstance(audio, str):
            raise MalformedRow(lineno, "audio_path must be a string or null")
        rows.append((lineno, ManifestRecord(obj["id"], obj["text"], audio, split)))
    _check_unique(rows)
    return sorted((r for _, r in rows), key=lambda r: id_sort_key(r.id))


def _dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(", ", ": "))


def save_manifest(records: Iterable[ManifestRecord], path) -> None:
    records = sorted(records, key=lambda r: id_sort_key(r.id))
    _check_unique(list(enumerate(records, 1)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(_dump({"id": r.id, "text": r.text, "audio_path": r.audio_path, "split": r.split}) + "\n")


def load_corrections(path) -> list[CorrectionRecord]:
    rows = []
    for lineno, obj in _read_jsonl(path, CORRECTION_FIELDS, ("id", "corrected_text")):
        rows.append((lineno, CorrectionRecord(obj["id"], obj["corrected_text"], obj.get("note"))))
    _check_unique(rows)
    return [r for _, r in rows]


def save_corrections(records: Iterable[CorrectionRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(_dump({"id": r.id, "corrected_text": r.corrected_text, "note": r.note}) + "\n")


def import_corrections(path, fmt: str = "jsonl", id_column: int = 0, text_column: int = 1) -> list[CorrectionRecord]:
    """Read corrections from an external layout.

    ``fmt`` is ``jsonl`` (native) or ``tsv``; for TSV the id and text
    columns are configurable.
    """
    if fmt == "jsonl":
        return load_corrections(path)
    if fmt != "tsv":
        raise ValueError(f"unsupported corrections format {fmt!r}")
    out, rows = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE), 1):
            if not row or not any(row):
                continue
            if len(row) <= max(id_column, text_column):
                raise MalformedRow(lineno, "too few columns")
            rec = CorrectionRecord(row[id_column], row[text_column])
            rows.append((lineno, rec))
            out.append(rec)
    _check_unique(rows)
    return out


def apply_corrections(
    manifest: Sequence[ManifestRecord], corrections: Iterable[CorrectionRecord]
) -> tuple[list[ManifestRecord], list[AuditEntry]]:
    """Replace texts by their corrected versions and report what changed.

    The audit CER treats the original text as the reference.
    """
    from .metrics import cer

    by_id = {r.id: i for i, r in enumerate(manifest)}
    out = list(manifest)
    audit = []
    for c in corrections:
        if c.id not in by_id:
            raise UnknownId(f"correction for unknown id {c.id!r}")
        i = by_id[c.id]
        before = out[i].text
        out[i] = ManifestRecord(c.id, c.corrected_text, out[i].audio_path, out[i].split)
        audit.append(AuditEntry(c.id, before, c.corrected_text, cer(before, c.corrected_text)))
    return out, audit


def save_audit(audit: Iterable[AuditEntry], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\tbefore\tafter\tcer\n")
        for a in audit:
            fh.write(f"{a.id}\t{a.before}\t{a.after}\t{a.cer:.6f}\n")


# -- TSV files -----------------------------------------------------------------


def _read_tsv(path, ncols):
    rows = []
    with open(path, encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != ncols:
                raise MalformedRow(lineno, f"expected {ncols} tab-separated columns, got {len(parts)}")
            rows.append((lineno, parts))
    return rows


def read_pairs(path) -> list[PairRecord]:
    rows = [(n, PairRecord(*p)) for n, p in _read_tsv(path, 3)]
    _check_unique(rows)
    return [r for _, r in rows]


def write_pairs(records: Iterable[PairRecord], path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(f"{r.id}\t{r.corrupted}\t{r.clean}\n")
            n += 1
    return n


def read_hyps(path) -> list[tuple[str, str]]:
    rows = list(_read_tsv_loose(path))
    seen = {}
    for lineno, (sid, _) in rows:
        if sid in seen:
            raise DuplicateId(f"duplicate id {sid!r} on lines {seen[sid]} and {lineno}")
        seen[sid] = lineno
    return [(sid, text) for _, (sid, text) in rows]


def _read_tsv_loose(path):
    # hypotheses may legitimately be empty, so "id<TAB>" and bare "id" are accepted
    with open(path, encoding="utf-8", errors="strict") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) == 1:
                parts.append("")
            if len(parts) != 2:
                raise MalformedRow(lineno, f"expected 2 tab-separated columns, got {len(parts)}")
            yield lineno, parts


def write_hyps(records: Iterable[tuple[str, str]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid, text in records:
            fh.write(f"{sid}\t{text}\n")


# -- splitting -----------------------------------------------------------------


def split_sizes(n: int, ratios: Sequence[float]) -> tuple[int, int, int]:
    """Floor every share but the last; the last takes the remainder.

    ``split_sizes(90927, (0.98, 0.01, 0.01)) == (89108, 909, 910)``.
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise BadRatios(f"ratios must be three non-negative numbers summing to 1, got {tuple(ratios)}")
    a = math.floor(ratios[0] * n + 1e-9)
    b = math.floor(ratios[1] * n + 1e-9)
    return a, b, n - a - b


def split_pairs(records: Sequence[PairRecord], ratios: Sequence[float], seed: int):
    """Seeded disjoint train/dev/test partition.

    Ids are shuffled with a PCG64 stream seeded by *seed*; each part keeps
    the input order of its records.
    """
    sizes = split_sizes(len(records), ratios)
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(records))
    parts = []
    start = 0
    for size in sizes:
        chosen = sorted(perm[start : start + size].tolist())
        parts.append([records[i] for i in chosen])
        start += size
    return tuple(parts)


def write_split(parts, out_dir, stem="pairs") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, part in zip(("train", "dev", "test"), parts):
        p = out_dir / f"{stem}.{name}.tsv"
        write_pairs(part, p)
        paths.append(p)
    return paths


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8", errors="strict") as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh]
