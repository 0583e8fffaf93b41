"""Run configuration and the three-condition evaluation report."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, fields
from typing import Sequence

from .corpus_io import CorrectionRecord, ManifestRecord, apply_corrections
from .corrector import CorrectionConfig, Lexicon, NGramModel, correct_pipeline
from .corruptor import CorruptionConfig
from .errors import ConfigError
from .metrics import CorpusScore, score_corpus
from .normalizer import NormalizationConfig, default_table, load_table

CONFIG_ENV = "GEEZPOST_CONFIG"

PATH_KEYS = ("manifest", "hyp", "model", "corrections", "report", "homophones")
SCHEMES = ("auto", "ascii", "unicode")


def _strict(cls, data, section):
    if not isinstance(data, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**data)


@dataclass(frozen=True)
class NormalizationSection:
    strip_nonscript: bool = True
    collapse_whitespace: bool = True
    strict: bool = False


@dataclass(frozen=True)
class MetricsSection:
    normalize_before_scoring: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    paths: dict = field(default_factory=dict)
    scheme: str = "auto"
    jobs: int = 1
    normalization: NormalizationSection = NormalizationSection()
    corruption: CorruptionConfig = CorruptionConfig()
    corrector: CorrectionConfig = CorrectionConfig()
    metrics: MetricsSection = MetricsSection()

    def __post_init__(self):
        unknown = set(self.paths) - set(PATH_KEYS)
        if unknown:
            raise ConfigError(f"unknown keys in 'paths': {sorted(unknown)}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(data)
        sections = {
            "normalization": NormalizationSection,
            "corruption": CorruptionConfig,
            "corrector": CorrectionConfig,
            "metrics": MetricsSection,
        }
        for name, sub in sections.items():
            if name in kw:
                kw[name] = _strict(sub, kw[name], name)
        if "paths" in kw and not isinstance(kw["paths"], dict):
            raise ConfigError("'paths' must be an object")
        return cls(**kw)

    @classmethod
    def load(cls, path=None) -> "PipelineConfig":
        """Read *path*, or the file named by ``$GEEZPOST_CONFIG``, or use defaults."""
        path = path or os.environ.get(CONFIG_ENV)
        if not path:
            return cls()
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "paths": dict(sorted(self.paths.items())),
            "scheme": self.scheme,
            "jobs": self.jobs,
            "normalization": _asdict(self.normalization),
            "corruption": self.corruption.to_dict(),
            "corrector": self.corrector.to_dict(),
            "metrics": _asdict(self.metrics),
        }

    def override(self, **changes) -> "PipelineConfig":
        """Apply dotted overrides such as ``corrector.edit_budget=2``."""
        data = self.to_dict()
        for dotted, value in changes.items():
            if value is None:
                continue
            *parents, leaf = dotted.split(".")
            node = data
            for p in parents:
                node = node[p]
            node[leaf] = value
        return PipelineConfig.from_dict(data)

    @property
    def config_hash(self) -> str:
        # jobs affects speed only, never results
        data = self.to_dict()
        data.pop("jobs")
        blob = json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def normalization_config(self) -> NormalizationConfig:
        hp = self.paths.get("homophones")
        table = load_table(hp) if hp else default_table()
        n = self.normalization
        return NormalizationConfig(table, n.strip_nonscript, n.collapse_whitespace, n.strict)


def _asdict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


BLOCKS = (
    ("raw_vs_original", "raw hypotheses vs original references"),
    ("raw_vs_corrected", "raw hypotheses vs corrected references"),
    ("corrected_vs_corrected", "corrected hypotheses vs corrected references"),
)


@dataclass
class EvalReport:
    blocks: dict[str, CorpusScore]
    config: PipelineConfig
    failed_lines: int = 0

    def to_dict(self) -> dict:
        out = {
            "config_hash": self.config.config_hash,
            "config": self.config.to_dict(),
            "failed_lines": self.failed_lines,
            "blocks": {},
        }
        out["config"].pop("jobs")
        for key, title in BLOCKS:
            score = self.blocks[key]
            d = score.to_dict()
            out["blocks"][key] = {"title": title, "totals": d["totals"], "rates": d["rates"]}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"config {self.config.config_hash}", f"{'condition':<46} {'CER':>8} {'WER':>8} {'N':>6}"]
        for key, title in BLOCKS:
            s = self.blocks[key]
            lines.append(f"{title:<46} {s.micro_cer * 100:7.2f}% {s.micro_wer * 100:7.2f}% {len(s.per_sentence):>6}")
        if self.failed_lines:
            lines.append(f"{self.failed_lines} hypothesis line(s) left uncorrected")
        return "\n".join(lines) + "\n"


def run_eval_pipeline(
    references: Sequence[ManifestRecord],
    hyps: Sequence[tuple[str, str]],
    model: tuple[Lexicon, NGramModel] | None,
    cfg: PipelineConfig,
    corrections: Sequence[CorrectionRecord] = (),
    external=None,
) -> EvalReport:
    """Score raw and corrected hypotheses against original and corrected references.

    The corrected references are *references* with *corrections* applied;
    with no corrections both reference sets coincide.
    """
    fixed_refs, _ = apply_corrections(references, corrections)
    original = [(r.id, r.text) for r in references]
    rectified = [(r.id, r.text) for r in fixed_refs]
    norm = cfg.normalization_config()
    score_norm = norm if cfg.metrics.normalize_before_scoring else None
    stats: dict = {}
    lex, lm = model if model is not None else (None, None)
    corrected = correct_pipeline(
        hyps, lex, lm, cfg.corrector, norm, external=external, jobs=cfg.jobs, stats=stats
    )
    blocks = {
        "raw_vs_original": score_corpus(original, hyps, score_norm, cfg.jobs),
        "raw_vs_corrected": score_corpus(rectified, hyps, score_norm, cfg.jobs),
        "corrected_vs_corrected": score_corpus(rectified, corrected, score_norm, cfg.jobs),
    }
    return EvalReport(blocks, cfg, stats["failed"])
