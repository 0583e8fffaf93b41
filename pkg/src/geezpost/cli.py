"""Command-line entry point: ``geezpost <subcommand> ...``.

Exit codes
----------
0  success
1  other library error
2  bad command-line usage
3  script error (unknown grapheme, ambiguous transliteration, ...)
4  data error (malformed rows, id mismatch, bad config, ...)
5  audio error
6  file system error
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from . import __version__
from .codec import SCHEMES, convert, detect_scheme
from .errors import GeezError, MalformedRow

log = logging.getLogger("geezpost")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 6


# -- helpers -------------------------------------------------------------------


@contextmanager
def _reader(path):
    if path in (None, "-"):
        yield sys.stdin
    else:
        with open(path, encoding="utf-8", errors="strict") as fh:
            yield fh


@contextmanager
def _writer(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _lines(path) -> list[str]:
    with _reader(path) as fh:
        return [line.rstrip("\n").rstrip("\r") for line in fh]


def _config(args):
    from .pipeline import PipelineConfig

    cfg = PipelineConfig.load(args.config)
    if getattr(args, "jobs", None):
        cfg = cfg.override(jobs=args.jobs)
    return cfg


def _read_records(path) -> list[tuple[str, str]]:
    """(id, text) pairs from a JSONL manifest or an ``id<TAB>text`` file."""
    from .corpus_io import load_manifest, read_hyps

    if str(path).endswith(".jsonl"):
        return [(r.id, r.text) for r in load_manifest(path)]
    return read_hyps(path)


def _corrector_cfg(cfg, args):
    return cfg.override(
        **{
            "corrector.edit_budget": getattr(args, "edit_budget", None),
            "corrector.trust_input_spaces": getattr(args, "spaces", None),
            "corrector.beam_width": getattr(args, "beam", None),
        }
    )


# -- subcommands ---------------------------------------------------------------


def cmd_translit(args):
    with _writer(args.out) as out:
        for lineno, line in enumerate(_lines(args.input), 1):
            src = args.src if args.src != "auto" else detect_scheme(line)
            try:
                out.write(convert(line, src, args.dst) + "\n")
            except GeezError as exc:
                exc.args = (f"line {lineno}: {exc}",)
                raise
    return EXIT_OK


def cmd_normalize(args):
    from .normalizer import NormalizationConfig, default_table, load_table, normalize

    table = load_table(args.table) if args.table else default_table()
    ncfg = NormalizationConfig(table, strip_nonscript=not args.keep_symbols, strict=args.strict)
    with _writer(args.out) as out:
        for line in _lines(args.input):
            out.write(normalize(line, ncfg) + "\n")
    return EXIT_OK


def cmd_corrupt(args):
    from .corpus_io import write_pairs
    from .corruptor import generate_pairs

    cfg = _config(args)
    corruption = cfg.corruption
    if args.seed is not None:
        corruption = cfg.override(**{"corruption.seed": args.seed}).corruption
    stats: dict = {}
    lines = _lines(args.input)
    table = cfg.normalization_config().table
    pairs = generate_pairs(lines, corruption, table, jobs=cfg.jobs, stats=stats)
    if args.out in (None, "-"):
        for p in pairs:
            sys.stdout.write(f"{p.id}\t{p.corrupted}\t{p.clean}\n")
    else:
        write_pairs(pairs, args.out)
    print(f"pairs written: {stats['written']}, skipped: {stats['skipped']}", file=sys.stderr)
    return EXIT_OK


def cmd_vocab(args):
    from . import tokenizer as tk

    if args.vocab_cmd == "build-char":
        vocab = tk.build_char_vocab(_lines(args.corpus))
        tk.save_vocab(vocab, args.out)
        print(f"vocabulary size: {len(vocab)}", file=sys.stderr)
    elif args.vocab_cmd == "train-subword":
        vocab = tk.train_subword(_lines(args.corpus), args.size)
        tk.save_vocab(vocab, args.out)
        tk.save_merges(vocab, args.merges)
        print(f"vocabulary size: {len(vocab)}, merges: {len(vocab.merges)}", file=sys.stderr)
    elif args.vocab_cmd == "encode":
        vocab = tk.load_vocab(args.vocab, args.merges)
        with _writer(args.out) as out:
            for line in _lines(args.input):
                out.write(" ".join(map(str, tk.encode(line, vocab))) + "\n")
    else:
        vocab = tk.load_vocab(args.vocab, args.merges)
        with _writer(args.out) as out:
            for lineno, line in enumerate(_lines(args.input), 1):
                try:
                    ids = [int(t) for t in line.split()]
                except ValueError:
                    raise MalformedRow(lineno, "ids must be integers") from None
                if any(not 0 <= i < len(vocab) for i in ids):
                    raise MalformedRow(lineno, "id outside the vocabulary")
                out.write(tk.decode(ids, vocab, args.scheme) + "\n")
    return EXIT_OK


def cmd_train_lm(args):
    from .corrector import save_model, train_lm

    lex, lm = train_lm(_lines(args.corpus), args.order, args.smoothing_k, args.oov_logprob)
    save_model(lex, lm, args.out)
    print(f"lexicon: {len(lex)} words, tokens: {lm.total}", file=sys.stderr)
    return EXIT_OK


def cmd_segment(args):
    from .corrector import Segmenter, load_model

    cfg = _corrector_cfg(_config(args), args)
    seg = Segmenter(*load_model(args.model), cfg.corrector)
    with _writer(args.out) as out:
        for line in _lines(args.input):
            out.write(seg.segment(line).text + "\n")
    return EXIT_OK


def cmd_correct(args):
    from .corpus_io import read_hyps, write_hyps
    from .corrector import ExternalCorrector, correct_pipeline, load_model

    cfg = _corrector_cfg(_config(args), args)
    if args.disable:
        cfg = cfg.override(**{"corrector.enabled": False})
    external = ExternalCorrector(args.external) if args.external else None
    model = load_model(args.model) if args.model else (None, None)
    stats: dict = {}
    fixed = correct_pipeline(
        read_hyps(args.hyp), *model, cfg.corrector, cfg.normalization_config(),
        external=external, jobs=cfg.jobs, stats=stats,
    )
    if args.out in (None, "-"):
        for sid, text in fixed:
            sys.stdout.write(f"{sid}\t{text}\n")
    else:
        write_hyps(fixed, args.out)
    if stats["failed"]:
        print(f"{stats['failed']} line(s) left unchanged", file=sys.stderr)
    return EXIT_OK


def cmd_score(args):
    from .metrics import format_table, score_corpus

    cfg = _config(args)
    norm = cfg.normalization_config() if args.normalize_before_scoring else None
    score = score_corpus(_read_records(args.ref), _read_records(args.hyp), norm, cfg.jobs)
    print(format_table(score))
    if args.report:
        report = score.to_dict()
        report["config_hash"] = cfg.config_hash
        Path(args.report).write_text(json.dumps(report, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return EXIT_OK


def cmd_augment(args):
    from .audio import AugmentConfig, augment_manifest
    from .corpus_io import load_manifest, save_manifest

    acfg = AugmentConfig(
        multiplier=args.multiplier,
        mode=args.mode,
        snr_db=args.snr_db,
        max_backgrounds=args.max_backgrounds,
        background_gain=args.gain,
        seed=args.seed,
    )
    manifest = load_manifest(args.manifest)
    res = augment_manifest(manifest, acfg, args.out_dir, Path(args.manifest).parent, dry_run=args.dry_run)
    out = args.out_manifest or str(Path(args.out_dir) / "manifest.jsonl")
    if not args.dry_run or args.out_manifest:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        save_manifest(res.manifest, out)
    print(
        f"rows: {len(manifest)} original + {res.added} augmented = {len(res.manifest)}; "
        f"errors: {len(res.errors)}; text-only rows skipped: {res.skipped_text_only}",
        file=sys.stderr,
    )
    for sid, msg in res.errors:
        print(f"  {sid}: {msg}", file=sys.stderr)
    return 5 if res.errors else EXIT_OK


def cmd_dataset(args):
    from . import corpus_io as cio

    if args.dataset_cmd == "apply-corrections":
        manifest = cio.load_manifest(args.manifest)
        corrections = cio.import_corrections(args.corrections, args.format, args.id_column, args.text_column)
        fixed, audit = cio.apply_corrections(manifest, corrections)
        cio.save_manifest(fixed, args.out)
        if args.audit:
            cio.save_audit(audit, args.audit)
        print(f"corrected rows: {len(audit)}", file=sys.stderr)
    else:
        pairs = cio.read_pairs(args.pairs)
        parts = cio.split_pairs(pairs, args.ratios, args.seed)
        for path, part in zip(cio.write_split(parts, args.out_dir, args.stem), parts):
            print(f"{path}: {len(part)}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args):
    from .corpus_io import import_corrections, load_manifest, read_hyps
    from .corrector import ExternalCorrector, load_model
    from .pipeline import run_eval_pipeline

    cfg = _corrector_cfg(_config(args), args)
    paths = dict(cfg.paths)
    for key in ("manifest", "hyp", "model", "corrections", "report"):
        if getattr(args, key, None):
            paths[key] = getattr(args, key)
    cfg = cfg.override(paths=paths)
    for key in ("manifest", "hyp"):
        if key not in paths:
            raise GeezError(f"eval needs a {key} path (flag or config)")
    if "model" not in paths and not args.external:
        raise GeezError("eval needs --model or --external")
    refs = load_manifest(paths["manifest"])
    corrections = import_corrections(paths["corrections"]) if paths.get("corrections") else ()
    model = load_model(paths["model"]) if paths.get("model") else None
    external = ExternalCorrector(args.external) if args.external else None
    report = run_eval_pipeline(refs, read_hyps(paths["hyp"]), model, cfg, corrections, external)
    sys.stdout.write(report.to_text())
    if paths.get("report"):
        Path(paths["report"]).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geezpost", description="Ethiopic ASR post-processing toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config JSON (default: $GEEZPOST_CONFIG)")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")
    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("--in", dest="input", default="-", help="input file (default stdin)")
    io.add_argument("--out", default="-", help="output file (default stdout)")
    search = argparse.ArgumentParser(add_help=False)
    search.add_argument("--edit-budget", type=int)
    search.add_argument("--spaces", choices=("ignore", "soft", "hard"))
    search.add_argument("--beam", type=int)
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("translit", parents=[common, io], help="convert between unicode, ascii and phonemes")
    s.add_argument("--from", dest="src", choices=("auto",) + SCHEMES, default="auto")
    s.add_argument("--to", dest="dst", choices=SCHEMES, required=True)
    s.set_defaults(func=cmd_translit)

    s = sub.add_parser("normalize", parents=[common, io], help="merge homophones and clean text")
    s.add_argument("--table", help="homophone table file")
    s.add_argument("--keep-symbols", action="store_true", help="leave non-script words untouched")
    s.add_argument("--strict", action="store_true", help="fail on unparsable words (with --keep-symbols)")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("corrupt", parents=[common, io], help="make (corrupted, clean) pairs")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("vocab", help="character and subword vocabularies")
    vsub = s.add_subparsers(dest="vocab_cmd", required=True)
    v = vsub.add_parser("build-char", parents=[common])
    v.add_argument("--corpus", required=True)
    v.add_argument("--out", required=True)
    v = vsub.add_parser("train-subword", parents=[common])
    v.add_argument("--corpus", required=True)
    v.add_argument("--size", type=int, required=True)
    v.add_argument("--out", required=True)
    v.add_argument("--merges", required=True)
    for name in ("encode", "decode"):
        v = vsub.add_parser(name, parents=[common, io])
        v.add_argument("--vocab", required=True)
        v.add_argument("--merges")
        if name == "decode":
            v.add_argument("--scheme", choices=SCHEMES, default="ascii")
    s.set_defaults(func=cmd_vocab)

    s = sub.add_parser("train-lm", parents=[common], help="train lexicon + n-gram model")
    s.add_argument("--corpus", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--order", type=int, choices=(1, 2), default=2)
    s.add_argument("--smoothing-k", type=float, default=0.1)
    s.add_argument("--oov-logprob", type=float, default=-6.0, help="log-probability per OOV syllable")
    s.set_defaults(func=cmd_train_lm)

    s = sub.add_parser("segment", parents=[common, io, search], help="resegment lines")
    s.add_argument("--model", required=True)
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("correct", parents=[common, search], help="correct a hypothesis file")
    s.add_argument("--hyp", required=True)
    s.add_argument("--model")
    s.add_argument("--out", default="-")
    s.add_argument("--external", help="external corrector command (line in, line out)")
    s.add_argument("--disable", action="store_true", help="pass hypotheses through unchanged")
    s.set_defaults(func=cmd_correct)

    s = sub.add_parser("score", parents=[common], help="CER/WER of hypotheses against references")
    s.add_argument("--ref", required=True)
    s.add_argument("--hyp", required=True)
    s.add_argument("--report", help="write a JSON report")
    s.add_argument("--normalize-before-scoring", action="store_true")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("augment", parents=[common], help="noise and background augmentation")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--out-manifest")
    s.add_argument("--snr-db", type=float, help="fixed SNR (default: uniform 5-20 dB)")
    s.add_argument("--max-backgrounds", type=int, default=3)
    s.add_argument("--gain", type=float, default=0.3, help="background gain")
    s.add_argument("--multiplier", type=float, default=1.0)
    s.add_argument("--mode", choices=("exact", "probabilistic"), default="exact")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dry-run", action="store_true", help="plan rows without touching audio")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("dataset", help="corrected test sets and splits")
    dsub = s.add_subparsers(dest="dataset_cmd", required=True)
    d = dsub.add_parser("apply-corrections", parents=[common])
    d.add_argument("--manifest", required=True)
    d.add_argument("--corrections", required=True)
    d.add_argument("--format", choices=("jsonl", "tsv"), default="jsonl")
    d.add_argument("--id-column", type=int, default=0)
    d.add_argument("--text-column", type=int, default=1)
    d.add_argument("--out", required=True)
    d.add_argument("--audit")
    d = dsub.add_parser("split", parents=[common])
    d.add_argument("--pairs", required=True)
    d.add_argument("--ratios", type=float, nargs=3, default=(0.98, 0.01, 0.01))
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out-dir", required=True)
    d.add_argument("--stem", default="pairs")
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("eval", parents=[common, search], help="three-condition evaluation report")
    s.add_argument("--manifest", help="reference manifest (JSONL)")
    s.add_argument("--hyp")
    s.add_argument("--model")
    s.add_argument("--corrections")
    s.add_argument("--report")
    s.add_argument("--external")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except GeezError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except UnicodeDecodeError as exc:
        print(f"error: input is not valid UTF-8: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
