"""Command-line interface.

Subcommands: gen, train, scrub, eval, bench, serve. Exit codes: 0 ok,
2 configuration or input error, 3 training failure, 4 model load failure,
5 threshold violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .corpus import load_corpus, split_corpus, write_manifest, write_record
from .crf import TrainConfig
from .exceptions import (AnnotationError, DivergedOptimization, EmptyCorpus, EmptyDataset,
                         EmptyInput, InvalidConfig, InvalidUtf8, ModelNotLoaded, NonFiniteValue)
from .manifest import PipelineManifest
from .synthetic import GeneratorConfig, generate_synthetic

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAIN = 3
EXIT_MODEL = 4
EXIT_THRESHOLD = 5

log = logging.getLogger("phiscrub")


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _pipeline_manifest(args) -> PipelineManifest:
    base = PipelineManifest.read(args.manifest) if args.manifest else PipelineManifest()
    return base.with_overrides(model=getattr(args, "model", None),
                               chunk_char_limit=getattr(args, "chunk_chars", None))


def _load_pipeline(args):
    try:
        return _pipeline_manifest(args).load()
    except ModelNotLoaded as exc:
        raise CliError(str(exc), EXIT_MODEL) from None


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = GeneratorConfig.from_file(args.config) if args.config else GeneratorConfig()
    if args.count is not None:
        cfg.count = args.count
    cfg.validate()
    seed = args.seed if args.seed is not None else cfg.seed
    records = generate_synthetic(cfg, seed=seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for rec in records:
            p = out / f"{rec.id}.xml"
            write_record(rec, p)
            paths.append(p)
        write_manifest(paths, out / "manifest.txt")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            split = split_corpus(records, 0.9, seed=seed) if records else None
        train_ids = {r.id for r in split.train} if split else set()
        test_ids = {r.id for r in split.test} if split else set()
        write_manifest([p for p, r in zip(paths, records) if r.id in train_ids], out / "train.txt")
        write_manifest([p for p, r in zip(paths, records) if r.id in test_ids], out / "test.txt")
    except OSError as exc:
        raise CliError(f"cannot write corpus to {out}: {exc}") from None
    for w in caught:
        log.warning("%s", w.message)
    _say(args, f"wrote {len(records)} records to {out} "
               f"(train {len(train_ids)}, test {len(test_ids)})")
    return EXIT_OK


def cmd_train(args) -> int:
    from .scrub import PhiScrubber

    cfg = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    over = {k: v for k, v in (("c1", args.c1), ("c2", args.c2),
                               ("max_iterations", args.max_iterations)) if v is not None}
    if over:
        cfg = TrainConfig(**{**cfg.__dict__, **over})
    templates = "paper-strict" if args.paper_strict else args.templates
    try:
        records = load_corpus(args.corpus)
    except EmptyCorpus as exc:
        raise CliError(str(exc)) from None
    if not records:
        raise CliError(f"corpus {args.corpus} is empty")
    _say(args, f"training on {len(records)} records: c1={cfg.c1} c2={cfg.c2} "
               f"max_iterations={cfg.max_iterations} templates={templates}")

    est = PhiScrubber(c1=cfg.c1, c2=cfg.c2, max_iterations=cfg.max_iterations,
                      templates=templates, min_feature_count=cfg.min_feature_count)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est.fit(records)
    except (DivergedOptimization, NonFiniteValue) as exc:
        raise CliError(f"training failed: {exc}", EXIT_TRAIN) from None
    except EmptyDataset as exc:
        raise CliError(str(exc)) from None
    try:
        est.model_.save(args.model_out)
    except OSError as exc:
        raise CliError(f"cannot write model {args.model_out}: {exc}") from None
    if args.write_manifest:
        PipelineManifest(model=str(Path(args.model_out).resolve())).write(args.write_manifest)
    _say(args, f"saved model to {args.model_out} ({est.tagger_.n_iter_} iterations, "
               f"{est.tagger_.stop_reason_}, {est.model_.n_features} features)")
    return EXIT_OK


def cmd_scrub(args) -> int:
    pipeline = _load_pipeline(args)
    audit = [] if args.audit else None
    src = sys.stdin.buffer if args.input == "-" else _open(args.input, "rb")
    dst = sys.stdout.buffer if args.output == "-" else _open(args.output, "wb")
    try:
        stats = pipeline.scrub_stream(src, dst, audit)
    except InvalidUtf8 as exc:
        raise CliError(f"input is not valid UTF-8 at byte {exc.position}") from None
    finally:
        if src is not sys.stdin.buffer:
            src.close()
        if dst is not sys.stdout.buffer:
            dst.close()
        else:
            dst.flush()
    if audit is not None:
        doc = {"replacements": [r.as_dict() for r in audit], "stats": stats.to_dict()}
        try:
            Path(args.audit).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write audit file: {exc}") from None
    if not args.quiet:
        print(f"scrubbed {stats.bytes_in} bytes, {stats.n_replacements} replacements "
              f"in {stats.wall_ms:.0f} ms", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    from .evaluation import EvalMode, emit_report, evaluate_records

    pipeline = _load_pipeline(args)
    try:
        records = load_corpus(args.corpus)
    except EmptyCorpus as exc:
        raise CliError(str(exc)) from None
    report = evaluate_records(pipeline, records, EvalMode(args.mode), approach=args.approach)
    _emit(args, emit_report([report], [], args.format))
    if not args.quiet:
        print(report.summary(), file=sys.stderr)
    if args.min_f1 is not None and report.micro_f1 < args.min_f1:
        print(f"threshold violated: micro F1 {report.micro_f1:.4f} < {args.min_f1}",
              file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_bench(args) -> int:
    from .evaluation import collate_benchmark_file, emit_report, run_benchmark

    pipeline = _load_pipeline(args)
    if args.file:
        path = Path(args.file)
        if not path.is_file():
            raise CliError(f"benchmark file not found: {path}")
    elif args.corpus:
        records = load_corpus(args.corpus)
        path = collate_benchmark_file(records, args.bytes, args.collate_out)
    else:
        raise CliError("bench needs --file or --corpus")
    reports = run_benchmark(pipeline, path, args.repetitions, approach=args.approach)
    _emit(args, emit_report([], reports, args.format))
    failed = [r for r in reports if not r.ok]
    if failed:
        print(f"benchmark failed: {failed[0].reason}", file=sys.stderr)
        return EXIT_THRESHOLD
    if args.max_wall_ms is not None and max(r.wall_ms for r in reports) > args.max_wall_ms:
        print(f"threshold violated: wall time {max(r.wall_ms for r in reports)} ms "
              f"> {args.max_wall_ms} ms", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import ScrubServer

    pipeline = _load_pipeline(args)
    try:
        srv = ScrubServer((args.host, args.port), pipeline, args.max_body_bytes)
    except OSError as exc:
        raise CliError(f"cannot bind {args.host}:{args.port}: {exc}") from None
    _say(args, f"serving on {srv.url} (POST /scrub, GET /health)")
    try:
        srv.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        srv.server_close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _say(args, msg: str):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _open(path, mode):
    try:
        return open(path, mode)
    except OSError as exc:
        raise CliError(f"cannot open {path}: {exc}") from None


def _emit(args, text: str):
    if args.output and args.output != "-":
        try:
            Path(args.output).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}") from None
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", default=argparse.SUPPRESS,
                        help="pipeline manifest (JSON)")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="phiscrub", parents=[common],
                                description="PHI de-identification for clinical text")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a synthetic annotated corpus")
    g.add_argument("--config", help="generator config (key = value lines)")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--count", type=int)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", parents=[common], help="train the CRF tagger")
    t.add_argument("--corpus", required=True, help="corpus manifest (one record path per line)")
    t.add_argument("--config", help="training config (key = value lines)")
    t.add_argument("--model-out", required=True)
    t.add_argument("--write-manifest", help="also write a pipeline manifest for the model")
    t.add_argument("--c1", type=float)
    t.add_argument("--c2", type=float)
    t.add_argument("--max-iterations", type=int)
    t.add_argument("--templates", choices=("extended", "paper-strict"), default="extended")
    t.add_argument("--paper-strict", action="store_true",
                   help="casing and POS features only")
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("scrub", parents=[common], help="scrub a file or stdin")
    s.add_argument("input", nargs="?", default="-")
    s.add_argument("output", nargs="?", default="-")
    s.add_argument("--model")
    s.add_argument("--chunk-chars", type=int)
    s.add_argument("--audit", help="write replacement records (JSON) to this file")
    s.set_defaults(func=cmd_scrub)

    e = sub.add_parser("eval", parents=[common], help="entity-level F1 on an annotated corpus")
    e.add_argument("--corpus", required=True)
    e.add_argument("--model")
    e.add_argument("--mode", choices=("EXACT", "OVERLAP"), default="EXACT")
    e.add_argument("--min-f1", type=float)
    e.add_argument("--format", choices=("csv", "text", "chart"), default="csv")
    e.add_argument("--approach", default="crf+regex")
    e.add_argument("--output", "-o")
    e.add_argument("--chunk-chars", type=int)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", parents=[common], help="time scrubbing of a large file")
    b.add_argument("--file")
    b.add_argument("--corpus", help="collate a benchmark file from this corpus manifest")
    b.add_argument("--bytes", type=int, default=2_000_000)
    b.add_argument("--collate-out")
    b.add_argument("--repetitions", type=int, default=1)
    b.add_argument("--max-wall-ms", type=int)
    b.add_argument("--model")
    b.add_argument("--format", choices=("csv", "text", "chart"), default="csv")
    b.add_argument("--approach", default="crf+regex")
    b.add_argument("--output", "-o")
    b.add_argument("--chunk-chars", type=int)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8080)
    v.add_argument("--model")
    v.add_argument("--max-body-bytes", type=int, default=16 * 1024 * 1024)
    v.add_argument("--chunk-chars", type=int)
    v.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("manifest", None), ("seed", None), ("quiet", False)):
        if not hasattr(args, name):
            setattr(args, name, default)
    if not hasattr(args, "output"):
        args.output = None
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command != "train":
        logging.getLogger("phiscrub.crf").setLevel(logging.WARNING)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"phiscrub {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except ModelNotLoaded as exc:
        print(f"phiscrub {args.command}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (InvalidConfig, AnnotationError, EmptyCorpus, EmptyInput, ValueError) as exc:
        print(f"phiscrub {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"phiscrub {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - last resort, keep the diagnostic short
        print(f"phiscrub {args.command}: internal error: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
