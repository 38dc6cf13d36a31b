"""De-identification of free-text medical records: a regex layer for
fixed-pattern identifiers plus a linear-chain CRF tagger, with placeholder
replacement, an evaluation harness, a CLI and an HTTP service."""

__version__ = "0.1.0"

from .corpus import AnnotatedRecord, bio_to_spans, load_corpus, parse_record, split_corpus, to_bio
from .crf import CRFTagger, CrfModel
from .evaluation import EvalMode, emit_report, entity_f1, run_benchmark
from .labels import NormalizedLabel, PhiSpan, Source
from .regex_phi import PatternTable, default_pattern_table, recognize
from .scrub import (PhiScrubber, ScrubConfig, ScrubPipeline, apply_replacements, merge_spans,
                    scrub_document, scrub_stream)
from .synthetic import GeneratorConfig, generate_synthetic
from .tokenization import analyze, split_sentences, tokenize, word_shape

__all__ = [
    "AnnotatedRecord", "CRFTagger", "CrfModel", "EvalMode", "GeneratorConfig", "NormalizedLabel",
    "PatternTable", "PhiScrubber", "PhiSpan", "ScrubConfig", "ScrubPipeline", "Source", "analyze",
    "apply_replacements", "bio_to_spans", "default_pattern_table", "emit_report", "entity_f1",
    "generate_synthetic", "load_corpus", "merge_spans", "parse_record", "recognize",
    "run_benchmark", "scrub_document", "scrub_stream", "split_corpus", "split_sentences", "to_bio",
    "tokenize", "word_shape",
]
