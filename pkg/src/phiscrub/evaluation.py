"""Entity-level scoring and the time-to-scrub benchmark harness."""

from __future__ import annotations

import csv
import io
import math
import os
import platform
import tempfile
import time
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .exceptions import EmptyInput, OverlappingInput
from .labels import PhiSpan


class EvalMode(str, Enum):
    EXACT = "EXACT"
    OVERLAP = "OVERLAP"


def _prf(tp: int, fp: int, fn: int):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class LabelScore:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[0]

    @property
    def recall(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[1]

    @property
    def f1(self) -> float:
        return _prf(self.tp, self.fp, self.fn)[2]

    def __add__(self, other: "LabelScore") -> "LabelScore":
        return LabelScore(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class EvalReport:
    per_label: dict
    mode: EvalMode = EvalMode.EXACT
    approach: str = "crf+regex"

    @property
    def totals(self) -> LabelScore:
        return sum(self.per_label.values(), LabelScore())

    @property
    def micro_precision(self) -> float:
        return self.totals.precision

    @property
    def micro_recall(self) -> float:
        return self.totals.recall

    @property
    def micro_f1(self) -> float:
        return self.totals.f1

    @property
    def macro_f1(self) -> float:
        if not self.per_label:
            return 0.0
        return sum(s.f1 for s in self.per_label.values()) / len(self.per_label)

    def __add__(self, other: "EvalReport") -> "EvalReport":
        if other.mode is not self.mode:
            raise ValueError("cannot combine reports with different modes")
        labels = set(self.per_label) | set(other.per_label)
        merged = {k: self.per_label.get(k, LabelScore()) + other.per_label.get(k, LabelScore())
                  for k in sorted(labels)}
        return EvalReport(merged, self.mode, self.approach)

    def summary(self) -> str:
        lines = [f"mode={self.mode.value} micro P={self.micro_precision:.4f} "
                 f"R={self.micro_recall:.4f} F1={self.micro_f1:.4f} macro F1={self.macro_f1:.4f}"]
        for lab, s in self.per_label.items():
            lines.append(f"  {lab:<10} tp={s.tp:<5} fp={s.fp:<5} fn={s.fn:<5} "
                         f"P={s.precision:.3f} R={s.recall:.3f} F1={s.f1:.3f}")
        return "\n".join(lines)


def _sorted_disjoint(spans, what: str) -> list:
    spans = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(spans, spans[1:]):
        if b.start < a.end:
            raise OverlappingInput(f"{what} spans ({a.start}, {a.end}) and ({b.start}, {b.end}) overlap")
    return spans


def entity_f1(gold: Iterable[PhiSpan], predicted: Iterable[PhiSpan],
              mode: EvalMode = EvalMode.EXACT, approach: str = "crf+regex") -> EvalReport:
    """Score predicted entities against gold ones.

    EXACT needs equal (start, end, label). OVERLAP needs an equal label and
    intersecting intervals; predictions are visited left to right and each
    takes the leftmost unmatched gold entity it can.
    """
    mode = EvalMode(mode)
    gold = _sorted_disjoint(gold, "gold")
    pred = _sorted_disjoint(predicted, "predicted")
    tp, fp, fn = Counter(), Counter(), Counter()
    matched = [False] * len(gold)
    if mode is EvalMode.EXACT:
        index = {(g.start, g.end, g.label): i for i, g in enumerate(gold)}
        for p in pred:
            i = index.get((p.start, p.end, p.label))
            if i is None:
                fp[p.label.value] += 1
            else:
                matched[i] = True
                tp[p.label.value] += 1
    else:
        lo = 0
        for p in pred:
            while lo < len(gold) and gold[lo].end <= p.start:
                lo += 1
            hit = None
            j = lo
            while j < len(gold) and gold[j].start < p.end:
                if not matched[j] and gold[j].label is p.label:
                    hit = j
                    break
                j += 1
            if hit is None:
                fp[p.label.value] += 1
            else:
                matched[hit] = True
                tp[p.label.value] += 1
    for g, m in zip(gold, matched):
        if not m:
            fn[g.label.value] += 1
    labels = sorted(set(tp) | set(fp) | set(fn))
    per = {lab: LabelScore(tp[lab], fp[lab], fn[lab]) for lab in labels}
    return EvalReport(per, mode, approach)


def evaluate_records(scrubber, records, mode: EvalMode = EvalMode.EXACT,
                     enabled=None, approach: str = "crf+regex") -> EvalReport:
    """Run ``scrubber.predict`` over records and pool the entity counts."""
    if enabled is None:
        enabled = scrubber.scrub_config().enabled_labels
    preds = scrubber.predict([r.text for r in records])
    report = EvalReport({}, EvalMode(mode), approach)
    for rec, pred in zip(records, preds):
        report = report + entity_f1(rec.phi_spans(enabled), pred, mode, approach)
    return report


# ---------------------------------------------------------------------------
# benchmark harness
# ---------------------------------------------------------------------------

SEPARATOR = "\n\n"


def collate_benchmark_file(test_records: Sequence, target_bytes: int, path=None) -> Path:
    """Concatenate record texts, cycling in order and separated by a blank
    line, until the file holds at least ``target_bytes`` UTF-8 bytes.

    At least one record is always written. ``test_records`` may hold
    annotated records or plain strings.
    """
    texts = [r if isinstance(r, str) else r.text for r in test_records]
    if not texts:
        raise EmptyInput("no records to collate")
    if target_bytes < 0:
        raise ValueError("target_bytes must be non-negative")
    if path is None:
        fd, path = tempfile.mkstemp(prefix=f"phiscrub-bench-{target_bytes}-", suffix=".txt")
        os.close(fd)
    path = Path(path)
    sep = SEPARATOR.encode("utf-8")
    encoded = [t.encode("utf-8") for t in texts]
    total = 0
    i = 0
    with path.open("wb") as fh:
        while i == 0 or total < target_bytes:
            if i:
                fh.write(sep)
                total += len(sep)
            chunk = encoded[i % len(encoded)]
            fh.write(chunk)
            total += len(chunk)
            i += 1
    return path


def host_metadata() -> dict:
    cpu = platform.processor() or ""
    try:
        with open("/proc/cpuinfo", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    return {"cpu": cpu or platform.machine(), "cores": os.cpu_count() or 1,
            "python": platform.python_version(), "system": platform.system()}


@dataclass
class BenchReport:
    file_bytes: int
    wall_ms: Optional[int]
    throughput_bytes_per_s: Optional[float]
    peak_spans: int
    outcome: str                    # "OK" or "FAILED"
    reason: str = ""
    approach: str = "crf+regex"
    started_at: float = 0.0
    repetition: int = 0
    flags: tuple = ()
    host: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.outcome == "OK"

    def outcome_text(self) -> str:
        return "OK" if self.ok else f"FAILED({self.reason})"


class _CountingSink:
    def __init__(self):
        self.n = 0

    def write(self, b):
        self.n += len(b)
        return len(b)


def run_benchmark(pipeline, file, repetitions: int = 1, approach: str = "crf+regex") -> list:
    """Time ``pipeline.scrub_stream`` over ``file`` once per repetition.

    Nothing raised by the pipeline escapes: failures become FAILED reports.
    If repetitions disagree on the outcome, every report is marked FAILED
    with reason "flaky".
    """
    host = host_metadata()
    reports = []
    for rep in range(max(1, int(repetitions))):
        started = time.time()
        t0 = time.perf_counter()
        try:
            size = os.path.getsize(file)
            with open(file, "rb") as src:
                stats = pipeline.scrub_stream(src, _CountingSink())
            elapsed = (time.perf_counter() - t0) * 1000
            wall = max(1, math.ceil(elapsed))
            flags = () if size else ("empty-input",)
            reports.append(BenchReport(size, wall, size / (wall / 1000), stats.peak_spans, "OK",
                                       approach=approach, started_at=started, repetition=rep,
                                       flags=flags, host=host))
        except BaseException as exc:  # noqa: BLE001 - the harness records every failure
            if isinstance(exc, KeyboardInterrupt):
                raise
            try:
                size = os.path.getsize(file)
            except OSError:
                size = 0
            reason = f"{type(exc).__name__}: {exc}".strip().rstrip(":")
            reports.append(BenchReport(size, None, None, 0, "FAILED", reason, approach,
                                       started, rep, host=host))
    if len({r.outcome for r in reports}) > 1:
        for r in reports:
            if r.ok:
                r.outcome, r.reason = "FAILED", "flaky: outcome changed across repetitions"
            r.flags = r.flags + ("flaky",)
    return reports


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

CSV_COLUMNS = ("approach", "f1_micro", "p", "r", "wall_ms", "bytes", "throughput",
               "outcome", "host", "reason")


def _host_str(h: dict) -> str:
    if not h:
        return ""
    return f"{h.get('cpu', '')} x{h.get('cores', '')}"


def _rows(eval_reports, bench_reports) -> list:
    evals = {e.approach: e for e in eval_reports}
    rows = []
    seen = set()
    for b in bench_reports:
        e = evals.get(b.approach)
        seen.add(b.approach)
        rows.append(_row(e, b))
    for name, e in evals.items():
        if name not in seen:
            rows.append(_row(e, None))
    return rows


def _row(e: Optional[EvalReport], b: Optional[BenchReport]) -> dict:
    row = dict.fromkeys(CSV_COLUMNS, "")
    row["approach"] = (b or e).approach
    if e is not None:
        row["f1_micro"] = f"{e.micro_f1:.4f}"
        row["p"] = f"{e.micro_precision:.4f}"
        row["r"] = f"{e.micro_recall:.4f}"
    if b is not None:
        row["bytes"] = str(b.file_bytes)
        row["host"] = _host_str(b.host)
        if b.ok:
            row["wall_ms"] = str(b.wall_ms)
            row["throughput"] = f"{b.throughput_bytes_per_s:.1f}"
            row["outcome"] = "OK"
            row["reason"] = ",".join(b.flags)
        else:
            row["wall_ms"] = "-"
            row["throughput"] = "-"
            row["outcome"] = "FAILED"
            row["reason"] = b.reason
    return row


def emit_report(eval_reports: Iterable[EvalReport] = (), bench_reports: Iterable[BenchReport] = (),
                format: str = "csv") -> str:
    """Render reports as ``csv``, a ``text`` comparison table, or ``chart``
    data (``series,approach,value`` rows for plotting)."""
    eval_reports, bench_reports = list(eval_reports), list(bench_reports)
    if not eval_reports and not bench_reports:
        raise EmptyInput("nothing to report")
    rows = _rows(eval_reports, bench_reports)
    buf = io.StringIO()
    if format == "csv":
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    if format == "chart":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("series", "approach", "value"))
        for r in rows:
            if r["f1_micro"]:
                w.writerow(("f1_micro", r["approach"], r["f1_micro"]))
        for r in rows:
            if r["wall_ms"] and r["wall_ms"] != "-":
                w.writerow(("wall_ms", r["approach"], r["wall_ms"]))
        return buf.getvalue()
    if format == "text":
        head = ("Model", "F1 score", "Time taken")
        body = []
        for r in rows:
            f1 = f"{float(r['f1_micro']) * 100:.1f}%" if r["f1_micro"] else "-"
            if r["outcome"] == "FAILED":
                t = f"- ({r['reason']})"
            elif r["wall_ms"]:
                t = f"{int(r['wall_ms']) / 1000:.2f} s for {r['bytes']} bytes"
            else:
                t = "-"
            body.append((r["approach"], f1, t))
        widths = [max(len(x[i]) for x in [head] + body) for i in range(3)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip()
                 for line in [head] + body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {format!r}")
