"""Evaluation metrics: tag accuracy, error rankings, code-switching statistics,
multi-seed aggregation and report rendering."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

from .corpus import AnnotatedSentence, Corpus
from .errors import UndefinedRateError, UsageError

_LANGS = ("LANG1", "LANG2")


def _pred_sequences(pred, field_name):
    """Accept a TaggedOutput or a plain list of tag sequences."""
    if hasattr(pred, "pos"):
        seqs = pred.pos if field_name == "POS" else pred.lid
        if seqs is None:
            raise UsageError("prediction carries no LID tags")
        return seqs
    return pred


def _gold_sequences(gold, field_name):
    if isinstance(gold, Corpus):
        return [s.pos if field_name == "POS" else s.lid for s in gold]
    return gold


def _aligned(gold, pred, field_name):
    if field_name not in ("POS", "LID"):
        raise UsageError(f"field must be POS or LID, not {field_name!r}")
    g = _gold_sequences(gold, field_name)
    p = _pred_sequences(pred, field_name)
    if len(g) != len(p):
        raise UsageError(f"gold has {len(g)} sentences, prediction has {len(p)}")
    for i, (gs, ps) in enumerate(zip(g, p)):
        if len(gs) != len(ps):
            raise UsageError(f"length mismatch at sentence {i}: gold {len(gs)}, pred {len(ps)}")
    return g, p


def accuracy(gold, pred, field: str = "POS") -> float:
    g, p = _aligned(gold, pred, field)
    total = correct = 0
    for gs, ps in zip(g, p):
        total += len(gs)
        correct += sum(a == b for a, b in zip(gs, ps))
    if total == 0:
        raise UsageError("accuracy over zero tokens")
    return correct / total


def confusion(gold, pred, field: str = "POS") -> dict[tuple[str, str], int]:
    g, p = _aligned(gold, pred, field)
    counts: Counter = Counter()
    for gs, ps in zip(g, p):
        counts.update(zip(gs, ps))
    return dict(sorted(counts.items()))


def error_ranking(gold, pred, field: str = "POS") -> list[tuple[str, float]]:
    """Error cells as ("GOLD>PRED", percent of all errors), most frequent first."""
    cells = {k: v for k, v in confusion(gold, pred, field).items() if k[0] != k[1]}
    total = sum(cells.values())
    if total == 0:
        return []
    ranked = sorted(((f"{g}>{p}", n) for (g, p), n in cells.items()), key=lambda x: (-x[1], x[0]))
    return [(name, 100.0 * n / total) for name, n in ranked]


def cs_point_counts(sentences) -> tuple[int, int]:
    """(switch points, qualifying adjacent pairs) over LANG1/LANG2-only pairs."""
    switches = pairs = 0
    for sent in sentences:
        lids = sent.lid if isinstance(sent, AnnotatedSentence) else sent
        for a, b in zip(lids, lids[1:]):
            if a in _LANGS and b in _LANGS:
                pairs += 1
                switches += a != b
    return switches, pairs


def cs_point_rate(corpus) -> float:
    switches, pairs = cs_point_counts(corpus)
    if pairs == 0:
        raise UndefinedRateError("no adjacent LANG1/LANG2 token pairs; CS-point rate undefined")
    return switches / pairs


def cs_fragments(sentence) -> list[tuple[int, int]]:
    """Maximal runs of the sentence's minority language as (1-based start, length).

    OTHER tokens neither break a run nor count toward its length.
    """
    lids = sentence.lid if isinstance(sentence, AnnotatedSentence) else list(sentence)
    n1, n2 = lids.count("LANG1"), lids.count("LANG2")
    if n1 == 0 or n2 == 0:
        return []
    minority = "LANG1" if n1 < n2 else "LANG2"
    out = []
    start = length = 0
    for i, tag in enumerate(lids, start=1):
        if tag == minority:
            if length == 0:
                start = i
            length += 1
        elif tag != "OTHER" and length:
            out.append((start, length))
            length = 0
    if length:
        out.append((start, length))
    return out


def mean_cs_fragment_length(corpus) -> float | None:
    lengths = [n for s in corpus for _, n in cs_fragments(s)]
    return sum(lengths) / len(lengths) if lengths else None


# --------------------------------------------------------------------------
# reports

SCALAR_METRICS = ("pos_accuracy", "lid_accuracy", "cs_point_rate", "mean_cs_fragment_len", "oov_rate")


@dataclass
class MetricsReport:
    pos_accuracy: float
    lid_accuracy: float | None = None
    cs_point_rate: float | None = None
    mean_cs_fragment_len: float | None = None
    oov_rate: float | None = None
    confusion: dict = field(default_factory=dict)
    error_ranking: list = field(default_factory=list)
    seed: int | None = None
    per_seed: dict = field(default_factory=dict)

    def scalars(self) -> dict:
        return {k: getattr(self, k) for k in SCALAR_METRICS}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["confusion"] = [[g, p, n] for (g, p), n in self.confusion.items()]
        d["error_ranking"] = [list(x) for x in self.error_ranking]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        d = dict(d)
        d["confusion"] = {(g, p): n for g, p, n in d.get("confusion", [])}
        d["error_ranking"] = [tuple(x) for x in d.get("error_ranking", [])]
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def evaluate(gold: Corpus, pred, table=None, seed=None) -> MetricsReport:
    from .embed import oov_rate

    lid_acc = None
    if getattr(pred, "lid", None) is not None:
        lid_acc = accuracy(gold, pred, "LID")
    try:
        cs_rate = cs_point_rate(gold)
    except UndefinedRateError:
        cs_rate = None
    return MetricsReport(
        pos_accuracy=accuracy(gold, pred, "POS"),
        lid_accuracy=lid_acc,
        cs_point_rate=cs_rate,
        mean_cs_fragment_len=mean_cs_fragment_length(gold),
        oov_rate=oov_rate(table, gold) if table is not None else None,
        confusion=confusion(gold, pred, "POS"),
        error_ranking=error_ranking(gold, pred, "POS"),
        seed=seed,
    )


def aggregate_seeds(reports: Sequence[MetricsReport]) -> MetricsReport:
    if not reports:
        raise UsageError("aggregate_seeds needs at least one report")
    present = [tuple(k for k, v in r.scalars().items() if v is not None) for r in reports]
    if any(p != present[0] for p in present):
        raise UsageError("reports have mismatched metric schemas")
    means = {}
    per_seed: dict = {"seed": [r.seed for r in reports]}
    for k in SCALAR_METRICS:
        vals = [getattr(r, k) for r in reports]
        if vals[0] is None:
            means[k] = None
            continue
        per_seed[k] = vals
        means[k] = sum(vals) / len(vals)
    summed: Counter = Counter()
    for r in reports:
        summed.update(r.confusion)
    total_err = sum(n for (g, p), n in summed.items() if g != p)
    ranking = []
    if total_err:
        cells = sorted(((f"{g}>{p}", n) for (g, p), n in summed.items() if g != p),
                       key=lambda x: (-x[1], x[0]))
        ranking = [(name, 100.0 * n / total_err) for name, n in cells]
    return MetricsReport(**means, confusion=dict(sorted(summed.items())),
                         error_ranking=ranking, seed=None, per_seed=per_seed)


def report_tsv(report: MetricsReport) -> str:
    """One metric per row: name, seed, value.  Aggregates use seed ``mean``."""
    rows = ["metric\tseed\tvalue"]
    if report.per_seed:
        seeds = report.per_seed.get("seed", [])
        for k in SCALAR_METRICS:
            if k in report.per_seed:
                for s, v in zip(seeds, report.per_seed[k]):
                    rows.append(f"{k}\t{s}\t{v:.6f}")
        label = "mean"
    else:
        label = "" if report.seed is None else str(report.seed)
    for k, v in report.scalars().items():
        if v is not None:
            rows.append(f"{k}\t{label}\t{v:.6f}")
    for name, pct in report.error_ranking:
        rows.append(f"error:{name}\t{label}\t{pct:.6f}")
    return "\n".join(rows) + "\n"


def report_text(report: MetricsReport, title: str = "", top_errors: int = 4) -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(f"POS accuracy (%)      {100 * report.pos_accuracy:.2f}")
    if report.lid_accuracy is not None:
        lines.append(f"LID accuracy (%)      {100 * report.lid_accuracy:.2f}")
    if report.cs_point_rate is not None:
        lines.append(f"CS points (%)         {100 * report.cs_point_rate:.2f}")
    if report.mean_cs_fragment_len is not None:
        lines.append(f"mean CS fragment len  {report.mean_cs_fragment_len:.2f}")
    if report.oov_rate is not None:
        lines.append(f"OOV (%)               {100 * report.oov_rate:.2f}")
    if report.per_seed.get("seed"):
        lines.append(f"seeds                 {', '.join(str(s) for s in report.per_seed['seed'])}")
    if report.error_ranking:
        lines.append("")
        lines.append(render_error_table(report.error_ranking[:top_errors]))
    return "\n".join(lines) + "\n"


def render_error_table(ranking, header=("Error Type", "Percentage")) -> str:
    """Two-column layout: ``Gold-POS > Predicted-POS`` and its share of errors."""
    cells = [(name.replace(">", " > "), f"{pct:.2f}%") for name, pct in ranking]
    w0 = max([len(header[0])] + [len(c[0]) for c in cells])
    w1 = max([len(header[1])] + [len(c[1]) for c in cells])
    out = [f"{header[0]:<{w0}}  {header[1]:>{w1}}", f"{'-' * w0}  {'-' * w1}"]
    out += [f"{a:<{w0}}  {b:>{w1}}" for a, b in cells]
    return "\n".join(out)
