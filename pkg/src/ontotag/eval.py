"""Document-level macro and mention-level micro precision/recall/F1.

Document-level scoring compares per-document label sets with composite labels
expanded into their member IDs; empty sets score by convention (no predictions
means perfect precision for that document, no gold means perfect recall).
Mention-level scoring pairs gold and predicted mentions one-to-one, largest
overlap first; a pair matches when the label sets intersect and the spans share
at least one token.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TaggerError


class UnsupportedMetricError(TaggerError):
    pass


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _f1(p, r):
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def expand_label(label: str) -> frozenset[str]:
    return frozenset(label.split(";"))


def expand_labels(labels) -> set[str]:
    out = set()
    for label in labels:
        out.update(expand_label(label))
    return out


def labels_match(a: str, b: str) -> bool:
    return bool(expand_label(a) & expand_label(b))


def match_relaxed(gold, pred, token_spans) -> bool:
    """gold is (start, end, label); pred has start/end/label attributes."""
    g_start, g_end, g_label = gold
    if not labels_match(g_label, pred.label):
        return False
    return bool(
        _span_tokens(g_start, g_end, token_spans)
        & _span_tokens(pred.start, pred.end, token_spans)
    )


def _span_tokens(start, end, token_spans):
    return {
        i for i, (s, e) in enumerate(token_spans) if s < end and start < e
    }


@dataclass
class EvalReport:
    doc_count: int
    doc_counts: dict[str, tuple[int, int, int]]
    macro: PRF
    micro: PRF | None = None
    mention_counts: dict[str, tuple[int, int, int]] | None = None
    micro_degenerate: bool = False

    def to_dict(self) -> dict:
        out = {
            "doc_count": self.doc_count,
            "doc_level": {
                "per_document": {
                    d: {"tp": c[0], "fp": c[1], "fn": c[2]}
                    for d, c in sorted(self.doc_counts.items())
                },
                "macro_precision": self.macro.precision,
                "macro_recall": self.macro.recall,
                "macro_f1": self.macro.f1,
            },
        }
        if self.micro is not None:
            out["mention_level"] = {
                "per_document": {
                    d: {"tp": c[0], "fp": c[1], "fn": c[2]}
                    for d, c in sorted(self.mention_counts.items())
                },
                "micro_precision": self.micro.precision,
                "micro_recall": self.micro.recall,
                "micro_f1": self.micro.f1,
                "degenerate": self.micro_degenerate,
            }
        return out


def doc_macro(gold_labels: dict, pred_labels: dict):
    """Per-document precision and recall on expanded label sets, averaged.

    Returns (PRF, per-document (tp, fp, fn) counts). Documents present on
    either side participate; the missing side counts as the empty set.
    """
    docs = sorted(set(gold_labels) | set(pred_labels))
    if not docs:
        raise UnsupportedMetricError("no documents to evaluate")
    counts = {}
    p_sum = 0.0
    r_sum = 0.0
    for doc in docs:
        g = expand_labels(gold_labels.get(doc, ()))
        p = expand_labels(pred_labels.get(doc, ()))
        tp = len(g & p)
        fp = len(p - g)
        fn = len(g - p)
        counts[doc] = (tp, fp, fn)
        p_sum += 1.0 if not p else tp / (tp + fp)
        r_sum += 1.0 if not g else tp / (tp + fn)
    macro_p = p_sum / len(docs)
    macro_r = r_sum / len(docs)
    return PRF(macro_p, macro_r, _f1(macro_p, macro_r)), counts


def mention_micro(gold_mentions: dict, pred: dict, token_spans: dict):
    """Greedy one-to-one mention pairing per document, then pooled counts.

    Returns (PRF, per-document (tp, fp, fn), degenerate) where degenerate marks
    a zero denominator reported as 0.
    """
    docs = sorted(set(gold_mentions) | set(pred))
    if not docs:
        raise UnsupportedMetricError("no documents to evaluate")
    counts = {}
    tp_total = fp_total = fn_total = 0
    for doc in docs:
        gold = list(gold_mentions.get(doc, ()))
        preds = list(pred.get(doc, ()))
        spans = token_spans.get(doc, ())
        pairs = []
        for gi, g in enumerate(gold):
            g_toks = _span_tokens(g[0], g[1], spans)
            for pi, p in enumerate(preds):
                if not labels_match(g[2], p.label):
                    continue
                shared = g_toks & _span_tokens(p.start, p.end, spans)
                if not shared:
                    continue
                char_overlap = min(g[1], p.end) - max(g[0], p.start)
                pairs.append((len(shared), char_overlap, -gi, -pi, gi, pi))
        pairs.sort(reverse=True)
        used_g = set()
        used_p = set()
        tp = 0
        for _, _, _, _, gi, pi in pairs:
            if gi in used_g or pi in used_p:
                continue
            used_g.add(gi)
            used_p.add(pi)
            tp += 1
        fp = len(preds) - tp
        fn = len(gold) - tp
        counts[doc] = (tp, fp, fn)
        tp_total += tp
        fp_total += fp
        fn_total += fn
    degenerate = tp_total + fp_total == 0 or tp_total + fn_total == 0
    p = tp_total / (tp_total + fp_total) if tp_total + fp_total else 0.0
    r = tp_total / (tp_total + fn_total) if tp_total + fn_total else 0.0
    return PRF(p, r, _f1(p, r)), counts, degenerate


def evaluate(gold_mentions=None, gold_labels=None, pred_anns=None, token_spans=None) -> EvalReport:
    """Build a full report from whichever gold granularity is available.

    pred_anns maps doc id to annotation lists. Mention-level metrics require
    mention gold and per-document tokenizations.
    """
    if pred_anns is None:
        pred_anns = {}
    if gold_mentions is None and gold_labels is None:
        raise UnsupportedMetricError("no gold annotations given")
    if gold_labels is None:
        gold_labels = {
            doc: {m[2] for m in mentions} for doc, mentions in gold_mentions.items()
        }
    pred_labels = {doc: {a.label for a in anns} for doc, anns in pred_anns.items()}
    macro, doc_counts = doc_macro(gold_labels, pred_labels)
    report = EvalReport(
        doc_count=len(doc_counts), doc_counts=doc_counts, macro=macro
    )
    if gold_mentions is not None:
        if token_spans is None:
            raise UnsupportedMetricError(
                "mention-level evaluation requires document tokenizations"
            )
        micro, mention_counts, degenerate = mention_micro(
            gold_mentions, pred_anns, token_spans
        )
        report.micro = micro
        report.mention_counts = mention_counts
        report.micro_degenerate = degenerate
    return report
