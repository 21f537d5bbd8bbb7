"""Brute-force reference implementation of the detection measures.

Every gold case and detection is expanded into a literal set of
(doc_id, side, position) characters; precision, recall, and granularity
are then plain set arithmetic. Quadratic in passage length, so only fit
for cross-checking the interval-based implementation on small instances.
"""

from __future__ import annotations


def char_set(item):
    chars = set()
    for doc_id, side, span in (
        (item.susp_doc_id, "susp", item.susp_span),
        (item.src_doc_id, "src", item.src_span),
    ):
        chars.update((doc_id, side, k) for k in range(span.start, span.end))
    return chars


def brute_precision_recall(gold, det):
    gold, det = list(gold), list(det)
    if not gold and not det:
        return 1.0, 1.0
    if not gold or not det:
        return 0.0, 0.0
    gold_union = set().union(*(char_set(g) for g in gold))
    det_union = set().union(*(char_set(d) for d in det))
    recall = sum(
        len(char_set(g) & det_union) / len(char_set(g)) for g in gold
    ) / len(gold)
    precision = sum(
        len(char_set(d) & gold_union) / len(char_set(d)) for d in det
    ) / len(det)
    return precision, recall


def brute_granularity(gold, det):
    gold, det = list(gold), list(det)
    counts = []
    for case in gold:
        chars = char_set(case)
        n = sum(1 for d in det if chars & char_set(d))
        if n:
            counts.append(n)
    if not counts:
        return 1.0
    return sum(counts) / len(counts)
