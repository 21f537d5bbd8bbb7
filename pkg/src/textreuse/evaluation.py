"""Character-level detection quality measures and gold-annotation loading.

A gold case and a detection are both modeled as the set of characters they
cover, namespaced by (doc_id, side): the suspicious-side characters and the
source-side characters of one passage pair form a single set. Recall and
precision are macro-averaged over cases and detections respectively;
granularity penalizes splitting one case across several detections; plagdet
combines all three into one score.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .alignment import Detection
from .errors import GoldFormatError, InvalidOffsetError
from .textnorm import Span

SUSP_SIDE = "susp"
SRC_SIDE = "src"
PLAGIARISM_FEATURE = "plagiarism"


@dataclass(frozen=True)
class GoldCase:
    susp_doc_id: str
    susp_span: Span
    src_doc_id: str
    src_span: Span


@dataclass(frozen=True)
class EvalSummary:
    recall: float
    precision: float
    granularity: float
    f_measure: float
    plagdet: float


def _check_span(span: Span, what: str) -> None:
    if span.start < 0 or span.length <= 0:
        raise InvalidOffsetError(
            f"{what} has invalid char range [{span.start}, {span.end})"
        )


def _sides(item: GoldCase | Detection) -> list[tuple[tuple[str, str], Span]]:
    return [
        ((item.susp_doc_id, SUSP_SIDE), item.susp_span),
        ((item.src_doc_id, SRC_SIDE), item.src_span),
    ]


def _validate(items: Iterable[GoldCase | Detection], what: str) -> None:
    for item in items:
        _check_span(item.susp_span, f"{what} suspicious side")
        _check_span(item.src_span, f"{what} source side")


def _merged_intervals(
    items: Iterable[GoldCase | Detection],
) -> dict[tuple[str, str], list[tuple[int, int]]]:
    """Disjoint sorted coverage intervals per (doc_id, side)."""
    raw: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for item in items:
        for key, span in _sides(item):
            raw.setdefault(key, []).append((span.start, span.end))
    merged: dict[tuple[str, str], list[tuple[int, int]]] = {}
    for key, intervals in raw.items():
        intervals.sort()
        out = [intervals[0]]
        for start, end in intervals[1:]:
            if start <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], end))
            else:
                out.append((start, end))
        merged[key] = out
    return merged


def _covered_chars(span: Span, intervals: Sequence[tuple[int, int]]) -> int:
    total = 0
    for start, end in intervals:
        if start >= span.end:
            break
        total += max(0, min(end, span.end) - max(start, span.start))
    return total


def _mean_coverage(
    items: Sequence[GoldCase | Detection],
    against: dict[tuple[str, str], list[tuple[int, int]]],
) -> float:
    total = 0.0
    for item in items:
        size = item.susp_span.length + item.src_span.length
        hit = sum(
            _covered_chars(span, against.get(key, ()))
            for key, span in _sides(item)
        )
        total += hit / size
    return total / len(items)


def macro_precision_recall(
    gold: Iterable[GoldCase], det: Iterable[Detection]
) -> tuple[float, float]:
    """Macro character precision and recall.

    Conventions: both sets empty gives (1, 1); either one empty alone gives
    (0, 0).
    """
    gold = list(gold)
    det = list(det)
    _validate(gold, "gold case")
    _validate(det, "detection")
    if not gold and not det:
        return 1.0, 1.0
    if not gold or not det:
        return 0.0, 0.0
    recall = _mean_coverage(gold, _merged_intervals(det))
    precision = _mean_coverage(det, _merged_intervals(gold))
    return precision, recall


def _overlaps(case: GoldCase, detection: Detection) -> bool:
    if case.susp_doc_id == detection.susp_doc_id:
        a, b = case.susp_span, detection.susp_span
        if max(a.start, b.start) < min(a.end, b.end):
            return True
    if case.src_doc_id == detection.src_doc_id:
        a, b = case.src_span, detection.src_span
        if max(a.start, b.start) < min(a.end, b.end):
            return True
    return False


def granularity(gold: Iterable[GoldCase], det: Iterable[Detection]) -> float:
    """Mean number of detections touching each detected gold case; 1 when
    nothing is detected."""
    gold = list(gold)
    det = list(det)
    counts = []
    for case in gold:
        n = sum(1 for d in det if _overlaps(case, d))
        if n > 0:
            counts.append(n)
    if not counts:
        return 1.0
    return sum(counts) / len(counts)


def plagdet(precision: float, recall: float, gran: float) -> float:
    """F1 discounted by granularity: F / log2(1 + granularity)."""
    if precision + recall == 0.0:
        f = 0.0
    else:
        f = 2.0 * precision * recall / (precision + recall)
    return f / math.log2(1.0 + gran)


def f_measure(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def evaluate(gold: Iterable[GoldCase], det: Iterable[Detection]) -> EvalSummary:
    gold = list(gold)
    det = list(det)
    precision, recall = macro_precision_recall(gold, det)
    gran = granularity(gold, det)
    return EvalSummary(
        recall=recall,
        precision=precision,
        granularity=gran,
        f_measure=f_measure(precision, recall),
        plagdet=plagdet(precision, recall, gran),
    )


def _doc_id(reference: str) -> str:
    """Document id for a file reference: the name without its extension."""
    return Path(reference).stem


def _int_attr(elem: ET.Element, attr: str, path: Path) -> int:
    raw = elem.get(attr)
    if raw is None:
        raise GoldFormatError(f"{path}: feature missing attribute {attr!r}")
    try:
        value = int(raw)
    except ValueError as exc:
        raise GoldFormatError(f"{path}: attribute {attr}={raw!r} is not an integer") from exc
    if value < 0:
        raise InvalidOffsetError(f"{path}: attribute {attr}={value} is negative")
    return value


def load_gold(directory: str | Path) -> set[GoldCase]:
    """Read PAN-style annotation XML files from a directory.

    Each file's root carries a `reference` attribute naming the suspicious
    document; every feature element named "plagiarism" contributes one case
    with offsets taken verbatim.
    """
    directory = Path(directory)
    cases: set[GoldCase] = set()
    for path in sorted(directory.glob("*.xml")):
        try:
            root = ET.parse(path).getroot()
        except ET.ParseError as exc:
            raise GoldFormatError(f"{path}: malformed XML: {exc}") from exc
        reference = root.get("reference")
        if reference is None:
            raise GoldFormatError(f"{path}: root element lacks a reference attribute")
        susp_id = _doc_id(reference)
        for feature in root.iter("feature"):
            if feature.get("name") != PLAGIARISM_FEATURE:
                continue
            source_ref = feature.get("source_reference")
            if source_ref is None:
                raise GoldFormatError(
                    f"{path}: plagiarism feature lacks source_reference"
                )
            this_offset = _int_attr(feature, "this_offset", path)
            this_length = _int_attr(feature, "this_length", path)
            src_offset = _int_attr(feature, "source_offset", path)
            src_length = _int_attr(feature, "source_length", path)
            cases.add(
                GoldCase(
                    susp_doc_id=susp_id,
                    susp_span=Span(this_offset, this_offset + this_length),
                    src_doc_id=_doc_id(source_ref),
                    src_span=Span(src_offset, src_offset + src_length),
                )
            )
    return cases
