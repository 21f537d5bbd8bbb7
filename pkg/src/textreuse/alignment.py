"""Text alignment: locate re-used passages between a document pair.

Sentences of both documents are compared pairwise; pairs whose similarity
clears the threshold are merged into contiguous passages reported with raw
character offsets. The default similarity is TF-IDF cosine over sentence
vectors (VSM); character and word n-gram Jaccard are available as
alternative methods for side-by-side comparison.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from . import index as index_mod
from .errors import DataFormatError
from .index import InvertedIndex
from .textnorm import NormalizedDocument, Span, sentence_token_ranges, to_raw_span


class Method(str, Enum):
    VSM = "VSM"
    CHAR_NGRAM = "CHAR_NGRAM"
    WORD_NGRAM = "WORD_NGRAM"


_DEFAULT_N = {Method.CHAR_NGRAM: 4, Method.WORD_NGRAM: 2}


@dataclass(frozen=True)
class AlignmentConfig:
    method: Method = Method.VSM
    threshold: float = 0.65
    n: int | None = None
    merge_gap: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0,1]: {self.threshold}")
        if self.n is not None and self.n < 1:
            raise ValueError(f"n must be >= 1: {self.n}")
        if self.merge_gap < 0:
            raise ValueError(f"merge_gap must be >= 0: {self.merge_gap}")

    @property
    def effective_n(self) -> int:
        """The n-gram order: explicit n, else 4 for chars, 2 for words."""
        if self.n is not None:
            return self.n
        return _DEFAULT_N.get(Method(self.method), 1)


@dataclass(frozen=True)
class SentenceVector:
    weights: dict[str, float]
    norm: float


@dataclass(frozen=True)
class Detection:
    """One reported passage pair; spans index raw-text characters."""

    susp_doc_id: str
    susp_span: Span
    src_doc_id: str
    src_span: Span
    score: float
    pair_count: int
    method: Method = Method.VSM


def sentence_vectors(
    doc: NormalizedDocument, idf_source: InvertedIndex
) -> list[SentenceVector]:
    """One TF-IDF vector per sentence over non-stopword stems. A sentence of
    only stopwords yields a zero vector (norm 0) and never matches."""
    vectors: list[SentenceVector] = []
    for r in sentence_token_ranges(doc):
        tf = Counter(
            t.stem for t in doc.tokens[r.start : r.end] if not t.is_stopword
        )
        weights = {
            term: count * index_mod.idf(idf_source, term)
            for term, count in tf.items()
        }
        norm = math.sqrt(sum(w * w for w in weights.values()))
        vectors.append(SentenceVector(weights, norm))
    return vectors


def cosine(u: SentenceVector, v: SentenceVector) -> float:
    """Cosine similarity in [0,1]; zero-norm input gives 0 by definition."""
    if u.norm == 0.0 or v.norm == 0.0:
        return 0.0
    small, large = (u, v) if len(u.weights) <= len(v.weights) else (v, u)
    dot = 0.0
    for term, w in small.weights.items():
        other = large.weights.get(term)
        if other is not None:
            dot += w * other
    return min(1.0, dot / (u.norm * v.norm))


def match_sentences(
    susp_vectors: Sequence[SentenceVector],
    src_vectors: Sequence[SentenceVector],
    cfg: AlignmentConfig,
) -> list[tuple[int, int, float]]:
    """All sentence pairs with cosine >= threshold, ordered by (i, j)."""
    pairs: list[tuple[int, int, float]] = []
    for i, u in enumerate(susp_vectors):
        if u.norm == 0.0:
            continue
        for j, v in enumerate(src_vectors):
            if v.norm == 0.0:
                continue
            sim = cosine(u, v)
            if sim >= cfg.threshold:
                pairs.append((i, j, sim))
    return pairs


def _char_ngrams(text: str, n: int) -> frozenset[str]:
    collapsed = " ".join(text.split())
    if len(collapsed) < n:
        return frozenset()
    return frozenset(collapsed[k : k + n] for k in range(len(collapsed) - n + 1))


def _word_ngrams(stems: Sequence[str], n: int) -> frozenset[tuple[str, ...]]:
    if len(stems) < n:
        return frozenset()
    return frozenset(
        tuple(stems[k : k + n]) for k in range(len(stems) - n + 1)
    )


def ngram_similarity(a, b, cfg: AlignmentConfig) -> float:
    """Jaccard coefficient of two n-gram sets.

    For CHAR_NGRAM, a and b are normalized sentence strings (whitespace
    runs collapse to single spaces); for WORD_NGRAM they are stem
    sequences. Inputs shorter than n units match nothing, except two equal
    inputs, which score 1.
    """
    n = cfg.effective_n
    if Method(cfg.method) is Method.WORD_NGRAM:
        grams_a, grams_b = _word_ngrams(tuple(a), n), _word_ngrams(tuple(b), n)
        equal = tuple(a) == tuple(b)
    else:
        grams_a, grams_b = _char_ngrams(a, n), _char_ngrams(b, n)
        equal = " ".join(a.split()) == " ".join(b.split())
    if not grams_a and not grams_b:
        return 1.0 if equal else 0.0
    union = grams_a | grams_b
    if not union:
        return 0.0
    return len(grams_a & grams_b) / len(union)


def _ngram_units(doc: NormalizedDocument, cfg: AlignmentConfig) -> list:
    """Per-sentence comparison units for the n-gram methods."""
    ranges = sentence_token_ranges(doc)
    if Method(cfg.method) is Method.WORD_NGRAM:
        return [
            tuple(t.stem for t in doc.tokens[r.start : r.end]) for r in ranges
        ]
    return [doc.norm_text[s.start : s.end] for s in doc.sentences]


def _match_ngram(
    susp: NormalizedDocument, src: NormalizedDocument, cfg: AlignmentConfig
) -> list[tuple[int, int, float]]:
    n = cfg.effective_n
    if Method(cfg.method) is Method.WORD_NGRAM:
        susp_units = _ngram_units(susp, cfg)
        src_units = _ngram_units(src, cfg)
        susp_sets = [_word_ngrams(u, n) for u in susp_units]
        src_sets = [_word_ngrams(u, n) for u in src_units]
    else:
        susp_units = [" ".join(u.split()) for u in _ngram_units(susp, cfg)]
        src_units = [" ".join(u.split()) for u in _ngram_units(src, cfg)]
        susp_sets = [_char_ngrams(u, n) for u in susp_units]
        src_sets = [_char_ngrams(u, n) for u in src_units]
    pairs: list[tuple[int, int, float]] = []
    for i, (ua, ga) in enumerate(zip(susp_units, susp_sets)):
        for j, (ub, gb) in enumerate(zip(src_units, src_sets)):
            if not ga and not gb:
                sim = 1.0 if ua == ub else 0.0
            elif not ga or not gb:
                sim = 0.0
            else:
                sim = len(ga & gb) / len(ga | gb)
            if sim >= cfg.threshold:
                pairs.append((i, j, sim))
    return pairs


def merge_matches(
    pairs: Sequence[tuple[int, int, float]],
    susp: NormalizedDocument,
    src: NormalizedDocument,
    cfg: AlignmentConfig,
    method: Method | None = None,
) -> list[Detection]:
    """Cluster matched sentence pairs into passages.

    Two pairs share a passage when their suspicious indices differ by at
    most 1 + merge_gap and their source indices do too (transitive
    closure). Passage spans cover min..max member sentences on each side,
    converted to raw offsets; the score is the mean member similarity.
    """
    if not pairs:
        return []
    method = Method(method if method is not None else cfg.method)
    limit = 1 + cfg.merge_gap
    parent = list(range(len(pairs)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            if (
                abs(pairs[a][0] - pairs[b][0]) <= limit
                and abs(pairs[a][1] - pairs[b][1]) <= limit
            ):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[rb] = ra

    groups: dict[int, list[tuple[int, int, float]]] = {}
    for k, pair in enumerate(pairs):
        groups.setdefault(find(k), []).append(pair)

    detections: list[Detection] = []
    for members in groups.values():
        i_lo = min(p[0] for p in members)
        i_hi = max(p[0] for p in members)
        j_lo = min(p[1] for p in members)
        j_hi = max(p[1] for p in members)
        susp_span = to_raw_span(
            susp, Span(susp.sentences[i_lo].start, susp.sentences[i_hi].end)
        )
        src_span = to_raw_span(
            src, Span(src.sentences[j_lo].start, src.sentences[j_hi].end)
        )
        detections.append(
            Detection(
                susp_doc_id=susp.doc_id,
                susp_span=susp_span,
                src_doc_id=src.doc_id,
                src_span=src_span,
                score=sum(p[2] for p in members) / len(members),
                pair_count=len(members),
                method=method,
            )
        )
    detections.sort(key=lambda d: (d.susp_span.start, d.src_span.start))
    return detections


def align(
    susp: NormalizedDocument,
    src: NormalizedDocument,
    idf_source: InvertedIndex | None,
    cfg: AlignmentConfig,
) -> list[Detection]:
    """Full alignment of one document pair, sorted by suspicious offset.

    idf_source is required for the VSM method and ignored by the n-gram
    methods.
    """
    method = Method(cfg.method)
    if method is Method.VSM:
        if idf_source is None:
            raise ValueError("VSM alignment needs an index to draw IDF values from")
        pairs = match_sentences(
            sentence_vectors(susp, idf_source),
            sentence_vectors(src, idf_source),
            cfg,
        )
    else:
        pairs = _match_ngram(susp, src, cfg)
    return merge_matches(pairs, susp, src, cfg, method)


DETECTIONS_HEADER = (
    "susp_doc_id\tsusp_offset\tsusp_length\tsrc_doc_id\tsrc_offset"
    "\tsrc_length\tscore\tmethod\n"
)


def write_detections(path, detections: Iterable[Detection]) -> None:
    """Line-delimited detection records; offsets count raw characters."""
    lines = [DETECTIONS_HEADER]
    for d in detections:
        lines.append(
            f"{d.susp_doc_id}\t{d.susp_span.start}\t{d.susp_span.length}"
            f"\t{d.src_doc_id}\t{d.src_span.start}\t{d.src_span.length}"
            f"\t{d.score:.6f}\t{Method(d.method).value}\n"
        )
    Path(path).write_text("".join(lines), encoding="utf-8")


def read_detections(path) -> list[Detection]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != DETECTIONS_HEADER.rstrip("\n"):
        raise DataFormatError(f"{path}: missing detections header line")
    out: list[Detection] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 8:
            raise DataFormatError(f"{path}:{lineno}: expected 8 columns")
        try:
            det = Detection(
                susp_doc_id=parts[0],
                susp_span=Span(int(parts[1]), int(parts[1]) + int(parts[2])),
                src_doc_id=parts[3],
                src_span=Span(int(parts[4]), int(parts[4]) + int(parts[5])),
                score=float(parts[6]),
                pair_count=1,
                method=Method(parts[7]),
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
        out.append(det)
    return out
