"""Candidate retrieval: narrow the source collection per suspicious document.

The stage is recall-oriented. A suspicious document is cut into fixed-size
chunks; content-poor sentences are discarded; keywords and noun phrases
from the strongest sentences become short queries against the inverted
index; a search-control rule suppresses queries whose likely answers are
already covered by earlier rounds. The output is a small ranked candidate
list handed to the alignment stage.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from . import index as index_mod
from .index import InvertedIndex, SearchHit
from .textnorm import (
    DEFAULT_NP_PATTERN,
    NormalizedDocument,
    NpPattern,
    Span,
    Tag,
    sentence_token_ranges,
)

SEARCH_DEPTH = 10


@dataclass(frozen=True)
class RetrievalConfig:
    chunk_len: int = 500
    min_tail: int = 100
    discard_ratio: float = 0.20
    top_sentences: int = 3
    max_query_terms: int = 10
    candidates_per_doc: int = 25
    tfidf_high_percentile: float = 0.75
    search_control_overlap: float = 0.60

    def __post_init__(self) -> None:
        if not 0.0 < self.discard_ratio < 1.0:
            raise ValueError(f"discard_ratio must be in (0,1): {self.discard_ratio}")
        if not self.chunk_len >= self.min_tail >= 1:
            raise ValueError(
                f"need chunk_len >= min_tail >= 1, got {self.chunk_len}/{self.min_tail}"
            )
        if self.candidates_per_doc < 1:
            raise ValueError(f"candidates_per_doc must be >= 1: {self.candidates_per_doc}")
        if not 0.0 < self.tfidf_high_percentile <= 1.0:
            raise ValueError(
                f"tfidf_high_percentile must be in (0,1]: {self.tfidf_high_percentile}"
            )


class QueryOrigin(str, Enum):
    KEYWORD_SENTENCE = "KEYWORD_SENTENCE"
    NOUN_PHRASE = "NOUN_PHRASE"


@dataclass(frozen=True)
class Chunk:
    """A contiguous run of tokens plus the sentences anchored in it.

    A sentence belongs to the chunk holding its first token, so a sentence
    straddling a chunk boundary is processed exactly once.
    """

    chunk_id: int
    token_span: Span
    char_span: Span
    sentences: tuple[int, ...]


@dataclass(frozen=True)
class Query:
    terms: tuple[str, ...]
    chunk_id: int
    origin: QueryOrigin


@dataclass(frozen=True)
class SentenceKeywords:
    sentence_idx: int
    keywords: tuple[str, ...]
    fallback: bool = False


@dataclass(frozen=True)
class NounPhrase:
    terms: tuple[str, ...]
    score: float
    sentence_idx: int
    token_start: int


@dataclass(frozen=True)
class Candidate:
    doc_id: str
    score: float
    query_count: int


def chunk_document(doc: NormalizedDocument, cfg: RetrievalConfig) -> list[Chunk]:
    """Cut the token stream into chunk_len pieces; a final fragment shorter
    than min_tail is merged into its predecessor."""
    n = len(doc.tokens)
    if n == 0:
        return []
    bounds = list(range(0, n, cfg.chunk_len)) + [n]
    if len(bounds) > 2 and bounds[-1] - bounds[-2] < cfg.min_tail:
        del bounds[-2]
    sent_ranges = sentence_token_ranges(doc)
    chunks: list[Chunk] = []
    for cid in range(len(bounds) - 1):
        lo, hi = bounds[cid], bounds[cid + 1]
        members = tuple(
            s for s, r in enumerate(sent_ranges) if lo <= r.start < hi
        )
        chunks.append(
            Chunk(
                chunk_id=cid,
                token_span=Span(lo, hi),
                char_span=Span(doc.tokens[lo].span.start, doc.tokens[hi - 1].span.end),
                sentences=members,
            )
        )
    return chunks


def rank_sentences(
    doc: NormalizedDocument, chunk: Chunk, cfg: RetrievalConfig
) -> list[int]:
    """Drop the floor(discard_ratio * n) weakest sentences of the chunk.

    A sentence scores len/max_len + nouns/max(1, max_nouns); ties discard
    the later-positioned sentence first. At least one sentence survives.
    """
    if not chunk.sentences:
        return []
    ranges = sentence_token_ranges(doc)
    lengths: dict[int, int] = {}
    nouns: dict[int, int] = {}
    for s in chunk.sentences:
        r = ranges[s]
        lengths[s] = r.length
        nouns[s] = sum(
            1 for t in doc.tokens[r.start : r.end] if t.tag is Tag.NOUN
        )
    max_len = max(lengths.values())
    max_nouns = max(1, max(nouns.values()))
    score = {
        s: lengths[s] / max_len + nouns[s] / max_nouns for s in chunk.sentences
    }
    n = len(chunk.sentences)
    k = min(math.floor(cfg.discard_ratio * n), n - 1)
    doomed = sorted(chunk.sentences, key=lambda s: (score[s], -s))[:k]
    return sorted(set(chunk.sentences) - set(doomed))


def chunk_tfidf(
    doc: NormalizedDocument, chunk: Chunk, idx: InvertedIndex
) -> dict[str, float]:
    """TF-IDF of every non-stopword stem in the chunk's sentences; tf is the
    in-chunk count, idf comes from the background index."""
    ranges = sentence_token_ranges(doc)
    tf: Counter[str] = Counter()
    for s in chunk.sentences:
        r = ranges[s]
        tf.update(
            t.stem for t in doc.tokens[r.start : r.end] if not t.is_stopword
        )
    return {term: count * index_mod.idf(idx, term) for term, count in tf.items()}


def high_tfidf_threshold(
    doc: NormalizedDocument,
    chunk: Chunk,
    tfidf: Mapping[str, float],
    percentile: float,
) -> float:
    """Nearest-rank percentile over the chunk's per-token TF-IDF values."""
    ranges = sentence_token_ranges(doc)
    values = sorted(
        tfidf[t.stem]
        for s in chunk.sentences
        for t in doc.tokens[ranges[s].start : ranges[s].end]
        if not t.is_stopword
    )
    if not values:
        return 0.0
    rank = max(1, math.ceil(percentile * len(values)))
    return values[rank - 1]


def extract_keywords(
    doc: NormalizedDocument,
    chunk: Chunk,
    kept_sentences: Sequence[int],
    idx: InvertedIndex,
    cfg: RetrievalConfig,
) -> list[SentenceKeywords]:
    """Keywords from the chunk's strongest sentences.

    Sentences are ranked by their maximum token TF-IDF and the best
    top_sentences are selected. Within a selected sentence the keywords are
    every noun plus every adjective or verb whose TF-IDF clears the chunk's
    high-TF-IDF percentile, deduplicated, in sentence order. A chunk with
    no tagged nouns falls back to high-TF-IDF tokens of any tag and marks
    the result.
    """
    tfidf = chunk_tfidf(doc, chunk, idx)
    threshold = high_tfidf_threshold(doc, chunk, tfidf, cfg.tfidf_high_percentile)
    ranges = sentence_token_ranges(doc)

    def sentence_tokens(s: int):
        r = ranges[s]
        return [t for t in doc.tokens[r.start : r.end] if not t.is_stopword]

    def max_tfidf(s: int) -> float:
        toks = sentence_tokens(s)
        return max((tfidf[t.stem] for t in toks), default=0.0)

    selected = sorted(kept_sentences, key=lambda s: (-max_tfidf(s), s))
    selected = sorted(selected[: cfg.top_sentences])

    chunk_has_nouns = any(
        t.tag is Tag.NOUN for s in chunk.sentences for t in sentence_tokens(s)
    )
    out: list[SentenceKeywords] = []
    for s in selected:
        seen: set[str] = set()
        words: list[str] = []
        for t in sentence_tokens(s):
            if chunk_has_nouns:
                take = t.tag is Tag.NOUN or (
                    t.tag in (Tag.ADJ, Tag.VERB) and tfidf[t.stem] >= threshold
                )
            else:
                take = tfidf[t.stem] >= threshold
            if take and t.stem not in seen:
                seen.add(t.stem)
                words.append(t.stem)
        out.append(SentenceKeywords(s, tuple(words), fallback=not chunk_has_nouns))
    return out


def extract_noun_phrases(
    doc: NormalizedDocument,
    chunk: Chunk,
    kept_sentences: Sequence[int],
    idx: InvertedIndex,
    pattern: NpPattern = DEFAULT_NP_PATTERN,
) -> list[NounPhrase]:
    """Maximal non-overlapping tag-pattern matches over the kept sentences,
    scored by the sum of member TF-IDF and sorted best first."""
    tfidf = chunk_tfidf(doc, chunk, idx)
    ranges = sentence_token_ranges(doc)
    phrases: list[NounPhrase] = []
    for s in sorted(kept_sentences):
        r = ranges[s]
        i = r.start
        while i < r.end:
            tok = doc.tokens[i]
            if tok.tag is pattern.head:
                j = i + 1
                while (
                    j < r.end
                    and j - i - 1 < pattern.max_cont
                    and doc.tokens[j].tag in pattern.cont
                ):
                    j += 1
                members = doc.tokens[i:j]
                phrases.append(
                    NounPhrase(
                        terms=tuple(t.stem for t in members),
                        score=sum(tfidf.get(t.stem, 0.0) for t in members),
                        sentence_idx=s,
                        token_start=i,
                    )
                )
                i = j
            else:
                i += 1
    phrases.sort(key=lambda p: (-p.score, p.sentence_idx, p.token_start))
    return phrases


def formulate_queries(
    keywords: Sequence[SentenceKeywords],
    noun_phrases: Sequence[NounPhrase],
    chunk_id: int,
    cfg: RetrievalConfig,
) -> list[Query]:
    """One keyword query per selected sentence plus one query packing the
    top-scored noun phrases, all capped at max_query_terms."""
    queries: list[Query] = []
    for kw in keywords:
        terms = kw.keywords[: cfg.max_query_terms]
        if terms:
            queries.append(Query(terms, chunk_id, QueryOrigin.KEYWORD_SENTENCE))
    np_terms: list[str] = []
    for phrase in noun_phrases:
        for term in phrase.terms:
            if len(np_terms) >= cfg.max_query_terms:
                break
            np_terms.append(term)
        if len(np_terms) >= cfg.max_query_terms:
            break
    if np_terms:
        queries.append(Query(tuple(np_terms), chunk_id, QueryOrigin.NOUN_PHRASE))
    return queries


def search_control(
    query: Query,
    downloaded: Iterable[frozenset[str] | set[str]],
    cfg: RetrievalConfig,
) -> bool:
    """True to run the query, False to drop it.

    The query is dropped when any single already-downloaded document covers
    at least search_control_overlap of its distinct terms.
    """
    distinct = set(query.terms)
    if not distinct:
        return False
    for terms in downloaded:
        if len(distinct & terms) / len(distinct) >= cfg.search_control_overlap:
            return False
    return True


def _doc_term_sets(idx: InvertedIndex) -> dict[str, frozenset[str]]:
    by_doc: dict[str, set[str]] = {d: set() for d in idx.doc_ids}
    for term, plist in idx.postings.items():
        for doc_id, _tf in plist:
            by_doc[doc_id].add(term)
    return {d: frozenset(s) for d, s in by_doc.items()}


def retrieve_candidates(
    doc: NormalizedDocument,
    idx: InvertedIndex,
    cfg: RetrievalConfig,
    np_pattern: NpPattern = DEFAULT_NP_PATTERN,
) -> list[Candidate]:
    """Run the whole retrieval stage for one suspicious document.

    Chunks are processed in order; each surviving query contributes its
    top SEARCH_DEPTH hits; a source document's aggregate score is the sum
    of its hit scores and its query_count the number of queries that hit
    it. At most candidates_per_doc sources are returned, by descending
    aggregate score, ties by ascending doc_id.
    """
    term_sets = _doc_term_sets(idx)
    aggregate: dict[str, float] = {}
    query_hits: dict[str, int] = {}
    downloaded: list[frozenset[str]] = []
    seen_docs: set[str] = set()
    for chunk in chunk_document(doc, cfg):
        kept = rank_sentences(doc, chunk, cfg)
        keywords = extract_keywords(doc, chunk, kept, idx, cfg)
        phrases = extract_noun_phrases(doc, chunk, kept, idx, np_pattern)
        for query in formulate_queries(keywords, phrases, chunk.chunk_id, cfg):
            if not search_control(query, downloaded, cfg):
                continue
            for hit in index_mod.search(idx, query, SEARCH_DEPTH):
                aggregate[hit.doc_id] = aggregate.get(hit.doc_id, 0.0) + hit.score
                query_hits[hit.doc_id] = query_hits.get(hit.doc_id, 0) + 1
                if hit.doc_id not in seen_docs:
                    seen_docs.add(hit.doc_id)
                    downloaded.append(term_sets[hit.doc_id])
    ranked = sorted(aggregate, key=lambda d: (-aggregate[d], d))
    return [
        Candidate(d, aggregate[d], query_hits[d])
        for d in ranked[: cfg.candidates_per_doc]
    ]


def write_candidates(
    path, susp_doc_id: str, candidates: Sequence[Candidate]
) -> None:
    """Line-delimited candidate records, one per source document."""
    from pathlib import Path

    lines = ["susp_doc_id\tsrc_doc_id\tscore\tquery_count\n"]
    for c in candidates:
        lines.append(f"{susp_doc_id}\t{c.doc_id}\t{c.score:.6f}\t{c.query_count}\n")
    Path(path).write_text("".join(lines), encoding="utf-8")
