"""TF-IDF inverted index over a source-document collection.

The index maps stems (stopwords excluded) to postings lists and carries
precomputed per-document vector norms so that cosine scoring at query time
touches only the postings of the query terms. A built index is immutable
and may be shared freely across threads; see persist()/load() for the
on-disk form, whose byte layout is documented in docs/index-format.md.
"""

from __future__ import annotations

import hashlib
import math
import struct
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateDocumentError,
    IndexFormatError,
    TruncatedIndexError,
    VersionMismatchError,
)
from .textnorm import NormalizedDocument

MAGIC = b"TRIX"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sHHIIQ")
_POSTING = struct.Struct("<II")


@dataclass(frozen=True)
class DocRecord:
    """Per-document metadata kept alongside the postings."""

    path: str
    token_count: int
    digest: str


@dataclass(frozen=True)
class SearchHit:
    doc_id: str
    score: float


@dataclass(frozen=True)
class InvertedIndex:
    """Immutable TF-IDF index.

    doc_ids preserves ingestion order (it defines on-disk ordinals);
    postings lists are sorted by doc_id so iteration order is canonical.
    """

    doc_ids: tuple[str, ...]
    df: dict[str, int]
    postings: dict[str, tuple[tuple[str, int], ...]]
    doc_norms: dict[str, float]
    doc_store: dict[str, DocRecord]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)


def indexed_terms(doc: NormalizedDocument) -> list[str]:
    """The stems this document contributes to the index, in token order."""
    return [t.stem for t in doc.tokens if not t.is_stopword]


def _doc_digest(term_counts: Mapping[str, int]) -> str:
    h = hashlib.sha256()
    for term in sorted(term_counts):
        h.update(f"{term}\t{term_counts[term]}\n".encode("utf-8"))
    return h.hexdigest()


def _idf_value(n_docs: int, df: int) -> float:
    return math.log((n_docs + 1) / (df + 1)) + 1.0


def idf(index: InvertedIndex, term: str) -> float:
    """Smoothed inverse document frequency; unseen terms use df = 0."""
    return _idf_value(index.n_docs, index.df.get(term, 0))


def _compute_norms(
    postings: Mapping[str, tuple[tuple[str, int], ...]],
    doc_ids: Sequence[str],
    n_docs: int,
) -> dict[str, float]:
    """L2 norms of every document's TF-IDF vector.

    Accumulation visits terms in sorted order so that norms computed at
    build time and after a reload are bit-identical.
    """
    acc = {d: 0.0 for d in doc_ids}
    for term in sorted(postings):
        w_idf = _idf_value(n_docs, len(postings[term]))
        for doc_id, tf in postings[term]:
            w = tf * w_idf
            acc[doc_id] += w * w
    return {d: math.sqrt(v) for d, v in acc.items()}


def _assemble(
    doc_ids: Sequence[str],
    postings: Mapping[str, tuple[tuple[str, int], ...]],
    paths: Mapping[str, str],
    token_counts: Mapping[str, int],
) -> InvertedIndex:
    """Shared final step of build_index and load: derive everything that is
    not stored explicitly (df, norms, digests) through one code path."""
    df = {term: len(plist) for term, plist in postings.items()}
    per_doc: dict[str, dict[str, int]] = {d: {} for d in doc_ids}
    for term, plist in postings.items():
        for doc_id, tf in plist:
            per_doc[doc_id][term] = tf
    doc_store = {
        d: DocRecord(paths.get(d, ""), token_counts[d], _doc_digest(per_doc[d]))
        for d in doc_ids
    }
    return InvertedIndex(
        doc_ids=tuple(doc_ids),
        df=df,
        postings=dict(postings),
        doc_norms=_compute_norms(postings, doc_ids, len(doc_ids)),
        doc_store=doc_store,
    )


def build_index(
    corpus: Iterable[NormalizedDocument],
    paths: Mapping[str, str] | None = None,
) -> InvertedIndex:
    """Index pre-processed documents. Terms are stems of non-stopword tokens.

    Raises DuplicateDocumentError when two documents share a doc_id.
    """
    paths = dict(paths or {})
    doc_ids: list[str] = []
    token_counts: dict[str, int] = {}
    by_term: dict[str, dict[str, int]] = {}
    for doc in corpus:
        if doc.doc_id in token_counts:
            raise DuplicateDocumentError(f"doc_id indexed twice: {doc.doc_id!r}")
        if "\t" in doc.doc_id or "\n" in doc.doc_id:
            raise DuplicateDocumentError(
                f"doc_id may not contain tab or newline: {doc.doc_id!r}"
            )
        doc_ids.append(doc.doc_id)
        token_counts[doc.doc_id] = len(doc.tokens)
        for term, tf in Counter(indexed_terms(doc)).items():
            by_term.setdefault(term, {})[doc.doc_id] = tf
    postings = {
        term: tuple(sorted(docs.items())) for term, docs in by_term.items()
    }
    return _assemble(doc_ids, postings, paths, token_counts)


def _query_terms(query: object) -> list[str]:
    terms = getattr(query, "terms", query)
    return [str(t) for t in terms]


def search(index: InvertedIndex, query: object, k: int) -> list[SearchHit]:
    """Top-k documents by cosine between TF-IDF vectors.

    `query` is anything with a `.terms` attribute or a plain sequence of
    stems. Documents sharing no term with the query are omitted. Results
    are sorted by descending score, ties broken by ascending doc_id.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    tf_q = Counter(_query_terms(query))
    if not tf_q:
        return []
    q_sq = 0.0
    dots: dict[str, float] = {}
    for term in sorted(tf_q):
        w_idf = _idf_value(index.n_docs, index.df.get(term, 0))
        w_q = tf_q[term] * w_idf
        q_sq += w_q * w_q
        for doc_id, tf_d in index.postings.get(term, ()):
            dots[doc_id] = dots.get(doc_id, 0.0) + w_q * tf_d * w_idf
    q_norm = math.sqrt(q_sq)
    hits = [
        SearchHit(doc_id, dot / (q_norm * index.doc_norms[doc_id]))
        for doc_id, dot in dots.items()
        if dot > 0.0
    ]
    hits.sort(key=lambda h: (-h.score, h.doc_id))
    return hits[:k]


def index_digest(index: InvertedIndex) -> str:
    """Stable content digest of the whole index, used in run manifests."""
    h = hashlib.sha256()
    h.update(f"docs={index.n_docs}\n".encode("utf-8"))
    for doc_id in index.doc_ids:
        rec = index.doc_store[doc_id]
        h.update(f"{doc_id}\t{rec.token_count}\t{rec.digest}\n".encode("utf-8"))
    for term in sorted(index.postings):
        h.update(f"{term}\t{index.df[term]}\n".encode("utf-8"))
    return h.hexdigest()


def persist(index: InvertedIndex, directory: str | Path) -> None:
    """Write the index as {header.bin, terms.dat, postings.dat, docs.tsv}."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ordinals = {doc_id: i for i, doc_id in enumerate(index.doc_ids)}
    terms = sorted(index.postings)

    postings_buf = bytearray()
    terms_buf = bytearray()
    for term in terms:
        plist = index.postings[term]
        raw = term.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise IndexFormatError(f"term too long to encode: {len(raw)} bytes")
        terms_buf += struct.pack("<H", len(raw)) + raw + struct.pack("<I", len(plist))
        for doc_id, tf in plist:
            postings_buf += _POSTING.pack(ordinals[doc_id], tf)

    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, 0, index.n_docs, len(terms), len(postings_buf)
    )
    (directory / "header.bin").write_bytes(header)
    (directory / "terms.dat").write_bytes(bytes(terms_buf))
    (directory / "postings.dat").write_bytes(bytes(postings_buf))
    lines = []
    for doc_id in index.doc_ids:
        rec = index.doc_store[doc_id]
        lines.append(f"{doc_id}\t{rec.path}\t{rec.token_count}\n")
    (directory / "docs.tsv").write_text("".join(lines), encoding="utf-8")


def load(directory: str | Path) -> InvertedIndex:
    """Read an index directory written by persist().

    Raises VersionMismatchError for an unsupported format version and
    TruncatedIndexError when any file is shorter than its declared size.
    """
    directory = Path(directory)
    try:
        header = (directory / "header.bin").read_bytes()
        terms_raw = (directory / "terms.dat").read_bytes()
        postings_raw = (directory / "postings.dat").read_bytes()
        docs_raw = (directory / "docs.tsv").read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise IndexFormatError(f"missing index file: {exc.filename}") from exc

    if len(header) != _HEADER.size:
        raise TruncatedIndexError(
            f"header.bin is {len(header)} bytes, expected {_HEADER.size}"
        )
    magic, version, _flags, n_docs, n_terms, postings_bytes = _HEADER.unpack(header)
    if magic != MAGIC:
        raise IndexFormatError(f"bad magic bytes: {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"index format version {version}, this build reads {FORMAT_VERSION}"
        )
    if len(postings_raw) != postings_bytes:
        raise TruncatedIndexError(
            f"postings.dat is {len(postings_raw)} bytes, header says {postings_bytes}"
        )

    doc_ids: list[str] = []
    paths: dict[str, str] = {}
    token_counts: dict[str, int] = {}
    for lineno, line in enumerate(docs_raw.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise IndexFormatError(f"docs.tsv line {lineno}: expected 3 columns")
        doc_id, path, count = parts
        if doc_id in token_counts:
            raise DuplicateDocumentError(f"docs.tsv repeats doc_id {doc_id!r}")
        doc_ids.append(doc_id)
        paths[doc_id] = path
        try:
            token_counts[doc_id] = int(count)
        except ValueError as exc:
            raise IndexFormatError(
                f"docs.tsv line {lineno}: bad token count {count!r}"
            ) from exc
    if len(doc_ids) != n_docs:
        raise IndexFormatError(
            f"docs.tsv lists {len(doc_ids)} documents, header says {n_docs}"
        )

    postings: dict[str, tuple[tuple[str, int], ...]] = {}
    t_off = 0
    p_off = 0
    for _ in range(n_terms):
        if t_off + 2 > len(terms_raw):
            raise TruncatedIndexError("terms.dat ends inside a term header")
        (term_len,) = struct.unpack_from("<H", terms_raw, t_off)
        t_off += 2
        if t_off + term_len + 4 > len(terms_raw):
            raise TruncatedIndexError("terms.dat ends inside a term entry")
        term = terms_raw[t_off : t_off + term_len].decode("utf-8")
        t_off += term_len
        (df_t,) = struct.unpack_from("<I", terms_raw, t_off)
        t_off += 4
        if term in postings:
            raise IndexFormatError(f"terms.dat repeats term {term!r}")
        entries = []
        for _ in range(df_t):
            if p_off + _POSTING.size > len(postings_raw):
                raise TruncatedIndexError("postings.dat shorter than declared df sum")
            ordinal, tf = _POSTING.unpack_from(postings_raw, p_off)
            p_off += _POSTING.size
            if ordinal >= n_docs:
                raise IndexFormatError(
                    f"posting for {term!r} names document ordinal {ordinal}, "
                    f"only {n_docs} documents exist"
                )
            entries.append((doc_ids[ordinal], tf))
        postings[term] = tuple(entries)
    if t_off != len(terms_raw):
        raise IndexFormatError(f"terms.dat has {len(terms_raw) - t_off} trailing bytes")
    if p_off != len(postings_raw):
        raise IndexFormatError(
            f"postings.dat has {len(postings_raw) - p_off} trailing bytes"
        )
    return _assemble(doc_ids, postings, paths, token_counts)
