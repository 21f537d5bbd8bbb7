"""Candidate retrieval stage: chunking, sentence ranking, keyword and
noun-phrase extraction, query formulation, search control, and the
end-to-end candidate list.

Expected numbers are hand-counted from the TF-IDF definition
(tf * (ln((N+1)/(df+1)) + 1)) over small fixtures whose stems equal their
surface forms, so every weight can be written down directly.
"""

from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from textreuse.corpus import GenSpec, generate
from textreuse.index import build_index
from textreuse.retrieval import (
    SEARCH_DEPTH,
    Candidate,
    NounPhrase,
    Query,
    QueryOrigin,
    RetrievalConfig,
    SentenceKeywords,
    chunk_document,
    chunk_tfidf,
    extract_keywords,
    extract_noun_phrases,
    formulate_queries,
    high_tfidf_threshold,
    rank_sentences,
    retrieve_candidates,
    search_control,
    write_candidates,
)
from textreuse.textnorm import (
    Span,
    load_resources,
    prepare_document,
    sentence_token_ranges,
)

RES = load_resources("latin")
CFG = RetrievalConfig()


def _doc(doc_id, text):
    return prepare_document(doc_id, text, RES)


# Background index used wherever a TF-IDF weight is asserted. N = 4, so
# df=3 gives idf ln(5/4)+1, df=1 gives ln(5/2)+1 and an unseen term
# gets ln(5)+1.
BG_IDX = build_index(
    [
        _doc("bg0", "formal stone"),
        _doc("bg1", "formal text"),
        _doc("bg2", "formal garden"),
        _doc("bg3", "book word"),
    ]
)

IDF_DF3 = math.log(5 / 4) + 1.0
IDF_DF1 = math.log(5 / 2) + 1.0
IDF_DF0 = math.log(5.0) + 1.0


# ---------------------------------------------------------------------------
# configuration validation


@pytest.mark.parametrize(
    "kwargs",
    [
        {"discard_ratio": 0.0},
        {"discard_ratio": 1.0},
        {"chunk_len": 10, "min_tail": 11},
        {"min_tail": 0},
        {"candidates_per_doc": 0},
        {"tfidf_high_percentile": 0.0},
        {"tfidf_high_percentile": 1.5},
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        RetrievalConfig(**kwargs)


# ---------------------------------------------------------------------------
# chunking


def _long_doc(n_tokens):
    return _doc("long", " ".join(["book"] * n_tokens))


def test_chunks_of_default_length():
    chunks = chunk_document(_long_doc(1200), CFG)
    assert [c.token_span for c in chunks] == [Span(0, 500), Span(500, 1000), Span(1000, 1200)]
    assert [c.chunk_id for c in chunks] == [0, 1, 2]


def test_short_tail_merges_into_previous_chunk():
    chunks = chunk_document(_long_doc(1050), CFG)
    assert [c.token_span for c in chunks] == [Span(0, 500), Span(500, 1050)]


def test_small_document_is_one_chunk():
    chunks = chunk_document(_long_doc(400), CFG)
    assert [c.token_span for c in chunks] == [Span(0, 400)]


def test_exact_multiple_has_no_tail():
    chunks = chunk_document(_long_doc(1000), CFG)
    assert [c.token_span for c in chunks] == [Span(0, 500), Span(500, 1000)]


def test_empty_document_has_no_chunks():
    assert chunk_document(_doc("empty", ""), CFG) == []


def test_sentence_belongs_to_chunk_of_first_token():
    cfg = RetrievalConfig(chunk_len=10, min_tail=2)
    doc = _doc("d", " ".join(["book text stone garden."] * 5))
    chunks = chunk_document(doc, cfg)
    # 20 tokens, sentences start at 0, 4, 8, 12, 16; sentence 2 straddles
    # the boundary at token 10 and is owned by the first chunk.
    assert [c.sentences for c in chunks] == [(0, 1, 2), (3, 4)]


def test_chunk_char_spans_cover_tokens():
    doc = _doc("d", " ".join(["book text stone garden."] * 5))
    chunks = chunk_document(doc, RetrievalConfig(chunk_len=10, min_tail=2))
    assert chunks[0].char_span.start == doc.tokens[0].span.start
    assert chunks[-1].char_span.end == doc.tokens[-1].span.end
    for c in chunks:
        assert c.char_span.start == doc.tokens[c.token_span.start].span.start
        assert c.char_span.end == doc.tokens[c.token_span.end - 1].span.end


_POOL = ["book", "stone", "garden", "text", "quick", "read", "pasel", "the", "of"]


@st.composite
def _docs(draw, max_sentences=12, max_words=8):
    sentences = draw(
        st.lists(
            st.lists(st.sampled_from(_POOL), min_size=1, max_size=max_words),
            min_size=1,
            max_size=max_sentences,
        )
    )
    return _doc("h", " ".join(" ".join(words) + "." for words in sentences))


@given(
    doc=_docs(max_sentences=20),
    chunk_len=st.integers(min_value=5, max_value=40),
    tail=st.integers(min_value=1, max_value=5),
)
def test_chunks_partition_tokens_and_sentences(doc, chunk_len, tail):
    cfg = RetrievalConfig(chunk_len=chunk_len, min_tail=min(tail, chunk_len))
    chunks = chunk_document(doc, cfg)
    n = len(doc.tokens)
    if n == 0:
        assert chunks == []
        return
    assert chunks[0].token_span.start == 0
    assert chunks[-1].token_span.end == n
    for prev, cur in zip(chunks, chunks[1:]):
        assert prev.token_span.end == cur.token_span.start
    for c in chunks[:-1]:
        assert c.token_span.length == cfg.chunk_len
    assert 1 <= chunks[-1].token_span.length <= cfg.chunk_len + cfg.min_tail - 1
    assigned = [s for c in chunks for s in c.sentences]
    assert assigned == sorted(range(len(doc.sentences)))


# ---------------------------------------------------------------------------
# sentence ranking

# Ten sentences in one chunk. Score is len/max_len + nouns/max_nouns with
# max_len=4 and max_nouns=4; the two weakest are the one-token noun-free
# sentences 3 and 7.
RANK_DOC = _doc(
    "rank",
    "book stone garden text. pasel caput zukuk. book pasel. caput. "
    "book text pasel caput. zukuk pasel caput. stone garden. pasel. "
    "book stone text pasel. caput zukuk.",
)


def test_ranking_drops_weakest_fifth():
    (chunk,) = chunk_document(RANK_DOC, CFG)
    assert len(chunk.sentences) == 10
    assert rank_sentences(RANK_DOC, chunk, CFG) == [0, 1, 2, 4, 5, 6, 8, 9]


def test_ranking_keeps_everything_when_quota_rounds_to_zero():
    doc = _doc("d", "book stone. pasel. caput zukuk. text.")
    (chunk,) = chunk_document(doc, CFG)
    assert rank_sentences(doc, chunk, CFG) == [0, 1, 2, 3]


def test_ranking_single_sentence_survives():
    doc = _doc("d", "pasel.")
    (chunk,) = chunk_document(doc, CFG)
    assert rank_sentences(doc, chunk, CFG) == [0]


def test_ranking_tie_discards_later_sentence():
    doc = _doc("d", " ".join(["book stone."] * 5))
    (chunk,) = chunk_document(doc, CFG)
    assert rank_sentences(doc, chunk, CFG) == [0, 1, 2, 3]


def test_ranking_empty_chunk():
    # One 30-token sentence: the later chunks hold no sentence start.
    doc = _doc("d", " ".join(["book"] * 30))
    cfg = RetrievalConfig(chunk_len=10, min_tail=2)
    chunks = chunk_document(doc, cfg)
    assert chunks[1].sentences == ()
    assert rank_sentences(doc, chunks[1], cfg) == []


@given(doc=_docs(max_sentences=15))
def test_ranking_quota_and_order(doc):
    for chunk in chunk_document(doc, CFG):
        kept = rank_sentences(doc, chunk, CFG)
        n = len(chunk.sentences)
        expected = n - min(math.floor(CFG.discard_ratio * n), n - 1) if n else 0
        assert len(kept) == expected
        assert kept == sorted(kept)
        assert set(kept) <= set(chunk.sentences)


# ---------------------------------------------------------------------------
# chunk TF-IDF and the high-TF-IDF threshold


def test_chunk_tfidf_multiplies_count_by_idf():
    doc = _doc("d", "book book stone.")
    (chunk,) = chunk_document(doc, CFG)
    weights = chunk_tfidf(doc, chunk, BG_IDX)
    assert set(weights) == {"book", "stone"}
    assert weights["book"] == pytest.approx(2 * IDF_DF1)
    assert weights["stone"] == pytest.approx(IDF_DF1)


def test_chunk_tfidf_skips_stopwords():
    doc = _doc("d", "the book of stone.")
    (chunk,) = chunk_document(doc, CFG)
    assert set(chunk_tfidf(doc, chunk, BG_IDX)) == {"book", "stone"}


def test_threshold_uses_nearest_rank():
    doc = _doc("d", "quick formal book stone.")
    (chunk,) = chunk_document(doc, CFG)
    weights = chunk_tfidf(doc, chunk, BG_IDX)
    # Sorted token weights: [ln(5/4)+1, ln(5/2)+1, ln(5/2)+1, ln5+1];
    # rank ceil(0.75 * 4) = 3 picks the third smallest.
    assert high_tfidf_threshold(doc, chunk, weights, 0.75) == pytest.approx(IDF_DF1)
    assert high_tfidf_threshold(doc, chunk, weights, 1.0) == pytest.approx(IDF_DF0)
    assert high_tfidf_threshold(doc, chunk, weights, 0.01) == pytest.approx(IDF_DF3)


def test_threshold_counts_tokens_not_terms():
    # "stone" occurs twice: its weight appears twice in the value list, so
    # the 0.75 rank lands on a stone token, not on the unseen "pasel".
    doc = _doc("d", "formal stone stone pasel.")
    (chunk,) = chunk_document(doc, CFG)
    weights = chunk_tfidf(doc, chunk, BG_IDX)
    assert high_tfidf_threshold(doc, chunk, weights, 0.75) == pytest.approx(2 * IDF_DF1)


def test_threshold_of_stopword_only_chunk_is_zero():
    doc = _doc("d", "the of a.")
    (chunk,) = chunk_document(doc, CFG)
    assert high_tfidf_threshold(doc, chunk, {}, 0.75) == 0.0


# ---------------------------------------------------------------------------
# keyword extraction


def test_keywords_take_nouns_and_strong_modifiers():
    # Weights: formal ln(5/4)+1, book ln(5/2)+1, rest ln5+1. The 0.75
    # threshold over five tokens is ln5+1, so the adjective "quick" and the
    # verb "read" qualify, "formal" does not, and "pasel" is untagged.
    doc = _doc("d", "book quick formal read pasel.")
    (chunk,) = chunk_document(doc, CFG)
    out = extract_keywords(doc, chunk, [0], BG_IDX, CFG)
    assert out == [SentenceKeywords(0, ("book", "quick", "read"), fallback=False)]


def test_keywords_fall_back_without_nouns():
    doc = _doc("d", "quick formal pasel.")
    (chunk,) = chunk_document(doc, CFG)
    out = extract_keywords(doc, chunk, [0], BG_IDX, CFG)
    assert out == [SentenceKeywords(0, ("quick", "pasel"), fallback=True)]


def test_keywords_select_strongest_sentences():
    # Max token weights per sentence: s0/s1 ln(5/2)+1, s2/s3 ln5+1; with
    # top_sentences=2 the unseen-heavy sentences 2 and 3 win.
    doc = _doc("d", "formal text. book garden. quick pasel. caput.")
    (chunk,) = chunk_document(doc, CFG)
    cfg = RetrievalConfig(top_sentences=2)
    out = extract_keywords(doc, chunk, [0, 1, 2, 3], BG_IDX, cfg)
    assert [kw.sentence_idx for kw in out] == [2, 3]
    assert out[0].keywords == ("quick",)
    assert out[1].keywords == ()


def test_keywords_fewer_sentences_than_quota():
    doc = _doc("d", "book stone. garden text.")
    (chunk,) = chunk_document(doc, CFG)
    out = extract_keywords(doc, chunk, [0, 1], BG_IDX, CFG)
    assert [kw.sentence_idx for kw in out] == [0, 1]
    assert out[0].keywords == ("book", "stone")
    assert out[1].keywords == ("garden", "text")


def test_keywords_deduplicate_keeping_first_position():
    doc = _doc("d", "book stone book.")
    (chunk,) = chunk_document(doc, CFG)
    out = extract_keywords(doc, chunk, [0], BG_IDX, CFG)
    assert out[0].keywords == ("book", "stone")


@given(doc=_docs())
def test_keywords_are_subsequences_of_their_sentence(doc):
    for chunk in chunk_document(doc, CFG):
        kept = rank_sentences(doc, chunk, CFG)
        out = extract_keywords(doc, chunk, kept, BG_IDX, CFG)
        assert len(out) == min(CFG.top_sentences, len(kept))
        assert [kw.sentence_idx for kw in out] == sorted(kw.sentence_idx for kw in out)
        ranges = sentence_token_ranges(doc)
        for kw in out:
            assert kw.sentence_idx in kept
            r = ranges[kw.sentence_idx]
            stems = [
                t.stem for t in doc.tokens[r.start : r.end] if not t.is_stopword
            ]
            it = iter(stems)
            assert all(term in it for term in kw.keywords)


# ---------------------------------------------------------------------------
# noun phrases


def test_noun_phrase_extends_over_nouns_and_adjectives():
    doc = _doc("d", "book stone quick read.")
    (chunk,) = chunk_document(doc, CFG)
    phrases = extract_noun_phrases(doc, chunk, [0], BG_IDX)
    assert len(phrases) == 1
    assert phrases[0].terms == ("book", "stone", "quick")
    assert phrases[0].sentence_idx == 0
    assert phrases[0].token_start == 0
    assert phrases[0].score == pytest.approx(2 * IDF_DF1 + IDF_DF0)


def test_no_phrase_without_a_noun_head():
    doc = _doc("d", "read pasel.")
    (chunk,) = chunk_document(doc, CFG)
    assert extract_noun_phrases(doc, chunk, [0], BG_IDX) == []


def test_noun_phrase_length_is_capped():
    # Five nouns in a row: the pattern allows a head plus at most three
    # continuations, so the fifth noun starts its own phrase.
    doc = _doc("d", "book stone garden text word.")
    (chunk,) = chunk_document(doc, CFG)
    phrases = extract_noun_phrases(doc, chunk, [0], BG_IDX)
    assert [p.terms for p in phrases] == [("book", "stone", "garden", "text"), ("word",)]
    assert [p.token_start for p in phrases] == [0, 4]


def test_noun_phrases_only_from_kept_sentences():
    doc = _doc("d", "book stone. garden text.")
    (chunk,) = chunk_document(doc, CFG)
    phrases = extract_noun_phrases(doc, chunk, [1], BG_IDX)
    assert phrases and all(p.sentence_idx == 1 for p in phrases)


def test_noun_phrases_sorted_by_score():
    # "student quick" is all unseen terms and outscores "book" alone.
    doc = _doc("d", "book. student quick.")
    (chunk,) = chunk_document(doc, CFG)
    phrases = extract_noun_phrases(doc, chunk, [0, 1], BG_IDX)
    assert [p.sentence_idx for p in phrases] == [1, 0]
    assert phrases[0].score == pytest.approx(2 * IDF_DF0)


# ---------------------------------------------------------------------------
# query formulation


def _kw(idx, *words):
    return SentenceKeywords(idx, tuple(words))


def _np(*words, score=1.0):
    return NounPhrase(tuple(words), score, 0, 0)


def test_one_query_per_sentence_plus_phrase_query():
    keywords = [_kw(0, "book", "stone"), _kw(2, "garden"), _kw(5, "text", "word")]
    phrases = [_np("book", "stone")]
    queries = formulate_queries(keywords, phrases, 7, CFG)
    assert [q.origin for q in queries] == [
        QueryOrigin.KEYWORD_SENTENCE,
        QueryOrigin.KEYWORD_SENTENCE,
        QueryOrigin.KEYWORD_SENTENCE,
        QueryOrigin.NOUN_PHRASE,
    ]
    assert [q.terms for q in queries] == [
        ("book", "stone"),
        ("garden",),
        ("text", "word"),
        ("book", "stone"),
    ]
    assert all(q.chunk_id == 7 for q in queries)


def test_keyword_query_truncated_to_term_cap():
    words = tuple(f"w{i:02d}" for i in range(14))
    (query,) = formulate_queries([SentenceKeywords(0, words)], [], 0, CFG)
    assert query.terms == words[:10]


def test_empty_keyword_sentences_are_skipped():
    queries = formulate_queries([_kw(0), _kw(1, "book")], [], 0, CFG)
    assert len(queries) == 1
    assert queries[0].terms == ("book",)


def test_no_phrases_means_no_phrase_query():
    queries = formulate_queries([_kw(0, "book")], [], 0, CFG)
    assert [q.origin for q in queries] == [QueryOrigin.KEYWORD_SENTENCE]


def test_phrases_packed_until_cap():
    phrases = [
        _np("a1", "a2", "a3", "a4"),
        _np("b1", "b2", "b3", "b4"),
        _np("c1", "c2", "c3", "c4"),
    ]
    (query,) = formulate_queries([], phrases, 0, CFG)
    assert query.terms == ("a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4", "c1", "c2")


def test_nothing_to_ask_yields_no_queries():
    assert formulate_queries([], [], 0, CFG) == []


# ---------------------------------------------------------------------------
# search control


def _q(*terms):
    return Query(tuple(terms), 0, QueryOrigin.KEYWORD_SENTENCE)


def test_first_query_always_runs():
    assert search_control(_q("book", "stone"), [], CFG)


def test_fully_covered_query_is_dropped():
    assert not search_control(_q("book", "stone"), [frozenset({"book", "stone", "text"})], CFG)


def test_query_below_overlap_threshold_runs():
    query = _q("a", "b", "c", "d", "e")
    assert search_control(query, [frozenset({"a", "b"})], CFG)


def test_query_at_overlap_threshold_is_dropped():
    query = _q("a", "b", "c", "d", "e")
    assert not search_control(query, [frozenset({"a", "b", "c"})], CFG)


def test_coverage_needs_a_single_document():
    # Two downloads each covering half do not add up.
    query = _q("a", "b", "c", "d")
    assert search_control(query, [frozenset({"a", "b"}), frozenset({"c", "d"})], CFG)


def test_empty_query_never_runs():
    assert not search_control(_q(), [], CFG)


def test_coverage_counts_distinct_terms():
    query = _q("book", "book", "stone")
    assert search_control(query, [frozenset({"book"})], CFG)
    assert not search_control(query, [frozenset({"book", "stone"})], CFG)


_TERMS = st.frozensets(st.sampled_from([f"t{i}" for i in range(12)]), max_size=8)


@given(
    terms=_TERMS.filter(bool),
    downloads=st.lists(_TERMS, max_size=6),
    extra=_TERMS,
)
def test_more_downloads_never_revive_a_query(terms, downloads, extra):
    query = _q(*sorted(terms))
    if not search_control(query, downloads, CFG):
        assert not search_control(query, downloads + [extra], CFG)


# ---------------------------------------------------------------------------
# end-to-end retrieval

SOURCES_AB = [_doc("sA", "book stone."), _doc("sB", "garden text.")]


def test_verbatim_sentence_pulls_its_source():
    idx = build_index(SOURCES_AB)
    candidates = retrieve_candidates(_doc("susp", "book stone."), idx, CFG)
    # The keyword query scores a perfect cosine against sA; the follow-up
    # phrase query repeats the same terms and is suppressed by search
    # control, so the source is hit exactly once.
    assert len(candidates) == 1
    top = candidates[0]
    assert top.doc_id == "sA"
    assert top.score == pytest.approx(1.0)
    assert top.query_count == 1


def test_each_topic_finds_its_source():
    idx = build_index(SOURCES_AB)
    candidates = retrieve_candidates(_doc("susp", "book stone. garden text."), idx, CFG)
    assert [c.doc_id for c in candidates] == ["sA", "sB"]
    # Each source: 1.0 from its own keyword query plus cos(4-term phrase
    # query, 2-term doc) = 2/(sqrt(4)*sqrt(2)).
    for c in candidates:
        assert c.score == pytest.approx(1.0 + 1 / math.sqrt(2))
        assert c.query_count == 2


def test_unknown_vocabulary_yields_no_candidates():
    idx = build_index(SOURCES_AB)
    assert retrieve_candidates(_doc("susp", "pasel caput zukuk."), idx, CFG) == []


FOUR_SOURCES = [
    _doc("sA", "book stone."),
    _doc("sB", "garden text."),
    _doc("sC", "student method."),
    _doc("sD", "word result."),
]


def test_aggregate_scoring_over_four_sources():
    # Keyword queries cover the first three sentences (top_sentences=3) and
    # score 1.0 each against their own source; the phrase query packs all
    # eight nouns and scores 2/(sqrt(8)*sqrt(2)) = 0.5 against every source.
    idx = build_index(FOUR_SOURCES)
    susp = _doc("susp", "book stone. garden text. student method. word result.")
    candidates = retrieve_candidates(susp, idx, CFG)
    assert [c.doc_id for c in candidates] == ["sA", "sB", "sC", "sD"]
    assert [c.query_count for c in candidates] == [2, 2, 2, 1]
    for c, expected in zip(candidates, [1.5, 1.5, 1.5, 0.5]):
        assert c.score == pytest.approx(expected)


def test_candidate_list_is_capped():
    idx = build_index(FOUR_SOURCES)
    susp = _doc("susp", "book stone. garden text. student method. word result.")
    cfg = RetrievalConfig(candidates_per_doc=3)
    assert [c.doc_id for c in retrieve_candidates(susp, idx, cfg)] == ["sA", "sB", "sC"]


@pytest.mark.parametrize("seed", range(5))
def test_planted_passages_recall_their_sources(seed, tmp_path):
    spec = GenSpec(
        seed=seed,
        n_src=6,
        n_susp=1,
        cases_per_susp=2,
        passage_len=10,
        src_sentences=14,
        susp_sentences=40,
        sentence_len_min=10,
        sentence_len_max=14,
        topic_pool_size=6,
    )
    corpus = generate(spec, tmp_path / f"corpus{seed}")
    idx = build_index([_doc(d.doc_id, d.text) for d in corpus.src_docs])
    for susp in corpus.susp_docs:
        found = {c.doc_id for c in retrieve_candidates(_doc(susp.doc_id, susp.text), idx, CFG)}
        wanted = {g.src_doc_id for g in corpus.gold if g.susp_doc_id == susp.doc_id}
        assert wanted, "generator must plant at least one passage"
        assert wanted <= found


def test_search_depth_constant():
    assert SEARCH_DEPTH == 10


# ---------------------------------------------------------------------------
# candidate file


def test_candidate_file_layout(tmp_path):
    path = tmp_path / "cands.tsv"
    write_candidates(path, "mydoc", [Candidate("s1", 0.5, 2), Candidate("s2", 1.25, 1)])
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "susp_doc_id\tsrc_doc_id\tscore\tquery_count"
    assert lines[1] == "mydoc\ts1\t0.500000\t2"
    assert lines[2] == "mydoc\ts2\t1.250000\t1"
    assert len(lines) == 3
