"""Offset-preserving normalization, segmentation, stemming and POS tagging.

Everything here is driven by a LanguageResources bundle loaded from a
directory of plain-text tables (see resources/README.md), so the same code
serves the shipped Persian bundle and the Latin-script bundle used in tests.
All operations are pure; a loaded bundle is immutable and thread-safe.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources as importlib_resources
from pathlib import Path
from typing import NamedTuple

from .errors import ResourceFormatError

ZWNJ = "‌"

#: Characters that end a sentence. A newline acts as a paragraph break.
SENTENCE_TERMINATORS = frozenset({".", "!", "?", "؟", "\n"})


class Span(NamedTuple):
    """Half-open character range [start, end)."""

    start: int
    end: int

    @property
    def length(self) -> int:
        return self.end - self.start


class Tag(str, Enum):
    NOUN = "NOUN"
    ADJ = "ADJ"
    VERB = "VERB"
    OTHER = "OTHER"


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    tag: Tag
    span: Span
    is_stopword: bool


@dataclass(frozen=True)
class SuffixRule:
    suffix: str
    min_stem_len: int
    #: Optional tag hint used by the OOV heuristic in pos_tag
    #: (plural-style suffixes hint NOUN, degree suffixes hint ADJ).
    hint: Tag | None = None


@dataclass(frozen=True)
class NpPattern:
    """Noun-phrase tag pattern: head tag followed by up to max_cont continuations."""

    head: Tag
    cont: frozenset[Tag]
    max_cont: int


DEFAULT_NP_PATTERN = NpPattern(Tag.NOUN, frozenset({Tag.NOUN, Tag.ADJ}), 3)


@dataclass(frozen=True)
class LanguageResources:
    """Immutable bundle of normalization and tagging tables.

    char_map maps a single codepoint to a single replacement codepoint or to
    None for deletion. The map is single-pass: no output of a rewrite is
    itself a rewrite input, which makes normalization idempotent.
    """

    bundle_id: str
    char_map: dict[str, str | None]
    stopwords: frozenset[str]
    suffix_rules: tuple[SuffixRule, ...]
    pos_lexicon: dict[str, Tag]
    np_pattern: NpPattern


@dataclass(frozen=True)
class NormalizedDocument:
    """A document plus everything downstream stages need.

    offset_map[i] gives the raw_text index of the character that produced
    norm_text[i]; it is monotonically non-decreasing. Sentence spans and
    token spans are in norm_text coordinates.
    """

    doc_id: str
    raw_text: str
    norm_text: str
    offset_map: tuple[int, ...]
    sentences: tuple[Span, ...]
    tokens: tuple[Token, ...]


def sentence_token_ranges(doc: NormalizedDocument) -> tuple[Span, ...]:
    """For each sentence, the half-open range of token indices it contains.

    Tokens and sentences are both ordered and every token lies inside
    exactly one sentence, so a single merge pass suffices.
    """
    ranges: list[Span] = []
    t = 0
    n_tokens = len(doc.tokens)
    for span in doc.sentences:
        first = t
        while t < n_tokens and doc.tokens[t].span.end <= span.end:
            t += 1
        ranges.append(Span(first, t))
    return tuple(ranges)


def _parse_lines(path: Path) -> list[str]:
    lines = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lines.append(line)
    return lines


def _parse_charmap(path: Path) -> dict[str, str | None]:
    char_map: dict[str, str | None] = {}
    for line in _parse_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ResourceFormatError(f"{path.name}: expected 'SRC_HEX DST_HEX|DEL', got {line!r}")
        try:
            src = chr(int(parts[0], 16))
        except ValueError as exc:
            raise ResourceFormatError(f"{path.name}: bad codepoint in {line!r}") from exc
        if parts[1] == "DEL":
            char_map[src] = None
        else:
            try:
                char_map[src] = chr(int(parts[1], 16))
            except ValueError as exc:
                raise ResourceFormatError(f"{path.name}: bad codepoint in {line!r}") from exc
    # Single-pass invariant: an output must never be an input.
    for src, dst in char_map.items():
        if dst is not None and dst in char_map:
            raise ResourceFormatError(
                f"{path.name}: rewrite output U+{ord(dst):04X} is itself a rewrite input"
            )
    return char_map


def _parse_suffix_rules(path: Path) -> tuple[SuffixRule, ...]:
    rules = []
    for line in _parse_lines(path):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ResourceFormatError(f"{path.name}: expected 'SUFFIX MIN_LEN [TAG]', got {line!r}")
        try:
            min_len = int(parts[1])
        except ValueError as exc:
            raise ResourceFormatError(f"{path.name}: bad min length in {line!r}") from exc
        hint = None
        if len(parts) == 3:
            try:
                hint = Tag(parts[2])
            except ValueError as exc:
                raise ResourceFormatError(f"{path.name}: unknown tag in {line!r}") from exc
        rules.append(SuffixRule(parts[0], min_len, hint))
    # Longest-first is an invariant of the rule list; sort defensively so a
    # hand-edited file cannot break stemming.
    rules.sort(key=lambda r: (-len(r.suffix), r.suffix))
    return tuple(rules)


def _parse_lexicon(path: Path) -> dict[str, Tag]:
    lexicon: dict[str, Tag] = {}
    for line in _parse_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ResourceFormatError(f"{path.name}: expected 'SURFACE TAG', got {line!r}")
        try:
            lexicon[parts[0]] = Tag(parts[1])
        except ValueError as exc:
            raise ResourceFormatError(f"{path.name}: unknown tag in {line!r}") from exc
    return lexicon


def _parse_np_pattern(path: Path) -> NpPattern:
    lines = _parse_lines(path)
    if len(lines) != 1:
        raise ResourceFormatError(f"{path.name}: expected exactly one pattern line")
    # Pattern shape: HEAD (T1|T2|...){0,N}
    import re

    m = re.fullmatch(r"(\w+)\s*\((\w+(?:\|\w+)*)\)\{0,(\d+)\}", lines[0])
    if not m:
        raise ResourceFormatError(f"{path.name}: cannot parse pattern {lines[0]!r}")
    try:
        head = Tag(m.group(1))
        cont = frozenset(Tag(t) for t in m.group(2).split("|"))
    except ValueError as exc:
        raise ResourceFormatError(f"{path.name}: unknown tag in pattern") from exc
    return NpPattern(head, cont, int(m.group(3)))


def bundle_path(name: str) -> Path:
    """Path of a resource bundle shipped with the package."""
    return Path(str(importlib_resources.files("textreuse") / "resources" / name))


def load_resources(spec: str | Path) -> LanguageResources:
    """Load a LanguageResources bundle.

    `spec` is either the name of a shipped bundle ("persian", "latin") or a
    directory containing charmap, stopwords, suffixes, lexicon and
    (optionally) np_pattern files.
    """
    path = Path(spec)
    if not path.is_dir():
        candidate = bundle_path(str(spec))
        if candidate.is_dir():
            path = candidate
        else:
            raise ResourceFormatError(f"no resource bundle at {spec!r}")
    for required in ("charmap", "stopwords", "suffixes", "lexicon"):
        if not (path / required).is_file():
            raise ResourceFormatError(f"resource bundle {path} is missing {required!r}")
    np_file = path / "np_pattern"
    return LanguageResources(
        bundle_id=path.name,
        char_map=_parse_charmap(path / "charmap"),
        stopwords=frozenset(_parse_lines(path / "stopwords")),
        suffix_rules=_parse_suffix_rules(path / "suffixes"),
        pos_lexicon=_parse_lexicon(path / "lexicon"),
        np_pattern=_parse_np_pattern(np_file) if np_file.is_file() else DEFAULT_NP_PATTERN,
    )


def normalize(raw_text: str, res: LanguageResources) -> tuple[str, tuple[int, ...]]:
    """Apply the character map codepoint-wise, keeping an offset map.

    Deleted codepoints produce no output character. offset_map[i] is the raw
    index of the character that produced norm_text[i]. Total function.
    """
    out: list[str] = []
    offsets: list[int] = []
    char_map = res.char_map
    for i, ch in enumerate(raw_text):
        if ch in char_map:
            mapped = char_map[ch]
            if mapped is None:
                continue
            out.append(mapped)
        else:
            out.append(ch)
        offsets.append(i)
    return "".join(out), tuple(offsets)


def _is_word_char(ch: str) -> bool:
    # ZWNJ is part of Persian multi-token words and must not split tokens.
    return ch.isalnum() or ch == ZWNJ


def segment(norm_text: str, res: LanguageResources) -> tuple[tuple[Span, ...], tuple[Token, ...]]:
    """Split normalized text into sentence spans and surface tokens.

    Sentences end at a terminator character (or at end of text); spans are
    trimmed of surrounding whitespace and emitted only when they contain at
    least one word character, so every token falls inside exactly one
    sentence. Tokens are maximal runs of word characters; stems and tags are
    filled in later by stem()/pos_tag().
    """
    sentences: list[Span] = []
    start = 0
    n = len(norm_text)
    for i, ch in enumerate(norm_text):
        if ch in SENTENCE_TERMINATORS:
            _append_sentence(sentences, norm_text, start, i + 1)
            start = i + 1
    if start < n:
        _append_sentence(sentences, norm_text, start, n)

    tokens: list[Token] = []
    i = 0
    while i < n:
        if _is_word_char(norm_text[i]):
            j = i + 1
            while j < n and _is_word_char(norm_text[j]):
                j += 1
            surface = norm_text[i:j]
            tokens.append(
                Token(
                    surface=surface,
                    stem=surface,
                    tag=Tag.OTHER,
                    span=Span(i, j),
                    is_stopword=surface in res.stopwords,
                )
            )
            i = j
        else:
            i += 1
    return tuple(sentences), tuple(tokens)


def _append_sentence(sentences: list[Span], text: str, start: int, end: int) -> None:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if start >= end:
        return
    if any(_is_word_char(ch) for ch in text[start:end]):
        sentences.append(Span(start, end))


def stem(surface: str, res: LanguageResources) -> str:
    """Strip the longest matching suffix once, guarded by min stem length."""
    for rule in res.suffix_rules:
        if surface.endswith(rule.suffix):
            remaining = len(surface) - len(rule.suffix)
            if remaining >= rule.min_stem_len:
                return surface[:remaining]
            # Rules are longest-first; a shorter rule may still apply.
    return surface


def _heuristic_tag(surface: str, res: LanguageResources) -> Tag:
    for rule in res.suffix_rules:
        if rule.hint is None:
            continue
        if surface.endswith(rule.suffix) and len(surface) - len(rule.suffix) >= rule.min_stem_len:
            return rule.hint
    return Tag.OTHER


def pos_tag(tokens: tuple[Token, ...], res: LanguageResources) -> tuple[Token, ...]:
    """Tag tokens: lexicon by surface, then by stem, then suffix heuristic.

    Stopwords never receive a content tag unless the lexicon explicitly
    assigns one.
    """
    lexicon = res.pos_lexicon
    tagged = []
    for tok in tokens:
        tag = lexicon.get(tok.surface)
        if tag is None:
            tag = lexicon.get(tok.stem)
        if tag is None:
            tag = Tag.OTHER if tok.is_stopword else _heuristic_tag(tok.surface, res)
        tagged.append(replace(tok, tag=tag))
    return tuple(tagged)


def prepare_document(doc_id: str, raw_text: str, res: LanguageResources) -> NormalizedDocument:
    """Full pre-processing: normalize, segment, stem, tag."""
    norm_text, offset_map = normalize(raw_text, res)
    sentences, tokens = segment(norm_text, res)
    stemmed = tuple(replace(t, stem=stem(t.surface, res)) for t in tokens)
    tagged = pos_tag(stemmed, res)
    return NormalizedDocument(
        doc_id=doc_id,
        raw_text=raw_text,
        norm_text=norm_text,
        offset_map=offset_map,
        sentences=sentences,
        tokens=tagged,
    )


def to_raw_span(doc: NormalizedDocument, span: Span) -> Span:
    """Map a non-empty norm_text range back to raw_text coordinates."""
    if span.start >= span.end:
        raise ValueError(f"cannot map empty span {span}")
    return Span(doc.offset_map[span.start], doc.offset_map[span.end - 1] + 1)


def is_diacritic(ch: str) -> bool:
    """True for combining marks (used only by tooling and tests)."""
    return unicodedata.category(ch) == "Mn"
