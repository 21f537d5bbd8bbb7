"""Corpus loading (PAN-style layout) and deterministic synthetic generation.

A corpus directory holds src/*.txt, susp/*.txt, a whitespace-separated
`pairs` file, and xml/*.xml gold annotations. The generator fabricates such
a corpus with exactly known gold spans so the whole pipeline can be
exercised and scored at desk scale.

Generator construction notes. The vocabulary is split into one large
common pool plus a small disjoint topic pool per source document. Every
source sentence carries exactly two adjacent words from its document's
topic pool, chosen as a distinct unordered pair per sentence, so two
different sentences share at most one topic word; with the strong IDF
those words get from appearing in a single document, any two non-copied
sentences stay well below the default alignment threshold while copied
sentences match their originals outright. Suspicious documents are
common-pool prose with passages copied in at stratified points, far
enough apart that two passages never fall into the same retrieval chunk.

The companion lexicon tags every topic word NOUN and every common word
OTHER. Nouns then exist only inside copied material, which pins down the
retrieval stage's behavior on this corpus: noun phrases and the keyword
set of a copied sentence consist purely of topic words, such queries hit
exactly the one source that shares those words, and no other downloaded
document can ever cover enough of them to suppress the query. Because
keyword sets and phrase vocabulary are order-free per sentence, the
candidate lists are also invariant under within-sentence shuffling.

A separate RNG stream drives obfuscation so that corpora generated with
the same seed but different obfuscation differ only inside the copied
sentences.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field, fields
from enum import Enum
from math import comb, floor
from pathlib import Path

from .errors import (
    CorpusLayoutError,
    DanglingReferenceError,
    DataFormatError,
    InvalidOffsetError,
)
from .evaluation import GoldCase, load_gold

_VOCAB_SHUFFLE_SEED = 0x5EEDF00D
_OBFUSCATION_STREAM = 0x0BF05CA7
_SYNONYM_SHIFT = 37

_ONSETS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"
_CODAS = ["", "k", "l", "m", "n", "t"]

DEFAULT_COMMON_SIZE = 800


def default_vocabulary(size: int = 1300) -> tuple[str, ...]:
    """Deterministic pseudo-word list: two CV syllables plus an optional
    consonant coda, shuffled with a fixed internal seed. The shapes avoid
    every suffix in the latin resource bundle, so surface == stem."""
    words = [
        o1 + v1 + o2 + v2 + coda
        for o1, v1, o2, v2, coda in itertools.product(
            _ONSETS, _VOWELS, _ONSETS, _VOWELS, _CODAS
        )
    ]
    if size > len(words):
        raise ValueError(f"at most {len(words)} distinct words available")
    random.Random(_VOCAB_SHUFFLE_SEED).shuffle(words)
    return tuple(words[:size])


def vocabulary_tag(index: int, common_size: int = DEFAULT_COMMON_SIZE) -> str:
    """POS tag assigned to the vocabulary word at a given index; the latin
    resource bundle's lexicon lists these assignments. Topic words are the
    only nouns, so on generated corpora every noun phrase and every copied
    sentence's keyword set is topical."""
    return "OTHER" if index < common_size else "NOUN"


class Obfuscation(str, Enum):
    NONE = "NONE"
    SHUFFLE = "SHUFFLE"
    SYNONYM = "SYNONYM"


SYNONYM_RATE = 0.3


@dataclass(frozen=True)
class CorpusDocument:
    doc_id: str
    path: str
    text: str


@dataclass(frozen=True)
class Corpus:
    src_docs: tuple[CorpusDocument, ...]
    susp_docs: tuple[CorpusDocument, ...]
    pairs: tuple[tuple[str, str], ...]
    gold: frozenset[GoldCase]

    def src(self, doc_id: str) -> CorpusDocument:
        for doc in self.src_docs:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def susp(self, doc_id: str) -> CorpusDocument:
        for doc in self.susp_docs:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)


@dataclass(frozen=True)
class GenSpec:
    seed: int = 7
    n_src: int = 50
    n_susp: int = 10
    cases_per_susp: int = 3
    passage_len: int = 10
    obfuscation: Obfuscation = Obfuscation.NONE
    vocabulary: tuple[str, ...] = field(default_factory=default_vocabulary)
    common_size: int = DEFAULT_COMMON_SIZE
    src_sentences: int = 40
    susp_sentences: int = 240
    sentence_len_min: int = 10
    sentence_len_max: int = 14
    topic_pool_size: int = 10

    def __post_init__(self) -> None:
        for name in ("n_src", "n_susp", "cases_per_susp", "passage_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.vocabulary:
            raise ValueError("vocabulary must be non-empty")
        if self.passage_len > self.src_sentences:
            raise ValueError(
                f"passage_len {self.passage_len} exceeds src_sentences "
                f"{self.src_sentences}; no source can supply such a passage"
            )
        if not 3 <= self.sentence_len_min <= self.sentence_len_max:
            raise ValueError("need 3 <= sentence_len_min <= sentence_len_max")
        if comb(self.topic_pool_size, 2) < self.src_sentences:
            raise ValueError(
                f"topic_pool_size {self.topic_pool_size} yields only "
                f"{comb(self.topic_pool_size, 2)} distinct word pairs, fewer "
                f"than src_sentences {self.src_sentences}"
            )
        if self.common_size < 2:
            raise ValueError("common_size must be >= 2")
        if self.common_size + self.n_src * self.topic_pool_size > len(self.vocabulary):
            raise ValueError(
                f"vocabulary of {len(self.vocabulary)} words cannot hold "
                f"{self.common_size} commons plus {self.n_src} topic pools "
                f"of {self.topic_pool_size}"
            )
        if self.susp_sentences < self.cases_per_susp:
            raise ValueError("susp_sentences must be >= cases_per_susp")

    def common_pool(self) -> tuple[str, ...]:
        return self.vocabulary[: self.common_size]

    def topic_pool(self, src_idx: int) -> tuple[str, ...]:
        lo = self.common_size + src_idx * self.topic_pool_size
        return self.vocabulary[lo : lo + self.topic_pool_size]


def genspec_from_json(data: dict) -> GenSpec:
    """Build a GenSpec from a parsed JSON object; unknown keys are errors."""
    known = {f.name for f in fields(GenSpec)}
    unknown = set(data) - known
    if unknown:
        raise DataFormatError(f"unknown generator keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "obfuscation" in kwargs:
        try:
            kwargs["obfuscation"] = Obfuscation(kwargs["obfuscation"])
        except ValueError as exc:
            raise DataFormatError(str(exc)) from exc
    if "vocabulary" in kwargs:
        kwargs["vocabulary"] = tuple(kwargs["vocabulary"])
    try:
        return GenSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"bad generator spec: {exc}") from exc


def synonym_of(word: str, spec: GenSpec) -> str:
    """Deterministic synonym partner: commons rotate within the common
    pool, topic words rotate within their own pool."""
    idx = spec.vocabulary.index(word)
    if idx < spec.common_size:
        shift = _SYNONYM_SHIFT % spec.common_size or 1
        return spec.vocabulary[(idx + shift) % spec.common_size]
    offset = idx - spec.common_size
    pool = offset // spec.topic_pool_size
    pos = offset % spec.topic_pool_size
    lo = spec.common_size + pool * spec.topic_pool_size
    return spec.vocabulary[lo + (pos + 1) % spec.topic_pool_size]


@dataclass(frozen=True)
class _PlannedCase:
    susp_idx: int
    src_idx: int
    src_start: int
    insert_at: int


def _sentence_text(words: list[str]) -> str:
    return " ".join(words) + "."


def _doc_text(sentences: list[str]) -> str:
    return " ".join(sentences)


def _sentence_offsets(sentences: list[str]) -> list[int]:
    offsets = [0]
    for s in sentences[:-1]:
        offsets.append(offsets[-1] + len(s) + 1)
    return offsets


def _source_sentences(spec: GenSpec, src_idx: int, rng: random.Random) -> list[str]:
    """Sentences of one source: each draws a distinct pair of topic words
    placed at adjacent slots (a two-noun phrase), all other slots from the
    common pool."""
    pool = spec.topic_pool(src_idx)
    common = spec.common_pool()
    pair_choices = rng.sample(
        list(itertools.combinations(range(len(pool)), 2)), spec.src_sentences
    )
    sentences = []
    for a, b in pair_choices:
        length = rng.randint(spec.sentence_len_min, spec.sentence_len_max)
        slot = rng.randrange(length - 1)
        words = [""] * length
        words[slot] = pool[a]
        words[slot + 1] = pool[b]
        for k in range(length):
            if not words[k]:
                words[k] = rng.choice(common)
        sentences.append(_sentence_text(words))
    return sentences


def _obfuscate(sentence: str, spec: GenSpec, rng_obf: random.Random) -> str:
    words = sentence.rstrip(".").split(" ")
    mode = Obfuscation(spec.obfuscation)
    if mode is Obfuscation.NONE:
        return sentence
    if mode is Obfuscation.SHUFFLE:
        rng_obf.shuffle(words)
        return _sentence_text(words)
    k = floor(SYNONYM_RATE * len(words))
    for pos in sorted(rng_obf.sample(range(len(words)), k)):
        words[pos] = synonym_of(words[pos], spec)
    return _sentence_text(words)


_PASSAGE_DRAW_TRIES = 1000


def _draw_passage(
    spec: GenSpec,
    rng: random.Random,
    used_ranges: dict[int, list[tuple[int, int]]],
) -> tuple[int, int]:
    """Pick a (source, start sentence) whose range overlaps no passage
    already copied from that source. Overlapping gold source ranges would
    make one correct detection count against two cases and distort
    granularity, so they are rejected (bounded retries)."""
    for _ in range(_PASSAGE_DRAW_TRIES):
        src_idx = rng.randrange(spec.n_src)
        start = rng.randrange(spec.src_sentences - spec.passage_len + 1)
        end = start + spec.passage_len
        if all(
            end <= lo or hi <= start for lo, hi in used_ranges.get(src_idx, [])
        ):
            used_ranges.setdefault(src_idx, []).append((start, end))
            return src_idx, start
    raise ValueError(
        "could not place a non-overlapping source passage; the corpus spec "
        "asks for more passage material than the sources hold"
    )


def generate(spec: GenSpec, directory: str | Path) -> Corpus:
    """Write a synthetic corpus under `directory` and return it loaded.

    The same spec always produces a byte-identical directory tree. Copied
    passages land at stratified insertion points (one per equal slice of
    the base document) so retrieval chunks never contain two whole
    passages.
    """
    directory = Path(directory)
    rng = random.Random(spec.seed)
    rng_obf = random.Random(spec.seed ^ _OBFUSCATION_STREAM)

    src_sentences = [
        _source_sentences(spec, i, rng) for i in range(spec.n_src)
    ]

    seg = spec.susp_sentences // spec.cases_per_susp
    plans: list[list[_PlannedCase]] = []
    susp_bases: list[list[str]] = []
    used_ranges: dict[int, list[tuple[int, int]]] = {}
    for j in range(spec.n_susp):
        base = []
        common = spec.common_pool()
        for _ in range(spec.susp_sentences):
            length = rng.randint(spec.sentence_len_min, spec.sentence_len_max)
            base.append(_sentence_text([rng.choice(common) for _ in range(length)]))
        susp_bases.append(base)
        # Insertion points are stratified (one per equal slice of the base)
        # and jittered only within a window narrow enough that consecutive
        # passages stay farther apart than one retrieval chunk can reach
        # (500 tokens at the minimum sentence length), so no chunk ever
        # contains material from two passages.
        window = max(1, seg - 500 // spec.sentence_len_min)
        cases = []
        for c in range(spec.cases_per_susp):
            src_idx, src_start = _draw_passage(spec, rng, used_ranges)
            cases.append(
                _PlannedCase(
                    susp_idx=j,
                    src_idx=src_idx,
                    src_start=src_start,
                    insert_at=c * seg + rng.randrange(window),
                )
            )
        plans.append(cases)

    (directory / "src").mkdir(parents=True, exist_ok=True)
    (directory / "susp").mkdir(parents=True, exist_ok=True)
    (directory / "xml").mkdir(parents=True, exist_ok=True)

    src_names = [f"source-{i:05d}.txt" for i in range(spec.n_src)]
    for name, sentences in zip(src_names, src_sentences):
        (directory / "src" / name).write_text(
            _doc_text(sentences) + "\n", encoding="utf-8"
        )

    pair_lines: set[tuple[str, str]] = set()
    for j in range(spec.n_susp):
        susp_name = f"suspicious-{j:05d}.txt"
        out: list[str] = []
        records = []
        prev = 0
        for case in sorted(plans[j], key=lambda c: c.insert_at):
            out.extend(susp_bases[j][prev : case.insert_at])
            first_final = len(out)
            for k in range(spec.passage_len):
                original = src_sentences[case.src_idx][case.src_start + k]
                out.append(_obfuscate(original, spec, rng_obf))
            records.append((case, first_final))
            prev = case.insert_at
        out.extend(susp_bases[j][prev:])

        text = _doc_text(out)
        offsets = _sentence_offsets(out)
        src_offset_cache = {
            case.src_idx: _sentence_offsets(src_sentences[case.src_idx])
            for case, _ in records
        }
        features = []
        for case, first in records:
            last = first + spec.passage_len - 1
            this_offset = offsets[first]
            this_end = offsets[last] + len(out[last])
            s_offsets = src_offset_cache[case.src_idx]
            s_first = case.src_start
            s_last = case.src_start + spec.passage_len - 1
            src_offset = s_offsets[s_first]
            src_end = s_offsets[s_last] + len(src_sentences[case.src_idx][s_last])
            features.append(
                (
                    this_offset,
                    this_end - this_offset,
                    src_names[case.src_idx],
                    src_offset,
                    src_end - src_offset,
                )
            )
            pair_lines.add((susp_name, src_names[case.src_idx]))

        (directory / "susp" / susp_name).write_text(text + "\n", encoding="utf-8")
        xml = [f'<document reference="{susp_name}">']
        for this_offset, this_len, src_name, src_offset, src_len in sorted(features):
            xml.append(
                f'  <feature name="plagiarism"'
                f' this_offset="{this_offset}" this_length="{this_len}"'
                f' source_reference="{src_name}"'
                f' source_offset="{src_offset}" source_length="{src_len}"/>'
            )
        xml.append("</document>")
        (directory / "xml" / susp_name.replace(".txt", ".xml")).write_text(
            "\n".join(xml) + "\n", encoding="utf-8"
        )

    (directory / "pairs").write_text(
        "".join(f"{a} {b}\n" for a, b in sorted(pair_lines)), encoding="utf-8"
    )
    return load_corpus(directory)


def _read_docs(directory: Path, root: Path) -> tuple[CorpusDocument, ...]:
    docs = []
    for path in sorted(directory.glob("*.txt")):
        docs.append(
            CorpusDocument(
                doc_id=path.stem,
                path=str(path.relative_to(root)),
                text=path.read_text(encoding="utf-8"),
            )
        )
    return tuple(docs)


def load_corpus(directory: str | Path) -> Corpus:
    """Read a corpus directory: src/, susp/, pairs, xml/."""
    directory = Path(directory)
    for sub in ("src", "susp", "xml"):
        if not (directory / sub).is_dir():
            raise CorpusLayoutError(f"{directory} lacks the {sub}/ subdirectory")
    pairs_path = directory / "pairs"
    if not pairs_path.is_file():
        raise CorpusLayoutError(f"{directory} lacks the pairs file")

    src_docs = _read_docs(directory / "src", directory)
    susp_docs = _read_docs(directory / "susp", directory)
    src_ids = {d.doc_id: d for d in src_docs}
    susp_ids = {d.doc_id: d for d in susp_docs}

    pairs: list[tuple[str, str]] = []
    for lineno, line in enumerate(
        pairs_path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"pairs:{lineno}: expected two filenames")
        susp_id, src_id = (Path(p).stem for p in parts)
        if susp_id not in susp_ids:
            raise DanglingReferenceError(
                f"pairs:{lineno}: no suspicious document {parts[0]!r}"
            )
        if src_id not in src_ids:
            raise DanglingReferenceError(
                f"pairs:{lineno}: no source document {parts[1]!r}"
            )
        pairs.append((susp_id, src_id))

    gold = load_gold(directory / "xml")
    for case in gold:
        if case.susp_doc_id not in susp_ids:
            raise DanglingReferenceError(
                f"gold references unknown suspicious document {case.susp_doc_id!r}"
            )
        if case.src_doc_id not in src_ids:
            raise DanglingReferenceError(
                f"gold references unknown source document {case.src_doc_id!r}"
            )
        if case.susp_span.end > len(susp_ids[case.susp_doc_id].text):
            raise InvalidOffsetError(
                f"gold suspicious range {case.susp_span} exceeds "
                f"{case.susp_doc_id} length"
            )
        if case.src_span.end > len(src_ids[case.src_doc_id].text):
            raise InvalidOffsetError(
                f"gold source range {case.src_span} exceeds {case.src_doc_id} length"
            )
    return Corpus(
        src_docs=src_docs,
        susp_docs=susp_docs,
        pairs=tuple(pairs),
        gold=frozenset(gold),
    )
