"""Static HTML report with highlighted passages, and SVG dot-plots.

Both renderers return plain strings and touch no files; the CLI decides
where output goes. Everything is deterministic: colors are assigned by
first appearance of each source in the sorted detection list.
"""

from __future__ import annotations

import html
from typing import Iterable, Sequence

from .alignment import (
    AlignmentConfig,
    Detection,
    Method,
    _match_ngram,
    match_sentences,
    sentence_vectors,
)
from .errors import InvalidOffsetError
from .index import InvertedIndex
from .textnorm import NormalizedDocument

_PALETTE = (
    "#ffd54f", "#81d4fa", "#a5d6a7", "#ef9a9a",
    "#ce93d8", "#ffcc80", "#b0bec5", "#f48fb1",
)

_PAGE_HEAD = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Text re-use report</title>
<style>
body { font-family: sans-serif; max-width: 60em; margin: 2em auto; }
.doc { border-top: 2px solid #444; margin-top: 2em; padding-top: 1em; }
.text { white-space: pre-wrap; line-height: 1.6; border: 1px solid #ccc;
        padding: 1em; direction: auto; }
.hit { border-radius: 3px; }
.legend li { margin: 0.2em 0; }
.swatch { display: inline-block; width: 1em; height: 1em;
          vertical-align: middle; margin-right: 0.4em; }
table.summary td { padding: 0.1em 0.8em 0.1em 0; }
</style>
</head>
<body>
<h1>Text re-use report</h1>
"""


def _union_length(spans: Iterable[tuple[int, int]]) -> int:
    total = 0
    last_end = None
    for start, end in sorted(spans):
        if last_end is None or start > last_end:
            total += end - start
            last_end = end
        elif end > last_end:
            total += end - last_end
            last_end = end
    return total


def _word_count(text: str) -> int:
    return len(text.split())


def _paragraph_count(text: str) -> int:
    paras = [p for p in text.split("\n\n") if p.strip()]
    return len(paras)


def _highlighted_text(text: str, detections: Sequence[Detection], colors) -> str:
    """The document text with one span element per detection.

    Detections are rendered in offset order; when one starts inside the
    previous highlight its visible extent is clipped to keep the markup
    well formed (the span element is still emitted).
    """
    ordered = sorted(
        detections, key=lambda d: (d.susp_span.start, d.susp_span.end)
    )
    parts: list[str] = []
    pos = 0
    for k, det in enumerate(ordered):
        start, end = det.susp_span.start, det.susp_span.end
        start = max(start, pos)
        end = max(end, start)
        parts.append(html.escape(text[pos:start]))
        title = (
            f"source {det.src_doc_id} "
            f"[{det.src_span.start}, {det.src_span.end}) score {det.score:.3f}"
        )
        parts.append(
            f'<span class="hit" id="det-{k}" '
            f'style="background:{colors[det.src_doc_id]}" '
            f'title="{html.escape(title)}">{html.escape(text[start:end])}</span>'
        )
        pos = end
    parts.append(html.escape(text[pos:]))
    return "".join(parts)


def render_report(
    documents: Sequence[tuple[str, str, Sequence[Detection]]],
) -> str:
    """Standalone HTML for (doc_id, raw text, detections) triples.

    Every document section shows the raw text with one highlight span per
    detection, color-keyed by source, a summary table (word count,
    paragraph count, plagiarism ratio over the union of detected spans),
    and a per-source legend.
    """
    out = [_PAGE_HEAD]
    for doc_id, text, detections in documents:
        for det in detections:
            if (
                det.susp_span.start < 0
                or det.susp_span.end > len(text)
                or det.susp_span.length <= 0
            ):
                raise InvalidOffsetError(
                    f"detection range {det.susp_span} outside document "
                    f"{doc_id} of length {len(text)}"
                )
        ordered = sorted(
            detections,
            key=lambda d: (d.susp_span.start, d.susp_span.end, d.src_doc_id),
        )
        sources: list[str] = []
        for det in ordered:
            if det.src_doc_id not in sources:
                sources.append(det.src_doc_id)
        colors = {
            src: _PALETTE[i % len(_PALETTE)] for i, src in enumerate(sources)
        }
        covered = _union_length(
            (d.susp_span.start, d.susp_span.end) for d in ordered
        )
        ratio = covered / len(text) if text else 0.0
        out.append(f'<div class="doc"><h2>{html.escape(doc_id)}</h2>\n')
        out.append('<table class="summary">\n')
        out.append(f"<tr><td>Words</td><td>{_word_count(text)}</td></tr>\n")
        out.append(
            f"<tr><td>Paragraphs</td><td>{_paragraph_count(text)}</td></tr>\n"
        )
        out.append(
            f"<tr><td>Detections</td><td>{len(ordered)}</td></tr>\n"
            f"<tr><td>Plagiarism ratio</td><td>{ratio:.1%}</td></tr>\n"
        )
        out.append("</table>\n")
        out.append('<ul class="legend">\n')
        for src in sources:
            n = sum(1 for d in ordered if d.src_doc_id == src)
            chars = _union_length(
                (d.susp_span.start, d.susp_span.end)
                for d in ordered
                if d.src_doc_id == src
            )
            out.append(
                f'<li><span class="swatch" style="background:{colors[src]}">'
                f"</span>{html.escape(src)}: {n} passage(s), {chars} chars</li>\n"
            )
        out.append("</ul>\n")
        out.append(
            f'<div class="text">{_highlighted_text(text, ordered, colors)}</div>\n'
        )
        out.append("</div>\n")
    out.append("</body>\n</html>\n")
    return "".join(out)


def pair_similarities(
    susp: NormalizedDocument,
    src: NormalizedDocument,
    idf_source: InvertedIndex | None,
    cfg: AlignmentConfig,
) -> list[tuple[int, int, float]]:
    """Sentence pairs scoring at or above the configured threshold."""
    if Method(cfg.method) is Method.VSM:
        if idf_source is None:
            raise ValueError("VSM dot-plots need an index for IDF values")
        return match_sentences(
            sentence_vectors(susp, idf_source),
            sentence_vectors(src, idf_source),
            cfg,
        )
    return _match_ngram(susp, src, cfg)


def render_dotplot(
    susp: NormalizedDocument,
    src: NormalizedDocument,
    idf_source: InvertedIndex | None,
    cfg: AlignmentConfig,
    cell: int = 6,
) -> str:
    """SVG grid of suspicious sentences (x) against source sentences (y)
    with one marker per pair whose similarity clears the threshold."""
    pairs = pair_similarities(susp, src, idf_source, cfg)
    nx = max(1, len(susp.sentences))
    ny = max(1, len(src.sentences))
    margin = 30
    width = margin + nx * cell + 10
    height = margin + ny * cell + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{margin}" y="10" width="{nx * cell}" height="{ny * cell}" '
        'fill="white" stroke="#888"/>',
        f'<text x="{margin + nx * cell / 2:.0f}" y="{height - 2}" '
        f'font-size="10" text-anchor="middle">{susp.doc_id} '
        f"({len(susp.sentences)} sentences)</text>",
        f'<text x="10" y="{10 + ny * cell / 2:.0f}" font-size="10" '
        f'text-anchor="middle" transform="rotate(-90 10 {10 + ny * cell / 2:.0f})">'
        f"{src.doc_id} ({len(src.sentences)} sentences)</text>",
    ]
    for i, j, sim in pairs:
        x = margin + i * cell
        y = 10 + j * cell
        shade = max(0, min(255, int(round(255 * (1.0 - sim)))))
        out.append(
            f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
            f'fill="rgb({shade},{shade},{shade})">'
            f"<title>susp {i} / src {j}: {sim:.3f}</title></rect>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
