"""Command-line interface.

Subcommands: index, detect, align, eval, lab, report, gen. Exit codes:
0 success, 1 usage error, 2 I/O error, 3 data-format error.

`detect` may fan suspicious documents out to worker threads; a final
deterministic sort makes the output independent of scheduling, and a run
manifest (config snapshot, resource bundle, index digest, timestamps) is
written next to every detections file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from . import alignment, config as config_mod, corpus as corpus_mod
from . import evaluation, index as index_mod, report as report_mod, retrieval
from .alignment import AlignmentConfig, Detection, Method
from .errors import CorpusLayoutError, DataFormatError, TextReuseError
from .textnorm import LanguageResources, NormalizedDocument, load_resources, prepare_document

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DATA = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this tool uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


@dataclasses.dataclass
class RunManifest:
    config: dict
    resources: str
    index_digest: str | None
    started: str
    finished: str

    def write(self, path: Path) -> None:
        path.write_text(
            json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _read_text(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _txt_files(path: Path) -> list[Path]:
    if path.is_dir():
        files = sorted(path.glob("*.txt"))
        if not files:
            raise FileNotFoundError(f"no *.txt files under {path}")
        return files
    if path.is_file():
        return [path]
    raise FileNotFoundError(str(path))


class _SourceCache:
    """Lazily prepared source documents, shared across worker threads."""

    def __init__(self, index_dir: Path, idx: index_mod.InvertedIndex, res: LanguageResources):
        self._index_dir = index_dir
        self._idx = idx
        self._res = res
        self._docs: dict[str, NormalizedDocument] = {}
        self._lock = threading.Lock()

    def get(self, doc_id: str) -> NormalizedDocument:
        with self._lock:
            doc = self._docs.get(doc_id)
        if doc is not None:
            return doc
        rec = self._idx.doc_store[doc_id]
        if not rec.path:
            raise DataFormatError(
                f"index has no stored path for {doc_id}; cannot align against it"
            )
        text = _read_text((self._index_dir / rec.path).resolve())
        doc = prepare_document(doc_id, text, self._res)
        with self._lock:
            self._docs.setdefault(doc_id, doc)
            return self._docs[doc_id]


def _pipeline_one(
    susp_path: Path,
    idx: index_mod.InvertedIndex,
    res: LanguageResources,
    cfg: config_mod.PipelineConfig,
    sources: _SourceCache,
) -> tuple[list[retrieval.Candidate], list[Detection]]:
    susp = prepare_document(susp_path.stem, _read_text(susp_path), res)
    candidates = retrieval.retrieve_candidates(
        susp, idx, cfg.retrieval, res.np_pattern
    )
    detections: list[Detection] = []
    for cand in candidates:
        src = sources.get(cand.doc_id)
        detections.extend(alignment.align(susp, src, idx, cfg.alignment))
    return candidates, detections


def _sorted_detections(detections: list[Detection]) -> list[Detection]:
    return sorted(
        detections,
        key=lambda d: (
            d.susp_doc_id,
            d.susp_span.start,
            d.susp_span.end,
            d.src_doc_id,
            d.src_span.start,
        ),
    )


def _cmd_index(args) -> int:
    res = load_resources(args.resources)
    out_dir = Path(args.out)
    docs = []
    paths = {}
    for path in _txt_files(Path(args.src)):
        docs.append(prepare_document(path.stem, _read_text(path), res))
        paths[path.stem] = os.path.relpath(path.resolve(), out_dir.resolve())
    idx = index_mod.build_index(docs, paths)
    index_mod.persist(idx, out_dir)
    started = _now()
    RunManifest(
        config={"resources": args.resources},
        resources=res.bundle_id,
        index_digest=index_mod.index_digest(idx),
        started=started,
        finished=_now(),
    ).write(out_dir / "manifest.json")
    print(
        f"indexed {idx.n_docs} documents, {len(idx.postings)} terms -> {out_dir}"
    )
    return EXIT_OK


def _cmd_detect(args) -> int:
    started = _now()
    cfg = config_mod.load_config(args.config)
    idx = index_mod.load(args.index)
    res = load_resources(cfg.resources)
    sources = _SourceCache(Path(args.index), idx, res)
    susp_paths = _txt_files(Path(args.susp))

    def work(path: Path):
        return path.stem, _pipeline_one(path, idx, res, cfg, sources)

    results: dict[str, tuple[list[retrieval.Candidate], list[Detection]]] = {}
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            for doc_id, payload in pool.map(work, susp_paths):
                results[doc_id] = payload
    else:
        for path in susp_paths:
            doc_id, payload = work(path)
            results[doc_id] = payload

    detections = _sorted_detections(
        [d for _cands, dets in results.values() for d in dets]
    )
    out_path = Path(args.out)
    alignment.write_detections(out_path, detections)
    if args.candidates:
        lines = ["susp_doc_id\tsrc_doc_id\tscore\tquery_count\n"]
        for doc_id in sorted(results):
            for c in results[doc_id][0]:
                lines.append(f"{doc_id}\t{c.doc_id}\t{c.score:.6f}\t{c.query_count}\n")
        Path(args.candidates).write_text("".join(lines), encoding="utf-8")
    RunManifest(
        config=config_mod.snapshot(cfg),
        resources=res.bundle_id,
        index_digest=index_mod.index_digest(idx),
        started=started,
        finished=_now(),
    ).write(out_path.with_name(out_path.name + ".manifest.json"))
    print(f"{len(detections)} detections -> {out_path}")
    return EXIT_OK


def _cmd_align(args) -> int:
    cfg = config_mod.load_config(args.config)
    res = load_resources(cfg.resources)
    susp = prepare_document(Path(args.susp).stem, _read_text(Path(args.susp)), res)
    src = prepare_document(Path(args.src).stem, _read_text(Path(args.src)), res)
    idx = index_mod.build_index([susp, src])
    detections = alignment.align(susp, src, idx, cfg.alignment)
    if args.out:
        alignment.write_detections(Path(args.out), detections)
    else:
        sys.stdout.write(alignment.DETECTIONS_HEADER)
        for d in detections:
            sys.stdout.write(
                f"{d.susp_doc_id}\t{d.susp_span.start}\t{d.susp_span.length}"
                f"\t{d.src_doc_id}\t{d.src_span.start}\t{d.src_span.length}"
                f"\t{d.score:.6f}\t{Method(d.method).value}\n"
            )
    if args.dotplot:
        Path(args.dotplot).write_text(
            report_mod.render_dotplot(susp, src, idx, cfg.alignment),
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_eval(args) -> int:
    corp = corpus_mod.load_corpus(args.corpus)
    detections = alignment.read_detections(args.det)
    summary = evaluation.evaluate(corp.gold, detections)
    print(json.dumps(dataclasses.asdict(summary), indent=2, sort_keys=True))
    return EXIT_OK


def _prepare_corpus(corp, res):
    src_docs = {
        d.doc_id: prepare_document(d.doc_id, d.text, res) for d in corp.src_docs
    }
    susp_docs = {
        d.doc_id: prepare_document(d.doc_id, d.text, res) for d in corp.susp_docs
    }
    return src_docs, susp_docs


def _cmd_lab(args) -> int:
    try:
        grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{args.grid}: not valid JSON: {exc}") from exc
    if not isinstance(grid, dict):
        raise DataFormatError(f"{args.grid}: grid root must be a JSON object")
    unknown = set(grid) - {"resources", "retrieval", "sweeps"}
    if unknown:
        raise DataFormatError(f"{args.grid}: unknown keys {sorted(unknown)}")
    sweeps = grid.get("sweeps")
    if not sweeps:
        raise DataFormatError(f"{args.grid}: empty or missing sweeps list")

    res = load_resources(grid.get("resources", "persian"))
    rcfg = config_mod._build_section(
        retrieval.RetrievalConfig, grid.get("retrieval", {}), "grid.retrieval"
    )
    corp = corpus_mod.load_corpus(args.corpus)
    src_docs, susp_docs = _prepare_corpus(corp, res)
    idx = index_mod.build_index(src_docs.values())

    candidates = {
        doc_id: retrieval.retrieve_candidates(doc, idx, rcfg, res.np_pattern)
        for doc_id, doc in sorted(susp_docs.items())
    }

    rows = []
    for entry_no, entry in enumerate(sweeps):
        if not isinstance(entry, dict):
            raise DataFormatError(f"{args.grid}: sweeps[{entry_no}] must be an object")
        unknown = set(entry) - {"method", "n", "thresholds"}
        if unknown:
            raise DataFormatError(
                f"{args.grid}: sweeps[{entry_no}]: unknown keys {sorted(unknown)}"
            )
        try:
            method = Method(entry.get("method", "VSM"))
        except ValueError as exc:
            raise DataFormatError(f"{args.grid}: sweeps[{entry_no}]: {exc}") from exc
        n_values = entry.get("n", [None])
        thresholds = entry.get("thresholds")
        if not thresholds:
            raise DataFormatError(
                f"{args.grid}: sweeps[{entry_no}] has no thresholds"
            )
        for n in n_values:
            for theta in thresholds:
                acfg = config_mod._build_section(
                    AlignmentConfig,
                    {"method": method, "threshold": theta, "n": n},
                    f"{args.grid}: sweeps[{entry_no}]",
                )
                detections: list[Detection] = []
                for susp_id, cands in candidates.items():
                    for cand in cands:
                        detections.extend(
                            alignment.align(
                                susp_docs[susp_id], src_docs[cand.doc_id], idx, acfg
                            )
                        )
                summary = evaluation.evaluate(corp.gold, detections)
                rows.append(
                    (
                        method.value,
                        "" if Method(method) is Method.VSM else acfg.effective_n,
                        theta,
                        summary.precision,
                        summary.recall,
                        summary.granularity,
                        summary.plagdet,
                    )
                )

    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["method", "n", "theta", "precision", "recall", "granularity", "plagdet"]
        )
        for method, n, theta, p, r, g, pd in rows:
            writer.writerow(
                [method, n, f"{theta:g}", f"{p:.4f}", f"{r:.4f}", f"{g:.4f}", f"{pd:.4f}"]
            )
    print(f"{len(rows)} grid points -> {args.out}")
    return EXIT_OK


def _cmd_report(args) -> int:
    corp = corpus_mod.load_corpus(args.corpus)
    detections = alignment.read_detections(args.det)
    by_doc: dict[str, list[Detection]] = {}
    for det in detections:
        by_doc.setdefault(det.susp_doc_id, []).append(det)
    sections = []
    for doc_id in sorted(by_doc):
        try:
            text = corp.susp(doc_id).text
        except KeyError:
            raise DataFormatError(
                f"detections reference unknown suspicious document {doc_id!r}"
            ) from None
        sections.append((doc_id, text, by_doc[doc_id]))
    Path(args.out).write_text(report_mod.render_report(sections), encoding="utf-8")
    print(f"report on {len(sections)} document(s) -> {args.out}")
    return EXIT_OK


def _cmd_gen(args) -> int:
    try:
        data = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{args.spec}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise DataFormatError(f"{args.spec}: generator spec must be a JSON object")
    spec = corpus_mod.genspec_from_json(data)
    corp = corpus_mod.generate(spec, Path(args.out))
    print(
        f"generated {len(corp.src_docs)} sources, {len(corp.susp_docs)} "
        f"suspicious documents, {len(corp.gold)} gold cases -> {args.out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="textreuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an inverted index from a source directory")
    p.add_argument("--src", required=True, help="directory of source *.txt files")
    p.add_argument("--out", required=True, help="index output directory")
    p.add_argument("--resources", required=True, help="resource bundle name or directory")
    p.set_defaults(func=_cmd_index)

    p = sub.add_parser("detect", help="run retrieval plus alignment end to end")
    p.add_argument("--susp", required=True, help="suspicious file or directory")
    p.add_argument("--index", required=True, help="index directory")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", required=True, help="detections output file")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    p.add_argument("--candidates", default=None, help="also write candidate lists here")
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("align", help="align one suspicious/source file pair")
    p.add_argument("--susp", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--out", default=None, help="detections file (default: stdout)")
    p.add_argument("--dotplot", default=None, help="write an SVG dot-plot here")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("eval", help="score a detections file against corpus gold")
    p.add_argument("--corpus", required=True)
    p.add_argument("--det", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("lab", help="sweep alignment parameters over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--grid", required=True, help="JSON grid file")
    p.add_argument("--out", required=True, help="CSV output file")
    p.set_defaults(func=_cmd_lab)

    p = sub.add_parser("report", help="render an HTML report from detections")
    p.add_argument("--det", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True, help="JSON generator spec")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.set_defaults(func=_cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TextReuseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
