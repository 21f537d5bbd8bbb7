"""Generate a synthetic benchmark corpus and run the full pipeline on it.

Prints per-stage timings and the evaluation summary as JSON. The defaults
reproduce the shipped benchmark: 50 sources, 10 suspicious documents,
3 verbatim passages each, seed 7.

    python scripts/run_benchmark.py
    python scripts/run_benchmark.py --obfuscation SHUFFLE --seed 3
    python scripts/run_benchmark.py --out /tmp/bench --method CHAR_NGRAM
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from textreuse.alignment import AlignmentConfig, Method, align
from textreuse.corpus import GenSpec, Obfuscation, generate
from textreuse.evaluation import evaluate
from textreuse.index import build_index
from textreuse.retrieval import RetrievalConfig, retrieve_candidates
from textreuse.textnorm import load_resources, prepare_document


def run(corpus, acfg):
    res = load_resources("latin")
    timings = {}

    started = time.perf_counter()
    src_docs = {
        d.doc_id: prepare_document(d.doc_id, d.text, res) for d in corpus.src_docs
    }
    susp_docs = {
        d.doc_id: prepare_document(d.doc_id, d.text, res) for d in corpus.susp_docs
    }
    idx = build_index(src_docs.values())
    timings["index"] = time.perf_counter() - started

    started = time.perf_counter()
    candidates = {
        doc_id: retrieve_candidates(doc, idx, RetrievalConfig(), res.np_pattern)
        for doc_id, doc in sorted(susp_docs.items())
    }
    timings["retrieval"] = time.perf_counter() - started

    started = time.perf_counter()
    detections = []
    for susp_id, cands in candidates.items():
        for cand in cands:
            detections.extend(
                align(susp_docs[susp_id], src_docs[cand.doc_id], idx, acfg)
            )
    timings["alignment"] = time.perf_counter() - started

    return evaluate(corpus.gold, detections), detections, timings


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--obfuscation",
        choices=[o.value for o in Obfuscation],
        default=Obfuscation.NONE.value,
    )
    parser.add_argument(
        "--method", choices=[m.value for m in Method], default=Method.VSM.value
    )
    parser.add_argument("--threshold", type=float, default=0.65)
    parser.add_argument(
        "--out", default=None, help="keep the corpus here instead of a temp dir"
    )
    args = parser.parse_args(argv)

    spec = GenSpec(seed=args.seed, obfuscation=Obfuscation(args.obfuscation))
    acfg = AlignmentConfig(method=Method(args.method), threshold=args.threshold)

    with tempfile.TemporaryDirectory(prefix="textreuse-bench-") as tmp:
        corpus_dir = Path(args.out) if args.out else Path(tmp) / "corpus"
        started = time.perf_counter()
        corpus = generate(spec, corpus_dir)
        gen_time = time.perf_counter() - started
        print(
            f"corpus: {len(corpus.src_docs)} sources, {len(corpus.susp_docs)} "
            f"suspicious, {len(corpus.gold)} gold cases "
            f"({spec.obfuscation.value}, seed {spec.seed}) in {gen_time:.1f}s"
        )
        summary, detections, timings = run(corpus, acfg)

    for stage, seconds in timings.items():
        print(f"{stage:>10}: {seconds:6.1f}s")
    print(f"{len(detections)} detections with {acfg.method.value}")
    print(json.dumps(dataclasses.asdict(summary), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
