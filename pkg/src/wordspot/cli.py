"""Command-line interface: corpus generation, ingest, PCA, search, feedback, eval, serve."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from . import evaluation, feedback, image_io, retrieval, subspace, texts
from .errors import WordspotError

DEFAULT_BIND = os.environ.get("WORDSPOT_BIND", "127.0.0.1:8650")


def _cmd_gen_corpus(args):
    source = Path(args.text).read_text() if args.text else texts.DEFAULT_SOURCE_TEXT
    pages, labels = corpus_mod.generate_synthetic_corpus(
        source, args.docs, seed=args.seed, words_per_page=args.words_per_page
    )
    out = Path(args.out)
    (out / "pages").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    for i, (page, words) in enumerate(zip(pages, labels)):
        image_io.write_page(page, out / "pages" / f"page_{i:04d}.pbm")
        (out / "labels" / f"page_{i:04d}.txt").write_text(" ".join(words) + "\n")
    print(f"wrote {len(pages)} pages under {out}")


def _cmd_ingest(args):
    page_files = sorted(Path(args.pages).glob("*.p[bgn]m"))
    if not page_files:
        raise WordspotError(f"no raster pages found in {args.pages}")
    pages, labels = [], []
    for path in page_files:
        pages.append(image_io.read_page(path, threshold=args.threshold))
        if args.labels:
            label_path = Path(args.labels) / (path.stem + ".txt")
            labels.append(label_path.read_text().split())
    index = corpus_mod.ingest_corpus(pages, labels if args.labels else None)
    corpus_mod.save_index(index, args.out)
    print(f"indexed {len(index)} words from {len(pages)} pages into {args.out}")


def _cmd_pca_fit(args):
    index = corpus_mod.load_index(args.index)
    model = subspace.fit_pca(
        index.matrix,
        variance_target=args.variance,
        fixed_m=args.fixed_m,
        whiten=not args.no_whiten,
    )
    index = index.with_pca(model)
    corpus_mod.save_index(index, args.index)
    total = model.eigenvalues.sum()
    retained = model.eigenvalues[: model.m].sum() / total
    print(f"eigenvalue spectrum: head {np.round(model.eigenvalues[:8], 6)}")
    print(f"retained dimension m = {model.m} of {model.source_dim}")
    print(f"tail reconstruction error = {subspace.reconstruction_error(model):.6f}")
    print(f"retained variance ratio = {retained:.4f}")
    print(f"whitening = {'on' if model.whiten else 'off'}")


def _query_from_args(args, index):
    page = image_io.read_page(args.query_image, threshold=args.threshold)
    descriptor = retrieval.descriptor_from_word_image(page)
    return descriptor, retrieval.query_from_descriptor(
        descriptor, index, use_subspace=args.subspace
    )


def _print_results(index, ranking, top):
    print(f"{'word_id':>8} {'doc_id':>7} {'distance':>10} {'rate':>7}")
    for row in ranking.top(top):
        entry = index.entry(row.word_id)
        label = f"  {entry.label}" if entry.label else ""
        print(
            f"{row.word_id:>8} {entry.doc_id:>7} {row.distance:>10.4f}"
            f" {row.rate:>7.2f}{label}"
        )


def _cmd_search(args):
    index = corpus_mod.load_index(args.index)
    descriptor, query = _query_from_args(args, index)
    params = feedback.RocchioParams(
        alpha=args.alpha, beta=args.beta, gamma=args.gamma, strategy=args.strategy
    )
    session = feedback.create_session(
        index, query, params, shown_n=args.top, q0_original=descriptor
    )
    _print_results(index, session.rounds[-1].ranking, args.top)
    if args.save_session:
        session.index_path = str(Path(args.index).resolve())
        feedback.save_session(session, args.save_session)
        print(f"session saved to {args.save_session}")


def _parse_ids(raw):
    return [int(tok) for tok in raw.split(",") if tok.strip()] if raw else []


def _cmd_feedback(args):
    session = feedback.load_session(args.session)
    index_path = args.index or session.index_path
    if not index_path:
        raise WordspotError("session has no recorded index; pass --index")
    index = corpus_mod.load_index(index_path)
    if args.strategy:
        session.params = replace(session.params, strategy=args.strategy)
    judgments = [feedback.Judgment(w, True) for w in _parse_ids(args.relevant)]
    judgments += [feedback.Judgment(w, False) for w in _parse_ids(args.nonrelevant)]
    ranking = feedback.run_feedback_round(session, judgments, index)
    _print_results(index, ranking, session.shown_n)
    session.index_path = str(Path(index_path).resolve())
    feedback.save_session(session, args.session)
    print(f"round {session.round_index} saved to {args.session}")


def _eval_config(args):
    params = feedback.RocchioParams(
        alpha=args.alpha, beta=args.beta, gamma=args.gamma, strategy="positive"
    )
    return evaluation.EvalConfig(
        n_queries=args.queries,
        shown_per_round=args.shown,
        rounds=args.rounds,
        rate_threshold=args.theta,
        params=params,
        variance_target=args.variance,
        seed=args.seed,
    )


def _cmd_eval(args):
    index = corpus_mod.load_index(args.index)
    base = _eval_config(args)
    if args.strategies == "all":
        comparison = evaluation.compare_strategies(index, base)
        document = comparison.to_canonical_json()
        print(comparison.to_text_table())
        timings = {
            row["method"]: row["mean_scan_seconds"] for row in comparison.rows
        }
    else:
        strategy = args.strategies
        use_subspace = strategy == "pca"
        config = replace(
            base,
            strategy="baseline" if use_subspace else strategy,
            use_subspace=use_subspace,
        )
        report = evaluation.run_experiment(index, config)
        document = report.to_canonical_json()
        print(
            f"{strategy}: precision {100 * report.avg_precision:.2f}%"
            f"  recall {100 * report.avg_recall:.2f}%"
        )
        timings = {strategy: report.mean_scan_seconds}
    if args.out:
        Path(args.out).write_text(document)
        print(f"report written to {args.out}")
    for method, seconds in timings.items():
        print(f"mean scan time [{method}]: {1000 * seconds:.3f} ms")
    if args.timings_out:
        Path(args.timings_out).write_text(json.dumps(timings, indent=1, sort_keys=True))


def _cmd_serve(args):
    import uvicorn

    from .server import create_app

    host, _, port = (args.bind or DEFAULT_BIND).rpartition(":")
    app = create_app(index_path=args.index, pages_dir=args.pages)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordspot",
        description="OCR-free word-image retrieval with relevance feedback.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="render a synthetic page corpus")
    p.add_argument("--text", help="source text file (defaults to the embedded text)")
    p.add_argument("--docs", type=int, default=corpus_mod.DEFAULT_DOCS)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--words-per-page", type=int, default=corpus_mod.DEFAULT_WORDS_PER_PAGE)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen_corpus)

    p = sub.add_parser("ingest", help="build an index from page images")
    p.add_argument("--pages", required=True, help="directory of PBM/PGM pages")
    p.add_argument("--labels", help="directory of per-page label files")
    p.add_argument("--threshold", type=float, default=0.5,
                   help="gray binarization threshold (fraction of maxval)")
    p.add_argument("--out", required=True, help="index file path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("pca-fit", help="fit a subspace model into an index")
    p.add_argument("--index", required=True)
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--fixed-m", type=int, default=None)
    p.add_argument("--no-whiten", action="store_true")
    p.set_defaults(func=_cmd_pca_fit)

    p = sub.add_parser("search", help="rank the corpus against a query word image")
    p.add_argument("--index", required=True)
    p.add_argument("--query-image", required=True)
    p.add_argument("--subspace", action="store_true")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--strategy", default="positive",
                   choices=["positive", "negative", "combined"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.82)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--save-session", help="write a session file for later feedback")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("feedback", help="apply a judgment round to a saved session")
    p.add_argument("--session", required=True)
    p.add_argument("--index", help="index path (defaults to the one recorded)")
    p.add_argument("--relevant", default="", help="comma-separated word ids")
    p.add_argument("--nonrelevant", default="", help="comma-separated word ids")
    p.add_argument("--strategy", choices=["positive", "negative", "combined"])
    p.set_defaults(func=_cmd_feedback)

    p = sub.add_parser("eval", help="run the batch retrieval protocol")
    p.add_argument("--index", required=True)
    p.add_argument("--strategies", default="all",
                   choices=["all", "baseline", "positive", "negative", "combined", "pca"])
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--queries", type=int, default=30)
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--shown", type=int, default=10)
    p.add_argument("--theta", type=float, default=75.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.82)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--variance", type=float, default=0.95)
    p.add_argument("--out", help="canonical report path (deterministic bytes)")
    p.add_argument("--timings-out", help="separate timing sidecar path")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--index", required=True)
    p.add_argument("--pages", help="pages directory for thumbnail rendering")
    p.add_argument("--bind", default=None,
                   help=f"host:port (default {DEFAULT_BIND}, env WORDSPOT_BIND)")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except WordspotError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
