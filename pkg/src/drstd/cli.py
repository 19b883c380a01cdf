"""Subcommand front end for the toolkit.

Chains the batch stages as separate subcommands (index, search, rescore,
decide, score, sweep, diag, synth) plus a `pipeline` subcommand that runs
search -> rescore -> decide -> score in one invocation. Every
intermediate artifact is an ordinary file in the documented formats; the
pipeline itself round-trips each stage through disk, so its outputs are
byte-identical to chaining the individual subcommands.

Each run drops a `<subcommand>.manifest.json` next to its primary output
recording the resolved configuration and sha256 hashes of all inputs.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus_io import (FormatError, corpus_duration_seconds, parse_cn_corpus,
                        parse_keyword_list, parse_occurrence_table,
                        write_candidates, write_cn_corpus, write_keyword_list,
                        write_references)
from .decision import DEFAULT_BETA, DecisionPolicy, apply_decisions, yes_only
from .index_search import (build_index, corpus_fingerprint, dedup_overlaps,
                           load_index, save_index, search_all)
from .rescore import (RescoreConfig, build_weight_tables, rescore_candidates,
                      write_weight_tables)
from .scoring import (DEFAULT_DELTA_SECONDS, align, alpha_sweep, doc_rank_curves,
                      mtwv, score_detections, weight_performance_correlation,
                      write_alpha_sweep_csv, write_keyword_detail,
                      write_rank_curve_csv, write_report_json)
from .synth import SynthConfig, generate

log = logging.getLogger("drstd")

CANDIDATES_FILE = "candidates.tsv"
RESCORED_FILE = "rescored.tsv"
WEIGHTS_FILE = "weights.tsv"
DECIDED_FILE = "decided.tsv"
REPORT_FILE = "report.json"
DETAIL_FILE = "keyword_scores.tsv"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; flag misuse is exit 1
        raise _UsageError(message)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(primary_output: Path, subcommand: str, config: dict,
                    inputs: dict[str, Path]) -> None:
    out_dir = primary_output if primary_output.is_dir() else primary_output.parent
    manifest = {
        "tool": "drstd",
        "version": __version__,
        "subcommand": subcommand,
        "config": config,
        "inputs": {name: {"path": str(path), "sha256": _sha256(path)}
                   for name, path in sorted(inputs.items())},
    }
    path = out_dir / f"{subcommand}.manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _resolve_policy(args, corpus_seconds: float | None = None
                    ) -> DecisionPolicy:
    trial_seconds = args.trial_seconds
    if trial_seconds is None:
        if corpus_seconds is not None:
            trial_seconds = corpus_seconds
        elif args.decision == "kst":
            raise _UsageError("--trial-seconds is required with --decision kst")
        else:
            trial_seconds = 3600.0
    return DecisionPolicy(mode=args.decision, global_threshold=args.threshold,
                          beta=args.beta, trial_seconds=trial_seconds)


def _parse_grid(text: str) -> list[float]:
    try:
        grid = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"--alpha-grid must be comma-separated floats: {exc}")
    if not grid:
        raise _UsageError("--alpha-grid is empty")
    return grid


def cmd_index(args) -> None:
    corpus = parse_cn_corpus(args.corpus)
    index = build_index(corpus)
    out = Path(args.out)
    save_index(out, index)
    log.info("index: %d docs, %d postings, fingerprint %s",
             len(corpus), index.posting_count, index.fingerprint[:12])
    _write_manifest(out, "index", {"out": str(out)}, {"corpus": Path(args.corpus)})


def _load_or_build_index(args, corpus):
    if args.index:
        return load_index(args.index,
                          expected_fingerprint=corpus_fingerprint(corpus))
    return build_index(corpus)


def cmd_search(args) -> None:
    corpus = parse_cn_corpus(args.corpus)
    keywords = parse_keyword_list(args.keywords)
    index = _load_or_build_index(args, corpus)
    candidates = search_all(index, corpus, keywords, jobs=args.jobs)
    if not args.no_dedup:
        candidates = dedup_overlaps(candidates)
    out = Path(args.out)
    write_candidates(out, candidates)
    log.info("search: %d candidates for %d keywords over %d docs",
             len(candidates), len(keywords), len(corpus))
    _write_manifest(out, "search",
                    {"jobs": args.jobs, "no_dedup": args.no_dedup,
                     "out": str(out)},
                    {"corpus": Path(args.corpus),
                     "keywords": Path(args.keywords)})


def cmd_rescore(args) -> None:
    candidates = parse_occurrence_table(args.infile, "candidate")
    rescored, tables = rescore_candidates(candidates, RescoreConfig(args.alpha),
                                          jobs=args.jobs)
    out = Path(args.out)
    write_candidates(out, rescored)
    if args.weights_out:
        write_weight_tables(args.weights_out, tables)
    log.info("rescore: %d candidates, alpha=%s", len(rescored), args.alpha)
    _write_manifest(out, "rescore",
                    {"alpha": args.alpha, "jobs": args.jobs, "out": str(out),
                     "weights_out": args.weights_out},
                    {"candidates": Path(args.infile)})


def cmd_decide(args) -> None:
    candidates = parse_occurrence_table(args.infile, "candidate")
    policy = _resolve_policy(args)
    decided = apply_decisions(candidates, policy)
    out = Path(args.out)
    write_candidates(out, decided)
    log.info("decide: %d YES of %d (%s mode)",
             sum(c.decision == "YES" for c in decided), len(decided), policy.mode)
    _write_manifest(out, "decide",
                    {"decision": policy.mode, "threshold": policy.global_threshold,
                     "beta": policy.beta, "trial_seconds": policy.trial_seconds,
                     "out": str(out)},
                    {"candidates": Path(args.infile)})


def cmd_score(args) -> None:
    hypotheses = parse_occurrence_table(args.hyp, "candidate")
    references = parse_occurrence_table(args.ref, "ref")
    if hypotheses and all(c.decision is None for c in hypotheses):
        raise ValueError(
            "hypotheses carry no YES/NO decisions; run 'drstd decide' first")
    report = score_detections(hypotheses, references, args.trial_seconds,
                              args.beta, args.delta)
    if args.mtwv:
        report.mtwv_threshold, report.mtwv = mtwv(
            hypotheses, references, args.beta, args.trial_seconds, args.delta)
    out = Path(args.out)
    write_report_json(out, report)
    detail = Path(args.detail_out) if args.detail_out else out.parent / DETAIL_FILE
    write_keyword_detail(detail, report)
    log.info("score: ATWV %.4f over %d keywords (mean Pmiss %.4f, mean PFA %.6f)",
             report.atwv, report.num_scored_keywords, report.mean_p_miss,
             report.mean_p_fa)
    _write_manifest(out, "score",
                    {"beta": args.beta, "trial_seconds": args.trial_seconds,
                     "delta": args.delta, "mtwv": args.mtwv, "out": str(out),
                     "detail_out": str(detail)},
                    {"hypotheses": Path(args.hyp), "references": Path(args.ref)})


def cmd_sweep(args) -> None:
    candidates = parse_occurrence_table(args.infile, "candidate")
    references = parse_occurrence_table(args.ref, "ref")
    policy = _resolve_policy(args)
    grid = _parse_grid(args.alpha_grid)
    rows = alpha_sweep(candidates, references, grid, policy, args.delta)
    out = Path(args.out)
    write_alpha_sweep_csv(out, rows)
    best = max(rows, key=lambda r: r.atwv)
    log.info("sweep: best ATWV %.4f at alpha=%s (%d grid points)",
             best.atwv, best.alpha, len(rows))
    _write_manifest(out, "sweep",
                    {"alpha_grid": grid, "decision": policy.mode,
                     "threshold": policy.global_threshold, "beta": policy.beta,
                     "trial_seconds": policy.trial_seconds, "delta": args.delta,
                     "out": str(out)},
                    {"candidates": Path(args.infile), "references": Path(args.ref)})


def cmd_diag(args) -> None:
    candidates = parse_occurrence_table(args.infile, "candidate")
    references = parse_occurrence_table(args.ref, "ref")
    policy = _resolve_policy(args)
    tables = build_weight_tables(candidates, jobs=args.jobs)
    accepted = yes_only(apply_decisions(candidates, policy))
    alignment = align(accepted, references, args.delta)
    curve = doc_rank_curves(accepted, tables, alignment, args.max_rank)
    rho_precision, rho_recall = weight_performance_correlation(
        accepted, tables, alignment)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_rank_curve_csv(out_dir / "rank_curve.csv", curve)
    diagnostics = {
        "spearman_weight_precision": rho_precision,
        "spearman_weight_recall": rho_recall,
        "max_rank": args.max_rank,
        "decision": policy.mode,
        "beta": policy.beta,
        "trial_seconds": policy.trial_seconds,
        "delta": args.delta,
    }
    (out_dir / "diagnostics.json").write_text(
        json.dumps(diagnostics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    log.info("diag: weight-precision rho %.3f, weight-recall rho %.3f",
             rho_precision, rho_recall)
    _write_manifest(out_dir, "diag",
                    {"decision": policy.mode, "threshold": policy.global_threshold,
                     "beta": policy.beta, "trial_seconds": policy.trial_seconds,
                     "delta": args.delta, "max_rank": args.max_rank,
                     "jobs": args.jobs, "out": str(out_dir)},
                    {"candidates": Path(args.infile), "references": Path(args.ref)})


def cmd_synth(args) -> None:
    config = SynthConfig(num_docs=args.docs, slots_per_doc=args.slots,
                         vocab_size=args.vocab, num_keywords=args.keywords,
                         topic_affinity=args.topic_affinity,
                         docs_per_topic=args.docs_per_topic, noise=args.noise,
                         seed=args.seed)
    docs, keywords, refs = generate(config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_cn_corpus(out_dir / "corpus.jsonl", docs)
    write_keyword_list(out_dir / "keywords.tsv", keywords)
    write_references(out_dir / "refs.tsv", refs)
    log.info("synth: %d docs, %d keywords, %d references -> %s",
             len(docs), len(keywords), len(refs), out_dir)
    _write_manifest(out_dir, "synth",
                    {"docs": config.num_docs, "slots": config.slots_per_doc,
                     "vocab": config.vocab_size, "keywords": config.num_keywords,
                     "topic_affinity": config.topic_affinity,
                     "docs_per_topic": config.docs_per_topic,
                     "noise": config.noise, "seed": config.seed}, {})


def cmd_pipeline(args) -> None:
    corpus = parse_cn_corpus(args.corpus)
    keywords = parse_keyword_list(args.keywords)
    references = parse_occurrence_table(args.ref, "ref")
    policy = _resolve_policy(args, corpus_seconds=corpus_duration_seconds(corpus))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    index = _load_or_build_index(args, corpus)
    candidates = search_all(index, corpus, keywords, jobs=args.jobs)
    if not args.no_dedup:
        candidates = dedup_overlaps(candidates)
    write_candidates(out_dir / CANDIDATES_FILE, candidates)

    # Each stage re-reads the artifact it just wrote so the pipeline sees
    # exactly what chained subcommands would (6-decimal score quantization
    # included) and produces byte-identical files.
    candidates = parse_occurrence_table(out_dir / CANDIDATES_FILE, "candidate")
    rescored, tables = rescore_candidates(candidates, RescoreConfig(args.alpha),
                                          jobs=args.jobs)
    write_candidates(out_dir / RESCORED_FILE, rescored)
    write_weight_tables(out_dir / WEIGHTS_FILE, tables)

    rescored = parse_occurrence_table(out_dir / RESCORED_FILE, "candidate")
    decided = apply_decisions(rescored, policy)
    write_candidates(out_dir / DECIDED_FILE, decided)

    decided = parse_occurrence_table(out_dir / DECIDED_FILE, "candidate")
    report = score_detections(decided, references, policy.trial_seconds,
                              policy.beta, args.delta)
    write_report_json(out_dir / REPORT_FILE, report)
    write_keyword_detail(out_dir / DETAIL_FILE, report)
    log.info("pipeline: ATWV %.4f (alpha=%s, %s decisions) -> %s",
             report.atwv, args.alpha, policy.mode, out_dir)
    _write_manifest(out_dir, "pipeline",
                    {"alpha": args.alpha, "decision": policy.mode,
                     "threshold": policy.global_threshold, "beta": policy.beta,
                     "trial_seconds": policy.trial_seconds, "delta": args.delta,
                     "jobs": args.jobs, "no_dedup": args.no_dedup},
                    {"corpus": Path(args.corpus), "keywords": Path(args.keywords),
                     "references": Path(args.ref)})


def _add_decision_flags(sub) -> None:
    sub.add_argument("--decision", choices=["global", "kst"], default="kst",
                     help="thresholding policy (default: kst)")
    sub.add_argument("--threshold", type=float, default=0.5,
                     help="global-mode threshold (default: 0.5)")
    sub.add_argument("--beta", type=float, default=DEFAULT_BETA,
                     help=f"false-alarm cost ratio (default: {DEFAULT_BETA})")
    sub.add_argument("--trial-seconds", type=float, default=None,
                     help="total speech seconds defining false-alarm trials")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="drstd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"drstd {__version__}")
    parser.add_argument("--jobs", type=int, default=1,
                        help="internal parallelism; outputs do not depend on it")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("index", help="build an inverted index cache")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="index cache file")
    p.set_defaults(func=cmd_index)

    p = subs.add_parser("search", help="one-pass keyword retrieval")
    p.add_argument("--corpus", required=True)
    p.add_argument("--keywords", required=True)
    p.add_argument("--index", default=None,
                   help="optional index cache (validated against the corpus)")
    p.add_argument("--no-dedup", action="store_true",
                   help="keep heavily overlapping same-keyword hits")
    p.add_argument("--out", required=True, help="candidate TSV")
    p.set_defaults(func=cmd_search)

    p = subs.add_parser("rescore",
                        help="re-estimate confidences from document weights")
    p.add_argument("--in", dest="infile", required=True, help="candidate TSV")
    p.add_argument("--alpha", type=float, required=True,
                   help="interpolation coefficient in [0, 1]")
    p.add_argument("--weights-out", default=None,
                   help="optional TSV of per-keyword document weights")
    p.add_argument("--out", required=True, help="rescored candidate TSV")
    p.set_defaults(func=cmd_rescore)

    p = subs.add_parser("decide", help="apply YES/NO detection thresholds")
    p.add_argument("--in", dest="infile", required=True, help="candidate TSV")
    _add_decision_flags(p)
    p.add_argument("--out", required=True, help="decided candidate TSV")
    p.set_defaults(func=cmd_decide)

    p = subs.add_parser("score", help="term-weighted-value scoring")
    p.add_argument("--hyp", required=True, help="decided candidate TSV")
    p.add_argument("--ref", required=True, help="reference TSV")
    p.add_argument("--trial-seconds", type=float, required=True)
    p.add_argument("--beta", type=float, default=DEFAULT_BETA)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA_SECONDS,
                   help="alignment midpoint tolerance in seconds")
    p.add_argument("--mtwv", action="store_true",
                   help="also scan for the best global threshold")
    p.add_argument("--detail-out", default=None,
                   help=f"per-keyword TSV (default: {DETAIL_FILE} next to --out)")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(func=cmd_score)

    p = subs.add_parser("sweep", help="ATWV versus interpolation coefficient")
    p.add_argument("--in", dest="infile", required=True, help="candidate TSV")
    p.add_argument("--ref", required=True, help="reference TSV")
    p.add_argument("--alpha-grid", required=True,
                   help="comma-separated coefficients, e.g. 0,0.05,0.1")
    _add_decision_flags(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA_SECONDS)
    p.add_argument("--out", required=True, help="sweep CSV")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("diag",
                        help="document-rank curves and weight correlations")
    p.add_argument("--in", dest="infile", required=True, help="candidate TSV")
    p.add_argument("--ref", required=True, help="reference TSV")
    _add_decision_flags(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA_SECONDS)
    p.add_argument("--max-rank", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_diag)

    p = subs.add_parser("synth", help="generate a synthetic corpus",
                        epilog=("Writes corpus.jsonl, keywords.tsv and refs.tsv. "
                                "Spoken-token posteriors are uniform on "
                                "[0.78-0.72*noise, 0.97-0.46*noise]; the rest "
                                "of each slot's mass is split over 2-4 "
                                "competitor arcs by a flattened Dirichlet "
                                "(0.7*Dirichlet + 0.3*uniform), with keywords "
                                "appearing as occasional confusions, "
                                "preferentially in their home topic. "
                                "Deterministic for a given --seed."))
    p.add_argument("--docs", type=int, required=True)
    p.add_argument("--slots", type=int, default=60, help="slots per document")
    p.add_argument("--keywords", type=int, required=True)
    p.add_argument("--vocab", type=int, default=500)
    p.add_argument("--topic-affinity", type=float, default=0.8)
    p.add_argument("--docs-per-topic", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = subs.add_parser("pipeline",
                        help="search, rescore, decide and score in one run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--keywords", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--index", default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--alpha", type=float, required=True)
    _add_decision_flags(p)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA_SECONDS)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"drstd: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    if args.jobs < 1:
        print("drstd: --jobs must be >= 1", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except (_UsageError, FormatError, ValueError) as exc:
        print(f"drstd: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"drstd: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
