"""Detection scoring: alignment, term-weighted values, and diagnostics.

Accepted detections are aligned to reference occurrences per keyword and
document: a hypothesis counts as correct when its midpoint lies within a
tolerance of an unmatched reference's midpoint, each reference being
consumed at most once (candidate pairs are matched greedily, nearest in
time first). From the per-keyword counts follow the miss rate, the
time-trial false-alarm rate, and the term-weighted value

    TWV(t) = 1 - P_miss(t) - beta * P_FA(t)

averaged over keywords that actually occur. Diagnostics cover the best
achievable global threshold (MTWV), document-rank precision/recall
curves, rank correlations between document weights and detection
performance, and interpolation-coefficient sweeps.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus_io import Candidate, RefOccurrence
from .decision import DecisionPolicy, apply_decisions, yes_only
from .rescore import DocWeightTable, RescoreConfig, rescore_candidates

DEFAULT_DELTA_SECONDS = 0.5

CORRECT = "correct"
FALSE_ALARM = "false_alarm"


@dataclass(slots=True)
class KeywordCounts:
    n_true: int = 0
    n_correct: int = 0
    n_fa: int = 0

    @property
    def n_miss(self) -> int:
        return self.n_true - self.n_correct


@dataclass(slots=True)
class AlignmentResult:
    """Labels parallel to the hypothesis/reference sequences given to align()."""

    hypothesis_labels: list[str]
    reference_matched: list[bool]
    keyword_counts: dict[str, KeywordCounts]


def align(hypotheses: Sequence[Candidate], references: Sequence[RefOccurrence],
          delta_seconds: float = DEFAULT_DELTA_SECONDS) -> AlignmentResult:
    """Match accepted detections against references.

    Within each (kw_id, doc_id) group, every hypothesis/reference pair
    whose midpoints lie within `delta_seconds` is a match candidate; pairs
    are accepted greedily in order of increasing midpoint distance, each
    hypothesis and each reference being used at most once. Unmatched
    hypotheses are false alarms; unmatched references are misses.
    """
    if delta_seconds <= 0.0:
        raise ValueError(f"delta_seconds must be > 0, got {delta_seconds}")
    labels = [FALSE_ALARM] * len(hypotheses)
    matched = [False] * len(references)
    counts: dict[str, KeywordCounts] = {}
    for ref in references:
        counts.setdefault(ref.kw_id, KeywordCounts()).n_true += 1
    for hyp in hypotheses:
        counts.setdefault(hyp.kw_id, KeywordCounts())

    hyp_groups: dict[tuple[str, str], list[int]] = {}
    for i, hyp in enumerate(hypotheses):
        hyp_groups.setdefault((hyp.kw_id, hyp.doc_id), []).append(i)
    ref_groups: dict[tuple[str, str], list[int]] = {}
    for j, ref in enumerate(references):
        ref_groups.setdefault((ref.kw_id, ref.doc_id), []).append(j)

    for key, hyp_idx in hyp_groups.items():
        ref_idx = ref_groups.get(key, [])
        if not ref_idx:
            continue
        pairs = []
        for i in hyp_idx:
            h_mid = hypotheses[i].midpoint
            for j in ref_idx:
                r = references[j]
                dist = abs(h_mid - (r.start + r.duration / 2.0))
                if dist <= delta_seconds:
                    pairs.append((dist, hypotheses[i].start,
                                  hypotheses[i].duration, r.start, i, j))
        pairs.sort()
        hyp_used: set[int] = set()
        for _dist, _hs, _hd, _rs, i, j in pairs:
            if i in hyp_used or matched[j]:
                continue
            hyp_used.add(i)
            matched[j] = True
            labels[i] = CORRECT

    for i, hyp in enumerate(hypotheses):
        if labels[i] == CORRECT:
            counts[hyp.kw_id].n_correct += 1
        else:
            counts[hyp.kw_id].n_fa += 1
    return AlignmentResult(hypothesis_labels=labels, reference_matched=matched,
                           keyword_counts=counts)


def keyword_rates(alignment: AlignmentResult, trial_seconds: float
                  ) -> dict[str, tuple[float, float]]:
    """Per-keyword (P_miss, P_FA); keywords with no references are skipped.

    P_FA uses one-second trials: the false-alarm opportunity count is the
    trial duration minus the number of true occurrences.
    """
    rates: dict[str, tuple[float, float]] = {}
    for kw_id, c in alignment.keyword_counts.items():
        if c.n_true == 0:
            continue
        if trial_seconds <= c.n_true:
            raise ValueError(
                f"trial_seconds {trial_seconds} must exceed the {c.n_true} "
                f"true occurrences of keyword '{kw_id}'")
        p_miss = 1.0 - c.n_correct / c.n_true
        p_fa = c.n_fa / (trial_seconds - c.n_true)
        rates[kw_id] = (p_miss, p_fa)
    return rates


def atwv(rates: Mapping[str, tuple[float, float]], beta: float) -> float:
    """Actual term-weighted value: 1 - mean over keywords of P_miss + beta*P_FA."""
    if not rates:
        raise ValueError("no scoreable keywords (every keyword has zero references)")
    total = sum(p_miss + beta * p_fa for p_miss, p_fa in rates.values())
    return 1.0 - total / len(rates)


@dataclass(slots=True)
class KeywordScore:
    n_true: int
    n_correct: int
    n_fa: int
    p_miss: float
    p_fa: float
    twv: float


@dataclass(slots=True)
class ScoreReport:
    """Aggregate and per-keyword detection scores plus the scoring config."""

    beta: float
    trial_seconds: float
    delta_seconds: float
    atwv: float
    mean_p_miss: float
    mean_p_fa: float
    keywords: dict[str, KeywordScore] = field(default_factory=dict)
    mtwv: float | None = None
    mtwv_threshold: float | None = None

    @property
    def num_scored_keywords(self) -> int:
        return len(self.keywords)


def build_report(alignment: AlignmentResult, trial_seconds: float, beta: float,
                 delta_seconds: float = DEFAULT_DELTA_SECONDS) -> ScoreReport:
    rates = keyword_rates(alignment, trial_seconds)
    keywords = {}
    for kw_id, (p_miss, p_fa) in sorted(rates.items()):
        c = alignment.keyword_counts[kw_id]
        keywords[kw_id] = KeywordScore(
            n_true=c.n_true, n_correct=c.n_correct, n_fa=c.n_fa,
            p_miss=p_miss, p_fa=p_fa, twv=1.0 - p_miss - beta * p_fa)
    n = len(rates)
    return ScoreReport(
        beta=beta, trial_seconds=trial_seconds, delta_seconds=delta_seconds,
        atwv=atwv(rates, beta),
        mean_p_miss=sum(p for p, _ in rates.values()) / n,
        mean_p_fa=sum(f for _, f in rates.values()) / n,
        keywords=keywords)


def score_detections(hypotheses: Sequence[Candidate],
                     references: Sequence[RefOccurrence],
                     trial_seconds: float, beta: float,
                     delta_seconds: float = DEFAULT_DELTA_SECONDS) -> ScoreReport:
    """Align accepted detections and build the full score report.

    Rows decided NO are dropped; undecided rows count as accepted.
    """
    accepted = [h for h in hypotheses if h.decision != "NO"]
    alignment = align(accepted, references, delta_seconds)
    return build_report(alignment, trial_seconds, beta, delta_seconds)


def report_json_dict(report: ScoreReport) -> dict:
    out = {
        "config": {"beta": report.beta, "trial_seconds": report.trial_seconds,
                   "delta_seconds": report.delta_seconds},
        "aggregate": {"atwv": report.atwv, "mean_p_miss": report.mean_p_miss,
                      "mean_p_fa": report.mean_p_fa,
                      "num_scored_keywords": report.num_scored_keywords},
        "keywords": {
            kw: {"n_true": s.n_true, "n_correct": s.n_correct, "n_fa": s.n_fa,
                 "p_miss": s.p_miss, "p_fa": s.p_fa, "twv": s.twv}
            for kw, s in report.keywords.items()
        },
    }
    if report.mtwv is not None:
        out["aggregate"]["mtwv"] = report.mtwv
        out["aggregate"]["mtwv_threshold"] = report.mtwv_threshold
    return out


def write_report_json(path: str | Path, report: ScoreReport) -> None:
    Path(path).write_text(
        json.dumps(report_json_dict(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def write_keyword_detail(path: str | Path, report: ScoreReport) -> None:
    lines = ["# kw_id\tn_true\tn_correct\tn_fa\tp_miss\tp_fa\ttwv"]
    for kw_id, s in sorted(report.keywords.items()):
        lines.append(f"{kw_id}\t{s.n_true}\t{s.n_correct}\t{s.n_fa}"
                     f"\t{s.p_miss!r}\t{s.p_fa!r}\t{s.twv!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def mtwv(scored_candidates: Sequence[Candidate],
         references: Sequence[RefOccurrence], beta: float, trial_seconds: float,
         delta_seconds: float = DEFAULT_DELTA_SECONDS) -> tuple[float, float]:
    """Best global threshold in hindsight and its term-weighted value.

    Scans every distinct candidate score as a threshold (YES iff
    score >= threshold) plus one sentinel above the maximum score (the
    empty detection set); these cover every achievable YES set. Among
    ties the highest threshold wins.
    """
    distinct = sorted({c.score for c in scored_candidates}, reverse=True)
    if distinct:
        thresholds = [math.nextafter(distinct[0], math.inf)] + distinct
    else:
        thresholds = [1.0]
    best_threshold = thresholds[0]
    best_twv = -math.inf
    for threshold in thresholds:
        accepted = [c for c in scored_candidates if c.score >= threshold]
        alignment = align(accepted, references, delta_seconds)
        value = atwv(keyword_rates(alignment, trial_seconds), beta)
        if value > best_twv:
            best_twv = value
            best_threshold = threshold
    return best_threshold, best_twv


def _average_ranks(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=float)
    sorted_vals = arr[order]
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation with average ranks on ties.

    Returns NaN when either argument has zero rank variance (correlation
    undefined). Invariant under strictly monotone transforms of either
    argument.
    """
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    if denom == 0.0:
        return math.nan
    return float(np.dot(rx, ry)) / denom


def _doc_hit_counts(hypotheses: Sequence[Candidate], alignment: AlignmentResult
                    ) -> dict[tuple[str, str], tuple[int, int]]:
    """(kw_id, doc_id) -> (accepted hits in doc, correct hits in doc)."""
    counts: dict[tuple[str, str], list[int]] = {}
    for hyp, label in zip(hypotheses, alignment.hypothesis_labels):
        entry = counts.setdefault((hyp.kw_id, hyp.doc_id), [0, 0])
        entry[0] += 1
        if label == CORRECT:
            entry[1] += 1
    return {key: (hits, correct) for key, (hits, correct) in counts.items()}


def ranked_docs(table: DocWeightTable) -> list[str]:
    """Documents of a weight table in descending weight order (ties by id)."""
    return sorted(table.entries, key=lambda d: (-table.entries[d][1], d))


def doc_rank_curves(hypotheses: Sequence[Candidate],
                    weight_tables: Mapping[str, DocWeightTable],
                    alignment: AlignmentResult,
                    max_rank: int) -> list[tuple[int, float, float]]:
    """Average per-rank detection precision and recall over keywords.

    For each keyword, its documents are sorted by descending ranking
    weight; the document at rank k contributes its detection precision
    (correct / accepted hits in it, 0 when it has none) and recall
    (correct in it / total true occurrences of the keyword). Rows are
    (rank, avg_precision, avg_recall), averaged over the keywords that
    have at least k ranked documents; keywords without references are
    skipped. `hypotheses` must be the sequence the alignment was computed
    from.
    """
    per_doc = _doc_hit_counts(hypotheses, alignment)
    sums: dict[int, list[float]] = {}
    for kw_id, table in weight_tables.items():
        kw_counts = alignment.keyword_counts.get(kw_id)
        if kw_counts is None or kw_counts.n_true == 0:
            continue
        for rank, doc_id in enumerate(ranked_docs(table)[:max_rank], start=1):
            hits, correct = per_doc.get((kw_id, doc_id), (0, 0))
            precision = correct / hits if hits else 0.0
            recall = correct / kw_counts.n_true
            acc = sums.setdefault(rank, [0.0, 0.0, 0])
            acc[0] += precision
            acc[1] += recall
            acc[2] += 1
    return [(rank, sums[rank][0] / sums[rank][2], sums[rank][1] / sums[rank][2])
            for rank in sorted(sums)]


def weight_performance_correlation(hypotheses: Sequence[Candidate],
                                   weight_tables: Mapping[str, DocWeightTable],
                                   alignment: AlignmentResult
                                   ) -> tuple[float, float]:
    """Rank correlation of document weights against detection performance.

    Pools (weight, per-document precision) and (weight, per-document
    recall) pairs over every keyword with references and every document
    in its weight table, and returns the two Spearman coefficients.
    """
    per_doc = _doc_hit_counts(hypotheses, alignment)
    weights: list[float] = []
    precisions: list[float] = []
    recalls: list[float] = []
    for kw_id, table in weight_tables.items():
        kw_counts = alignment.keyword_counts.get(kw_id)
        if kw_counts is None or kw_counts.n_true == 0:
            continue
        for doc_id, (_score, weight) in table.entries.items():
            hits, correct = per_doc.get((kw_id, doc_id), (0, 0))
            weights.append(weight)
            precisions.append(correct / hits if hits else 0.0)
            recalls.append(correct / kw_counts.n_true)
    return spearman(weights, precisions), spearman(weights, recalls)


@dataclass(slots=True)
class SweepPoint:
    alpha: float
    atwv: float
    mean_p_miss: float
    mean_p_fa: float


def alpha_sweep(candidates: Sequence[Candidate],
                references: Sequence[RefOccurrence],
                grid: Sequence[float], policy: DecisionPolicy,
                delta_seconds: float = DEFAULT_DELTA_SECONDS) -> list[SweepPoint]:
    """Rescore, decide and score the same candidate set at each alpha.

    The alpha=0 row reproduces the baseline pipeline exactly, since
    interpolating with coefficient 0 leaves every score bit-identical.
    """
    rows = []
    for alpha in grid:
        rescored, _tables = rescore_candidates(candidates, RescoreConfig(alpha))
        decided = apply_decisions(rescored, policy)
        alignment = align(yes_only(decided), references, delta_seconds)
        report = build_report(alignment, policy.trial_seconds, policy.beta,
                              delta_seconds)
        rows.append(SweepPoint(alpha=alpha, atwv=report.atwv,
                               mean_p_miss=report.mean_p_miss,
                               mean_p_fa=report.mean_p_fa))
    return rows


def write_rank_curve_csv(path: str | Path,
                         rows: Sequence[tuple[int, float, float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "avg_precision", "avg_recall"])
        for rank, precision, recall in rows:
            writer.writerow([rank, repr(precision), repr(recall)])


def write_alpha_sweep_csv(path: str | Path, rows: Sequence[SweepPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "atwv", "mean_pmiss", "mean_pfa"])
        for row in rows:
            writer.writerow([repr(row.alpha), repr(row.atwv),
                             repr(row.mean_p_miss), repr(row.mean_p_fa)])
