"""drstd: spoken term detection batch toolkit.

Searches keywords in confusion-network transcriptions, re-estimates
occurrence confidence with document ranking weights, applies threshold
decisions, and scores the result with term-weighted-value metrics.
"""

__version__ = "0.1.0"

from .corpus_io import (Candidate, ConfusionNetworkDoc, FormatError,
                        KeywordEntry, RefOccurrence, Slot)
from .decision import DecisionPolicy, apply_decisions, kst_threshold
from .index_search import (InvertedIndex, Posting, build_index, dedup_overlaps,
                           search_all, search_keyword)
from .rescore import (DocWeightTable, RescoreConfig, document_ranking_weights,
                      reestimate_confidence, rescore_candidates,
                      sum_document_scores)
from .scoring import (AlignmentResult, ScoreReport, align, alpha_sweep, atwv,
                      doc_rank_curves, keyword_rates, mtwv, spearman)
from .synth import SynthConfig, generate

__all__ = [
    "AlignmentResult", "Candidate", "ConfusionNetworkDoc", "DecisionPolicy",
    "DocWeightTable", "FormatError", "InvertedIndex", "KeywordEntry",
    "Posting", "RefOccurrence", "RescoreConfig", "ScoreReport", "Slot",
    "SynthConfig", "align", "alpha_sweep", "apply_decisions", "atwv",
    "build_index", "dedup_overlaps", "doc_rank_curves",
    "document_ranking_weights", "generate", "keyword_rates", "kst_threshold",
    "mtwv", "reestimate_confidence", "rescore_candidates", "search_all",
    "search_keyword", "spearman", "sum_document_scores",
]
